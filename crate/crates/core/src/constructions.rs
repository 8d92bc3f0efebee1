//! Constructive approximation procedures.
//!
//! * [`quantize_symbol`]: periodic approximants of a multiplication group.
//! * [`near_identity_aws`]: almost weakly stable groups close to the identity.
//! * [`inflate_and_perturb`]: turns a periodic group into one with pairwise
//!   distinct frequencies, ε-close on given anchors over `[−t₀, t₀]`.
//! * [`wold_decompose`]: unitary part and unilateral-shift part of an isometry.
//! * [`periodize_shift`]: periodic unitary approximants of the right shift.
//! * [`approximate_isometry_by_periodic`] / [`approximate_isometry_by_aws`]:
//!   the composed density pipelines for isometric semigroups.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{domain, structural, Result};
use crate::hilbert::{direct_sum_embed, distance, HVector, SumSpace, WeightedGrid, C64};
use crate::linalg::{self, CMatrix};
use crate::semigroups::{
    check_isometry, lattice_steps, MultiplicationGroup, PeriodicShiftGroup, SemigroupModel, ShiftSemigroup,
};

/// `max_k |e^{itq_k} − e^{itp_k}|`, the operator-norm distance of two
/// multiplication groups on the same grid.
pub fn multiplication_distance(u: &MultiplicationGroup, v: &MultiplicationGroup, t: f64) -> Result<f64> {
    if u.symbol().len() != v.symbol().len() {
        return structural("multiplication groups on different grids");
    }
    Ok(u.symbol()
        .iter()
        .zip(v.symbol())
        .map(|(q, p)| (C64::from_polar(1.0, t * q) - C64::from_polar(1.0, t * p)).norm())
        .fold(0.0, f64::max))
}

/// Periodic approximant of level `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationResult {
    pub approximant: MultiplicationGroup,
    pub level: usize,
}

impl QuantizationResult {
    /// `2π|t|/n`.
    pub fn guaranteed_bound(&self, t: f64) -> f64 {
        2.0 * PI * t.abs() / self.level as f64
    }

    /// `n`: every quantized frequency is a multiple of `2π/n`.
    pub fn period(&self) -> f64 {
        self.level as f64
    }
}

fn quantize_value(q: f64, n: usize) -> f64 {
    let cell = 2.0 * PI / n as f64;
    let r = q / cell;
    let nearest = r.round();
    // values already on the lattice must not drop a cell through rounding
    let j = if (r - nearest).abs() <= 8.0 * f64::EPSILON * r.abs().max(1.0) { nearest } else { r.floor() };
    2.0 * PI * j / n as f64
}

/// `q_n = 2π⌊q n/2π⌋/n` pointwise.
pub fn quantize_symbol(u: &MultiplicationGroup, n: usize) -> Result<QuantizationResult> {
    if n == 0 {
        return domain("quantization level must be at least 1");
    }
    let symbol = u.symbol().iter().map(|&q| quantize_value(q, n)).collect();
    Ok(QuantizationResult { approximant: MultiplicationGroup::new(u.grid().clone(), symbol)?, level: n })
}

/// Multiplication group with symbol `q(ω_k)/n`, where `q` is strictly
/// increasing into `(0, 1)`: `q(ω_k) = (k + 1)/(K + 1)` on the sorted grid.
pub fn near_identity_aws(grid: &Arc<WeightedGrid>, n: usize) -> Result<MultiplicationGroup> {
    if n == 0 {
        return domain("n must be at least 1");
    }
    let pts = grid.points();
    if let Some(w) = pts.windows(2).find(|w| w[1] <= w[0]) {
        if w[1] == w[0] {
            return domain(format!("duplicate grid point {}: symbol cannot be injective", w[0]));
        }
        return domain("grid points must be strictly increasing");
    }
    let k = pts.len() as f64;
    let symbol = (0..pts.len()).map(|i| (i as f64 + 1.0) / (k + 1.0) / n as f64).collect();
    MultiplicationGroup::new(grid.clone(), symbol)
}

/// True when no frequency value repeats (the almost weak stability
/// certificate on a finite grid).
pub fn has_distinct_frequencies(symbol: &[f64]) -> bool {
    let mut s = symbol.to_vec();
    s.sort_by(f64::total_cmp);
    s.windows(2).all(|w| w[0] != w[1])
}

const COMMENSURABILITY_TOL: f64 = 1e-9;

fn on_lattice(q: f64, quantum: f64) -> bool {
    let r = q / quantum;
    (r - r.round()).abs() <= COMMENSURABILITY_TOL * r.abs().max(1.0)
}

/// Smallest period `τ` with every frequency in `(2π/τ)ℤ`, found by a
/// tolerant Euclidean algorithm. All-zero symbols get `τ = 2π`.
pub fn detect_period(symbol: &[f64]) -> Result<f64> {
    let mut mags: Vec<f64> = symbol.iter().map(|q| q.abs()).filter(|q| *q > 0.0).collect();
    if mags.is_empty() {
        return Ok(2.0 * PI);
    }
    mags.sort_by(f64::total_cmp);
    let top = *mags.last().expect("nonempty");
    let tol = COMMENSURABILITY_TOL * top;
    let mut g = mags[0];
    for &v in &mags[1..] {
        let (mut a, mut b) = (v.max(g), v.min(g));
        while b > tol {
            let mut r = a % b;
            if b - r <= tol {
                r = 0.0;
            }
            a = b;
            b = r;
        }
        g = a;
    }
    if top / g > 1e7 || !symbol.iter().all(|&q| on_lattice(q, g)) {
        return domain("frequencies are not commensurable; the group is not periodic");
    }
    Ok(2.0 * PI / g)
}

/// Output of [`inflate_and_perturb`].
#[derive(Debug, Clone)]
pub struct InflationResult {
    /// Perturbed group on `space.grid()`.
    pub group: MultiplicationGroup,
    /// `copies` copies of the input grid; block 0 is the original space.
    pub space: SumSpace,
    pub period: f64,
    /// `m`: eigenspace `λ` is spread over `(λ, λ + 1/m)`.
    pub slowdown: usize,
    /// `sup_{|t|≤t₀} ‖U(t)x_j − T(t)x_j‖` is at most this for every anchor.
    pub guarantee: f64,
}

impl InflationResult {
    /// The isometric embedding of the original space (block 0).
    pub fn embed(&self, x: &HVector) -> Result<HVector> {
        direct_sum_embed(&self.space, 0, x)
    }

    pub fn frequencies_distinct(&self) -> bool {
        has_distinct_frequencies(self.group.symbol())
    }
}

fn slowdown_for(epsilon: f64, horizon: f64, quantum: f64) -> usize {
    let raw = 2.0 * horizon / epsilon;
    let mut m = (raw * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    while 2.0 * horizon / m as f64 > epsilon * (1.0 + 1e-12) {
        m += 1;
    }
    // keep the spread intervals (λ, λ + 1/m) of distinct eigenvalues disjoint
    let separate = (1.0 / quantum * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    m.max(separate)
}

fn inflate_core(
    periodic: &MultiplicationGroup,
    period: f64,
    epsilon: f64,
    horizon: f64,
    copies: usize,
) -> Result<(MultiplicationGroup, SumSpace, usize)> {
    if !(epsilon > 0.0) || !(horizon > 0.0) {
        return domain("epsilon and horizon must be positive");
    }
    if copies < 2 {
        return domain("at least two copies are needed");
    }
    let quantum = 2.0 * PI / period;
    if let Some(q) = periodic.symbol().iter().find(|&&q| !on_lattice(q, quantum)) {
        return domain(format!("frequency {q} is not a multiple of 2π/{period}"));
    }
    let m = slowdown_for(epsilon, horizon, quantum);
    let grid = periodic.grid();
    let k = grid.len();
    let space = SumSpace::new(vec![grid.clone(); copies])?;

    let mut eigenspaces: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for c in 0..copies {
        for (i, &q) in periodic.symbol().iter().enumerate() {
            let idx = (q / quantum).round() as i64;
            eigenspaces.entry(idx).or_default().push(c * k + i);
        }
    }
    let mut symbol = vec![0.0; copies * k];
    for members in eigenspaces.values() {
        let r_total = members.len() as f64 + 1.0;
        for (r, &pos) in members.iter().enumerate() {
            let base = periodic.symbol()[pos % k];
            symbol[pos] = base + (r as f64 + 1.0) / r_total / m as f64;
        }
    }
    let group = MultiplicationGroup::new(space.grid(), symbol)?;
    if !has_distinct_frequencies(group.symbol()) {
        return domain("perturbed frequencies collide; injectivity certificate failed");
    }
    Ok((group, space, m))
}

/// Inflates every eigenspace of a periodic group to `copies` copies and
/// spreads eigenvalue `λ` injectively over `(λ, λ + 1/m)` with the smallest
/// `m` satisfying `2t₀/m ≤ ε` (raised to `⌈τ/2π⌉` if needed to keep distinct
/// eigenvalues apart). Anchors embedded into block 0 then satisfy
/// `‖U(t)x − T(t)x‖ ≤ ε‖x‖` for `|t| ≤ t₀`.
pub fn inflate_and_perturb(
    periodic: &MultiplicationGroup,
    anchors: &[HVector],
    epsilon: f64,
    horizon: f64,
    copies: usize,
) -> Result<InflationResult> {
    let period = detect_period(periodic.symbol())?;
    inflate_and_perturb_with_period(periodic, anchors, epsilon, horizon, copies, period)
}

/// [`inflate_and_perturb`] with a known period.
pub fn inflate_and_perturb_with_period(
    periodic: &MultiplicationGroup,
    anchors: &[HVector],
    epsilon: f64,
    horizon: f64,
    copies: usize,
    period: f64,
) -> Result<InflationResult> {
    for a in anchors {
        if !crate::hilbert::same_grid(a.grid(), periodic.grid()) {
            return structural("anchor does not live on the group's grid");
        }
    }
    let (group, space, slowdown) = inflate_core(periodic, period, epsilon, horizon, copies)?;
    let scale = anchors.iter().map(HVector::norm).fold(0.0, f64::max);
    let scale = if anchors.is_empty() { 1.0 } else { scale };
    Ok(InflationResult { group, space, period, slowdown, guarantee: epsilon * scale })
}

/// Output of [`wold_decompose`].
#[derive(Debug, Clone)]
pub struct WoldResult {
    /// Orthonormal basis of `H₀` (unitary part) on the base grid.
    pub unitary_basis: Vec<HVector>,
    /// Orthonormal chain `l, Wl, W²l, …` spanning `H₁`, wandering vectors first.
    pub shift_basis: Vec<HVector>,
    pub wandering_dim: usize,
    /// Worst invariance, unitarity or shift-structure defect.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Time step of the one-step map `W = V(step)`.
    pub step: f64,
    unitary_coords: CMatrix,
    unitary_block: CMatrix,
    chain_exit: Vec<HVector>,
}

impl WoldResult {
    pub fn unitary_dim(&self) -> usize {
        self.unitary_basis.len()
    }

    /// Orthonormal coordinates of `H₀` as columns.
    pub fn unitary_coords(&self) -> &CMatrix {
        &self.unitary_coords
    }

    /// `W` restricted to `H₀`, in the basis `unitary_basis`.
    pub fn unitary_block(&self) -> &CMatrix {
        &self.unitary_block
    }

    /// `W x` rebuilt from the two restrictions: the unitary block on `H₀`
    /// and the chain shift on `H₁`.
    pub fn reassemble_step(&self, x: &HVector) -> Result<HVector> {
        let mut out = HVector::zeros(x.grid().clone());
        let coef: Vec<C64> =
            self.unitary_basis.iter().map(|b| crate::hilbert::inner_product(x, b)).collect::<Result<_>>()?;
        for (i, b) in self.unitary_basis.iter().enumerate() {
            let mut c = C64::new(0.0, 0.0);
            for (j, a) in coef.iter().enumerate() {
                c += self.unitary_block[(i, j)] * a;
            }
            out = out.add(&b.scale(c))?;
        }
        let m = self.wandering_dim;
        let n = self.shift_basis.len();
        for (j, v) in self.shift_basis.iter().enumerate() {
            let a = crate::hilbert::inner_product(x, v)?;
            let image = if j + m < n { &self.shift_basis[j + m] } else { &self.chain_exit[j + m - n] };
            let (o, im) = crate::hilbert::align(&out, &image.scale(a))?;
            out = o.add(&im)?;
        }
        Ok(out)
    }
}

fn coords_matrix(vs: &[HVector]) -> CMatrix {
    let rows = vs.first().map_or(0, |v| v.len());
    let mut m = CMatrix::zeros(rows, vs.len());
    for (c, v) in vs.iter().enumerate() {
        for (r, x) in v.to_orthonormal_coords().into_iter().enumerate() {
            m[(r, c)] = x;
        }
    }
    m
}

fn columns_as_vectors(grid: &Arc<WeightedGrid>, m: &CMatrix) -> Result<Vec<HVector>> {
    (0..m.ncols())
        .map(|c| {
            let col: Vec<C64> = m.column(c).iter().copied().collect();
            HVector::from_orthonormal_coords(grid.clone(), &col)
        })
        .collect()
}

/// Wold decomposition of the one-step map `W = V(h)` on the base horizon.
///
/// `H₀` is computed as the limit of `S_k = W S_{k−1} ∩ H_base`, `S_0 = H_base`,
/// using orthonormal bases: the part of `S_{k−1}` that `W` keeps inside the
/// horizon is the null space of the leaked rows, and its image is `S_k`. The
/// sequence is nested, so equal dimensions in two consecutive steps mean it
/// has stabilized.
pub fn wold_decompose(v: &SemigroupModel, max_iter: usize, tol: f64) -> Result<WoldResult> {
    let base = v.base_grid();
    let d = base.len();
    let h = v.natural_step();
    let basis: Vec<HVector> = (0..d).map(|k| HVector::unit_at(base.clone(), k)).collect::<Result<_>>()?;
    if !v.is_admissible(h) || !check_isometry(v, h, &basis, 1e-9)? {
        return domain("semigroup is not isometric at its generating step");
    }
    let images: Vec<HVector> = basis.iter().map(|e| v.apply(h, e)).collect::<Result<_>>()?;
    let out_grid = images[0].grid().clone();
    let Some(inside) = out_grid.embedding_of(&base) else {
        return structural("one-step image does not contain the base horizon");
    };
    let full = coords_matrix(&images);
    let gram_defect = linalg::op_norm(&(full.adjoint() * &full - CMatrix::identity(d, d)));
    if gram_defect > 1e-8 {
        return domain(format!("one-step map is not isometric (defect {gram_defect:.3e})"));
    }
    let mut is_inside = vec![false; out_grid.len()];
    for &i in &inside {
        is_inside[i] = true;
    }
    let outside: Vec<usize> = (0..out_grid.len()).filter(|&i| !is_inside[i]).collect();
    let a = full.select_rows(&inside);
    let leak = full.select_rows(&outside);

    let mut b = CMatrix::identity(d, d);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let kept = linalg::null_space(&(&leak * &b), tol);
        let next = linalg::range_basis(&(&a * &b * kept), 0.5);
        let stable = next.ncols() == b.ncols();
        b = next;
        if stable {
            converged = true;
            break;
        }
    }
    let r = b.ncols();

    let unitary_block = b.adjoint() * &a * &b;
    let unitarity = linalg::op_norm(&(unitary_block.adjoint() * &unitary_block - CMatrix::identity(r, r)));
    let mut embedded = CMatrix::zeros(out_grid.len(), r);
    let bu = &b * &unitary_block;
    for (row, &i) in inside.iter().enumerate() {
        embedded.set_row(i, &bu.row(row));
    }
    let invariance = linalg::op_norm(&(&full * &b - embedded));

    // H₁ and its wandering subspace H₁ ⊖ W H₁ (within the horizon)
    let c = linalg::complement(&b);
    let s = c.ncols();
    let mut shift_defect = 0.0f64;
    let mut chain_cols: Vec<HVector> = Vec::new();
    let mut chain_exit = Vec::new();
    let mut wandering_dim = 0;
    if s > 0 {
        let image = linalg::range_basis(&(&a * &c), 0.5);
        let in_c = c.adjoint() * image;
        let wandering = &c * linalg::complement(&in_c);
        wandering_dim = wandering.ncols();
        if wandering_dim == 0 || !s.is_multiple_of(wandering_dim) {
            shift_defect = 1.0;
        } else {
            let seeds = columns_as_vectors(&base, &wandering)?;
            let len = s / wandering_dim;
            let mut leaked = 0.0f64;
            for j in 0..len {
                for l in &seeds {
                    let w = v.apply(j as f64 * h, l)?;
                    let kept = w.restrict(&base)?;
                    leaked = leaked.max((w.norm_sq() - kept.norm_sq()).max(0.0).sqrt());
                    chain_cols.push(kept);
                }
            }
            for l in &chain_cols[(len - 1) * wandering_dim..] {
                chain_exit.push(v.apply(h, l)?);
            }
            let chain = coords_matrix(&chain_cols);
            let ortho = linalg::op_norm(&(chain.adjoint() * &chain - CMatrix::identity(s, s)));
            let span = linalg::max_principal_angle(&chain, &c).sin();
            shift_defect = leaked.max(ortho).max(span);
        }
    }
    let mut residual = unitarity.max(invariance).max(shift_defect);
    if !converged {
        residual = residual.max(1.0);
    }
    let shift_basis = if chain_cols.is_empty() && s > 0 { columns_as_vectors(&base, &c)? } else { chain_cols };
    Ok(WoldResult {
        unitary_basis: columns_as_vectors(&base, &b)?,
        shift_basis,
        wandering_dim,
        residual,
        iterations,
        converged,
        step: h,
        unitary_coords: b,
        unitary_block,
        chain_exit,
    })
}

/// The `n_c·h`-periodic group: circular shift on the first `n_c` cells,
/// identity behind them.
pub fn periodize_shift(r: &ShiftSemigroup, period_cells: usize) -> Result<PeriodicShiftGroup> {
    PeriodicShiftGroup::new(r.step, r.fiber_dim, period_cells, r.cells.saturating_sub(period_cells))
}

/// Squared periodization error, measured and predicted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodizationError {
    /// `‖U_n(t)f − R(t)f‖²` from applying both semigroups.
    pub measured_sq: f64,
    /// `Σ_{s∈[n−t,n)} h‖f(s)‖² + Σ_{s≥n} h‖f(s) − f(s−t)‖²`.
    pub identity_sq: f64,
    /// `2 Σ_{s≥n−t} h‖f(s)‖²`. Not a bound in general: a payload `a` on
    /// cell `n−1` and `−a` on cell `n` gives `6h|a|²` against `4h|a|²`.
    pub bound_sq: f64,
    /// `3 Σ_{s∈[n−t,n)} h‖f(s)‖² + 4 Σ_{s≥n} h‖f(s)‖²`, which always
    /// dominates the identity (`‖a − b‖² ≤ 2‖a‖² + 2‖b‖²`).
    pub corrected_bound_sq: f64,
}

/// Compares the periodized shift with the shift on `f` at `t = ℓh`,
/// `0 ≤ ℓ < n_c`.
pub fn periodization_error(
    r: &ShiftSemigroup,
    u: &PeriodicShiftGroup,
    f: &HVector,
    t: f64,
) -> Result<PeriodizationError> {
    if r.step != u.step || r.fiber_dim != u.fiber_dim {
        return structural("shift and periodic group use different cells");
    }
    let l = lattice_steps(t, r.step)?;
    let n = u.period_cells;
    if l < 0 || l as usize >= n {
        return domain(format!("error identity needs 0 <= t < period, got t = {t}"));
    }
    let l = l as usize;
    let measured = distance(&u.apply(t, f)?, &r.apply(t, f)?)?;
    let Some((_, m, cells)) = f.grid().as_cells() else {
        return structural("payload is not on a cell grid");
    };
    let h = r.step;
    let cell = |s: usize| -> &[C64] {
        if s < cells {
            &f.coeffs()[s * m..(s + 1) * m]
        } else {
            &[]
        }
    };
    let mass = |s: usize| -> f64 { h * cell(s).iter().map(|c| c.norm_sqr()).sum::<f64>() };
    let mut identity = (n - l..n).map(mass).sum::<f64>();
    for s in n..cells + l {
        let a = cell(s);
        let b = cell(s - l);
        let diff: f64 = (0..m)
            .map(|k| {
                let x = a.get(k).copied().unwrap_or_default();
                let y = b.get(k).copied().unwrap_or_default();
                (x - y).norm_sqr()
            })
            .sum();
        identity += h * diff;
    }
    let window = (n - l..n).map(mass).sum::<f64>();
    let beyond = (n..cells.max(n)).map(mass).sum::<f64>();
    Ok(PeriodizationError {
        measured_sq: measured * measured,
        identity_sq: identity,
        bound_sq: 2.0 * (window + beyond),
        corrected_bound_sq: 3.0 * window + 4.0 * beyond,
    })
}

fn period_cells_for(period: f64, step: f64) -> usize {
    ((period / step).round() as usize).max(1)
}

fn unitary_leaf_dim(model: &SemigroupModel) -> usize {
    match model {
        SemigroupModel::Multiplication(m) => m.grid().len(),
        SemigroupModel::Shift(_) => 0,
        SemigroupModel::PeriodicShift(p) => p.grid().len(),
        SemigroupModel::DirectSum(d) => d.parts().iter().map(unitary_leaf_dim).sum(),
        SemigroupModel::Conjugated(c) => unitary_leaf_dim(c.inner()),
    }
}

/// An approximant together with the numerical Wold certificate of its input.
#[derive(Debug, Clone)]
pub struct IsometryApproximation {
    pub model: SemigroupModel,
    pub wold: WoldResult,
    /// Dimension of the unitary part read off the model structure.
    pub structural_unitary_dim: usize,
}

fn periodic_version(model: &SemigroupModel, n: usize) -> Result<SemigroupModel> {
    Ok(match model {
        SemigroupModel::Multiplication(m) => quantize_symbol(m, n)?.approximant.into(),
        SemigroupModel::Shift(s) => periodize_shift(s, period_cells_for(n as f64, s.step))?.into(),
        SemigroupModel::PeriodicShift(p) => (*p).into(),
        SemigroupModel::DirectSum(d) => {
            SemigroupModel::direct_sum(d.parts().iter().map(|p| periodic_version(p, n)).collect::<Result<_>>()?)?
        }
        SemigroupModel::Conjugated(c) => {
            SemigroupModel::conjugated(periodic_version(c.inner(), n)?, c.mixing_grid().clone(), c.mixing().clone())?
        }
    })
}

/// Periodic unitary approximant of an isometric semigroup: the unitary part
/// is quantized at level `n`, the shift part is periodized with period `n`.
/// The result satisfies `U(n) = I`.
pub fn approximate_isometry_by_periodic(
    v: &SemigroupModel,
    n: usize,
    max_iter: usize,
    tol: f64,
) -> Result<IsometryApproximation> {
    if n == 0 {
        return domain("n must be at least 1");
    }
    let wold = wold_decompose(v, max_iter, tol)?;
    Ok(IsometryApproximation { model: periodic_version(v, n)?, wold, structural_unitary_dim: unitary_leaf_dim(v) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwsParams {
    /// Quantization level for non-periodic unitary parts.
    pub level: usize,
    /// Period (time units) used to periodize shift parts.
    pub period: f64,
    pub epsilon: f64,
    /// `t₀`.
    pub horizon: f64,
    pub copies: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for AwsParams {
    fn default() -> Self {
        AwsParams { level: 64, period: 64.0, epsilon: 1e-2, horizon: 16.0, copies: 8, max_iter: 512, tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct AwsApproximation {
    pub model: SemigroupModel,
    pub wold: WoldResult,
    /// Joint perturbed spectrum of every diagonal leaf, all copies.
    pub frequencies: Vec<f64>,
    pub slowdown: usize,
    pub period: f64,
}

impl AwsApproximation {
    pub fn frequencies_distinct(&self) -> bool {
        has_distinct_frequencies(&self.frequencies)
    }
}

struct Leaf {
    diag: MultiplicationGroup,
    basis: Option<(Arc<WeightedGrid>, CMatrix)>,
}

fn collect_leaves(model: &SemigroupModel, p: &AwsParams, out: &mut Vec<Leaf>) -> Result<()> {
    match model {
        SemigroupModel::Multiplication(m) => {
            let diag =
                if detect_period(m.symbol()).is_ok() { m.clone() } else { quantize_symbol(m, p.level)?.approximant };
            out.push(Leaf { diag, basis: None });
        }
        SemigroupModel::Shift(s) => {
            let per = periodize_shift(s, period_cells_for(p.period, s.step))?;
            let (diag, q) = per.spectral_form();
            out.push(Leaf { diag, basis: Some((per.grid(), q)) });
        }
        SemigroupModel::PeriodicShift(per) => {
            let (diag, q) = per.spectral_form();
            out.push(Leaf { diag, basis: Some((per.grid(), q)) });
        }
        SemigroupModel::DirectSum(d) => {
            for part in d.parts() {
                collect_leaves(part, p, out)?;
            }
        }
        SemigroupModel::Conjugated(c) => collect_leaves(c.inner(), p, out)?,
    }
    Ok(())
}

fn leaf_model(leaf: &Leaf, diag: MultiplicationGroup) -> Result<SemigroupModel> {
    match &leaf.basis {
        None => Ok(diag.into()),
        Some((g, q)) => SemigroupModel::conjugated(diag.into(), g.clone(), q.clone()),
    }
}

fn rebuild(model: &SemigroupModel, leaves: &mut std::slice::Iter<'_, SemigroupModel>) -> Result<SemigroupModel> {
    Ok(match model {
        SemigroupModel::DirectSum(d) => {
            SemigroupModel::direct_sum(d.parts().iter().map(|p| rebuild(p, leaves)).collect::<Result<_>>()?)?
        }
        SemigroupModel::Conjugated(c) => {
            SemigroupModel::conjugated(rebuild(c.inner(), leaves)?, c.mixing_grid().clone(), c.mixing().clone())?
        }
        _ => leaves.next().expect("one leaf per diagonal part").clone(),
    })
}

/// Almost weakly stable approximant of an isometric semigroup.
///
/// Shift parts are periodized, non-periodic unitary parts quantized, every
/// periodic leaf is diagonalized and the joint diagonal group goes through
/// [`inflate_and_perturb`]. Block 0 of the inflation replaces the original
/// leaves in place (so the input space embeds as a prefix of the output
/// grid); the other copies are appended as extra direct summands.
pub fn approximate_isometry_by_aws(v: &SemigroupModel, p: &AwsParams) -> Result<AwsApproximation> {
    let wold = wold_decompose(v, p.max_iter, p.tol)?;
    let mut leaves = Vec::new();
    collect_leaves(v, p, &mut leaves)?;
    let joint_grid = Arc::new(WeightedGrid::concat(&leaves.iter().map(|l| l.diag.grid().clone()).collect::<Vec<_>>())?);
    let joint_symbol: Vec<f64> = leaves.iter().flat_map(|l| l.diag.symbol().to_vec()).collect();
    let joint = MultiplicationGroup::new(joint_grid.clone(), joint_symbol)?;
    let period = detect_period(joint.symbol())?;
    let (group, _space, slowdown) = inflate_core(&joint, period, p.epsilon, p.horizon, p.copies)?;

    let seg_counts: Vec<usize> = leaves.iter().map(|l| l.diag.grid().segments().len()).collect();
    let k = joint_grid.len();
    let mut per_copy: Vec<Vec<SemigroupModel>> = Vec::with_capacity(p.copies);
    for c in 0..p.copies {
        let grids = joint_grid.split_segments(&seg_counts)?;
        let mut start = c * k;
        let mut models = Vec::with_capacity(leaves.len());
        for (leaf, g) in leaves.iter().zip(grids) {
            let len = g.len();
            let diag = MultiplicationGroup::new(Arc::new(g), group.symbol()[start..start + len].to_vec())?;
            models.push(leaf_model(leaf, diag)?);
            start += len;
        }
        per_copy.push(models);
    }
    let front = rebuild(v, &mut per_copy[0].iter())?;
    let mut parts = vec![front];
    for copy in &per_copy[1..] {
        parts.extend(copy.iter().cloned());
    }
    Ok(AwsApproximation {
        model: SemigroupModel::direct_sum(parts)?,
        wold,
        frequencies: group.symbol().to_vec(),
        slowdown,
        period,
    })
}
