//! Concrete unitary and isometric semigroups.
//!
//! * [`MultiplicationGroup`]: `(U(t)x)_k = e^{i t q_k} x_k`, the spectral model
//!   of an arbitrary unitary group.
//! * [`ShiftSemigroup`]: right shift on `L²(ℝ₊, ℂᵐ)` by whole cells; the
//!   payload grows instead of losing mass.
//! * [`PeriodicShiftGroup`]: circular shift on the first `period_cells` cells,
//!   identity on the cells behind them.
//! * [`DirectSumSemigroup`]: blockwise action over the segments of the grid.
//! * [`ConjugatedSemigroup`]: `Q S(t) Q*` for a unitary `Q` acting on the
//!   coordinates of a fixed sub-grid (identity on everything else).

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, structural, Error, Result};
use crate::hilbert::{distance, same_grid, HVector, SumSpace, WeightedGrid, C64};
use crate::linalg::CMatrix;

/// Uniform apply/adjoint interface. Implemented by [`SemigroupModel`]; the
/// structural checks below are generic so they can be pointed at anything.
pub trait Evolution {
    fn apply(&self, t: f64, x: &HVector) -> Result<HVector>;
    fn adjoint_apply(&self, t: f64, x: &HVector) -> Result<HVector>;
}

/// Integer multiple `t / step`, or a domain error.
pub fn lattice_steps(t: f64, step: f64) -> Result<i64> {
    let r = t / step;
    let k = r.round();
    if !r.is_finite() || (r - k).abs() > 1e-9 * r.abs().max(1.0) {
        return domain(format!("time {t} is not a multiple of the step {step}"));
    }
    Ok(k as i64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MultiplicationDocument")]
pub struct MultiplicationGroup {
    grid: Arc<WeightedGrid>,
    symbol: Vec<f64>,
}

#[derive(Deserialize)]
struct MultiplicationDocument {
    grid: Arc<WeightedGrid>,
    symbol: Vec<f64>,
}

impl TryFrom<MultiplicationDocument> for MultiplicationGroup {
    type Error = Error;

    fn try_from(d: MultiplicationDocument) -> Result<Self> {
        MultiplicationGroup::new(d.grid, d.symbol)
    }
}

impl MultiplicationGroup {
    pub fn new(grid: Arc<WeightedGrid>, symbol: Vec<f64>) -> Result<Self> {
        if symbol.len() != grid.len() {
            return structural(format!("symbol has {} values for a grid of size {}", symbol.len(), grid.len()));
        }
        if symbol.iter().any(|q| !q.is_finite()) {
            return domain("symbol values must be finite");
        }
        Ok(MultiplicationGroup { grid, symbol })
    }

    pub fn identity(grid: Arc<WeightedGrid>) -> Self {
        let symbol = vec![0.0; grid.len()];
        MultiplicationGroup { grid, symbol }
    }

    pub fn grid(&self) -> &Arc<WeightedGrid> {
        &self.grid
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    /// `max_k |q_k|`, the norm of the (bounded) generator.
    pub fn generator_norm(&self) -> f64 {
        self.symbol.iter().fold(0.0, |a, q| a.max(q.abs()))
    }

    pub fn apply(&self, t: f64, x: &HVector) -> Result<HVector> {
        if !same_grid(x.grid(), &self.grid) {
            return structural("vector is not on the multiplication group's grid");
        }
        let coeffs = x.coeffs().iter().zip(&self.symbol).map(|(c, q)| c * C64::from_polar(1.0, t * q)).collect();
        HVector::new(self.grid.clone(), coeffs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftSemigroup {
    pub step: f64,
    pub fiber_dim: usize,
    /// Cell count of the base horizon.
    pub cells: usize,
}

fn cell_layout(x: &HVector, step: f64, fiber_dim: usize) -> Result<usize> {
    match x.grid().as_cells() {
        Some((h, m, cells)) if h == step && m == fiber_dim => Ok(cells),
        _ => structural(format!("vector is not on a cell grid with step {step} and fiber dimension {fiber_dim}")),
    }
}

impl ShiftSemigroup {
    pub fn new(step: f64, fiber_dim: usize, cells: usize) -> Result<Self> {
        WeightedGrid::cells(step, fiber_dim, cells)?;
        Ok(ShiftSemigroup { step, fiber_dim, cells })
    }

    pub fn grid(&self) -> Arc<WeightedGrid> {
        Arc::new(WeightedGrid::cells(self.step, self.fiber_dim, self.cells).expect("validated"))
    }

    fn forward_steps(&self, t: f64) -> Result<usize> {
        let l = lattice_steps(t, self.step)?;
        if l < 0 {
            return domain(format!("shift semigroup is only defined for t >= 0, got {t}"));
        }
        Ok(l as usize)
    }

    /// `(R(t)f)(s) = f(s − t)`; the payload grows by `t/h` cells.
    pub fn apply(&self, t: f64, x: &HVector) -> Result<HVector> {
        let cells = cell_layout(x, self.step, self.fiber_dim)?;
        let l = self.forward_steps(t)?;
        if l == 0 {
            return Ok(x.clone());
        }
        let m = self.fiber_dim;
        let grid = Arc::new(WeightedGrid::cells(self.step, m, cells + l)?);
        let mut coeffs = vec![C64::new(0.0, 0.0); l * m];
        coeffs.extend_from_slice(x.coeffs());
        HVector::new(grid, coeffs)
    }

    /// `(R(t)* f)(s) = f(s + t)`, on the same horizon.
    pub fn adjoint_apply(&self, t: f64, x: &HVector) -> Result<HVector> {
        let cells = cell_layout(x, self.step, self.fiber_dim)?;
        let l = self.forward_steps(t)?;
        let m = self.fiber_dim;
        let mut coeffs = vec![C64::new(0.0, 0.0); cells * m];
        if l < cells {
            coeffs[..(cells - l) * m].copy_from_slice(&x.coeffs()[l * m..]);
        }
        HVector::new(x.grid().clone(), coeffs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicShiftGroup {
    pub step: f64,
    pub fiber_dim: usize,
    /// `n_c`; the period is `n_c · step`.
    pub period_cells: usize,
    /// Cells behind the period carried unchanged in the base grid.
    pub tail_cells: usize,
}

impl PeriodicShiftGroup {
    pub fn new(step: f64, fiber_dim: usize, period_cells: usize, tail_cells: usize) -> Result<Self> {
        if period_cells == 0 {
            return domain("period must span at least one cell");
        }
        WeightedGrid::cells(step, fiber_dim, period_cells + tail_cells)?;
        Ok(PeriodicShiftGroup { step, fiber_dim, period_cells, tail_cells })
    }

    pub fn period(&self) -> f64 {
        self.period_cells as f64 * self.step
    }

    pub fn grid(&self) -> Arc<WeightedGrid> {
        Arc::new(
            WeightedGrid::cells(self.step, self.fiber_dim, self.period_cells + self.tail_cells).expect("validated"),
        )
    }

    pub fn apply(&self, t: f64, x: &HVector) -> Result<HVector> {
        let cells = cell_layout(x, self.step, self.fiber_dim)?;
        let n = self.period_cells;
        let l = lattice_steps(t, self.step)?.rem_euclid(n as i64) as usize;
        let m = self.fiber_dim;
        let x = if cells < n { x.zero_extend(&Arc::new(WeightedGrid::cells(self.step, m, n)?))? } else { x.clone() };
        if l == 0 {
            return Ok(x);
        }
        let src = x.coeffs();
        let mut coeffs = src.to_vec();
        for s in 0..n {
            let from = (s + n - l) % n;
            coeffs[s * m..(s + 1) * m].copy_from_slice(&src[from * m..(from + 1) * m]);
        }
        HVector::new(x.grid().clone(), coeffs)
    }

    /// Spectral form: `U(t) = Q diag(e^{itq}) Q*` on the base grid, where `Q`
    /// is the normalized DFT on the periodic cells (identity on the tail) and
    /// `q = −2πk/(n_c h)` with `k` taken in `(−n_c/2, n_c/2]`. The symbol
    /// agrees with the group at every admissible time.
    pub fn spectral_form(&self) -> (MultiplicationGroup, CMatrix) {
        let n = self.period_cells;
        let m = self.fiber_dim;
        let grid = self.grid();
        let dim = grid.len();
        let mut q = CMatrix::zeros(dim, dim);
        let mut symbol = vec![0.0; dim];
        let norm = 1.0 / (n as f64).sqrt();
        for k in 0..n {
            let centered = if 2 * k > n { k as f64 - n as f64 } else { k as f64 };
            for f in 0..m {
                let col = k * m + f;
                symbol[col] = -2.0 * PI * centered / self.period();
                for s in 0..n {
                    let phase = 2.0 * PI * ((k * s) % n) as f64 / n as f64;
                    q[(s * m + f, col)] = C64::from_polar(norm, phase);
                }
            }
        }
        for i in n * m..dim {
            q[(i, i)] = C64::new(1.0, 0.0);
        }
        (MultiplicationGroup { grid, symbol }, q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DirectSumDocument")]
pub struct DirectSumSemigroup {
    space: SumSpace,
    parts: Vec<SemigroupModel>,
}

#[derive(Deserialize)]
struct DirectSumDocument {
    parts: Vec<SemigroupModel>,
}

impl TryFrom<DirectSumDocument> for DirectSumSemigroup {
    type Error = Error;

    fn try_from(d: DirectSumDocument) -> Result<Self> {
        DirectSumSemigroup::new(d.parts)
    }
}

impl DirectSumSemigroup {
    pub fn new(parts: Vec<SemigroupModel>) -> Result<Self> {
        if parts.is_empty() {
            return structural("direct sum needs at least one part");
        }
        let space = SumSpace::new(parts.iter().map(|p| p.base_grid()).collect())?;
        let sum = DirectSumSemigroup { space, parts };
        sum.common_step()?;
        Ok(sum)
    }

    pub fn space(&self) -> &SumSpace {
        &self.space
    }

    pub fn parts(&self) -> &[SemigroupModel] {
        &self.parts
    }

    fn common_step(&self) -> Result<Option<f64>> {
        let mut step: Option<f64> = None;
        for p in &self.parts {
            if let Some(h) = p.time_step() {
                match step {
                    None => step = Some(h),
                    Some(s) if (s - h).abs() <= 1e-12 * s.abs() => {}
                    Some(s) => return structural(format!("direct sum mixes time steps {s} and {h}")),
                }
            }
        }
        Ok(step)
    }

    fn blockwise(&self, x: &HVector, f: impl Fn(&SemigroupModel, &HVector) -> Result<HVector>) -> Result<HVector> {
        let groups: Vec<usize> = self.parts.iter().map(|p| p.base_grid().segments().len()).collect();
        let grids = x.grid().split_segments(&groups)?;
        let mut out_grids = Vec::with_capacity(grids.len());
        let mut coeffs = Vec::with_capacity(x.len());
        let mut start = 0;
        for (part, g) in self.parts.iter().zip(grids) {
            let len = g.len();
            let block = HVector::new(Arc::new(g), x.coeffs()[start..start + len].to_vec())?;
            let y = f(part, &block)?;
            coeffs.extend_from_slice(y.coeffs());
            out_grids.push(y.grid().clone());
            start += len;
        }
        HVector::new(Arc::new(WeightedGrid::concat(&out_grids)?), coeffs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConjugatedDocument")]
pub struct ConjugatedSemigroup {
    inner: Box<SemigroupModel>,
    mixing_grid: Arc<WeightedGrid>,
    /// Unitary in the orthonormal coordinates of `mixing_grid`.
    mixing: CMatrix,
}

#[derive(Deserialize)]
struct ConjugatedDocument {
    inner: Box<SemigroupModel>,
    mixing_grid: Arc<WeightedGrid>,
    mixing: CMatrix,
}

impl TryFrom<ConjugatedDocument> for ConjugatedSemigroup {
    type Error = Error;

    fn try_from(d: ConjugatedDocument) -> Result<Self> {
        ConjugatedSemigroup::new(*d.inner, d.mixing_grid, d.mixing)
    }
}

impl ConjugatedSemigroup {
    pub fn new(inner: SemigroupModel, mixing_grid: Arc<WeightedGrid>, mixing: CMatrix) -> Result<Self> {
        let n = mixing_grid.len();
        if mixing.nrows() != n || mixing.ncols() != n {
            return structural("mixing matrix does not match its grid");
        }
        let defect = (mixing.adjoint() * &mixing - CMatrix::identity(n, n)).norm();
        if defect > 1e-9 * (n as f64).sqrt() {
            return domain(format!("mixing matrix is not unitary (defect {defect:.3e})"));
        }
        if inner.base_grid().embedding_of(&mixing_grid).is_none() {
            return structural("mixing grid does not embed into the inner model's grid");
        }
        Ok(ConjugatedSemigroup { inner: Box::new(inner), mixing_grid, mixing })
    }

    pub fn inner(&self) -> &SemigroupModel {
        &self.inner
    }

    pub fn mixing(&self) -> &CMatrix {
        &self.mixing
    }

    pub fn mixing_grid(&self) -> &Arc<WeightedGrid> {
        &self.mixing_grid
    }

    fn mix(&self, x: &HVector, adjoint: bool) -> Result<HVector> {
        let Some(idx) = x.grid().embedding_of(&self.mixing_grid) else {
            return structural("vector grid does not contain the mixing grid");
        };
        let w = self.mixing_grid.weights();
        let v = CMatrix::from_iterator(idx.len(), 1, idx.iter().zip(w).map(|(&i, wk)| x.coeffs()[i] * wk.sqrt()));
        let mixed = if adjoint { self.mixing.adjoint() * v } else { &self.mixing * v };
        let mut coeffs = x.coeffs().to_vec();
        for (r, (&i, wk)) in idx.iter().zip(w).enumerate() {
            coeffs[i] = mixed[(r, 0)] / wk.sqrt();
        }
        HVector::new(x.grid().clone(), coeffs)
    }
}

/// Tagged handle over every representable semigroup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SemigroupModel {
    Multiplication(MultiplicationGroup),
    Shift(ShiftSemigroup),
    PeriodicShift(PeriodicShiftGroup),
    DirectSum(DirectSumSemigroup),
    Conjugated(ConjugatedSemigroup),
}

impl From<MultiplicationGroup> for SemigroupModel {
    fn from(m: MultiplicationGroup) -> Self {
        SemigroupModel::Multiplication(m)
    }
}

impl From<ShiftSemigroup> for SemigroupModel {
    fn from(m: ShiftSemigroup) -> Self {
        SemigroupModel::Shift(m)
    }
}

impl From<PeriodicShiftGroup> for SemigroupModel {
    fn from(m: PeriodicShiftGroup) -> Self {
        SemigroupModel::PeriodicShift(m)
    }
}

impl From<DirectSumSemigroup> for SemigroupModel {
    fn from(m: DirectSumSemigroup) -> Self {
        SemigroupModel::DirectSum(m)
    }
}

impl From<ConjugatedSemigroup> for SemigroupModel {
    fn from(m: ConjugatedSemigroup) -> Self {
        SemigroupModel::Conjugated(m)
    }
}

impl SemigroupModel {
    pub fn direct_sum(parts: Vec<SemigroupModel>) -> Result<Self> {
        Ok(DirectSumSemigroup::new(parts)?.into())
    }

    pub fn conjugated(inner: SemigroupModel, mixing_grid: Arc<WeightedGrid>, mixing: CMatrix) -> Result<Self> {
        Ok(ConjugatedSemigroup::new(inner, mixing_grid, mixing)?.into())
    }

    /// Conjugation by a unitary on the whole base grid.
    pub fn conjugated_on_base(inner: SemigroupModel, mixing: CMatrix) -> Result<Self> {
        let g = inner.base_grid();
        Self::conjugated(inner, g, mixing)
    }

    pub fn is_unitary(&self) -> bool {
        match self {
            SemigroupModel::Multiplication(_) | SemigroupModel::PeriodicShift(_) => true,
            SemigroupModel::Shift(_) => false,
            SemigroupModel::DirectSum(d) => d.parts.iter().all(|p| p.is_unitary()),
            SemigroupModel::Conjugated(c) => c.inner.is_unitary(),
        }
    }

    pub fn is_isometric(&self) -> bool {
        match self {
            SemigroupModel::DirectSum(d) => d.parts.iter().all(|p| p.is_isometric()),
            SemigroupModel::Conjugated(c) => c.inner.is_isometric(),
            _ => true,
        }
    }

    /// The grid the model is defined on; inputs may be zero-extensions of it
    /// along cell segments.
    pub fn base_grid(&self) -> Arc<WeightedGrid> {
        match self {
            SemigroupModel::Multiplication(m) => m.grid.clone(),
            SemigroupModel::Shift(s) => s.grid(),
            SemigroupModel::PeriodicShift(p) => p.grid(),
            SemigroupModel::DirectSum(d) => d.space.grid(),
            SemigroupModel::Conjugated(c) => c.inner.base_grid(),
        }
    }

    /// Spacing of admissible times; `None` means every real time is admissible.
    pub fn time_step(&self) -> Option<f64> {
        match self {
            SemigroupModel::Multiplication(_) => None,
            SemigroupModel::Shift(s) => Some(s.step),
            SemigroupModel::PeriodicShift(p) => Some(p.step),
            SemigroupModel::DirectSum(d) => d.common_step().expect("checked on construction"),
            SemigroupModel::Conjugated(c) => c.inner.time_step(),
        }
    }

    /// Generating time step for the one-step map (1 for continuous models).
    pub fn natural_step(&self) -> f64 {
        self.time_step().unwrap_or(1.0)
    }

    /// Bound on the generator norm, when the generator is bounded and known.
    pub fn generator_bound(&self) -> Option<f64> {
        match self {
            SemigroupModel::Multiplication(m) => Some(m.generator_norm()),
            SemigroupModel::Shift(_) | SemigroupModel::PeriodicShift(_) => None,
            SemigroupModel::DirectSum(d) => {
                d.parts.iter().map(|p| p.generator_bound()).try_fold(0.0f64, |a, g| g.map(|g| a.max(g)))
            }
            SemigroupModel::Conjugated(c) => c.inner.generator_bound(),
        }
    }

    /// Zero-extends `x` so it can be fed to `apply`: the result lives on the
    /// join of `x`'s grid and the base grid.
    pub fn lift(&self, x: &HVector) -> Result<HVector> {
        let base = self.base_grid();
        if same_grid(x.grid(), &base) {
            return Ok(x.clone());
        }
        match x.grid().join(&base) {
            Some(j) => x.zero_extend(&Arc::new(j)),
            None => structural("vector grid is incompatible with the model's grid"),
        }
    }

    /// Whether `t` may be passed to `apply`.
    pub fn is_admissible(&self, t: f64) -> bool {
        if t < 0.0 && !self.is_unitary() {
            return false;
        }
        match self.time_step() {
            None => t.is_finite(),
            Some(h) => lattice_steps(t, h).is_ok(),
        }
    }

    pub fn apply(&self, t: f64, x: &HVector) -> Result<HVector> {
        match self {
            SemigroupModel::Multiplication(m) => m.apply(t, x),
            SemigroupModel::Shift(s) => s.apply(t, x),
            SemigroupModel::PeriodicShift(p) => p.apply(t, x),
            SemigroupModel::DirectSum(d) => {
                if t < 0.0 && !self.is_unitary() {
                    return domain(format!("negative time {t} for a non-unitary direct sum"));
                }
                d.blockwise(x, |p, b| p.apply(t, b))
            }
            SemigroupModel::Conjugated(c) => {
                let y = c.mix(x, true)?;
                let z = c.inner.apply(t, &y)?;
                c.mix(&z, false)
            }
        }
    }

    pub fn adjoint_apply(&self, t: f64, x: &HVector) -> Result<HVector> {
        match self {
            SemigroupModel::Multiplication(m) => m.apply(-t, x),
            SemigroupModel::Shift(s) => s.adjoint_apply(t, x),
            SemigroupModel::PeriodicShift(p) => p.apply(-t, x),
            SemigroupModel::DirectSum(d) => {
                if t < 0.0 && !self.is_unitary() {
                    return domain(format!("negative time {t} for a non-unitary direct sum"));
                }
                d.blockwise(x, |p, b| p.adjoint_apply(t, b))
            }
            SemigroupModel::Conjugated(c) => {
                let y = c.mix(x, true)?;
                let z = c.inner.adjoint_apply(t, &y)?;
                c.mix(&z, false)
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl Evolution for SemigroupModel {
    fn apply(&self, t: f64, x: &HVector) -> Result<HVector> {
        SemigroupModel::apply(self, t, x)
    }

    fn adjoint_apply(&self, t: f64, x: &HVector) -> Result<HVector> {
        SemigroupModel::adjoint_apply(self, t, x)
    }
}

/// `‖T(t+s)x − T(t)T(s)x‖ ≤ tol‖x‖`.
pub fn check_semigroup_law<E: Evolution + ?Sized>(model: &E, t: f64, s: f64, x: &HVector, tol: f64) -> Result<bool> {
    let joint = model.apply(t + s, x)?;
    let stepped = model.apply(t, &model.apply(s, x)?)?;
    Ok(distance(&joint, &stepped)? <= tol * x.norm())
}

/// `|‖T(t)x‖ − ‖x‖| ≤ tol‖x‖` for every sample.
pub fn check_isometry<E: Evolution + ?Sized>(model: &E, t: f64, sample: &[HVector], tol: f64) -> Result<bool> {
    for x in sample {
        let y = model.apply(t, x)?;
        if (y.norm() - x.norm()).abs() > tol * x.norm() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Isometry plus `‖T(t)T(t)*x − x‖ ≤ tol‖x‖` for every sample.
pub fn check_unitarity<E: Evolution + ?Sized>(model: &E, t: f64, sample: &[HVector], tol: f64) -> Result<bool> {
    if !check_isometry(model, t, sample, tol)? {
        return Ok(false);
    }
    for x in sample {
        let y = model.apply(t, &model.adjoint_apply(t, x)?)?;
        if distance(&y, x)? > tol * x.norm() {
            return Ok(false);
        }
    }
    Ok(true)
}
