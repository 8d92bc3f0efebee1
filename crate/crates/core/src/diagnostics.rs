//! Stability diagnostics from correlation traces `t ↦ ⟨T(t)x, y⟩`.
//!
//! Everything here is finite-horizon evidence. Time averages use trapezoid
//! weights on the sampling grid, and the same weights define the sampled
//! measure used by [`density_estimate`], so the Chebyshev-type relation
//! `density(ε) ≥ 1 − cesaro_abs2/ε²` holds exactly on any grid.
//!
//! On a finite grid every spectrum is atomic. A group counts as almost
//! weakly stable evidence when no frequency carries a noticeable share of
//! the mass, correlations are small on most of `[0, T]` and the mean of
//! `|⟨T(t)x, y⟩|²` is small, while they still do not vanish on the tail.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{domain, structural, Result};
use crate::exec::Execution;
use crate::hilbert::{aligned_inner_product, same_grid, DenseSequence, HVector, C64};
use crate::semigroups::{MultiplicationGroup, SemigroupModel};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationTrace {
    pub times: Vec<f64>,
    pub values: Vec<C64>,
    pub horizon: f64,
}

impl CorrelationTrace {
    pub fn new(times: Vec<f64>, values: Vec<C64>) -> Result<Self> {
        if times.len() != values.len() {
            return structural("times and values differ in length");
        }
        if times.is_empty() {
            return domain("empty trace");
        }
        check_increasing(&times)?;
        let horizon = *times.last().expect("nonempty");
        Ok(CorrelationTrace { times, values, horizon })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest `|value|` at sample times `≥ from`.
    pub fn sup_abs_from(&self, from: f64) -> f64 {
        self.times.iter().zip(&self.values).filter(|(t, _)| **t >= from).map(|(_, v)| v.norm()).fold(0.0, f64::max)
    }

    /// Sup over the tail window `[T/2, T]`.
    pub fn tail_sup(&self) -> f64 {
        self.sup_abs_from(self.horizon / 2.0)
    }

    fn sampled_mean(&self, f: impl Fn(C64) -> f64) -> Result<f64> {
        if self.len() < 2 {
            return domain("at least two samples are needed for a time average");
        }
        let w = trapezoid_weights(&self.times);
        let span = self.times[self.len() - 1] - self.times[0];
        Ok(w.iter().zip(&self.values).map(|(w, v)| w * f(*v)).sum::<f64>() / span)
    }
}

fn check_increasing(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return domain("sample times must be finite and strictly increasing");
    }
    Ok(())
}

/// `n + 1` equally spaced samples of `[0, horizon]` with spacing close to `dt`.
pub fn uniform_times(horizon: f64, dt: f64) -> Result<Vec<f64>> {
    if !(horizon > 0.0) || !(dt > 0.0) || !horizon.is_finite() {
        return domain("horizon and dt must be positive");
    }
    let n = (horizon / dt).round().max(1.0) as usize;
    Ok((0..=n).map(|i| horizon * i as f64 / n as f64).collect())
}

/// Trapezoid quadrature weights; they sum to `t_last − t_first`.
pub fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let lo = if i == 0 { times[0] } else { times[i - 1] };
            let hi = if i == n - 1 { times[n - 1] } else { times[i + 1] };
            (hi - lo) / 2.0
        })
        .collect()
}

/// Multiplication groups evaluated directly on their own grid; everything
/// else goes through `apply`.
enum Evaluator<'a> {
    Diagonal(&'a MultiplicationGroup),
    General(&'a SemigroupModel),
}

impl<'a> Evaluator<'a> {
    fn for_inputs(model: &'a SemigroupModel, inputs: &[HVector]) -> Self {
        match model {
            SemigroupModel::Multiplication(m) if inputs.iter().all(|x| same_grid(x.grid(), m.grid())) => {
                Evaluator::Diagonal(m)
            }
            _ => Evaluator::General(model),
        }
    }

    /// `⟨T(t)x_a, y_b⟩` for every `(a, b)`, row-major.
    fn pair_values(&self, t: f64, xs: &[HVector], ys: &[HVector]) -> Result<Vec<C64>> {
        match self {
            Evaluator::Diagonal(m) => {
                let w = m.grid().weights();
                let phases: Vec<C64> = m.symbol().iter().map(|q| C64::from_polar(1.0, t * q)).collect();
                let mut out = Vec::with_capacity(xs.len() * ys.len());
                for x in xs {
                    let moved: Vec<C64> = x.coeffs().iter().zip(&phases).zip(w).map(|((c, p), w)| c * p * *w).collect();
                    for y in ys {
                        out.push(moved.iter().zip(y.coeffs()).map(|(a, b)| a * b.conj()).sum());
                    }
                }
                Ok(out)
            }
            Evaluator::General(model) => {
                let mut out = Vec::with_capacity(xs.len() * ys.len());
                for x in xs {
                    let moved = model.apply(t, x)?;
                    for y in ys {
                        out.push(aligned_inner_product(&moved, y)?);
                    }
                }
                Ok(out)
            }
        }
    }
}

fn check_times(model: &SemigroupModel, times: &[f64]) -> Result<()> {
    check_increasing(times)?;
    if let Some(t) = times.iter().find(|t| !model.is_admissible(**t)) {
        return domain(format!("time {t} is not admissible for this model"));
    }
    Ok(())
}

/// Traces `⟨T(t)x_a, y_b⟩` for every pair, row-major in `(a, b)`.
pub fn correlation_matrix(
    model: &SemigroupModel,
    xs: &[HVector],
    ys: &[HVector],
    times: &[f64],
    exec: Execution,
) -> Result<Vec<CorrelationTrace>> {
    if times.is_empty() {
        return domain("empty time grid");
    }
    check_times(model, times)?;
    let xs: Vec<HVector> = xs.iter().map(|x| model.lift(x)).collect::<Result<_>>()?;
    let ys: Vec<HVector> = ys.iter().map(|y| model.lift(y)).collect::<Result<_>>()?;
    let mut all = xs.clone();
    all.extend(ys.iter().cloned());
    let eval = Evaluator::for_inputs(model, &all);
    let rows = exec.try_map(times.len(), |i| eval.pair_values(times[i], &xs, &ys))?;
    let pairs = xs.len() * ys.len();
    (0..pairs).map(|p| CorrelationTrace::new(times.to_vec(), rows.iter().map(|r| r[p]).collect())).collect()
}

/// `⟨T(t_i)x, y⟩` on the given times.
pub fn correlation(model: &SemigroupModel, x: &HVector, y: &HVector, times: &[f64]) -> Result<CorrelationTrace> {
    correlation_with(model, x, y, times, Execution::default())
}

pub fn correlation_with(
    model: &SemigroupModel,
    x: &HVector,
    y: &HVector,
    times: &[f64],
    exec: Execution,
) -> Result<CorrelationTrace> {
    let mut traces = correlation_matrix(model, std::slice::from_ref(x), std::slice::from_ref(y), times, exec)?;
    Ok(traces.pop().expect("one pair"))
}

/// Trapezoid estimate of `(1/T)∫₀^T |⟨T(t)x, y⟩|² dt`.
pub fn cesaro_mean_abs2(trace: &CorrelationTrace) -> Result<f64> {
    trace.sampled_mean(|v| v.norm_sqr())
}

/// Trapezoid estimate of `(1/T)∫₀^T |⟨T(t)x, y⟩| dt`.
pub fn cesaro_mean_abs(trace: &CorrelationTrace) -> Result<f64> {
    trace.sampled_mean(|v| v.norm())
}

fn frequency_key(q: f64) -> u64 {
    // −0.0 and 0.0 are the same frequency
    if q == 0.0 {
        0.0f64.to_bits()
    } else {
        q.to_bits()
    }
}

fn frequency_groups(u: &MultiplicationGroup) -> BTreeMap<u64, Vec<usize>> {
    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (k, &q) in u.symbol().iter().enumerate() {
        groups.entry(frequency_key(q)).or_default().push(k);
    }
    groups
}

/// `Σ_λ |Σ_{q_k = λ} μ_k x_k conj(y_k)|²`, the `T → ∞` limit of
/// `cesaro_mean_abs2` for the pair `(x, y)`.
pub fn wiener_limit_pair(u: &MultiplicationGroup, x: &HVector, y: &HVector) -> Result<f64> {
    if !same_grid(x.grid(), u.grid()) || !same_grid(y.grid(), u.grid()) {
        return structural("vectors do not live on the group's grid");
    }
    let w = u.grid().weights();
    Ok(frequency_groups(u)
        .values()
        .map(|idx| idx.iter().map(|&k| x.coeffs()[k] * y.coeffs()[k].conj() * w[k]).sum::<C64>().norm_sqr())
        .sum())
}

/// `Σ_λ (Σ_{q_k = λ} μ_k |x_k|²)²`.
pub fn wiener_limit(u: &MultiplicationGroup, x: &HVector) -> Result<f64> {
    wiener_limit_pair(u, x, x)
}

/// Sampled-measure fraction of `[t_0, T]` where `|value| < ε`.
pub fn density_estimate(trace: &CorrelationTrace, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return domain("epsilon must be positive");
    }
    if trace.len() < 2 {
        return Ok(if trace.values[0].norm() < epsilon { 1.0 } else { 0.0 });
    }
    trace.sampled_mean(|v| if v.norm() < epsilon { 1.0 } else { 0.0 }).map(|d| d.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub frequency: f64,
    /// Share of the grid's total weight carried by this frequency.
    pub mass: f64,
}

fn atoms_from_groups(u: &MultiplicationGroup, groups: Vec<Vec<usize>>, threshold: f64) -> Vec<Atom> {
    let w = u.grid().weights();
    let total = u.grid().total_mass();
    let mut atoms: Vec<Atom> = groups
        .into_iter()
        .map(|idx| Atom { frequency: u.symbol()[idx[0]], mass: idx.iter().map(|&k| w[k]).sum::<f64>() / total })
        .filter(|a| a.mass > threshold)
        .collect();
    atoms.sort_by(|a, b| b.mass.total_cmp(&a.mass).then(a.frequency.total_cmp(&b.frequency)));
    atoms
}

/// Frequencies (exact equality) whose weight share exceeds `threshold`,
/// heaviest first.
pub fn detect_atoms(u: &MultiplicationGroup, threshold: f64) -> Vec<Atom> {
    atoms_from_groups(u, frequency_groups(u).into_values().collect(), threshold)
}

/// Like [`detect_atoms`], but sorted frequencies closer than `tol` to their
/// neighbour are merged into one group (reported at its smallest frequency).
pub fn detect_atoms_with_tolerance(u: &MultiplicationGroup, threshold: f64, tol: f64) -> Vec<Atom> {
    let mut order: Vec<usize> = (0..u.symbol().len()).collect();
    order.sort_by(|&a, &b| u.symbol()[a].total_cmp(&u.symbol()[b]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for k in order {
        match groups.last_mut() {
            Some(g) if u.symbol()[k] - u.symbol()[*g.last().expect("nonempty")] <= tol => g.push(k),
            _ => groups.push(vec![k]),
        }
    }
    atoms_from_groups(u, groups, threshold)
}

/// Grid indices of the reversible part (detected atoms) and of the stable
/// remainder.
pub fn jgl_split(u: &MultiplicationGroup, threshold: f64) -> (Vec<usize>, Vec<usize>) {
    let atoms: Vec<u64> = detect_atoms(u, threshold).iter().map(|a| frequency_key(a.frequency)).collect();
    (0..u.symbol().len()).partition(|&k| atoms.contains(&frequency_key(u.symbol()[k])))
}

/// Diagonal form of the unitary part, when the model has one explicitly:
/// multiplication groups, periodic shifts (through their DFT) and sums or
/// conjugations of those.
pub fn spectral_symbol(model: &SemigroupModel) -> Option<MultiplicationGroup> {
    match model {
        SemigroupModel::Multiplication(m) => Some(m.clone()),
        SemigroupModel::PeriodicShift(p) => Some(p.spectral_form().0),
        SemigroupModel::Shift(_) => None,
        SemigroupModel::Conjugated(c) => spectral_symbol(c.inner()),
        SemigroupModel::DirectSum(d) => {
            let parts: Vec<MultiplicationGroup> = d.parts().iter().map(spectral_symbol).collect::<Option<_>>()?;
            let grid =
                crate::hilbert::WeightedGrid::concat(&parts.iter().map(|p| p.grid().clone()).collect::<Vec<_>>())
                    .ok()?;
            let symbol = parts.iter().flat_map(|p| p.symbol().to_vec()).collect();
            MultiplicationGroup::new(Arc::new(grid), symbol).ok()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    WeaklyStableEvidence,
    AlmostWeaklyStableEvidence,
    PointSpectrumDetected,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyParams {
    pub horizon: f64,
    pub dt: f64,
    pub epsilon: f64,
    pub delta_wiener: f64,
    pub delta_density: f64,
    pub atom_threshold: f64,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        ClassifyParams {
            horizon: 1000.0,
            dt: 0.25,
            epsilon: 1e-2,
            delta_wiener: 1e-2,
            delta_density: 0.95,
            atom_threshold: 0.05,
        }
    }
}

/// Summary over all witness pairs: maxima of the averages and tail sups,
/// minimum of the densities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub cesaro_abs: f64,
    pub cesaro_abs2: f64,
    pub wiener_closed_form: Option<f64>,
    pub density_est: f64,
    pub tail_sup: f64,
    /// Largest `|⟨T(t)x, x⟩|` over the tail window, normalized witnesses.
    pub revival: f64,
    pub atoms: Vec<Atom>,
    pub verdict: Verdict,
}

/// One-line form of a [`StabilityReport`] for CSV and JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRecord {
    pub cesaro_abs: f64,
    pub cesaro_abs2: f64,
    pub wiener_closed_form: Option<f64>,
    pub density_est: f64,
    pub tail_sup: f64,
    pub revival: f64,
    pub atom_count: usize,
    pub top_atom_mass: Option<f64>,
    pub verdict: Verdict,
}

impl StabilityReport {
    pub fn record(&self) -> StabilityRecord {
        StabilityRecord {
            cesaro_abs: self.cesaro_abs,
            cesaro_abs2: self.cesaro_abs2,
            wiener_closed_form: self.wiener_closed_form,
            density_est: self.density_est,
            tail_sup: self.tail_sup,
            revival: self.revival,
            atom_count: self.atoms.len(),
            top_atom_mass: self.atoms.first().map(|a| a.mass),
            verdict: self.verdict,
        }
    }
}

/// Classifies `model` from the correlations of every witness pair on
/// `[0, horizon]`. Rules, in order:
///
/// 1. `PointSpectrumDetected`: an atom above `atom_threshold`, or a revival
///    `|⟨T(t)x, x⟩| > 1 − ε` somewhere in `[T/2, T]`;
/// 2. `WeaklyStableEvidence`: tail sup of `|corr|` below `ε` for all pairs;
/// 3. `AlmostWeaklyStableEvidence`: density of `{|corr| < ε}` at least
///    `δ_density` and Cesàro mean of `|corr|²` at most `δ_wiener`;
/// 4. otherwise `Inconclusive`.
pub fn classify(
    model: &SemigroupModel,
    witnesses: &DenseSequence,
    params: &ClassifyParams,
    exec: Execution,
) -> Result<StabilityReport> {
    let xs: Vec<HVector> = witnesses.vectors().iter().map(HVector::normalized).collect::<Result<_>>()?;
    let times = uniform_times(params.horizon, params.dt)?;
    let traces = correlation_matrix(model, &xs, &xs, &times, exec)?;
    let n = xs.len();
    let mut report = StabilityReport {
        cesaro_abs: 0.0,
        cesaro_abs2: 0.0,
        wiener_closed_form: None,
        density_est: 1.0,
        tail_sup: 0.0,
        revival: 0.0,
        atoms: Vec::new(),
        verdict: Verdict::Inconclusive,
    };
    for (p, tr) in traces.iter().enumerate() {
        report.cesaro_abs = report.cesaro_abs.max(cesaro_mean_abs(tr)?);
        report.cesaro_abs2 = report.cesaro_abs2.max(cesaro_mean_abs2(tr)?);
        report.density_est = report.density_est.min(density_estimate(tr, params.epsilon)?);
        let tail = tr.tail_sup();
        report.tail_sup = report.tail_sup.max(tail);
        if p / n == p % n {
            report.revival = report.revival.max(tail);
        }
    }
    if let SemigroupModel::Multiplication(u) = model {
        if xs.iter().all(|x| same_grid(x.grid(), u.grid())) {
            let mut w = 0.0f64;
            for a in &xs {
                for b in &xs {
                    w = w.max(wiener_limit_pair(u, a, b)?);
                }
            }
            report.wiener_closed_form = Some(w);
        }
    }
    if let Some(u) = spectral_symbol(model) {
        report.atoms = detect_atoms(&u, params.atom_threshold);
    }
    report.verdict = if !report.atoms.is_empty() || report.revival > 1.0 - params.epsilon {
        Verdict::PointSpectrumDetected
    } else if report.tail_sup < params.epsilon {
        Verdict::WeaklyStableEvidence
    } else if report.density_est >= params.delta_density && report.cesaro_abs2 <= params.delta_wiener {
        Verdict::AlmostWeaklyStableEvidence
    } else {
        Verdict::Inconclusive
    };
    Ok(report)
}

/// `|⟨U(t)x, x⟩|`.
pub fn self_correlation(u: &SemigroupModel, x: &HVector, t: f64) -> Result<f64> {
    let x = u.lift(x)?;
    Ok(aligned_inner_product(&u.apply(t, &x)?, &x)?.norm())
}

/// `|⟨U(t)x, x⟩| ≤ 1/2` for a unit vector `x`.
pub fn mt_membership(u: &SemigroupModel, x: &HVector, t: f64) -> Result<bool> {
    if (x.norm() - 1.0).abs() > 1e-12 {
        return domain(format!("witness must have unit norm, got {}", x.norm()));
    }
    Ok(self_correlation(u, x, t)? <= 0.5)
}

/// `|⟨U(t)x_j, x_j⟩| < 1/k`.
pub fn wjkt_membership(u: &SemigroupModel, xj: &HVector, k: u32, t: f64) -> Result<bool> {
    if k == 0 {
        return domain("k must be a positive integer");
    }
    Ok(self_correlation(u, xj, t)? < 1.0 / f64::from(k))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::hilbert::WeightedGrid;
    use crate::random;
    use crate::semigroups::ShiftSemigroup;

    fn two_atoms(q1: f64) -> (SemigroupModel, HVector) {
        let grid = Arc::new(WeightedGrid::uniform(2).unwrap());
        let u = MultiplicationGroup::new(grid.clone(), vec![0.0, q1]).unwrap();
        let x = HVector::new(grid, vec![C64::new(1.0, 0.0); 2]).unwrap();
        (u.into(), x)
    }

    #[test]
    fn orthogonal_inputs_give_zero_trace() {
        let grid = Arc::new(WeightedGrid::uniform(3).unwrap());
        let u = SemigroupModel::from(MultiplicationGroup::identity(grid.clone()));
        let x = HVector::unit_at(grid.clone(), 0).unwrap();
        let y = HVector::unit_at(grid, 2).unwrap();
        let tr = correlation(&u, &x, &y, &uniform_times(5.0, 0.5).unwrap()).unwrap();
        assert!(tr.values.iter().all(|v| *v == C64::new(0.0, 0.0)));
    }

    #[test]
    fn diagonal_fast_path_matches_apply() {
        let mut rng = random::rng(5, 0);
        let grid = Arc::new(WeightedGrid::uniform(20).unwrap());
        let sym = (0..20).map(|k| (k as f64).sin() * 3.0).collect();
        let u = MultiplicationGroup::new(grid.clone(), sym).unwrap();
        let x = HVector::random(grid.clone(), &mut rng);
        let y = HVector::random(grid, &mut rng);
        let times = uniform_times(10.0, 0.1).unwrap();
        let fast = correlation(&u.clone().into(), &x, &y, &times).unwrap();
        let wrapped = SemigroupModel::direct_sum(vec![u.into()]).unwrap();
        let slow = correlation(&wrapped, &x, &y, &times).unwrap();
        for (a, b) in fast.values.iter().zip(&slow.values) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn shift_trace_vanishes_after_support() {
        let r = SemigroupModel::from(ShiftSemigroup::new(0.5, 1, 10).unwrap());
        let f = HVector::from_fn(r.base_grid(), |k| if k < 4 { C64::new(1.0, k as f64) } else { C64::new(0.0, 0.0) });
        let tr = correlation(&r, &f, &f, &uniform_times(20.0, 0.5).unwrap()).unwrap();
        assert!(tr.sup_abs_from(2.0) == 0.0);
        assert!(density_estimate(&tr, 1e-3).unwrap() > 0.85);
    }

    #[test]
    fn cesaro_of_constant_and_phase() {
        let times = uniform_times(2.0 * PI * 5.0, 0.01).unwrap();
        let ones = CorrelationTrace::new(times.clone(), vec![C64::new(1.0, 0.0); times.len()]).unwrap();
        assert!((cesaro_mean_abs2(&ones).unwrap() - 1.0).abs() < 1e-12);
        let phase = times.iter().map(|t| C64::from_polar(1.0, *t)).collect();
        let tr = CorrelationTrace::new(times, phase).unwrap();
        assert!((cesaro_mean_abs2(&tr).unwrap() - 1.0).abs() < 1e-12);
        let single = CorrelationTrace::new(vec![0.0], vec![C64::new(1.0, 0.0)]).unwrap();
        assert!(cesaro_mean_abs2(&single).is_err());
    }

    #[test]
    fn two_atom_wiener_and_cesaro() {
        let (u, x) = two_atoms(1.0);
        let SemigroupModel::Multiplication(m) = &u else { unreachable!() };
        assert!((wiener_limit(m, &x).unwrap() - 0.5).abs() < 1e-15);
        // |(1 + e^{it})/2|² = (1 + cos t)/2, mean 1/2 + sin(T)/(2T)
        let t_end = 1000.0;
        let tr = correlation(&u, &x, &x, &uniform_times(t_end, 0.01).unwrap()).unwrap();
        let exact = 0.5 + t_end.sin() / (2.0 * t_end);
        assert!((cesaro_mean_abs2(&tr).unwrap() - exact).abs() < 1e-7);
    }

    #[test]
    fn single_frequency_wiener_is_norm_fourth() {
        let grid = Arc::new(WeightedGrid::uniform(5).unwrap());
        let u = MultiplicationGroup::new(grid.clone(), vec![2.0; 5]).unwrap();
        let x = HVector::random(grid, &mut random::rng(6, 0));
        assert!((wiener_limit(&u, &x).unwrap() - x.norm_sq().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn density_of_cosine_matches_arc_fraction() {
        let times = uniform_times(2.0 * PI * 200.0, 0.001).unwrap();
        let eps = 0.3f64;
        let values = times.iter().map(|t| C64::new(t.cos(), 0.0)).collect();
        let tr = CorrelationTrace::new(times, values).unwrap();
        let exact = 1.0 - 2.0 * eps.acos() / PI;
        assert!((density_estimate(&tr, eps).unwrap() - exact).abs() < 1e-4);
    }

    #[test]
    fn atoms_and_split() {
        let grid = Arc::new(WeightedGrid::uniform(4).unwrap());
        let u = MultiplicationGroup::new(grid, vec![0.0, -0.0, 1.0, 2.0]).unwrap();
        let atoms = detect_atoms(&u, 0.3);
        assert_eq!(atoms, vec![Atom { frequency: 0.0, mass: 0.5 }]);
        assert_eq!(jgl_split(&u, 0.3), (vec![0, 1], vec![2, 3]));
        assert!(detect_atoms(&u, 0.5).is_empty());
        let near = MultiplicationGroup::new(u.grid().clone(), vec![0.0, 1e-13, 1.0, 2.0]).unwrap();
        assert!(detect_atoms(&near, 0.3).is_empty());
        assert_eq!(detect_atoms_with_tolerance(&near, 0.3, 1e-9).len(), 1);
    }

    #[test]
    fn classify_examples() {
        let params = ClassifyParams { horizon: 200.0, dt: 0.5, ..Default::default() };
        let r = SemigroupModel::from(ShiftSemigroup::new(0.5, 1, 16).unwrap());
        let w = DenseSequence::seeded(r.base_grid(), 3, 9).unwrap();
        let rep = classify(&r, &w, &params, Execution::Parallel).unwrap();
        assert_eq!(rep.verdict, Verdict::WeaklyStableEvidence);

        let p = crate::constructions::periodize_shift(&ShiftSemigroup::new(0.5, 1, 16).unwrap(), 16).unwrap();
        let pm = SemigroupModel::from(p);
        let rep = classify(&pm, &w, &params, Execution::Sequential).unwrap();
        assert_eq!(rep.verdict, Verdict::PointSpectrumDetected);
        assert!(rep.revival > 1.0 - 1e-12);
    }

    #[test]
    fn classify_is_scale_invariant() {
        let grid = Arc::new(WeightedGrid::uniform(64).unwrap());
        let u = SemigroupModel::from(near_identity(&grid));
        let params = ClassifyParams { horizon: 400.0, dt: 0.5, ..Default::default() };
        let w = DenseSequence::seeded(grid, 2, 10).unwrap();
        let scaled = DenseSequence::new(w.vectors().iter().map(|x| x.scale(C64::new(0.0, -7.5))).collect()).unwrap();
        let a = classify(&u, &w, &params, Execution::Parallel).unwrap();
        let b = classify(&u, &scaled, &params, Execution::Parallel).unwrap();
        assert_eq!(a.verdict, b.verdict);
        assert!((a.cesaro_abs2 - b.cesaro_abs2).abs() < 1e-12);
    }

    fn near_identity(grid: &Arc<WeightedGrid>) -> MultiplicationGroup {
        crate::constructions::near_identity_aws(grid, 1).unwrap()
    }

    #[test]
    fn membership_predicates() {
        let (u, x) = two_atoms(PI);
        let x = x.normalized().unwrap();
        assert!(mt_membership(&u, &x, 1.0).unwrap());
        assert!(!mt_membership(&u, &x, 2.0).unwrap());
        assert!(mt_membership(&u, &x.scale(C64::new(2.0, 0.0)), 1.0).is_err());
        let id = SemigroupModel::from(MultiplicationGroup::identity(x.grid().clone()));
        for t in [0.0, 1.0, 100.0] {
            assert!(!mt_membership(&id, &x, t).unwrap());
            assert!(!wjkt_membership(&id, &x, 1, t).unwrap());
        }
        assert!(wjkt_membership(&u, &x, 3, 1.0).unwrap());
        assert!(wjkt_membership(&u, &x, 0, 1.0).is_err());
    }
}
