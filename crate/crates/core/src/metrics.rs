//! Truncated semigroup metrics with certified tails.
//!
//! * [`metric_unitary`]: `Σ_{n,j} sup_{|t|≤n} ‖U(t)x_j − V(t)x_j‖ / (2^{j+n}‖x_j‖)`
//! * [`metric_isometric`]: the same sum with `t ∈ [0, n]`
//! * [`metric_contractive`]:
//!   `Σ_{n,i,j} sup_{t∈[0,n]} |⟨T(t)x_i, x_j⟩ − ⟨S(t)x_i, x_j⟩| / (2^{i+j+n}‖x_i‖‖x_j‖)`
//!
//! Indices start at 1. Sums stop at `n ≤ N`, `i, j ≤ J`; every numerator is
//! at most twice its normalization, which gives the closed-form tail bound.
//! Sups over `t` are taken over `samples_per_block + 1` equally spaced
//! points of every unit block, or over all admissible lattice times when a
//! model only moves in steps of `h` (then the sup is exact).

use serde::Serialize;

use crate::error::{domain, Result};
use crate::exec::Execution;
use crate::hilbert::{aligned_inner_product, distance, DenseSequence, HVector, C64};
use crate::semigroups::{lattice_steps, SemigroupModel};

#[derive(Debug, Clone)]
pub struct MetricConfig {
    pub dense_seq: DenseSequence,
    pub j: usize,
    pub n: usize,
    pub samples_per_block: usize,
    pub exec: Execution,
}

impl MetricConfig {
    pub fn new(dense_seq: DenseSequence) -> Self {
        MetricConfig { dense_seq, j: 12, n: 12, samples_per_block: 64, exec: Execution::default() }
    }

    /// The same configuration with `J` and `N` raised by `by`.
    pub fn refined(&self, by: usize) -> Self {
        MetricConfig { j: self.j + by, n: self.n + by, ..self.clone() }
    }

    fn validate(&self) -> Result<()> {
        if self.j == 0 || self.j > self.dense_seq.len() {
            return domain(format!("J = {} must be in 1..={}", self.j, self.dense_seq.len()));
        }
        if self.n == 0 {
            return domain("N must be at least 1");
        }
        if self.samples_per_block < 2 {
            return domain("samples_per_block must be at least 2");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplingCaveat {
    pub samples_per_block: usize,
    /// Time lattice used instead of block sampling.
    pub lattice_step: Option<f64>,
    /// Bound on how much the sampled sups can undershoot the true value,
    /// from the generator norms; zero on a lattice, absent when unknown.
    pub lipschitz_slack: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricValue {
    pub value: f64,
    pub truncation_bound: f64,
    pub sampling_caveat: SamplingCaveat,
}

fn strong_tail(j: usize, n: usize) -> f64 {
    let kept = (1.0 - 0.5f64.powi(n as i32)) * (1.0 - 0.5f64.powi(j as i32));
    2.0 * (1.0 - kept)
}

fn weak_tail(j: usize, n: usize) -> f64 {
    let kept = (1.0 - 0.5f64.powi(n as i32)) * (1.0 - 0.5f64.powi(j as i32)).powi(2);
    2.0 * (1.0 - kept)
}

/// `1 − 2^{−J}`: `metric_contractive ≤ (1 − 2^{−J}) · metric_isometric` for
/// the same configuration.
pub fn weak_strong_constant(j: usize) -> f64 {
    1.0 - 0.5f64.powi(j as i32)
}

fn common_step(a: &SemigroupModel, b: &SemigroupModel) -> Result<Option<f64>> {
    match (a.time_step(), b.time_step()) {
        (None, None) => Ok(None),
        (Some(h), None) | (None, Some(h)) => Ok(Some(h)),
        (Some(h1), Some(h2)) => {
            let (small, big) = if h1 <= h2 { (h1, h2) } else { (h2, h1) };
            if lattice_steps(big, small).is_ok() {
                Ok(Some(big))
            } else {
                domain(format!("time steps {h1} and {h2} have no common lattice"))
            }
        }
    }
}

fn block_times(k: i64, samples: usize, step: Option<f64>) -> Vec<f64> {
    match step {
        None => (0..=samples).map(|i| k as f64 + i as f64 / samples as f64).collect(),
        Some(h) => {
            let lo = (k as f64 / h - 1e-9).ceil() as i64;
            let hi = ((k + 1) as f64 / h + 1e-9).floor() as i64;
            (lo..=hi).map(|m| m as f64 * h).collect()
        }
    }
}

struct Sampling {
    step: Option<f64>,
    caveat: SamplingCaveat,
}

fn sampling(a: &SemigroupModel, b: &SemigroupModel, cfg: &MetricConfig) -> Result<Sampling> {
    let step = common_step(a, b)?;
    let lipschitz_slack = match step {
        Some(_) => Some(0.0),
        None => match (a.generator_bound(), b.generator_bound()) {
            (Some(ga), Some(gb)) => Some((ga + gb) / (2.0 * cfg.samples_per_block as f64)),
            _ => None,
        },
    };
    Ok(Sampling {
        step,
        caveat: SamplingCaveat { samples_per_block: cfg.samples_per_block, lattice_step: step, lipschitz_slack },
    })
}

/// `sup_t ‖A(t)x − B(t)x‖ / ‖x‖` over the sampled times of each unit block,
/// indexed `[j][block]` with block `b` covering `[first + b, first + b + 1]`.
fn block_sups(
    a: &SemigroupModel,
    b: &SemigroupModel,
    cfg: &MetricConfig,
    first: i64,
    blocks: usize,
    step: Option<f64>,
) -> Result<Vec<Vec<f64>>> {
    let xs = &cfg.dense_seq.vectors()[..cfg.j];
    let flat = cfg.exec.try_map(cfg.j * blocks, |p| -> Result<f64> {
        let (j, blk) = (p / blocks, p % blocks);
        let x = &xs[j];
        let (xa, xb) = (a.lift(x)?, b.lift(x)?);
        let mut sup = 0.0f64;
        for t in block_times(first + blk as i64, cfg.samples_per_block, step) {
            sup = sup.max(distance(&a.apply(t, &xa)?, &b.apply(t, &xb)?)?);
        }
        Ok(sup / x.norm())
    })?;
    Ok(flat.chunks(blocks).map(<[f64]>::to_vec).collect())
}

/// Terms `[n − 1][j − 1]` of the unitary (`symmetric`) or isometric metric.
pub fn strong_terms(
    a: &SemigroupModel,
    b: &SemigroupModel,
    cfg: &MetricConfig,
    symmetric: bool,
) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let s = sampling(a, b, cfg)?;
    strong_terms_with(a, b, cfg, symmetric, s.step)
}

fn strong_terms_with(
    a: &SemigroupModel,
    b: &SemigroupModel,
    cfg: &MetricConfig,
    symmetric: bool,
    step: Option<f64>,
) -> Result<Vec<Vec<f64>>> {
    let n_max = cfg.n as i64;
    let (first, blocks) = if symmetric { (-n_max, 2 * cfg.n) } else { (0, cfg.n) };
    let sups = block_sups(a, b, cfg, first, blocks, step)?;
    let mut terms = vec![vec![0.0; cfg.j]; cfg.n];
    for (ni, row) in terms.iter_mut().enumerate() {
        let n = ni as i64 + 1;
        let range = if symmetric { ((n_max - n) as usize)..((n_max + n) as usize) } else { 0..n as usize };
        for (ji, term) in row.iter_mut().enumerate() {
            let sup = sups[ji][range.clone()].iter().copied().fold(0.0, f64::max);
            *term = sup * 0.5f64.powi((ji + 1 + ni + 1) as i32);
        }
    }
    Ok(terms)
}

fn strong_metric(a: &SemigroupModel, b: &SemigroupModel, cfg: &MetricConfig, symmetric: bool) -> Result<MetricValue> {
    cfg.validate()?;
    let s = sampling(a, b, cfg)?;
    let terms = strong_terms_with(a, b, cfg, symmetric, s.step)?;
    let value = terms.iter().flatten().sum();
    let mut caveat = s.caveat;
    caveat.lipschitz_slack = caveat.lipschitz_slack.map(|l| l * (1.0 - strong_tail(cfg.j, cfg.n) / 2.0));
    Ok(MetricValue { value, truncation_bound: strong_tail(cfg.j, cfg.n), sampling_caveat: caveat })
}

/// Strong* metric on unitary groups, `t ∈ [−n, n]`.
pub fn metric_unitary(u: &SemigroupModel, v: &SemigroupModel, cfg: &MetricConfig) -> Result<MetricValue> {
    if !u.is_unitary() || !v.is_unitary() {
        return domain("metric_unitary needs unitary groups");
    }
    strong_metric(u, v, cfg, true)
}

/// Strong metric on isometric semigroups, `t ∈ [0, n]`.
pub fn metric_isometric(s: &SemigroupModel, t: &SemigroupModel, cfg: &MetricConfig) -> Result<MetricValue> {
    if !s.is_isometric() || !t.is_isometric() {
        return domain("metric_isometric needs isometric semigroups");
    }
    strong_metric(s, t, cfg, false)
}

/// Weak metric on contraction semigroups, `t ∈ [0, n]`.
pub fn metric_contractive(s: &SemigroupModel, t: &SemigroupModel, cfg: &MetricConfig) -> Result<MetricValue> {
    cfg.validate()?;
    let smp = sampling(s, t, cfg)?;
    let xs = &cfg.dense_seq.vectors()[..cfg.j];
    let jn = cfg.j;
    let blocks = cfg.n;
    // sups[i][blk][j]
    let flat = cfg.exec.try_map(jn * blocks, |p| -> Result<Vec<f64>> {
        let (i, blk) = (p / blocks, p % blocks);
        let x = &xs[i];
        let (xs_lift, xt_lift) = (s.lift(x)?, t.lift(x)?);
        let mut sup = vec![0.0f64; jn];
        for time in block_times(blk as i64, cfg.samples_per_block, smp.step) {
            let a = s.apply(time, &xs_lift)?;
            let b = t.apply(time, &xt_lift)?;
            for (j, y) in xs.iter().enumerate() {
                let d: C64 = aligned_inner_product(&a, y)? - aligned_inner_product(&b, y)?;
                sup[j] = sup[j].max(d.norm());
            }
        }
        Ok(sup)
    })?;
    let norms: Vec<f64> = xs.iter().map(HVector::norm).collect();
    let mut value = 0.0;
    for ni in 0..cfg.n {
        for i in 0..jn {
            for j in 0..jn {
                let sup = (0..=ni).map(|blk| flat[i * blocks + blk][j]).fold(0.0, f64::max);
                value += sup / (norms[i] * norms[j]) * 0.5f64.powi((i + j + ni + 3) as i32);
            }
        }
    }
    let mut caveat = smp.caveat;
    caveat.lipschitz_slack = caveat.lipschitz_slack.map(|l| l * (1.0 - weak_tail(cfg.j, cfg.n) / 2.0));
    Ok(MetricValue { value, truncation_bound: weak_tail(cfg.j, cfg.n), sampling_caveat: caveat })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::constructions::{periodize_shift, quantize_symbol};
    use crate::hilbert::WeightedGrid;
    use crate::semigroups::{MultiplicationGroup, ShiftSemigroup};

    fn cfg(grid: Arc<WeightedGrid>, j: usize, n: usize) -> MetricConfig {
        let mut c = MetricConfig::new(DenseSequence::seeded(grid, 16, 77).unwrap());
        c.j = j;
        c.n = n;
        c.samples_per_block = 16;
        c
    }

    #[test]
    fn tail_bounds_closed_form() {
        assert!((strong_tail(12, 12) - 2.0 * (1.0 - (1.0 - 2f64.powi(-12)).powi(2))).abs() < 1e-16);
        assert!(strong_tail(12, 12) < 0.002);
        assert!(weak_tail(3, 2) > strong_tail(3, 2));
    }

    #[test]
    fn identity_versus_unit_rotation_terms() {
        let grid = Arc::new(WeightedGrid::uniform(1).unwrap());
        let id = SemigroupModel::from(MultiplicationGroup::identity(grid.clone()));
        let rot = SemigroupModel::from(MultiplicationGroup::new(grid.clone(), vec![1.0]).unwrap());
        let c = cfg(grid, 4, 3);
        let terms = strong_terms(&id, &rot, &c, true).unwrap();
        let chord = (C64::from_polar(1.0, 1.0) - 1.0).norm();
        for (j, term) in terms[0].iter().enumerate() {
            assert!((term - chord * 0.5f64.powi(j as i32 + 2)).abs() < 1e-15);
        }
    }

    #[test]
    fn self_distance_zero_and_validation() {
        let grid = Arc::new(WeightedGrid::uniform(4).unwrap());
        let u = SemigroupModel::from(MultiplicationGroup::new(grid.clone(), vec![0.1, 0.2, 0.3, 0.4]).unwrap());
        let c = cfg(grid.clone(), 5, 3);
        assert_eq!(metric_unitary(&u, &u, &c).unwrap().value, 0.0);
        assert_eq!(metric_contractive(&u, &u, &c).unwrap().value, 0.0);
        let mut bad = c.clone();
        bad.j = 17;
        assert!(metric_unitary(&u, &u, &bad).is_err());
        let r = SemigroupModel::from(ShiftSemigroup::new(1.0, 1, 4).unwrap());
        assert!(metric_unitary(&r, &r, &cfg(r.base_grid(), 3, 2)).is_err());
    }

    #[test]
    fn quantization_metric_decreases() {
        let grid = Arc::new(WeightedGrid::uniform(8).unwrap());
        let sym: Vec<f64> = (0..8).map(|k| 0.37 + 0.71 * k as f64).collect();
        let u = MultiplicationGroup::new(grid.clone(), sym).unwrap();
        let c = cfg(grid, 6, 6);
        let mut last = f64::INFINITY;
        for n in [4, 16, 64, 256] {
            let v = quantize_symbol(&u, n).unwrap().approximant;
            let d = metric_unitary(&u.clone().into(), &v.into(), &c).unwrap().value;
            assert!(d < last, "n = {n}: {d} vs {last}");
            last = d;
        }
    }

    #[test]
    fn periodized_shift_converges() {
        let r = ShiftSemigroup::new(0.5, 1, 8).unwrap();
        let rm = SemigroupModel::from(r);
        let c = cfg(r.grid(), 4, 4);
        let mut last = f64::INFINITY;
        for nc in [8, 16, 32] {
            let u = SemigroupModel::from(periodize_shift(&r, nc).unwrap());
            let d = metric_isometric(&rm, &u, &c).unwrap();
            assert_eq!(d.sampling_caveat.lattice_step, Some(0.5));
            assert!(d.value <= last);
            last = d.value;
        }
        // a period of 32 cells = 16 time units covers t ≤ N = 4 with the 8-cell payload
        assert!(last < 1e-15);
    }

    #[test]
    fn weak_below_strong() {
        let grid = Arc::new(WeightedGrid::uniform(6).unwrap());
        let a =
            SemigroupModel::from(MultiplicationGroup::new(grid.clone(), vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap());
        let b = SemigroupModel::from(MultiplicationGroup::new(grid.clone(), vec![0.5; 6]).unwrap());
        let c = cfg(grid, 5, 4);
        let weak = metric_contractive(&a, &b, &c).unwrap().value;
        let strong = metric_isometric(&a, &b, &c).unwrap().value;
        assert!(weak <= weak_strong_constant(c.j) * strong + 1e-15);
        assert!(weak > 0.0);
    }
}
