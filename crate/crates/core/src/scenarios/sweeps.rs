//! Bound sweeps: symbol quantization, the near-identity estimate and the
//! shift periodization identity.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{config_error, log_log_slope, ScenarioOutput, Summary, Table};
use crate::constructions::{
    multiplication_distance, near_identity_aws, periodization_error, periodize_shift, quantize_symbol,
};
use crate::diagnostics::wiener_limit;
use crate::error::Result;
use crate::exec::Execution;
use crate::hilbert::{HVector, WeightedGrid, C64};
use crate::random;
use crate::semigroups::{MultiplicationGroup, ShiftSemigroup};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantizationSweep {
    #[serde(rename = "scenario", skip_serializing)]
    tag: String,
    pub seed: u64,
    /// Grid size of every random symbol.
    pub points: usize,
    pub symbols: usize,
    /// Symbol values are uniform in `[−symbol_range, symbol_range)`.
    pub symbol_range: f64,
    pub levels: Vec<usize>,
    pub times_per_level: usize,
    /// Times are uniform in `[−t_max, t_max]`.
    pub t_max: f64,
    /// Window `|t| ≤ slope_t_max` for the rate fit.
    pub slope_t_max: f64,
    pub slope_samples: usize,
    pub slope_min: f64,
    pub slope_max: f64,
}

impl Default for QuantizationSweep {
    fn default() -> Self {
        QuantizationSweep {
            tag: String::new(),
            seed: 0,
            points: 64,
            symbols: 100,
            symbol_range: 20.0,
            levels: vec![8, 16, 32, 64, 128, 256, 512, 1024],
            times_per_level: 16,
            t_max: 10.0,
            slope_t_max: 1.0,
            slope_samples: 64,
            slope_min: -1.2,
            slope_max: -0.8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct QuantizationRow {
    symbol: usize,
    n: usize,
    t: f64,
    measured_dist: f64,
    bound: f64,
    ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
struct RateRow {
    n: usize,
    max_error: f64,
    cell: f64,
}

impl QuantizationSweep {
    pub fn run(&self, exec: Execution) -> Result<ScenarioOutput> {
        if self.levels.is_empty() || self.levels.contains(&0) {
            return config_error("levels must be a nonempty list of positive integers");
        }
        if self.points == 0 || self.symbols == 0 || self.slope_samples < 1 {
            return config_error("points, symbols and slope_samples must be positive");
        }
        let grid = Arc::new(WeightedGrid::uniform(self.points)?);
        let slope_times: Vec<f64> = (0..=self.slope_samples)
            .map(|i| self.slope_t_max * (2.0 * i as f64 / self.slope_samples as f64 - 1.0))
            .collect();
        let per_symbol = exec.try_map(self.symbols, |s| -> Result<(Vec<QuantizationRow>, Vec<f64>)> {
            let mut rng = random::rng(self.seed, s as u64);
            let symbol = (0..self.points).map(|_| self.symbol_range * (2.0 * rng.random::<f64>() - 1.0)).collect();
            let u = MultiplicationGroup::new(grid.clone(), symbol)?;
            let mut rows = Vec::new();
            let mut window_max = Vec::with_capacity(self.levels.len());
            for &n in &self.levels {
                let q = quantize_symbol(&u, n)?;
                for _ in 0..self.times_per_level {
                    let t = self.t_max * (2.0 * rng.random::<f64>() - 1.0);
                    let measured = multiplication_distance(&u, &q.approximant, t)?;
                    let bound = q.guaranteed_bound(t);
                    let ratio = if bound > 0.0 { measured / bound } else { 0.0 };
                    rows.push(QuantizationRow { symbol: s, n, t, measured_dist: measured, bound, ratio });
                }
                let mut m = 0.0f64;
                for &t in &slope_times {
                    m = m.max(multiplication_distance(&u, &q.approximant, t)?);
                }
                window_max.push(m);
            }
            Ok((rows, window_max))
        })?;
        let mut rows = Vec::new();
        let mut max_error = vec![0.0f64; self.levels.len()];
        for (r, w) in per_symbol {
            rows.extend(r);
            for (m, v) in max_error.iter_mut().zip(w) {
                *m = m.max(v);
            }
        }
        let violations = rows.iter().filter(|r| r.measured_dist > r.bound).count();
        let ns: Vec<f64> = self.levels.iter().map(|&n| n as f64).collect();
        let slope = log_log_slope(&ns, &max_error);
        let rate: Vec<RateRow> = self
            .levels
            .iter()
            .zip(&max_error)
            .map(|(&n, &e)| RateRow { n, max_error: e, cell: 2.0 * PI / n as f64 })
            .collect();

        let mut summary = Summary::default();
        summary.check("bound_holds", violations == 0);
        if let Some(s) = slope {
            summary.check("rate_in_range", (self.slope_min..=self.slope_max).contains(&s));
        }
        summary.stat("trials", rows.len());
        summary.stat("violations", violations);
        summary.stat("max_ratio", rows.iter().map(|r| r.ratio).fold(0.0, f64::max));
        summary.stat("log_log_slope", slope);
        Ok(ScenarioOutput {
            summary,
            tables: vec![
                Table::from_rows("quantization_sweep.csv", &rows)?,
                Table::from_rows("quantization_rate.csv", &rate)?,
            ],
            extra_files: Vec::new(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NearIdentitySweep {
    #[serde(rename = "scenario", skip_serializing)]
    tag: String,
    pub seed: u64,
    pub points: usize,
    pub levels: Vec<usize>,
    /// Sample times per level, equally spaced on `[0, πn]`.
    pub samples: usize,
}

impl Default for NearIdentitySweep {
    fn default() -> Self {
        NearIdentitySweep { tag: String::new(), seed: 0, points: 64, levels: vec![4, 64, 512], samples: 1001 }
    }
}

#[derive(Debug, Clone, Serialize)]
struct NearIdentityRow {
    n: usize,
    t: f64,
    measured_dist: f64,
    bound: f64,
}

impl NearIdentitySweep {
    pub fn run(&self, exec: Execution) -> Result<ScenarioOutput> {
        if self.levels.is_empty() || self.levels.contains(&0) {
            return config_error("levels must be a nonempty list of positive integers");
        }
        if self.samples < 2 || self.points == 0 {
            return config_error("samples must be at least 2 and points positive");
        }
        let mut rng = random::rng(self.seed, 0);
        let mut pts: Vec<f64> = (0..self.points).map(|_| rng.random::<f64>()).collect();
        pts.sort_by(f64::total_cmp);
        let grid = Arc::new(WeightedGrid::new(pts, vec![1.0 / self.points as f64; self.points])?);
        let rows: Vec<Vec<NearIdentityRow>> = exec.try_map(self.levels.len(), |i| -> Result<Vec<NearIdentityRow>> {
            let n = self.levels[i];
            let u = near_identity_aws(&grid, n)?;
            let id = MultiplicationGroup::identity(grid.clone());
            (0..self.samples)
                .map(|s| {
                    let t = PI * n as f64 * s as f64 / (self.samples - 1) as f64;
                    let measured = multiplication_distance(&u, &id, t)?;
                    Ok(NearIdentityRow { n, t, measured_dist: measured, bound: 2.0 * t / n as f64 })
                })
                .collect()
        })?;
        let rows: Vec<NearIdentityRow> = rows.into_iter().flatten().collect();
        let violations = rows.iter().filter(|r| r.measured_dist > r.bound).count();
        let ones = HVector::new(grid.clone(), vec![C64::new(1.0, 0.0); self.points])?;
        let wiener = wiener_limit(&near_identity_aws(&grid, self.levels[0])?, &ones)?;

        let mut summary = Summary::default();
        summary.check("bound_holds", violations == 0);
        summary.stat("trials", rows.len());
        summary.stat("violations", violations);
        summary.stat("wiener_limit_uniform", wiener);
        Ok(ScenarioOutput {
            summary,
            tables: vec![Table::from_rows("lemma22_sweep.csv", &rows)?],
            extra_files: Vec::new(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShiftPeriodization {
    #[serde(rename = "scenario", skip_serializing)]
    tag: String,
    pub seed: u64,
    pub step: f64,
    pub fiber_dim: usize,
    pub cells: usize,
    pub period_cells: usize,
    pub payloads: usize,
    /// Payload envelope `e^{−s/decay}` over cell index `s`.
    pub decay: f64,
    pub rel_tol: f64,
}

impl Default for ShiftPeriodization {
    fn default() -> Self {
        ShiftPeriodization {
            tag: String::new(),
            seed: 0,
            step: 0.5,
            fiber_dim: 1,
            cells: 32,
            period_cells: 24,
            payloads: 1000,
            decay: 8.0,
            rel_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct PeriodizationRow {
    trial: usize,
    shift_cells: usize,
    t: f64,
    measured_sq: f64,
    identity_sq: f64,
    bound_sq: f64,
    corrected_bound_sq: f64,
    rel_gap: f64,
}

/// `|a − b| / max(|a|, |b|)`, zero when both vanish.
pub(crate) fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

impl ShiftPeriodization {
    pub fn run(&self, exec: Execution) -> Result<ScenarioOutput> {
        if self.payloads == 0 || self.period_cells == 0 || !(self.decay > 0.0) {
            return config_error("payloads and period_cells must be positive, decay > 0");
        }
        let r = ShiftSemigroup::new(self.step, self.fiber_dim, self.cells)?;
        let u = periodize_shift(&r, self.period_cells)?;
        let grid = r.grid();
        let m = self.fiber_dim;
        let rows = exec.try_map(self.payloads, |trial| -> Result<PeriodizationRow> {
            let mut rng = random::rng(self.seed, trial as u64);
            let f = HVector::from_fn(grid.clone(), |k| {
                random::complex_normal(&mut rng) * (-((k / m) as f64) / self.decay).exp()
            });
            let l = rng.random_range(0..self.period_cells);
            let t = l as f64 * self.step;
            let e = periodization_error(&r, &u, &f, t)?;
            Ok(PeriodizationRow {
                trial,
                shift_cells: l,
                t,
                measured_sq: e.measured_sq,
                identity_sq: e.identity_sq,
                bound_sq: e.bound_sq,
                corrected_bound_sq: e.corrected_bound_sq,
                rel_gap: relative_gap(e.measured_sq, e.identity_sq),
            })
        })?;
        // the bound comparisons allow for rounding in the last digits only
        let slack = 1.0 + 1e-12;
        let identity_ok = rows.iter().all(|r| r.rel_gap <= self.rel_tol);
        let violations_of = |b: fn(&PeriodizationRow) -> f64| {
            rows.iter().filter(|r| r.measured_sq > b(r) * slack || r.identity_sq > b(r) * slack).count()
        };
        let factor_two_violations = violations_of(|r| r.bound_sq);
        let corrected_violations = violations_of(|r| r.corrected_bound_sq);

        let mut summary = Summary::default();
        summary.check("identity_exact", identity_ok);
        summary.check("factor_two_bound_holds", factor_two_violations == 0);
        summary.check("corrected_bound_holds", corrected_violations == 0);
        summary.stat("trials", rows.len());
        summary.stat("factor_two_violations", factor_two_violations);
        summary.stat("max_rel_gap", rows.iter().map(|r| r.rel_gap).fold(0.0, f64::max));
        summary.stat(
            "max_bound_usage",
            rows.iter().map(|r| if r.bound_sq > 0.0 { r.measured_sq / r.bound_sq } else { 0.0 }).fold(0.0, f64::max),
        );
        Ok(ScenarioOutput {
            summary,
            tables: vec![Table::from_rows("shift_periodization.csv", &rows)?],
            extra_files: Vec::new(),
        })
    }
}
