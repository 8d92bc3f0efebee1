//! Almost weak stability witness built from the middle-thirds Cantor measure.
//!
//! Its Fourier–Stieltjes transform `γ̂(t) = e^{it/2} Π_{k≥1} cos(t/3^k)` has
//! a small quadratic time average but keeps returning to size about one half
//! at the times `π·3^j`. The same trace is produced by a multiplication
//! group on the `2^d` points of the depth-`d` Cantor approximation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{config_error, ScenarioOutput, Summary, Table};
use crate::diagnostics::{
    cesaro_mean_abs, cesaro_mean_abs2, classify, correlation_with, density_estimate, uniform_times, wiener_limit,
    ClassifyParams, CorrelationTrace, Verdict,
};
use crate::error::Result;
use crate::exec::Execution;
use crate::hilbert::{DenseSequence, HVector, WeightedGrid, C64};
use crate::semigroups::{MultiplicationGroup, SemigroupModel};

/// Smallest depth `K` such that every omitted factor `cos(t/3^k)`, `k > K`,
/// is within `tol` of 1 for `|t| ≤ horizon`.
pub fn product_depth(horizon: f64, tol: f64) -> usize {
    let mut k = 0;
    while 1.0 - (horizon / 3f64.powi(k as i32 + 1)).min(std::f64::consts::PI).cos() > tol {
        k += 1;
    }
    k
}

/// `e^{it/2} Π_{k=1}^{depth} cos(t/3^k)`.
pub fn cantor_transform(t: f64, depth: usize) -> C64 {
    let mut p = 1.0;
    let mut scale = 1.0;
    for _ in 0..depth {
        scale /= 3.0;
        p *= (t * scale).cos();
    }
    C64::from_polar(p, t / 2.0)
}

/// The `2^depth` points `Σ_{k≤depth} 2a_k/3^k` in increasing order, uniform weights.
pub fn cantor_grid(depth: usize) -> Result<WeightedGrid> {
    let n = 1usize << depth;
    let points = (0..n)
        .map(|i| {
            (0..depth)
                .map(|k| {
                    let bit = (i >> (depth - 1 - k)) & 1;
                    2.0 * bit as f64 / 3f64.powi(k as i32 + 1)
                })
                .sum()
        })
        .collect();
    WeightedGrid::new(points, vec![1.0 / n as f64; n])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CantorDemo {
    #[serde(rename = "scenario", skip_serializing)]
    tag: String,
    pub seed: u64,
    /// Depth of the discrete grid route.
    pub depth: usize,
    pub horizon: f64,
    pub dt: f64,
    /// Accuracy of the truncated product route.
    pub product_tol: f64,
    pub epsilon: f64,
    pub delta_wiener: f64,
    pub delta_density: f64,
    pub atom_threshold: f64,
    pub cesaro_max: f64,
    pub tail_min: f64,
    /// Emit every `row_stride`-th sample to the CSV.
    pub row_stride: usize,
}

impl Default for CantorDemo {
    fn default() -> Self {
        CantorDemo {
            tag: String::new(),
            seed: 0,
            depth: 12,
            horizon: 1e4,
            dt: 0.25,
            product_tol: 1e-14,
            epsilon: 0.1,
            delta_wiener: 0.01,
            delta_density: 0.9,
            atom_threshold: 0.05,
            cesaro_max: 0.05,
            tail_min: 0.2,
            row_stride: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct CantorRow {
    t: f64,
    product_re: f64,
    product_im: f64,
    product_abs: f64,
    grid_abs: f64,
    gap: f64,
}

impl CantorDemo {
    pub fn model(&self) -> Result<(SemigroupModel, HVector)> {
        let grid = Arc::new(cantor_grid(self.depth)?);
        let u = MultiplicationGroup::new(grid.clone(), grid.points().to_vec())?;
        let ones = HVector::new(grid.clone(), vec![C64::new(1.0, 0.0); grid.len()])?;
        Ok((u.into(), ones))
    }

    pub fn run(&self, exec: Execution) -> Result<ScenarioOutput> {
        if self.depth == 0 || self.depth > 20 {
            return config_error("depth must be in 1..=20");
        }
        if self.row_stride == 0 {
            return config_error("row_stride must be positive");
        }
        let times = uniform_times(self.horizon, self.dt)?;
        let k = product_depth(self.horizon, self.product_tol);
        let product_values = exec.map(times.len(), |i| cantor_transform(times[i], k));
        let product = CorrelationTrace::new(times.clone(), product_values)?;
        let (model, ones) = self.model()?;
        let grid_trace = correlation_with(&model, &ones, &ones, &times, exec)?;

        let params = ClassifyParams {
            horizon: self.horizon,
            dt: self.dt,
            epsilon: self.epsilon,
            delta_wiener: self.delta_wiener,
            delta_density: self.delta_density,
            atom_threshold: self.atom_threshold,
        };
        let report = classify(&model, &DenseSequence::new(vec![ones.clone()])?, &params, exec)?;

        let rows: Vec<CantorRow> = (0..times.len())
            .step_by(self.row_stride)
            .map(|i| {
                let p = product.values[i];
                let g = grid_trace.values[i];
                CantorRow {
                    t: times[i],
                    product_re: p.re,
                    product_im: p.im,
                    product_abs: p.norm(),
                    grid_abs: g.norm(),
                    gap: (p - g).norm(),
                }
            })
            .collect();
        let gaps = product.values.iter().zip(&grid_trace.values);
        let max_gap = gaps.clone().map(|(p, g)| (p - g).norm()).fold(0.0, f64::max);
        let max_modulus_gap = gaps.map(|(p, g)| (p.norm() - g.norm()).abs()).fold(0.0, f64::max);

        let cesaro2 = cesaro_mean_abs2(&product)?;
        let tail = product.tail_sup();
        let two = cantor_grid(1)?;
        let two = Arc::new(two);
        let depth1 = wiener_limit(
            &MultiplicationGroup::new(two.clone(), two.points().to_vec())?,
            &HVector::new(two, vec![C64::new(1.0, 0.0); 2])?,
        )?;

        let mut summary = Summary::default();
        summary.check("cesaro_abs2_small", cesaro2 <= self.cesaro_max);
        summary.check("tail_sup_large", tail >= self.tail_min);
        summary.check("grid_route_agrees", report.cesaro_abs2 <= self.cesaro_max && report.tail_sup >= self.tail_min);
        summary.check("verdict_almost_weakly_stable", report.verdict == Verdict::AlmostWeaklyStableEvidence);
        summary.check("depth1_wiener_half", (depth1 - 0.5).abs() <= 1e-15);
        summary.stat("product_depth", k);
        summary.stat("cesaro_abs2", cesaro2);
        summary.stat("cesaro_abs", cesaro_mean_abs(&product)?);
        summary.stat("tail_sup", tail);
        summary.stat("density_est", density_estimate(&product, self.epsilon)?);
        summary.stat("grid_cesaro_abs2", report.cesaro_abs2);
        summary.stat("grid_tail_sup", report.tail_sup);
        summary.stat("grid_density_est", report.density_est);
        summary.stat("grid_wiener_limit", report.wiener_closed_form);
        summary.stat("max_gap", max_gap);
        summary.stat("max_modulus_gap", max_modulus_gap);
        summary.stat("depth1_wiener", depth1);
        summary.stat("verdict", report.verdict);
        Ok(ScenarioOutput {
            summary,
            tables: vec![Table::from_rows("cantor_demo.csv", &rows)?],
            extra_files: Vec::new(),
        })
    }
}
