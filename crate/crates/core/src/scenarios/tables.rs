//! Metric convergence tables for the three approximation families.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::wold::synthetic_isometry;
use super::{config_error, ScenarioOutput, Summary, Table};
use crate::constructions::{approximate_isometry_by_periodic, periodize_shift, quantize_symbol};
use crate::error::Result;
use crate::exec::Execution;
use crate::hilbert::{DenseSequence, WeightedGrid};
use crate::metrics::{metric_isometric, metric_unitary, MetricConfig, MetricValue};
use crate::random;
use crate::semigroups::{MultiplicationGroup, SemigroupModel, ShiftSemigroup};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricTables {
    #[serde(rename = "scenario", skip_serializing)]
    tag: String,
    pub seed: u64,
    pub points: usize,
    pub symbol_range: f64,
    pub levels: Vec<usize>,
    pub step: f64,
    pub cells: usize,
    pub period_cells: Vec<usize>,
    pub unitary_dim: usize,
    pub isometry_levels: Vec<usize>,
    pub dense: usize,
    pub j: usize,
    pub n: usize,
    pub samples_per_block: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for MetricTables {
    fn default() -> Self {
        MetricTables {
            tag: String::new(),
            seed: 0,
            points: 8,
            symbol_range: 4.0,
            levels: vec![8, 32, 128],
            step: 0.5,
            cells: 16,
            period_cells: vec![16, 32, 64],
            unitary_dim: 3,
            isometry_levels: vec![8, 32, 128],
            dense: 16,
            j: 10,
            n: 8,
            samples_per_block: 32,
            max_iter: 256,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct MetricRow {
    family: &'static str,
    n: usize,
    value: f64,
    truncation_bound: f64,
    lipschitz_slack: Option<f64>,
    refined_value: f64,
    refined_change: f64,
}

type Metric = fn(&SemigroupModel, &SemigroupModel, &MetricConfig) -> Result<MetricValue>;

fn row(
    family: &'static str,
    n: usize,
    a: &SemigroupModel,
    b: &SemigroupModel,
    cfg: &MetricConfig,
    metric: Metric,
) -> Result<MetricRow> {
    let v = metric(a, b, cfg)?;
    let refined = metric(a, b, &cfg.refined(2))?;
    Ok(MetricRow {
        family,
        n,
        value: v.value,
        truncation_bound: v.truncation_bound,
        lipschitz_slack: v.sampling_caveat.lipschitz_slack,
        refined_value: refined.value,
        refined_change: (refined.value - v.value).abs(),
    })
}

impl MetricTables {
    fn config(&self, grid: Arc<WeightedGrid>, stream: u64, exec: Execution) -> Result<MetricConfig> {
        let mut cfg = MetricConfig::new(DenseSequence::seeded(grid, self.dense, self.seed.wrapping_add(stream))?);
        cfg.j = self.j;
        cfg.n = self.n;
        cfg.samples_per_block = self.samples_per_block;
        cfg.exec = exec;
        Ok(cfg)
    }

    pub fn run(&self, exec: Execution) -> Result<ScenarioOutput> {
        if self.j + 2 > self.dense {
            return config_error("dense must be at least j + 2 for the refinement check");
        }
        if self.levels.is_empty() || self.period_cells.is_empty() || self.isometry_levels.is_empty() {
            return config_error("levels, period_cells and isometry_levels must be nonempty");
        }
        let mut rows = Vec::new();

        let mut rng = random::rng(self.seed, 0);
        let grid = Arc::new(WeightedGrid::uniform(self.points)?);
        let symbol = (0..self.points).map(|_| self.symbol_range * (2.0 * rng.random::<f64>() - 1.0)).collect();
        let u = MultiplicationGroup::new(grid.clone(), symbol)?;
        let um = SemigroupModel::from(u.clone());
        let cfg = self.config(grid, 1, exec)?;
        for &n in &self.levels {
            let v = quantize_symbol(&u, n)?.approximant.into();
            rows.push(row("quantization", n, &um, &v, &cfg, metric_unitary)?);
        }

        let r = ShiftSemigroup::new(self.step, 1, self.cells)?;
        let rm = SemigroupModel::from(r);
        let cfg = self.config(r.grid(), 2, exec)?;
        for &nc in &self.period_cells {
            let p = periodize_shift(&r, nc)?.into();
            rows.push(row("periodization", nc, &rm, &p, &cfg, metric_isometric)?);
        }

        let mut rng = random::rng(self.seed, 3);
        let (v, _) = synthetic_isometry(self.unitary_dim, self.cells, 1, self.step, &mut rng)?;
        let cfg = self.config(v.base_grid(), 4, exec)?;
        for &n in &self.isometry_levels {
            let approx = approximate_isometry_by_periodic(&v, n, self.max_iter, self.tol)?;
            rows.push(row("isometry_periodic", n, &v, &approx.model, &cfg, metric_isometric)?);
        }

        let mut summary = Summary::default();
        let mut monotone = true;
        for fam in ["quantization", "periodization", "isometry_periodic"] {
            let vals: Vec<&MetricRow> = rows.iter().filter(|r| r.family == fam).collect();
            let ok = vals.windows(2).all(|w| {
                let noise = w[0].lipschitz_slack.unwrap_or(0.0) + w[1].lipschitz_slack.unwrap_or(0.0);
                w[1].value <= w[0].value + noise
            });
            summary.stat(&format!("{fam}_last"), vals.last().map(|r| r.value));
            monotone &= ok;
        }
        summary.check("monotone_within_noise", monotone);
        summary.check("tail_certified", rows.iter().all(|r| r.refined_change < r.truncation_bound));
        summary.stat("truncation_bound", rows[0].truncation_bound);
        Ok(ScenarioOutput {
            summary,
            tables: vec![Table::from_rows("metric_tables.csv", &rows)?],
            extra_files: Vec::new(),
        })
    }
}
