//! Membership mechanics behind the category argument.
//!
//! * Periodic approximants `V_n` return to the identity at multiples of
//!   their period, so `|⟨V_n(m·n)x, x⟩| = 1 > 1/2` for every multiple:
//!   they leave every `M_t` eventually, while `d(U, V_n)` shrinks.
//! * Inflated-and-perturbed approximants push every witness correlation
//!   below `1/k` at some sampled time.
//! * Near an eigenvector the correlation stays above `1/3`.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{config_error, ScenarioOutput, Summary, Table};
use crate::constructions::{inflate_and_perturb_with_period, quantize_symbol};
use crate::diagnostics::{correlation_with, mt_membership, self_correlation, uniform_times, wjkt_membership};
use crate::error::Result;
use crate::exec::Execution;
use crate::hilbert::{DenseSequence, HVector, WeightedGrid, C64};
use crate::metrics::{metric_unitary, MetricConfig};
use crate::random;
use crate::semigroups::{MultiplicationGroup, SemigroupModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CategoryEscape {
    #[serde(rename = "scenario", skip_serializing)]
    tag: String,
    pub seed: u64,
    pub points: usize,
    pub base_groups: usize,
    pub symbol_range: f64,
    pub levels: Vec<usize>,
    pub multiples: Vec<u32>,
    pub witnesses: usize,
    pub k: u32,
    pub epsilon: f64,
    /// `t₀` of the inflation guarantee.
    pub aws_horizon: f64,
    pub copies: usize,
    /// Times searched for `W_{jkt}` membership: `[0, search_horizon]` in steps of `dt`.
    pub search_horizon: f64,
    pub dt: f64,
    pub metric_j: usize,
    pub metric_n: usize,
    pub samples_per_block: usize,
    pub eigen_pairs: usize,
    pub eigen_times: usize,
    pub eigen_horizon: f64,
}

impl Default for CategoryEscape {
    fn default() -> Self {
        CategoryEscape {
            tag: String::new(),
            seed: 0,
            points: 16,
            base_groups: 3,
            symbol_range: 4.0,
            levels: vec![8, 16, 32, 64],
            multiples: vec![1, 2, 3, 5],
            witnesses: 4,
            k: 3,
            epsilon: 0.1,
            aws_horizon: 2.0,
            copies: 8,
            search_horizon: 2000.0,
            dt: 0.25,
            metric_j: 8,
            metric_n: 6,
            samples_per_block: 32,
            eigen_pairs: 20,
            eigen_times: 201,
            eigen_horizon: 100.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct EscapeRow {
    base: usize,
    n: usize,
    multiple: u32,
    t: f64,
    value: f64,
    in_m_t: bool,
    metric: f64,
    metric_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
struct AwsRow {
    base: usize,
    n: usize,
    witness: usize,
    k: u32,
    first_t: Option<f64>,
    value: Option<f64>,
    entered: bool,
}

#[derive(Debug, Clone, Serialize)]
struct EigenRow {
    pair: usize,
    distance: f64,
    t: f64,
    value: f64,
    lower_bound: f64,
    in_w_jkt: bool,
    holds: bool,
}

#[derive(Debug, Clone, Serialize)]
struct ModelRecord {
    base: usize,
    n: usize,
    periodic: SemigroupModel,
    aws: SemigroupModel,
}

struct BaseResult {
    escape: Vec<EscapeRow>,
    aws: Vec<AwsRow>,
    models: Vec<ModelRecord>,
}

impl CategoryEscape {
    fn base_group(&self, b: usize) -> Result<(MultiplicationGroup, DenseSequence)> {
        let grid = Arc::new(WeightedGrid::uniform(self.points)?);
        let mut rng = random::rng(self.seed, b as u64);
        let symbol = (0..self.points).map(|_| self.symbol_range * (2.0 * rng.random::<f64>() - 1.0)).collect();
        let dense = DenseSequence::seeded(grid.clone(), self.witnesses.max(self.metric_j), self.seed ^ (b as u64 + 1))?;
        Ok((MultiplicationGroup::new(grid, symbol)?, dense))
    }

    fn run_base(&self, b: usize, exec: Execution) -> Result<BaseResult> {
        let (u, dense) = self.base_group(b)?;
        let um = SemigroupModel::from(u.clone());
        let mut cfg = MetricConfig::new(dense.clone());
        cfg.j = self.metric_j;
        cfg.n = self.metric_n;
        cfg.samples_per_block = self.samples_per_block;
        cfg.exec = exec;
        let x = dense.vectors()[0].normalized()?;
        let anchors: Vec<HVector> =
            dense.vectors()[..self.witnesses].iter().map(HVector::normalized).collect::<Result<_>>()?;
        let times = uniform_times(self.search_horizon, self.dt)?;
        let mut out = BaseResult { escape: Vec::new(), aws: Vec::new(), models: Vec::new() };
        for &n in &self.levels {
            let v = quantize_symbol(&u, n)?;
            let vm = SemigroupModel::from(v.approximant.clone());
            let metric = metric_unitary(&um, &vm, &cfg)?;
            for &m in &self.multiples {
                let t = f64::from(m) * v.period();
                out.escape.push(EscapeRow {
                    base: b,
                    n,
                    multiple: m,
                    t,
                    value: self_correlation(&vm, &x, t)?,
                    in_m_t: mt_membership(&vm, &x, t)?,
                    metric: metric.value,
                    metric_bound: metric.truncation_bound,
                });
            }
            let inflated = inflate_and_perturb_with_period(
                &v.approximant,
                &anchors,
                self.epsilon,
                self.aws_horizon,
                self.copies,
                v.period(),
            )?;
            let tm = SemigroupModel::from(inflated.group.clone());
            for (j, a) in anchors.iter().enumerate() {
                let e = inflated.embed(a)?;
                let trace = correlation_with(&tm, &e, &e, &times, Execution::Sequential)?;
                let first = trace.values.iter().position(|c| c.norm() < 1.0 / f64::from(self.k));
                let entered = match first {
                    Some(i) => wjkt_membership(&tm, &e, self.k, times[i])?,
                    None => false,
                };
                out.aws.push(AwsRow {
                    base: b,
                    n,
                    witness: j,
                    k: self.k,
                    first_t: first.map(|i| times[i]),
                    value: first.map(|i| trace.values[i].norm()),
                    entered,
                });
            }
            out.models.push(ModelRecord { base: b, n, periodic: vm, aws: tm });
        }
        Ok(out)
    }

    fn eigen_rows(&self) -> Result<Vec<EigenRow>> {
        let (u, _) = self.base_group(0)?;
        let um = SemigroupModel::from(u.clone());
        let grid = u.grid().clone();
        let mut rows = Vec::new();
        for pair in 0..self.eigen_pairs {
            let mut rng = random::rng(self.seed, 1_000_000 + pair as u64);
            let x = HVector::unit_at(grid.clone(), rng.random_range(0..self.points))?;
            let dir = HVector::random(grid.clone(), &mut rng).normalized()?;
            let r = 0.25 * rng.random::<f64>();
            let xj = x.add(&dir.scale(C64::new(r, 0.0)))?;
            let d = crate::hilbert::distance(&x, &xj)?;
            let lower = 1.0 - d * d - 2.0 * d;
            for i in 0..self.eigen_times {
                let t = self.eigen_horizon * i as f64 / (self.eigen_times.max(2) - 1) as f64;
                let value = self_correlation(&um, &xj, t)?;
                let in_w = wjkt_membership(&um, &xj, 3, t)?;
                rows.push(EigenRow {
                    pair,
                    distance: d,
                    t,
                    value,
                    lower_bound: lower,
                    in_w_jkt: in_w,
                    holds: value >= lower - 1e-12 && value > 1.0 / 3.0 && !in_w,
                });
            }
        }
        Ok(rows)
    }

    pub fn run(&self, exec: Execution) -> Result<ScenarioOutput> {
        if self.levels.is_empty() || self.levels.contains(&0) || self.multiples.is_empty() {
            return config_error("levels and multiples must be nonempty, levels positive");
        }
        if self.witnesses == 0 || self.k == 0 || self.base_groups == 0 || self.points == 0 {
            return config_error("points, base_groups, witnesses and k must be positive");
        }
        let bases = exec.try_map(self.base_groups, |b| self.run_base(b, Execution::Sequential))?;
        let eigen = self.eigen_rows()?;

        let mut escape = Vec::new();
        let mut aws = Vec::new();
        let mut models = Vec::new();
        let mut monotone = true;
        for base in bases {
            let metrics: Vec<f64> =
                base.escape.iter().filter(|r| r.multiple == self.multiples[0]).map(|r| r.metric).collect();
            monotone &= metrics.windows(2).all(|w| w[1] < w[0]);
            escape.extend(base.escape);
            aws.extend(base.aws);
            models.extend(base.models);
        }
        let max_revival_defect = escape.iter().map(|r| (1.0 - r.value).abs()).fold(0.0, f64::max);

        let mut summary = Summary::default();
        summary.check("periodic_escape", escape.iter().all(|r| !r.in_m_t && r.value > 0.5));
        summary.check("metric_decreasing", monotone);
        summary.check("aws_enters_w_jk", aws.iter().all(|r| r.entered));
        summary.check("eigenvector_bound", eigen.iter().all(|r| r.holds));
        summary.stat("max_revival_defect", max_revival_defect);
        summary.stat("latest_entry_time", aws.iter().filter_map(|r| r.first_t).fold(0.0, f64::max));
        summary.stat("min_eigen_value", eigen.iter().map(|r| r.value).fold(f64::INFINITY, f64::min));
        let mut models_json = serde_json::to_vec(&models)?;
        models_json.push(b'\n');
        Ok(ScenarioOutput {
            summary,
            tables: vec![
                Table::from_rows("category_escape.csv", &escape)?,
                Table::from_rows("category_escape_aws.csv", &aws)?,
                Table::from_rows("category_escape_eigen.csv", &eigen)?,
            ],
            extra_files: vec![("category_escape_models.json".to_string(), models_json)],
        })
    }
}
