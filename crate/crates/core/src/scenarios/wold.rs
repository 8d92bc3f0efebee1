//! Wold recovery on synthetic isometries `Q (U₀ ⊕ R) Q*`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{config_error, ScenarioOutput, Summary, Table};
use crate::constructions::wold_decompose;
use crate::error::Result;
use crate::exec::Execution;
use crate::hilbert::{distance, HVector, WeightedGrid};
use crate::linalg::{max_principal_angle, CMatrix};
use crate::random;
use crate::semigroups::{MultiplicationGroup, SemigroupModel, ShiftSemigroup};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WoldBenchmark {
    #[serde(rename = "scenario", skip_serializing)]
    tag: String,
    pub seed: u64,
    pub trials: usize,
    pub unitary_min: usize,
    pub unitary_max: usize,
    pub cells_min: usize,
    pub cells_max: usize,
    pub fiber_dim: usize,
    pub step: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub angle_tol: f64,
}

impl Default for WoldBenchmark {
    fn default() -> Self {
        WoldBenchmark {
            tag: String::new(),
            seed: 0,
            trials: 100,
            unitary_min: 1,
            unitary_max: 10,
            cells_min: 5,
            cells_max: 50,
            fiber_dim: 1,
            step: 1.0,
            max_iter: 256,
            tol: 1e-10,
            angle_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct WoldRow {
    trial: usize,
    true_dim_h0: usize,
    shift_cells: usize,
    recovered_dim: usize,
    wandering_dim: usize,
    max_principal_angle: f64,
    residual: f64,
    reconstruction_defect: f64,
    iterations: usize,
    converged: bool,
}

/// `Q (U₀ ⊕ R) Q*` with a random `dim_u`-point multiplication block (or none)
/// and a `cells`-cell shift (or none); returns the model and the true `H₀`
/// in orthonormal coordinates.
pub fn synthetic_isometry(
    dim_u: usize,
    cells: usize,
    fiber_dim: usize,
    step: f64,
    rng: &mut random::SeededRng,
) -> Result<(SemigroupModel, CMatrix)> {
    let mut parts: Vec<SemigroupModel> = Vec::new();
    if dim_u > 0 {
        let grid = Arc::new(WeightedGrid::uniform(dim_u)?);
        let symbol = (0..dim_u).map(|_| PI * (2.0 * rng.random::<f64>() - 1.0)).collect();
        parts.push(MultiplicationGroup::new(grid, symbol)?.into());
    }
    if cells > 0 {
        parts.push(ShiftSemigroup::new(step, fiber_dim, cells)?.into());
    }
    let dim = dim_u + cells * fiber_dim;
    let q = random::unitary(dim, rng);
    let truth = q.columns(0, dim_u).into_owned();
    let inner = if parts.len() == 1 { parts.pop().expect("one part") } else { SemigroupModel::direct_sum(parts)? };
    Ok((SemigroupModel::conjugated_on_base(inner, q)?, truth))
}

impl WoldBenchmark {
    pub fn run(&self, exec: Execution) -> Result<ScenarioOutput> {
        if self.trials == 0 {
            return config_error("trials must be at least 1");
        }
        if self.unitary_min > self.unitary_max
            || self.cells_min > self.cells_max
            || self.unitary_max + self.cells_max == 0
        {
            return config_error("dimension ranges must be nonempty");
        }
        let rows = exec.try_map(self.trials, |trial| -> Result<WoldRow> {
            let mut rng = random::rng(self.seed, trial as u64);
            let dim_u = rng.random_range(self.unitary_min..=self.unitary_max);
            let cells = rng.random_range(self.cells_min..=self.cells_max);
            let (v, truth) = synthetic_isometry(dim_u, cells, self.fiber_dim, self.step, &mut rng)?;
            let w = wold_decompose(&v, self.max_iter, self.tol)?;
            let angle = if w.unitary_dim() == dim_u && dim_u > 0 {
                max_principal_angle(w.unitary_coords(), &truth)
            } else if w.unitary_dim() == dim_u {
                0.0
            } else {
                std::f64::consts::FRAC_PI_2
            };
            let x = HVector::random(v.base_grid(), &mut rng);
            let defect = distance(&w.reassemble_step(&x)?, &v.apply(w.step, &x)?)?;
            Ok(WoldRow {
                trial,
                true_dim_h0: dim_u,
                shift_cells: cells,
                recovered_dim: w.unitary_dim(),
                wandering_dim: w.wandering_dim,
                max_principal_angle: angle,
                residual: w.residual,
                reconstruction_defect: defect,
                iterations: w.iterations,
                converged: w.converged,
            })
        })?;
        let exact = rows.iter().filter(|r| r.recovered_dim == r.true_dim_h0).count();
        let mut summary = Summary::default();
        summary.check("dimension_exact", exact == rows.len());
        summary.check("angles_within_tol", rows.iter().all(|r| r.max_principal_angle <= self.angle_tol));
        summary.check("converged", rows.iter().all(|r| r.converged));
        summary.check(
            "reconstruction_within_residual",
            rows.iter().all(|r| r.reconstruction_defect <= 10.0 * r.residual + 1e-12),
        );
        summary.stat("trials", rows.len());
        summary.stat("exact_recoveries", exact);
        summary.stat("max_principal_angle", rows.iter().map(|r| r.max_principal_angle).fold(0.0, f64::max));
        summary.stat("max_residual", rows.iter().map(|r| r.residual).fold(0.0, f64::max));
        Ok(ScenarioOutput {
            summary,
            tables: vec![Table::from_rows("wold_benchmark.csv", &rows)?],
            extra_files: Vec::new(),
        })
    }
}
