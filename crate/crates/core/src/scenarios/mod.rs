//! Reproducible experiments behind `stablesemi run`.
//!
//! A run is described by one TOML file with a `scenario` key naming the
//! experiment; every other key belongs to that scenario's config struct and
//! unknown keys are rejected. Each scenario returns CSV tables plus a
//! [`Summary`] whose `checks` are the bound verifications of the run. All
//! randomness is drawn from `(seed, stream)` pairs, so a config and a seed
//! fix every output byte.

mod cantor;
mod escape;
mod sweeps;
mod tables;
mod wold;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

pub use cantor::{cantor_grid, cantor_transform, product_depth, CantorDemo};
pub use escape::CategoryEscape;
pub use sweeps::{NearIdentitySweep, QuantizationSweep, ShiftPeriodization};
pub use tables::MetricTables;
pub use wold::{synthetic_isometry, WoldBenchmark};

use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioConfig {
    QuantizationSweep(QuantizationSweep),
    NearIdentitySweep(NearIdentitySweep),
    ShiftPeriodization(ShiftPeriodization),
    CantorDemo(CantorDemo),
    CategoryEscape(CategoryEscape),
    WoldBenchmark(WoldBenchmark),
    MetricTables(MetricTables),
}

pub const SCENARIOS: [&str; 7] = [
    "quantization_sweep",
    "lemma22_sweep",
    "shift_periodization",
    "cantor_demo",
    "category_escape",
    "wold_benchmark",
    "metric_tables",
];

fn parse_as<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = parse_as(text)?;
        let name = match table.get("scenario") {
            Some(toml::Value::String(s)) => s.as_str(),
            Some(_) => return Err(Error::Config("`scenario` must be a string".into())),
            None => return Err(Error::Config("missing `scenario` key".into())),
        };
        let cfg = match name {
            "quantization_sweep" => ScenarioConfig::QuantizationSweep(parse_as(text)?),
            "lemma22_sweep" => ScenarioConfig::NearIdentitySweep(parse_as(text)?),
            "shift_periodization" => ScenarioConfig::ShiftPeriodization(parse_as(text)?),
            "cantor_demo" => ScenarioConfig::CantorDemo(parse_as(text)?),
            "category_escape" => ScenarioConfig::CategoryEscape(parse_as(text)?),
            "wold_benchmark" => ScenarioConfig::WoldBenchmark(parse_as(text)?),
            "metric_tables" => ScenarioConfig::MetricTables(parse_as(text)?),
            other => {
                return Err(Error::Config(format!(
                    "unknown scenario `{other}`; expected one of {}",
                    SCENARIOS.join(", ")
                )))
            }
        };
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioConfig::QuantizationSweep(_) => SCENARIOS[0],
            ScenarioConfig::NearIdentitySweep(_) => SCENARIOS[1],
            ScenarioConfig::ShiftPeriodization(_) => SCENARIOS[2],
            ScenarioConfig::CantorDemo(_) => SCENARIOS[3],
            ScenarioConfig::CategoryEscape(_) => SCENARIOS[4],
            ScenarioConfig::WoldBenchmark(_) => SCENARIOS[5],
            ScenarioConfig::MetricTables(_) => SCENARIOS[6],
        }
    }

    fn seed_mut(&mut self) -> &mut u64 {
        match self {
            ScenarioConfig::QuantizationSweep(c) => &mut c.seed,
            ScenarioConfig::NearIdentitySweep(c) => &mut c.seed,
            ScenarioConfig::ShiftPeriodization(c) => &mut c.seed,
            ScenarioConfig::CantorDemo(c) => &mut c.seed,
            ScenarioConfig::CategoryEscape(c) => &mut c.seed,
            ScenarioConfig::WoldBenchmark(c) => &mut c.seed,
            ScenarioConfig::MetricTables(c) => &mut c.seed,
        }
    }

    pub fn seed(&self) -> u64 {
        *self.clone().seed_mut()
    }

    pub fn set_seed(&mut self, seed: u64) {
        *self.seed_mut() = seed;
    }

    pub fn run(&self, exec: Execution) -> Result<ScenarioOutput> {
        let mut out = match self {
            ScenarioConfig::QuantizationSweep(c) => c.run(exec),
            ScenarioConfig::NearIdentitySweep(c) => c.run(exec),
            ScenarioConfig::ShiftPeriodization(c) => c.run(exec),
            ScenarioConfig::CantorDemo(c) => c.run(exec),
            ScenarioConfig::CategoryEscape(c) => c.run(exec),
            ScenarioConfig::WoldBenchmark(c) => c.run(exec),
            ScenarioConfig::MetricTables(c) => c.run(exec),
        }?;
        out.summary.scenario = self.name().to_string();
        out.summary.seed = self.seed();
        out.summary.config = match self {
            ScenarioConfig::QuantizationSweep(c) => serde_json::to_value(c)?,
            ScenarioConfig::NearIdentitySweep(c) => serde_json::to_value(c)?,
            ScenarioConfig::ShiftPeriodization(c) => serde_json::to_value(c)?,
            ScenarioConfig::CantorDemo(c) => serde_json::to_value(c)?,
            ScenarioConfig::CategoryEscape(c) => serde_json::to_value(c)?,
            ScenarioConfig::WoldBenchmark(c) => serde_json::to_value(c)?,
            ScenarioConfig::MetricTables(c) => serde_json::to_value(c)?,
        };
        out.summary.pass = out.summary.checks.values().all(|c| *c);
        out.summary.outputs =
            out.tables.iter().map(|t| t.file.clone()).chain(out.extra_files.iter().map(|(f, _)| f.clone())).collect();
        Ok(out)
    }
}

/// One CSV output, already encoded.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub rows: usize,
    pub bytes: Vec<u8>,
}

impl Table {
    pub fn from_rows<R: Serialize>(file: impl Into<String>, rows: &[R]) -> Result<Self> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(Table { file: file.into(), rows: rows.len(), bytes })
    }

    /// Parses the table back as string records (header excluded).
    pub fn records(&self) -> Result<Vec<csv::StringRecord>> {
        let mut r = csv::Reader::from_reader(self.bytes.as_slice());
        Ok(r.records().collect::<std::result::Result<_, _>>()?)
    }
}

/// JSON summary of a run; see `docs/summary.schema.json`.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub seed: u64,
    pub pass: bool,
    pub checks: BTreeMap<String, bool>,
    pub stats: BTreeMap<String, serde_json::Value>,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
}

impl Summary {
    pub(crate) fn check(&mut self, name: &str, ok: bool) {
        self.checks.insert(name.to_string(), ok);
    }

    pub(crate) fn stat(&mut self, name: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.stats.insert(name.to_string(), v);
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioOutput {
    pub summary: Summary,
    pub tables: Vec<Table>,
    pub extra_files: Vec<(String, Vec<u8>)>,
}

impl ScenarioOutput {
    pub fn summary_file(&self) -> String {
        format!("{}.summary.json", self.summary.scenario)
    }

    pub fn table(&self, file: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.file == file)
    }

    /// Writes every table, extra file and the summary into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let files = self
            .tables
            .iter()
            .map(|t| (t.file.as_str(), t.bytes.as_slice()))
            .chain(self.extra_files.iter().map(|(f, b)| (f.as_str(), b.as_slice())));
        for (file, bytes) in files {
            let path = dir.join(file);
            fs::write(&path, bytes)?;
            written.push(path);
        }
        let path = dir.join(self.summary_file());
        let mut json = serde_json::to_vec_pretty(&self.summary)?;
        json.push(b'\n');
        fs::write(&path, json)?;
        written.push(path);
        Ok(written)
    }
}

pub(crate) fn config_error<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

/// Least-squares slope of `ln y` against `ln x` over the positive pairs.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
