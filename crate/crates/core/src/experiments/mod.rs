//! Reproducible experiments over refinement sweeps.
//!
//! An [`ExperimentConfig`] names one experiment, a list of refinement depths,
//! the weights and a test corpus. [`run`] evaluates it and returns long-form
//! rows `alpha,L,metric,value`. Every reduction is either sequential or a
//! maximum, so results do not depend on the thread count.
//!
//! ```
//! use morreylab::experiments::{run, ExperimentConfig};
//!
//! let cfg = ExperimentConfig::from_toml_str(r#"
//!     experiment = "sharp_failure_demo"
//!     [grid]
//!     dim = 1
//!     levels = [4, 6]
//! "#).unwrap();
//! let out = run(&cfg).unwrap();
//! assert_eq!(out.value(-0.5, 6, "mf_deviation"), Some(0.0));
//! ```

mod artifacts;
mod config;
mod corpus;
mod ops;

use std::io::Write;

use serde::Serialize;

pub use artifacts::{render_svg, write_artifacts, Artifacts};
pub use config::{CorpusSpec, ExperimentConfig, ExperimentKind, Exponents, GridSpec, WeightSpec};
pub use corpus::{Family, TestCorpus};
pub use ops::{
    candidate_condition_constant, classify, generalized_bmo_norm, sharp_equivalence_ratios, SharpRatios, Trend,
    BOUNDED_GROWTH, UNBOUNDED_GROWTH,
};

use crate::error::{Error, Result};
use config::WeightSource;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "MORREYLAB_THREADS";

pub const CSV_COLUMNS: [&str; 4] = ["alpha", "L", "metric", "value"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub alpha: f64,
    pub level: u32,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub kind: ExperimentKind,
    pub rows: Vec<Row>,
    /// One line per `(α, L)`.
    pub summary: Vec<String>,
    /// Skipped items and ignored settings.
    pub notes: Vec<String>,
}

fn same_alpha(a: f64, b: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan())
}

impl ExperimentOutput {
    pub fn value(&self, alpha: f64, level: u32, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| same_alpha(r.alpha, alpha) && r.level == level && r.metric == metric)
            .map(|r| r.value)
    }

    /// `(L, value)` pairs of one metric at one `α`.
    pub fn series(&self, alpha: f64, metric: &str) -> Vec<(u32, f64)> {
        self.rows
            .iter()
            .filter(|r| same_alpha(r.alpha, alpha) && r.metric == metric)
            .map(|r| (r.level, r.value))
            .collect()
    }

    /// Writes the rows with floats in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_COLUMNS)?;
        for r in &self.rows {
            w.write_record([format!("{:?}", r.alpha), r.level.to_string(), r.metric.clone(), format!("{:?}", r.value)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// A rayon pool honoring [`THREADS_ENV`]; unset means rayon's default.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Config(e.to_string()))
}

/// Runs the configured experiment inside [`thread_pool`].
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let src = WeightSource::load(cfg)?;
    for &level in &cfg.grid.levels {
        cfg.grid_at(level)?;
    }
    thread_pool()?.install(|| match cfg.experiment {
        ExperimentKind::MaximalBoundednessSweep | ExperimentKind::SioBoundednessSweep => {
            ops::boundedness_sweep(cfg, &src)
        }
        ExperimentKind::SharpMaximalEquivalence => ops::sharp_maximal_equivalence(cfg, &src),
        ExperimentKind::SharpFailureDemo => ops::sharp_failure_demo(cfg),
        ExperimentKind::WeakTypeWithCandidates => ops::weak_type_with_candidates(cfg, &src),
        ExperimentKind::BmoEquivalence => ops::bmo_equivalence(cfg, &src),
        ExperimentKind::MedianDecayCheck => ops::median_decay_check(cfg, &src),
    })
}
