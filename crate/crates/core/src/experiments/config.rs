use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::corpus::{Family, TestCorpus};
use crate::dyadic::{depth_for_rows, read_values, DyadicGrid, Weight};
use crate::error::{Error, Result};

/// The named experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    MaximalBoundednessSweep,
    SioBoundednessSweep,
    SharpMaximalEquivalence,
    SharpFailureDemo,
    WeakTypeWithCandidates,
    BmoEquivalence,
    MedianDecayCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::MaximalBoundednessSweep,
        ExperimentKind::SioBoundednessSweep,
        ExperimentKind::SharpMaximalEquivalence,
        ExperimentKind::SharpFailureDemo,
        ExperimentKind::WeakTypeWithCandidates,
        ExperimentKind::BmoEquivalence,
        ExperimentKind::MedianDecayCheck,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ExperimentKind::MaximalBoundednessSweep => "maximal_boundedness_sweep",
            ExperimentKind::SioBoundednessSweep => "sio_boundedness_sweep",
            ExperimentKind::SharpMaximalEquivalence => "sharp_maximal_equivalence",
            ExperimentKind::SharpFailureDemo => "sharp_failure_demo",
            ExperimentKind::WeakTypeWithCandidates => "weak_type_with_candidates",
            ExperimentKind::BmoEquivalence => "bmo_equivalence",
            ExperimentKind::MedianDecayCheck => "median_decay_check",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.id() == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: u32,
    #[serde(default = "default_root_exponent")]
    pub root_exponent: i32,
    /// Refinement depths, strictly increasing.
    pub levels: Vec<u32>,
}

fn default_root_exponent() -> i32 {
    1
}

/// Power exponents, or a density file whose depth bounds every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    #[serde(default = "default_powers")]
    pub powers: Vec<f64>,
    #[serde(default)]
    pub file: Option<PathBuf>,
}

fn default_powers() -> Vec<f64> {
    vec![0.0]
}

impl Default for WeightSpec {
    fn default() -> Self {
        WeightSpec { powers: default_powers(), file: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Exponents {
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub eta: f64,
    pub lambda: f64,
}

impl Default for Exponents {
    fn default() -> Self {
        Exponents { p: 4.0, q: 2.0, s: 1.0, eta: 1.0, lambda: 0.125 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusSpec {
    pub families: Vec<Family>,
    pub seed: u64,
    pub count: usize,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec { families: Family::ALL.to_vec(), seed: 0, count: 4 }
    }
}

impl CorpusSpec {
    pub fn corpora(&self) -> Vec<TestCorpus> {
        self.families.iter().map(|&family| TestCorpus { family, seed: self.seed, count: self.count }).collect()
    }
}

/// A complete experiment description, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub grid: GridSpec,
    #[serde(default)]
    pub weight: WeightSpec,
    #[serde(default)]
    pub exponents: Exponents,
    #[serde(default)]
    pub corpus: CorpusSpec,
}

fn default_output() -> PathBuf {
    PathBuf::from("morreylab-out")
}

impl ExperimentConfig {
    /// Parses and validates a config. Relative weight files resolve against
    /// `base_dir` when one is given.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let (Some(file), Some(dir)) = (&cfg.weight.file, path.parent()) {
            if file.is_relative() {
                cfg.weight.file = Some(dir.join(file));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let levels = &self.grid.levels;
        if levels.len() < 2 {
            return Err(Error::Config("grid.levels needs at least two refinement levels".into()));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("grid.levels must be strictly increasing".into()));
        }
        if !(1..=2).contains(&self.grid.dim) {
            return Err(Error::Config(format!("grid.dim must be 1 or 2, got {}", self.grid.dim)));
        }
        if self.weight.file.is_none() && self.weight.powers.is_empty() {
            return Err(Error::Config("weight.powers is empty".into()));
        }
        if self.corpus.count == 0 || self.corpus.families.is_empty() {
            return Err(Error::Config("the corpus is empty".into()));
        }
        let e = &self.exponents;
        if [e.p, e.q, e.s, e.eta, e.lambda].iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("exponents must be finite".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the config.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    /// The grid at refinement depth `level`; errors past the size cap.
    pub fn grid_at(&self, level: u32) -> Result<DyadicGrid> {
        DyadicGrid::new(self.grid.dim, self.grid.root_exponent, level)
    }
}

/// The weights an experiment sweeps over.
#[derive(Debug, Clone)]
pub(crate) enum WeightSource {
    Powers(Vec<f64>),
    File(Weight),
}

impl WeightSource {
    pub(crate) fn load(cfg: &ExperimentConfig) -> Result<Self> {
        let Some(path) = &cfg.weight.file else {
            return Ok(WeightSource::Powers(cfg.weight.powers.clone()));
        };
        let values = read_values(fs::File::open(path)?)?;
        let depth = depth_for_rows(cfg.grid.dim, values.len())?;
        let grid = DyadicGrid::new(cfg.grid.dim, cfg.grid.root_exponent, depth)?;
        let top = *cfg.grid.levels.last().expect("validated");
        if top > depth {
            return Err(Error::Config(format!("weight file has depth {depth} but grid.levels reaches {top}")));
        }
        Ok(WeightSource::File(Weight::from_density(grid, values)?))
    }

    /// Exponents to sweep; a file weight is reported with `alpha = NaN`.
    pub(crate) fn alphas(&self) -> Vec<f64> {
        match self {
            WeightSource::Powers(a) => a.clone(),
            WeightSource::File(_) => vec![f64::NAN],
        }
    }

    pub(crate) fn weight(&self, grid: DyadicGrid, alpha: f64) -> Result<Weight> {
        match self {
            WeightSource::Powers(_) => Weight::power(grid, alpha),
            WeightSource::File(w) => {
                let masses = w.masses().level(grid.depth());
                Weight::from_cell_masses(grid, grid.from_morton(masses))
            }
        }
    }
}
