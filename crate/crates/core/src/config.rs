//! JSON experiment configuration.
//!
//! Relative paths are resolved against the directory of the config file.
//!
//! ```json
//! {
//!   "seed": 7,
//!   "datasets": [
//!     { "path": "data/no2", "name": "NO2" },
//!     { "synth": { "family": "R", "m_o": 10, "a_s": 5, "n_o": 100 } },
//!     { "suite": { "families": ["R", "S"], "m_o": [5, 10], "a_s": [5, 15], "n_o": 100 } }
//!   ],
//!   "methods": ["BL_L", "BL_Q", "SR_E", "SR_M", "MPLC", "DSIL"],
//!   "folds": 3,
//!   "svr": { "epsilon": 0.1, "tol": 0.001, "max_passes": 100 },
//!   "c_grid": [0.001, 0.01, 0.1, 1, 10, 100, 1000],
//!   "output_dir": "out",
//!   "max_parallel_cells": 0,
//!   "timing": { "repeats": 3 }
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::load_dataset_dir;
use crate::datagen::{derive_seed, generate, Family, SynthSpec, TimingGridSpec};
use crate::error::{Result, ZskError};
use crate::evaluation::benchmark::{default_c_grid, BenchmarkConfig, NamedDataset};
use crate::evaluation::timing::{TimingOptions, TIMING_METHODS};
use crate::methods::Method;
use crate::svr::SvrConfig;

pub const SEED_ENV: &str = "ZSK_SEED";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthEntry {
    pub family: Family,
    pub m_o: usize,
    pub a_s: usize,
    #[serde(default)]
    pub n_o: Option<usize>,
    #[serde(default)]
    pub a_x: Option<usize>,
    /// Defaults to a seed derived from the experiment seed and the entry position.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub d_prototypes: Option<usize>,
}

impl SynthEntry {
    fn spec(&self, fallback_seed: u64) -> SynthSpec {
        let mut s = SynthSpec::new(self.family, self.m_o, self.a_s, self.seed.unwrap_or(fallback_seed));
        if let Some(n) = self.n_o {
            s.n_o = n;
        }
        if let Some(a) = self.a_x {
            s.a_x = a;
        }
        if let Some(d) = self.d_prototypes {
            s.d_prototypes = d;
        }
        s
    }
}

/// Cross product of families × m_o × a_s, the layout of the synthetic suites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEntry {
    pub families: Vec<Family>,
    pub m_o: Vec<usize>,
    pub a_s: Vec<usize>,
    #[serde(default)]
    pub n_o: Option<usize>,
    #[serde(default)]
    pub a_x: Option<usize>,
    #[serde(default)]
    pub d_prototypes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum DatasetSource {
    Path {
        path: PathBuf,
        #[serde(default)]
        name: Option<String>,
    },
    Synth {
        synth: SynthEntry,
        #[serde(default)]
        name: Option<String>,
    },
    Suite {
        suite: SuiteEntry,
    },
}

fn default_folds() -> usize {
    3
}

fn default_output() -> PathBuf {
    PathBuf::from("zsk-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvrDefaults {
    #[serde(default = "SvrDefaults::epsilon")]
    pub epsilon: f64,
    #[serde(default = "SvrDefaults::tol")]
    pub tol: f64,
    #[serde(default = "SvrDefaults::max_passes")]
    pub max_passes: usize,
}

impl SvrDefaults {
    fn epsilon() -> f64 {
        SvrConfig::default().epsilon
    }
    fn tol() -> f64 {
        SvrConfig::default().tol
    }
    fn max_passes() -> usize {
        SvrConfig::default().max_passes
    }
}

impl Default for SvrDefaults {
    fn default() -> Self {
        Self {
            epsilon: Self::epsilon(),
            tol: Self::tol(),
            max_passes: Self::max_passes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSection {
    #[serde(default)]
    pub grid: Option<TimingGridSpec>,
    #[serde(default = "TimingSection::repeats")]
    pub repeats: usize,
    #[serde(default = "TimingSection::warmup")]
    pub warmup: bool,
    /// Regularization used for every timed fit.
    #[serde(default = "TimingSection::c")]
    pub c: f64,
}

impl TimingSection {
    fn repeats() -> usize {
        3
    }
    fn warmup() -> bool {
        true
    }
    fn c() -> f64 {
        1.0
    }
}

impl Default for TimingSection {
    fn default() -> Self {
        Self {
            grid: None,
            repeats: Self::repeats(),
            warmup: Self::warmup(),
            c: Self::c(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default)]
    pub datasets: Vec<DatasetSource>,
    #[serde(default)]
    pub methods: Vec<Method>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub svr: SvrDefaults,
    #[serde(default = "default_c_grid")]
    pub c_grid: Vec<f64>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Worker threads for benchmark cells; 0 means all available cores.
    #[serde(default)]
    pub max_parallel_cells: usize,
    #[serde(default)]
    pub timing: TimingSection,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| ZskError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(ZskError::Config(format!("config file not found: {}", path.display())));
        }
        let text = fs::read_to_string(path).map_err(|e| ZskError::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, &base)
    }

    /// Replaces the seed with the parsed value of `value` (the `ZSK_SEED` variable).
    pub fn apply_seed_override(&mut self, value: Option<&str>) -> Result<()> {
        if let Some(v) = value {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| ZskError::Config(format!("{SEED_ENV}=`{v}` is not an unsigned 64-bit integer")))?;
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn svr_config(&self) -> SvrConfig {
        SvrConfig {
            c: 1.0,
            epsilon: self.svr.epsilon,
            tol: self.svr.tol,
            max_passes: self.svr.max_passes,
        }
    }

    pub fn benchmark_config(&self) -> BenchmarkConfig {
        BenchmarkConfig {
            folds: self.folds,
            seed: self.seed,
            svr: self.svr_config(),
            c_grid: self.c_grid.clone(),
            max_parallel_cells: self.max_parallel_cells,
        }
    }

    pub fn validate_for_benchmark(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(ZskError::Config("config lists no datasets".into()));
        }
        if self.methods.is_empty() {
            return Err(ZskError::Config("config lists no methods".into()));
        }
        self.benchmark_config().validate()
    }

    /// Timing methods: the configured ones, or the four default kernel paths.
    pub fn timing_methods(&self) -> Vec<Method> {
        if self.methods.is_empty() {
            TIMING_METHODS.to_vec()
        } else {
            self.methods.clone()
        }
    }

    pub fn timing_grid(&self) -> TimingGridSpec {
        let mut g = self.timing.grid.clone().unwrap_or_default();
        if self.timing.grid.is_none() {
            g.seed = self.seed;
        }
        g
    }

    pub fn timing_options(&self) -> Result<TimingOptions> {
        if self.timing.repeats == 0 {
            return Err(ZskError::Config("timing.repeats must be >= 1".into()));
        }
        let svr = self.svr_config().with_c(self.timing.c);
        svr.validate().map_err(|e| ZskError::Config(e.to_string()))?;
        Ok(TimingOptions {
            repeats: self.timing.repeats,
            warmup: self.timing.warmup,
            svr,
        })
    }

    /// Every synthetic spec the dataset list expands to, with its display name.
    pub fn expand_sources(&self) -> Vec<(String, Source)> {
        let mut out = Vec::new();
        for src in &self.datasets {
            match src {
                DatasetSource::Path { path, name } => {
                    let p = self.resolve(path);
                    let n = name.clone().unwrap_or_else(|| {
                        p.file_name()
                            .map(|f| f.to_string_lossy().into_owned())
                            .unwrap_or_else(|| p.display().to_string())
                    });
                    out.push((n, Source::Dir(p)));
                }
                DatasetSource::Synth { synth, name } => {
                    let spec = synth.spec(derive_seed(self.seed, out.len() as u64));
                    out.push((name.clone().unwrap_or_else(|| spec.name()), Source::Synth(spec)));
                }
                DatasetSource::Suite { suite } => {
                    for &family in &suite.families {
                        for &a_s in &suite.a_s {
                            for &m_o in &suite.m_o {
                                let entry = SynthEntry {
                                    family,
                                    m_o,
                                    a_s,
                                    n_o: suite.n_o,
                                    a_x: suite.a_x,
                                    seed: None,
                                    d_prototypes: suite.d_prototypes,
                                };
                                let spec = entry.spec(derive_seed(self.seed, out.len() as u64));
                                out.push((spec.name(), Source::Synth(spec)));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Loads or generates every dataset.
    pub fn materialize_datasets(&self) -> Result<Vec<NamedDataset>> {
        self.expand_sources()
            .into_iter()
            .map(|(name, src)| {
                let data = match src {
                    Source::Dir(p) => load_dataset_dir(&p)?,
                    Source::Synth(spec) => generate(&spec).map_err(|e| match e {
                        ZskError::InvalidArgument(m) => ZskError::Config(m),
                        other => other,
                    })?,
                };
                Ok(NamedDataset::new(name, data))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Dir(PathBuf),
    Synth(SynthSpec),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_example() {
        let text = r#"{
          "seed": 7,
          "datasets": [
            { "path": "data/no2", "name": "NO2" },
            { "synth": { "family": "R", "m_o": 10, "a_s": 5, "n_o": 100 } },
            { "suite": { "families": ["R", "S"], "m_o": [5, 10], "a_s": [5, 15], "n_o": 100 } }
          ],
          "methods": ["BL_L", "BL_Q", "SR_E", "SR_M", "MPLC", "DSIL"],
          "folds": 3,
          "svr": { "epsilon": 0.1, "tol": 0.001, "max_passes": 100 },
          "c_grid": [0.001, 0.01, 0.1, 1, 10, 100, 1000],
          "output_dir": "out",
          "max_parallel_cells": 0,
          "timing": { "repeats": 3 }
        }"#;
        let cfg = ExperimentConfig::from_json(text, Path::new("/cfg")).unwrap();
        cfg.validate_for_benchmark().unwrap();
        let src = cfg.expand_sources();
        assert_eq!(src.len(), 1 + 1 + 8);
        assert_eq!(src[0], ("NO2".into(), Source::Dir("/cfg/data/no2".into())));
        assert_eq!(src[1].0, "R^{10,5}");
        assert_eq!(src[2].0, "R^{5,5}");
        assert_eq!(src[9].0, "S^{10,15}");
        assert_eq!(cfg.output_dir(), PathBuf::from("/cfg/out"));
        assert_eq!(cfg.methods.len(), 6);
    }

    #[test]
    fn seed_is_mandatory_and_overridable() {
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"methods":["BL_L"]}"#, Path::new(".")),
            Err(ZskError::Config(_))
        ));
        let mut cfg = ExperimentConfig::from_json(r#"{"seed":1}"#, Path::new(".")).unwrap();
        cfg.apply_seed_override(Some("99")).unwrap();
        assert_eq!(cfg.seed, 99);
        assert!(cfg.apply_seed_override(Some("x")).is_err());
        assert!(cfg.validate_for_benchmark().is_err());
    }

    #[test]
    fn unknown_method_or_field_is_config_error() {
        assert!(ExperimentConfig::from_json(r#"{"seed":1,"methods":["SVM"]}"#, Path::new(".")).is_err());
        assert!(ExperimentConfig::from_json(r#"{"seed":1,"bogus":true}"#, Path::new(".")).is_err());
    }

    #[test]
    fn synth_seeds_follow_experiment_seed() {
        let text = r#"{"seed":1,"datasets":[{"synth":{"family":"S","m_o":3,"a_s":2,"n_o":4,"a_x":2}}],"methods":["DSIL"]}"#;
        let mut cfg = ExperimentConfig::from_json(text, Path::new(".")).unwrap();
        let a = cfg.materialize_datasets().unwrap();
        cfg.seed = 2;
        let b = cfg.materialize_datasets().unwrap();
        assert_ne!(a[0].data, b[0].data);
    }
}
