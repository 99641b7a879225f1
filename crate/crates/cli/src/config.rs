//! Run configuration: JSON file fields, overridden by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use fiberalign::decomp::{LossWeights, SpecificityMode};
use fiberalign::fiber::JoinEngine;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_EPSILON: f64 = 0.5;
pub const DEFAULT_ETA: f64 = 0.1;
pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_GAMMA: f64 = 0.1;
pub const DEFAULT_DEGREE_BOUND: usize = 16;
pub const DEFAULT_DIM: usize = 4;
pub const DEFAULT_VOCAB_SIZE: u64 = 50_000;
pub const DEFAULT_HINGE_MARGIN: f64 = 1.0;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub out: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub patches: Option<PathBuf>,
    pub tokens: Option<PathBuf>,
    pub decomposition: Option<PathBuf>,
}

/// Contents of `--config <path>`. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub dim: Option<usize>,
    pub epsilon: Option<f64>,
    pub eta: Option<f64>,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub specificity_mode: Option<SpecificityMode>,
    pub hinge_margin: Option<f64>,
    pub vocab_size: Option<u64>,
    pub degree_bound: Option<usize>,
    pub engine: Option<String>,
    #[serde(default)]
    pub paths: PathsConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Core(fiberalign::Error::Parse {
                path: path.to_path_buf(),
                line: e.line(),
                message: e.to_string(),
            }))
    }
}

/// Values shared by every subcommand after applying precedence
/// (flag, then config file, then default).
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub dim: usize,
    pub epsilon: f64,
    pub eta: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub specificity_mode: SpecificityMode,
    pub hinge_margin: f64,
    pub vocab_size: u64,
    pub degree_bound: usize,
    pub engine: JoinEngine,
    pub out: PathBuf,
    pub paths: PathsConfig,
}

/// Global flags that override config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub engine: Option<JoinEngine>,
    pub epsilon: Option<f64>,
    pub eta: Option<f64>,
}

fn non_negative(name: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(CliError::usage(format!("{name} must be finite and >= 0, got {v}")))
    }
}

impl Settings {
    pub fn resolve(cfg: RunConfig, flags: Overrides) -> CliResult<Self> {
        let engine = match (flags.engine, cfg.engine.as_deref()) {
            (Some(e), _) => e,
            (None, Some(s)) => s.parse().map_err(CliError::usage)?,
            (None, None) => JoinEngine::Grid,
        };
        let hinge_margin = cfg.hinge_margin.unwrap_or(DEFAULT_HINGE_MARGIN);
        if !hinge_margin.is_finite() {
            return Err(CliError::usage("hinge_margin must be finite"));
        }
        let s = Settings {
            seed: flags.seed.or(cfg.seed).unwrap_or(0),
            dim: cfg.dim.unwrap_or(DEFAULT_DIM),
            epsilon: non_negative("epsilon", flags.epsilon.or(cfg.epsilon).unwrap_or(DEFAULT_EPSILON))?,
            eta: non_negative("eta", flags.eta.or(cfg.eta).unwrap_or(DEFAULT_ETA))?,
            lambda: non_negative("lambda", cfg.lambda.unwrap_or(DEFAULT_LAMBDA))?,
            gamma: cfg.gamma.unwrap_or(DEFAULT_GAMMA),
            specificity_mode: cfg.specificity_mode.unwrap_or(SpecificityMode::Literal),
            hinge_margin,
            vocab_size: cfg.vocab_size.unwrap_or(DEFAULT_VOCAB_SIZE),
            degree_bound: cfg.degree_bound.unwrap_or(DEFAULT_DEGREE_BOUND),
            engine,
            out: flags.out.or(cfg.paths.out.clone()).unwrap_or_else(|| PathBuf::from(".")),
            paths: cfg.paths,
        };
        if !s.gamma.is_finite() {
            return Err(CliError::usage("gamma must be finite"));
        }
        if s.dim == 0 || s.degree_bound == 0 {
            return Err(CliError::usage("dim and degree_bound must be >= 1"));
        }
        for p in [&s.paths.corpus, &s.paths.patches, &s.paths.tokens, &s.paths.decomposition]
            .into_iter()
            .flatten()
        {
            if !p.exists() {
                return Err(CliError::io(p, std::io::Error::from(std::io::ErrorKind::NotFound)));
            }
        }
        Ok(s)
    }

    pub fn weights(&self) -> CliResult<LossWeights> {
        Ok(LossWeights::new(self.lambda, self.gamma, self.specificity_mode, self.hinge_margin)?)
    }

    /// `<out>/<name>`.
    pub fn out_file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// The corpus given on the command line, else in the config, else `<out>/corpus.csv`.
    pub fn corpus_path(&self, flag: Option<&PathBuf>) -> PathBuf {
        flag.cloned()
            .or_else(|| self.paths.corpus.clone())
            .unwrap_or_else(|| self.out_file("corpus.csv"))
    }
}
