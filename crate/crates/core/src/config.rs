//! Run configuration: a single JSON document with every default materialized
//! and unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discriminator::TrainConfig;
use crate::evolver::EvolverConfig;
use crate::tasks::PropertyTargets;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    /// Constant discriminator weight; `beta = 0` runs without a discriminator.
    Unconstrained {
        #[serde(default)]
        beta: f64,
    },
    /// `β` switched between `low` and `high` on stagnation.
    AdaptiveDt {
        #[serde(default)]
        low: f64,
        #[serde(default = "default_high")]
        high: f64,
        #[serde(default = "default_window")]
        window: usize,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    /// Improve `j` of starting molecules while staying similar to them.
    /// Without explicit `molecules`, the `count` lowest-`j` encodable
    /// reference molecules are used.
    ConstrainedSimilarity {
        #[serde(default)]
        molecules: Vec<String>,
        #[serde(default = "default_constrained_count")]
        count: usize,
        #[serde(default = "default_delta")]
        delta: f64,
    },
    /// Hit raw property targets; without explicit `targets`, `count` random
    /// targets are drawn from the mapped ranges.
    PropertyTarget {
        #[serde(default)]
        targets: Vec<PropertyTargets>,
        #[serde(default = "default_target_count")]
        count: usize,
        #[serde(default = "default_threshold")]
        threshold: f64,
    },
    LogpQed {
        #[serde(default = "default_w_j")]
        w_j: f64,
        #[serde(default = "default_w_qed")]
        w_qed: f64,
    },
    RandomBaseline {
        #[serde(default = "default_baseline_n")]
        n: usize,
        #[serde(default = "default_bins")]
        bins: usize,
    },
    BetaSweep {
        #[serde(default = "default_betas")]
        betas: Vec<f64>,
        #[serde(default = "default_sweep_seeds")]
        seeds: usize,
    },
}

fn default_high() -> f64 {
    1000.0
}
fn default_window() -> usize {
    20
}
fn default_epsilon() -> f64 {
    1e-3
}
fn default_constrained_count() -> usize {
    50
}
fn default_delta() -> f64 {
    0.4
}
fn default_target_count() -> usize {
    100
}
fn default_threshold() -> f64 {
    1.0
}
fn default_w_j() -> f64 {
    1.0
}
fn default_w_qed() -> f64 {
    10.0
}
fn default_baseline_n() -> usize {
    50_000
}
fn default_bins() -> usize {
    50
}
fn default_betas() -> Vec<f64> {
    vec![0.0, 10.0, 50.0]
}
fn default_sweep_seeds() -> usize {
    3
}

impl Default for TaskSpec {
    fn default() -> Self {
        TaskSpec::Unconstrained { beta: 0.0 }
    }
}

impl TaskSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::Unconstrained { .. } => "unconstrained",
            TaskSpec::AdaptiveDt { .. } => "adaptive_dt",
            TaskSpec::ConstrainedSimilarity { .. } => "constrained_similarity",
            TaskSpec::PropertyTarget { .. } => "property_target",
            TaskSpec::LogpQed { .. } => "logp_qed",
            TaskSpec::RandomBaseline { .. } => "random_baseline",
            TaskSpec::BetaSweep { .. } => "beta_sweep",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSource {
    /// The sample shipped with the library.
    #[default]
    Bundled,
    Path(PathBuf),
    /// Decoded random genotypes with canonical length 10 to 81.
    Synthetic(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: TaskSpec,
    pub seed: u64,
    pub generations: usize,
    pub reference: ReferenceSource,
    pub evolver: EvolverConfig,
    pub discriminator: TrainConfig,
    /// Write a population snapshot every this many generations (0 disables).
    pub snapshot_every: usize,
    pub output_dir: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: TaskSpec::default(),
            seed: 0,
            generations: 100,
            reference: ReferenceSource::default(),
            evolver: EvolverConfig::default(),
            discriminator: TrainConfig::default(),
            snapshot_every: 10,
            output_dir: None,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Pretty JSON with every field present.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        self.evolver.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let t = &self.discriminator;
        if t.epochs == 0 || t.batch_size == 0 {
            return bad("discriminator epochs and batch_size must be at least 1".into());
        }
        if !(t.learning_rate > 0.0 && t.learning_rate.is_finite()) {
            return bad("discriminator learning_rate must be positive".into());
        }
        if !((0.0..1.0).contains(&t.beta1) && (0.0..1.0).contains(&t.beta2) && t.epsilon > 0.0) {
            return bad("discriminator moment decays must lie in [0, 1) and epsilon must be positive".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        match &self.task {
            TaskSpec::Unconstrained { beta } if !finite_nonneg(*beta) => {
                bad(format!("beta must be finite and non-negative, got {beta}"))
            }
            TaskSpec::AdaptiveDt { low, high, window, epsilon } => {
                if !(finite_nonneg(*low) && finite_nonneg(*high) && low < high) {
                    bad("adaptive_dt needs 0 <= low < high".into())
                } else if *window == 0 || !finite_nonneg(*epsilon) {
                    bad("adaptive_dt needs window >= 1 and epsilon >= 0".into())
                } else {
                    Ok(())
                }
            }
            TaskSpec::ConstrainedSimilarity { delta, count, molecules } => {
                if !(0.0..=1.0).contains(delta) {
                    bad(format!("delta must lie in [0, 1], got {delta}"))
                } else if molecules.is_empty() && *count == 0 {
                    bad("constrained_similarity needs molecules or count >= 1".into())
                } else {
                    Ok(())
                }
            }
            TaskSpec::PropertyTarget { targets, count, threshold } => {
                if targets.is_empty() && *count == 0 {
                    bad("property_target needs targets or count >= 1".into())
                } else if !(threshold.is_finite() && *threshold > 0.0) {
                    bad("threshold must be positive".into())
                } else if targets.iter().any(|t| !(t.logp.is_finite() && t.sa.is_finite() && t.ring.is_finite())) {
                    bad("targets must be finite".into())
                } else {
                    Ok(())
                }
            }
            TaskSpec::LogpQed { w_j, w_qed } if !(finite_nonneg(*w_j) && finite_nonneg(*w_qed)) => {
                bad("logp_qed weights must be finite and non-negative".into())
            }
            TaskSpec::RandomBaseline { n, bins } if *n == 0 || *bins == 0 => {
                bad("random_baseline needs n >= 1 and bins >= 1".into())
            }
            TaskSpec::BetaSweep { betas, seeds } => {
                if betas.is_empty() || *seeds == 0 {
                    bad("beta_sweep needs a non-empty beta list and seeds >= 1".into())
                } else if betas.iter().any(|b| !finite_nonneg(*b)) {
                    bad("betas must be finite and non-negative".into())
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}
