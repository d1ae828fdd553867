//! Experiment configuration and its cross-field validation.

use std::path::{Path, PathBuf};

use mace_core::adapt::{MaceConfig, Method};
use mace_core::scoring::ScoreSpec;
use mace_core::tasks::completion::CompletionTaskConfig;
use mace_core::tasks::grasp::GraspTaskConfig;
use mace_core::tasks::ik::IkTaskConfig;
use mace_core::tasks::toy::ToyPrior;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Environment variable naming the default output root.
pub const RUNS_DIR_ENV: &str = "MACE_RUNS_DIR";

pub fn default_output_dir() -> PathBuf {
    std::env::var_os(RUNS_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Ik,
    Grasp,
    PcComplete,
    Toy,
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Domain::Ik => "ik",
            Domain::Grasp => "grasp",
            Domain::PcComplete => "pc_complete",
            Domain::Toy => "toy",
        })
    }
}

impl std::str::FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown domain `{s}`"))
    }
}

/// Where the prior comes from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Model document to load. Required for `ik`; `grasp` and `pc_complete`
    /// fall back to the task's standard latent prior.
    pub path: Option<PathBuf>,
    /// Fixed mixture for the `toy` domain; a `path` given as well replaces
    /// the network built from it.
    pub toy: Option<ToyPrior>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "domain", rename_all = "snake_case")]
pub enum SimulatorConfig {
    Ik(IkTaskConfig),
    Grasp(GraspTaskConfig),
    PcComplete(CompletionTaskConfig),
    Toy,
}

impl SimulatorConfig {
    pub fn domain(&self) -> Domain {
        match self {
            SimulatorConfig::Ik(_) => Domain::Ik,
            SimulatorConfig::Grasp(_) => Domain::Grasp,
            SimulatorConfig::PcComplete(_) => Domain::PcComplete,
            SimulatorConfig::Toy => Domain::Toy,
        }
    }

    pub fn default_for(domain: Domain) -> Self {
        match domain {
            Domain::Ik => SimulatorConfig::Ik(IkTaskConfig::default()),
            Domain::Grasp => SimulatorConfig::Grasp(GraspTaskConfig::default()),
            Domain::PcComplete => SimulatorConfig::PcComplete(CompletionTaskConfig::default()),
            Domain::Toy => SimulatorConfig::Toy,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub domain: Domain,
    #[serde(default)]
    pub model: ModelConfig,
    pub simulator: SimulatorConfig,
    pub score: ScoreSpec,
    #[serde(default)]
    pub mace: MaceConfig,
    pub method: Method,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Seeds tuning (replacing `mace.seed`), evaluation and the prior-only
    /// search on disjoint streams.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_eval_samples")]
    pub eval_samples: usize,
    /// Batches drawn by the prior-only method, each of `mace.batch_size`.
    #[serde(default = "default_prior_only_batches")]
    pub prior_only_batches: usize,
    /// Evaluation clouds written to `samples/` (cloud domains only).
    #[serde(default = "default_cloud_dump")]
    pub cloud_dump: usize,
}

fn default_eval_samples() -> usize {
    1000
}

fn default_prior_only_batches() -> usize {
    20
}

fn default_cloud_dump() -> usize {
    49
}

impl ExperimentConfig {
    /// Reference setup for a domain.
    pub fn preset(domain: Domain) -> Self {
        let (score, mace) = match domain {
            Domain::Ik => (ScoreSpec::Ik { goal: mace_core::Vec2::new(2.3, 0.0) }, MaceConfig::ik_reference()),
            Domain::Grasp => (ScoreSpec::Grasp { fingers: 5 }, GraspTaskConfig::default().tuning(0)),
            Domain::PcComplete => (ScoreSpec::Chamfer { tau: 0.1, k_nn: 5 }, MaceConfig::completion_reference()),
            Domain::Toy => (
                ScoreSpec::Laplace { target: 1.0 },
                MaceConfig { iterations: 150, learning_rate: 0.02, ..MaceConfig::default() },
            ),
        };
        Self {
            name: domain.to_string(),
            domain,
            model: ModelConfig { path: None, toy: (domain == Domain::Toy).then(ToyPrior::default) },
            simulator: SimulatorConfig::default_for(domain),
            score,
            mace,
            method: Method::Mace,
            output_dir: default_output_dir(),
            seed: 0,
            eval_samples: default_eval_samples(),
            prior_only_batches: default_prior_only_batches(),
            cloud_dump: default_cloud_dump(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(CliError::config)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path).map_err(CliError::io(path))?)
    }

    /// Tuning hyperparameters with the experiment seed applied.
    pub fn tuning(&self) -> MaceConfig {
        MaceConfig { seed: self.seed, ..self.mace.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("experiment name `{}` must be non-empty and contain no path separators", self.name));
        }
        if self.simulator.domain() != self.domain {
            return bad(format!("domain {} but simulator block is for {}", self.domain, self.simulator.domain()));
        }
        self.score.validate().map_err(CliError::config)?;
        let score_ok = matches!(
            (self.domain, &self.score),
            (Domain::Ik, ScoreSpec::Ik { .. })
                | (Domain::Grasp, ScoreSpec::Grasp { .. })
                | (Domain::PcComplete, ScoreSpec::Chamfer { .. })
                | (Domain::Toy, ScoreSpec::Laplace { .. })
                | (Domain::Toy, ScoreSpec::Window { .. })
        );
        if !score_ok {
            return bad(format!("score `{}` does not apply to domain {}", self.score.name(), self.domain));
        }
        match (&self.simulator, &self.score) {
            (SimulatorConfig::Grasp(g), ScoreSpec::Grasp { fingers }) if g.finger_dirs.len() != *fingers => {
                return bad(format!("score expects {fingers} fingers, simulator has {}", g.finger_dirs.len()));
            }
            (SimulatorConfig::PcComplete(c), ScoreSpec::Chamfer { tau, k_nn }) if c.tau != *tau || c.k_nn != *k_nn => {
                return bad("chamfer score parameters differ from the completion task's".into());
            }
            (SimulatorConfig::Ik(t), _) => {
                t.simulator().map_err(CliError::config)?;
            }
            (SimulatorConfig::Grasp(g), _) => {
                g.codec.validate().map_err(CliError::config)?;
            }
            (SimulatorConfig::PcComplete(c), _) => {
                c.codec.validate().map_err(CliError::config)?;
            }
            _ => {}
        }
        match self.domain {
            Domain::Ik if self.model.path.is_none() => return bad("the ik domain needs model.path".into()),
            Domain::Toy if self.model.toy.is_none() => return bad("the toy domain needs model.toy".into()),
            _ => {}
        }
        if let Some(toy) = &self.model.toy {
            if self.domain != Domain::Toy {
                return bad("model.toy only applies to the toy domain".into());
            }
            toy.head().map_err(CliError::config)?;
        }
        self.tuning().validate().map_err(CliError::from)?;
        if self.eval_samples < 2 {
            return bad("eval_samples must be at least 2".into());
        }
        if self.method == Method::PriorOnly && self.prior_only_batches == 0 {
            return bad("prior_only_batches must be at least 1".into());
        }
        Ok(())
    }
}

/// Overwrites keys of `base` with those present in `overlay`, recursing into
/// objects. Used to let a config file take precedence over flags.
pub fn merge_json(base: &mut serde_json::Value, overlay: serde_json::Value) {
    match (base, overlay) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge_json(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
