//! IK datasets and prior training.

use std::path::Path;

use mace_core::models::train::{train_prior, TrainConfig, TrainReport, TrainingPair};
use mace_core::models::{ModelDocument, Provenance};
use mace_core::tasks::ik::{generate_dataset, IkTaskConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Valid `(p_ee, q)` pairs together with the geometry that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub task: IkTaskConfig,
    pub seed: u64,
    pub pairs: Vec<TrainingPair>,
}

impl Dataset {
    pub fn generate(task: &IkTaskConfig, count: usize, seed: u64) -> Result<Self> {
        let chain = task.chain()?;
        let pairs = generate_dataset(&chain, count, seed)?;
        Ok(Self { task: task.clone(), seed, pairs })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("dataset serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_json())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Fits an autoregressive prior to a dataset and packages it as a model document.
pub fn train_from_dataset(data: &Dataset, cfg: &TrainConfig) -> Result<(ModelDocument, TrainReport)> {
    let chain = data.task.chain()?;
    let (model, report) = train_prior(&data.pairs, chain.joint_limits.clone(), cfg)?;
    let provenance =
        Provenance { seed: Some(cfg.seed), note: format!("{} pairs, {} steps", data.pairs.len(), cfg.steps) };
    Ok((ModelDocument::from_autoregressive(&model, provenance), report))
}

pub fn load_document(path: &Path) -> Result<ModelDocument> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    ModelDocument::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(CliError::io(parent))?;
    }
    std::fs::write(path, contents).map_err(CliError::io(path))
}
