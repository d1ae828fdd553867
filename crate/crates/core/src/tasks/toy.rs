//! One-dimensional toy domain: a fixed two-component mixture on `[-3, 3]`,
//! the identity simulator and scalar scores.

use serde::{Deserialize, Serialize};

use crate::models::{ArchitectureConfig, AutoregressiveGmmModel, ConditionedGmm, MixtureHead1D, ModelError};
use crate::rng;
use crate::space::JointLimit;

pub const TOY_LIMIT: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyPrior {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub stddevs: Vec<f64>,
    pub hidden: Vec<usize>,
}

impl Default for ToyPrior {
    fn default() -> Self {
        Self { weights: vec![0.6, 0.4], means: vec![-1.0, 1.2], stddevs: vec![0.7, 0.9], hidden: vec![8] }
    }
}

impl ToyPrior {
    pub fn head(&self) -> Result<MixtureHead1D, ModelError> {
        MixtureHead1D::new(self.weights.clone(), self.means.clone(), self.stddevs.clone())
    }

    pub fn build(&self, seed: u64) -> Result<ConditionedGmm, ModelError> {
        let head = self.head()?;
        let arch = ArchitectureConfig {
            hidden: self.hidden.clone(),
            components: head.components(),
            ..ArchitectureConfig::default()
        };
        let mut rng = rng::stream(seed, rng::STREAM_INIT);
        let limit = JointLimit::symmetric(TOY_LIMIT);
        let model = AutoregressiveGmmModel::with_fixed_heads(0, vec![limit], arch, &[head], &mut rng)?;
        ConditionedGmm::new(model, Vec::new())
    }
}

/// `exp(-|x - target|)`.
pub fn laplace_score(x: f64, target: f64) -> f64 {
    (-(x - target).abs()).exp()
}

/// `1` inside the closed window around `target`, `0` outside.
pub fn window_score(x: f64, target: f64, half_width: f64) -> f64 {
    if (x - target).abs() <= half_width {
        1.0
    } else {
        0.0
    }
}

/// Sample mean and unbiased standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}
