use serde::{Deserialize, Serialize};

use super::AdaptError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mace,
    Is,
    PriorOnly,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Mace => "mace",
            Method::Is => "is",
            Method::PriorOnly => "prior_only",
        })
    }
}

/// Hyperparameters shared by the elite-selection loop and the IS baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaceConfig {
    /// Outer iterations `T`. Zero returns the model untouched.
    pub iterations: usize,
    /// Samples per iteration `N`.
    pub batch_size: usize,
    /// Optimizer steps per iteration `M`.
    pub grad_steps: usize,
    /// Elite quantile `q`; `floor(q N)` samples define the threshold.
    pub quantile: f64,
    pub learning_rate: f64,
    pub seed: u64,
    /// Fraction of the selected set each optimizer step sees.
    pub minibatch_fraction: f64,
    /// Consecutive all-zero batches tolerated before faulting.
    pub max_zero_retries: usize,
    /// Upper bound on the importance ratio (IS baseline only).
    pub weight_clip: f64,
}

impl Default for MaceConfig {
    fn default() -> Self {
        Self::ik_reference()
    }
}

impl MaceConfig {
    /// Inverse-kinematics tuning hyperparameters at reference scale.
    pub fn ik_reference() -> Self {
        Self {
            iterations: 375,
            batch_size: 64,
            grad_steps: 4,
            quantile: 1.0 / 16.0,
            learning_rate: 2e-5,
            seed: 0,
            minibatch_fraction: 0.5,
            max_zero_retries: 10,
            weight_clip: 100.0,
        }
    }

    /// Grasp shape-inference tuning hyperparameters at reference scale.
    pub fn grasp_reference() -> Self {
        Self {
            iterations: 78,
            batch_size: 256,
            grad_steps: 32,
            quantile: 1.0 / 16.0,
            learning_rate: 2e-4,
            ..Self::ik_reference()
        }
    }

    /// Point-cloud completion tuning hyperparameters at reference scale.
    pub fn completion_reference() -> Self {
        Self {
            iterations: 31,
            batch_size: 256,
            grad_steps: 128,
            quantile: 1.0 / 32.0,
            learning_rate: 1e-3,
            ..Self::ik_reference()
        }
    }

    pub fn elite_count(&self) -> usize {
        (self.quantile * self.batch_size as f64).floor() as usize
    }

    pub fn validate(&self) -> Result<(), AdaptError> {
        let fail = |m: String| Err(AdaptError::Config(m));
        if self.batch_size == 0 || self.grad_steps == 0 {
            return fail("batch_size and grad_steps must be at least 1".into());
        }
        if !(self.quantile > 0.0 && self.quantile <= 1.0) {
            return fail(format!("quantile must lie in (0, 1], got {}", self.quantile));
        }
        if self.elite_count() == 0 {
            return fail(format!(
                "floor(q N) = 0 for q = {} and N = {}; no elites would be selected",
                self.quantile, self.batch_size
            ));
        }
        if !(self.minibatch_fraction > 0.0 && self.minibatch_fraction <= 1.0) {
            return fail(format!("minibatch_fraction must lie in (0, 1], got {}", self.minibatch_fraction));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return fail("learning_rate must be positive".into());
        }
        if !(self.weight_clip >= 1.0) {
            return fail("weight_clip must be at least 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_elite_count() {
        let cfg = MaceConfig::ik_reference();
        assert_eq!(cfg.elite_count(), 4);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_empty_elite_set() {
        let cfg = MaceConfig { batch_size: 8, quantile: 0.1, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
