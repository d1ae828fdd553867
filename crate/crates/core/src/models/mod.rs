//! Explicit-likelihood generative models.

pub mod adam;
pub mod autoregressive;
pub mod latent;
pub mod mixture;
pub mod mlp;
pub mod snapshot;
pub mod train;
pub mod tunable;

pub use adam::Adam;
pub use autoregressive::{ArchitectureConfig, AutoregressiveGmmModel};
pub use latent::{BoxPlacement, BoxShapeCodec, DiagGaussian, LatentGaussianModel, LatentSample};
pub use mixture::MixtureHead1D;
pub use mlp::MlpParams;
pub use snapshot::{AnyModel, ModelDocument, ModelKind, ParamSnapshot, Provenance};
pub use train::{fit, mean_log_likelihood, train_prior, TrainConfig, TrainReport, TrainingPair};
pub use tunable::{weighted_objective_grad, ConditionedGmm, TunableModel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("network produced a non-finite output at joint {joint}")]
    NonFinite { joint: usize },
    #[error("objective is not finite")]
    NonFiniteObjective,
    #[error("joint {joint} value {value} lies outside its limits")]
    OutOfLimits { joint: usize, value: f64 },
    #[error("training diverged at step {step}")]
    Diverged { step: usize },
    #[error("model document: {0}")]
    Schema(String),
}
