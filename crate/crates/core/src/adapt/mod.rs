//! Model adaptation: the elite-selection loop, the importance-sampling
//! baseline, the prior-only fast path and a rejection-sampling oracle.

mod config;
mod engine;
mod prior_only;
mod record;
mod rejection;

pub use config::{MaceConfig, Method};
pub use engine::{importance_ratios, is_tune, mace_tune, select_elites, Selection};
pub use prior_only::{prior_only_best, PriorOnlyResult};
pub use record::{AdaptationRun, IterationRecord, PhaseTimings};
pub use rejection::{rejection_posterior, AcceptRule, RejectionResult, MIN_ACCEPTANCE_RATE};

use crate::models::{ModelError, ParamSnapshot};

/// Deterministic forward map from a task sample to an observation.
pub trait Simulator<X>: Sync {
    type Output: Send + Sync;

    fn simulate(&self, x: &X) -> Self::Output;
}

/// Similarity of a simulated observation to the evidence, in `[0, 1]`.
pub trait Score<O, E>: Sync {
    fn score(&self, simulated: &O, evidence: &E) -> f64;
}

impl<O, E, F> Score<O, E> for F
where
    F: Fn(&O, &E) -> f64 + Sync,
{
    fn score(&self, simulated: &O, evidence: &E) -> f64 {
        self(simulated, evidence)
    }
}

/// The sample itself is the observation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl<X: Clone + Send + Sync> Simulator<X> for Identity {
    type Output = X;

    fn simulate(&self, x: &X) -> X {
        x.clone()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AdaptError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("every score was zero for {retries} consecutive batches at iteration {iteration}")]
    AllZeroScores { iteration: usize, retries: usize },
    #[error("score {value} at sample {index} is outside [0, 1]")]
    InvalidScore { index: usize, value: f64 },
    #[error("non-finite objective or gradient at iteration {iteration}")]
    NonFinite { iteration: usize, snapshot: Box<ParamSnapshot> },
    #[error("rejection oracle infeasible: acceptance rate {rate:e} after {draws} draws")]
    OracleInfeasible { rate: f64, draws: usize },
}
