//! Adaptation of explicit-likelihood generative models to environment
//! observations with the cross-entropy method.
//!
//! The crate is organized bottom-up:
//!
//! * [`models`]: autoregressive Gaussian-mixture networks and latent-Gaussian
//!   models with frozen analytic encoder/decoder, exact log-densities and
//!   reverse-mode gradients, plus maximum-likelihood prior training.
//! * [`simulators`]: deterministic forward maps from task samples to
//!   observations (planar chain with obstacles, grasp contacts, box clouds and
//!   hyperplane cuts).
//! * [`scoring`]: score functions into `[0, 1]`, k-wise Chamfer distance and
//!   the pairwise-Chamfer diversity metric.
//! * [`adapt`]: the elite-selection tuning loop, the importance-sampling
//!   baseline, the prior-only fast path and a rejection-sampling oracle.
//! * [`tasks`]: ready-made desk-scale domains wiring the above together.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapt;
pub mod models;
pub mod rng;
pub mod scoring;
pub mod simulators;
pub mod space;
pub mod tasks;

pub use adapt::{
    is_tune, mace_tune, prior_only_best, rejection_posterior, AcceptRule, AdaptError, AdaptationRun, IterationRecord,
    MaceConfig, Method, Score, Simulator,
};
pub use models::{
    AutoregressiveGmmModel, ConditionedGmm, LatentGaussianModel, MixtureHead1D, ModelError, ParamSnapshot, TunableModel,
};
pub use scoring::{chamfer_k, diversity, grasp_score, ik_score, pc_score, ScoreSpec};
pub use simulators::{IkObservation, KinematicChain, ObstacleSet, PointCloud};
pub use space::{JointLimit, Vec2, Vec3};
