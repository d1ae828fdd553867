use rand::Rng;
use rayon::prelude::*;

use super::autoregressive::AutoregressiveGmmModel;
use super::latent::{LatentGaussianModel, LatentSample};
use super::snapshot::{ModelKind, ParamSnapshot};
use super::ModelError;

/// A generative model the adaptation loop can sample from and fit.
///
/// `log_objective` is the per-sample quantity the tuner ascends: the exact
/// log-likelihood for autoregressive models and `-KL(q(z|x) || p(z; θ))` for
/// latent-Gaussian models, whose frozen reconstruction term is constant in θ.
pub trait TunableModel: Clone + Send + Sync {
    type Sample: Clone + Send + Sync;

    fn kind(&self) -> ModelKind;

    fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<Self::Sample>, ModelError>;

    fn log_objective(&self, x: &Self::Sample) -> Result<f64, ModelError>;

    /// Adds `scale * d objective / d θ` into `grad` and returns the objective.
    fn accumulate_objective_grad(&self, x: &Self::Sample, scale: f64, grad: &mut [f64]) -> Result<f64, ModelError>;

    fn num_params(&self) -> usize;

    fn params(&self) -> Vec<f64>;

    fn set_params(&mut self, values: &[f64]) -> Result<(), ModelError>;

    fn snapshot(&self) -> ParamSnapshot {
        ParamSnapshot { kind: self.kind(), values: self.params() }
    }

    fn restore(&mut self, snapshot: &ParamSnapshot) -> Result<(), ModelError> {
        if snapshot.kind != self.kind() {
            return Err(ModelError::Schema(format!(
                "snapshot of {:?} cannot restore a {:?} model",
                snapshot.kind,
                self.kind()
            )));
        }
        self.set_params(&snapshot.values)
    }
}

const GRAD_CHUNK: usize = 8;

/// Weighted sum of per-sample objective gradients, `Σ w_i ∇ f(x_i)`, plus the
/// weighted objective sum. Chunks are fixed-size and reduced in order, so the
/// result does not depend on the thread count.
pub fn weighted_objective_grad<M: TunableModel>(
    model: &M,
    samples: &[&M::Sample],
    weights: &[f64],
) -> Result<(f64, Vec<f64>), ModelError> {
    debug_assert_eq!(samples.len(), weights.len());
    let n = model.num_params();
    let partials: Vec<Result<(f64, Vec<f64>), ModelError>> = samples
        .par_chunks(GRAD_CHUNK)
        .zip(weights.par_chunks(GRAD_CHUNK))
        .map(|(xs, ws)| {
            let mut grad = vec![0.0; n];
            let mut total = 0.0;
            for (x, w) in xs.iter().zip(ws) {
                total += w * model.accumulate_objective_grad(x, *w, &mut grad)?;
            }
            Ok((total, grad))
        })
        .collect();
    let mut grad = vec![0.0; n];
    let mut total = 0.0;
    for part in partials {
        let (t, g) = part?;
        total += t;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    Ok((total, grad))
}

/// An autoregressive model bound to one condition vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionedGmm {
    pub model: AutoregressiveGmmModel,
    pub condition: Vec<f64>,
}

impl ConditionedGmm {
    pub fn new(model: AutoregressiveGmmModel, condition: Vec<f64>) -> Result<Self, ModelError> {
        if condition.len() != model.condition_dim() {
            return Err(ModelError::Shape(format!(
                "condition has length {}, model expects {}",
                condition.len(),
                model.condition_dim()
            )));
        }
        Ok(Self { model, condition })
    }
}

impl TunableModel for ConditionedGmm {
    type Sample = Vec<f64>;

    fn kind(&self) -> ModelKind {
        ModelKind::AutoregressiveGmm
    }

    fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>, ModelError> {
        self.model.sample(&self.condition, n, rng)
    }

    fn log_objective(&self, x: &Vec<f64>) -> Result<f64, ModelError> {
        self.model.log_likelihood(&self.condition, x)
    }

    fn accumulate_objective_grad(&self, x: &Vec<f64>, scale: f64, grad: &mut [f64]) -> Result<f64, ModelError> {
        self.model.accumulate_grad(&self.condition, x, scale, grad)
    }

    fn num_params(&self) -> usize {
        self.model.num_params()
    }

    fn params(&self) -> Vec<f64> {
        self.model.params()
    }

    fn set_params(&mut self, values: &[f64]) -> Result<(), ModelError> {
        self.model.set_params(values)
    }
}

impl TunableModel for LatentGaussianModel {
    type Sample = LatentSample;

    fn kind(&self) -> ModelKind {
        ModelKind::LatentGaussian
    }

    fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<LatentSample>, ModelError> {
        if n == 0 {
            return Err(ModelError::InvalidParameter("sample count must be at least 1".into()));
        }
        // Latents are drawn sequentially; decoding and encoding are pure.
        let latents: Vec<Vec<f64>> = (0..n).map(|_| self.draw_latent(rng)).collect();
        Ok(latents.into_par_iter().map(|z| self.sample_from_latent(z)).collect())
    }

    fn log_objective(&self, x: &LatentSample) -> Result<f64, ModelError> {
        Ok(-self.latent_kl(x)?)
    }

    fn accumulate_objective_grad(&self, x: &LatentSample, scale: f64, grad: &mut [f64]) -> Result<f64, ModelError> {
        let (kl, g) = self.latent_kl_grad(x)?;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a -= scale * b);
        Ok(-kl)
    }

    fn num_params(&self) -> usize {
        2 * self.latent_dim()
    }

    fn params(&self) -> Vec<f64> {
        LatentGaussianModel::params(self)
    }

    fn set_params(&mut self, values: &[f64]) -> Result<(), ModelError> {
        LatentGaussianModel::set_params(self, values)
    }
}
