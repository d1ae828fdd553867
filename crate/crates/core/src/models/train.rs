//! Maximum-likelihood training of autoregressive priors.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::autoregressive::{ArchitectureConfig, AutoregressiveGmmModel};
use super::ModelError;
use crate::rng;
use crate::space::JointLimit;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub condition: Vec<f64>,
    pub x: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub arch: ArchitectureConfig,
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Record the running minibatch log-likelihood every this many steps.
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            arch: ArchitectureConfig::default(),
            steps: 4000,
            batch_size: 256,
            learning_rate: 1e-3,
            seed: 0,
            log_every: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub final_mean_log_likelihood: f64,
    /// `(step, minibatch mean log-likelihood)` samples of the training curve.
    pub history: Vec<(usize, f64)>,
}

const CHUNK: usize = 16;

fn batch_grad(model: &AutoregressiveGmmModel, batch: &[&TrainingPair]) -> Result<(f64, Vec<f64>), ModelError> {
    let n = model.num_params();
    let scale = 1.0 / batch.len() as f64;
    let parts: Vec<Result<(f64, Vec<f64>), ModelError>> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut g = vec![0.0; n];
            let mut ll = 0.0;
            for p in chunk {
                ll += model.accumulate_grad(&p.condition, &p.x, scale, &mut g)?;
            }
            Ok((ll, g))
        })
        .collect();
    let mut grad = vec![0.0; n];
    let mut total = 0.0;
    for part in parts {
        let (ll, g) = part?;
        total += ll;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    Ok((total * scale, grad))
}

pub fn mean_log_likelihood(model: &AutoregressiveGmmModel, data: &[TrainingPair]) -> Result<f64, ModelError> {
    if data.is_empty() {
        return Err(ModelError::InvalidParameter("empty dataset".into()));
    }
    let lls: Vec<f64> = data.par_iter().map(|p| model.log_likelihood(&p.condition, &p.x)).collect::<Result<_, _>>()?;
    Ok(lls.iter().sum::<f64>() / data.len() as f64)
}

/// Trains a fresh model on `data` by minibatch Adam on the mean log-likelihood.
pub fn train_prior(
    data: &[TrainingPair],
    limits: Vec<JointLimit>,
    cfg: &TrainConfig,
) -> Result<(AutoregressiveGmmModel, TrainReport), ModelError> {
    let first = data.first().ok_or_else(|| ModelError::InvalidParameter("empty dataset".into()))?;
    let condition_dim = first.condition.len();
    let model = AutoregressiveGmmModel::new(
        condition_dim,
        limits,
        cfg.arch.clone(),
        &mut rng::stream(cfg.seed, rng::STREAM_INIT),
    )?;
    fit(model, data, cfg)
}

/// Continues training `model` on `data`.
pub fn fit(
    mut model: AutoregressiveGmmModel,
    data: &[TrainingPair],
    cfg: &TrainConfig,
) -> Result<(AutoregressiveGmmModel, TrainReport), ModelError> {
    if data.is_empty() {
        return Err(ModelError::InvalidParameter("empty dataset".into()));
    }
    if cfg.batch_size == 0 {
        return Err(ModelError::InvalidParameter("batch size must be at least 1".into()));
    }
    for (i, p) in data.iter().enumerate() {
        if p.condition.len() != model.condition_dim() || p.x.len() != model.dof() {
            return Err(ModelError::Shape(format!("training pair {i} has inconsistent dimensions")));
        }
        if let Some((j, v)) =
            p.x.iter()
                .zip(model.joint_limits())
                .enumerate()
                .find(|(_, (v, l))| !l.contains(**v))
                .map(|(j, (v, _))| (j, *v))
        {
            return Err(ModelError::OutOfLimits { joint: j, value: v });
        }
    }
    let mut schedule_rng = rng::stream(cfg.seed, rng::STREAM_TRAIN);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut cursor = data.len();
    let mut params = model.params();
    let mut opt = Adam::new(params.len(), cfg.learning_rate);
    let mut history = Vec::new();
    let batch = cfg.batch_size.min(data.len());
    for step in 0..cfg.steps {
        let mut idx = Vec::with_capacity(batch);
        while idx.len() < batch {
            if cursor == order.len() {
                order.shuffle(&mut schedule_rng);
                cursor = 0;
            }
            idx.push(order[cursor]);
            cursor += 1;
        }
        let items: Vec<&TrainingPair> = idx.iter().map(|&i| &data[i]).collect();
        let (ll, grad) = match batch_grad(&model, &items) {
            Ok(v) => v,
            Err(ModelError::NonFinite { .. }) | Err(ModelError::NonFiniteObjective) => {
                return Err(ModelError::Diverged { step })
            }
            Err(e) => return Err(e),
        };
        if !ll.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(ModelError::Diverged { step });
        }
        opt.ascend(&mut params, &grad);
        model.set_params(&params)?;
        if cfg.log_every > 0 && step % cfg.log_every == 0 {
            history.push((step, ll));
        }
    }
    let final_mean_log_likelihood =
        mean_log_likelihood(&model, data).map_err(|_| ModelError::Diverged { step: cfg.steps })?;
    Ok((model, TrainReport { final_mean_log_likelihood, history }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ConditionedGmm;
    use crate::models::TunableModel;
    use rand::Rng;

    fn small_arch() -> ArchitectureConfig {
        ArchitectureConfig { hidden: vec![16, 16], ..ArchitectureConfig::default() }
    }

    #[test]
    fn repeated_sample_pulls_means_onto_it() {
        let target = vec![0.7, -1.1];
        let data = vec![TrainingPair { condition: vec![0.3], x: target.clone() }; 64];
        let cfg = TrainConfig {
            arch: small_arch(),
            steps: 500,
            batch_size: 32,
            learning_rate: 3e-3,
            ..TrainConfig::default()
        };
        let (model, _) = train_prior(&data, vec![JointLimit::symmetric(3.0); 2], &cfg).unwrap();
        let head0 = model.head(0, &[0.3], &[]).unwrap();
        let head1 = model.head(1, &[0.3], &target[..1]).unwrap();
        for (head, t) in [(head0, target[0]), (head1, target[1])] {
            let k = (0..head.components()).max_by(|&a, &b| head.weights[a].total_cmp(&head.weights[b])).unwrap();
            assert!((head.means[k] - t).abs() < 0.05, "{:?}", head);
        }
    }

    fn linear_data(n: usize, seed: u64) -> Vec<TrainingPair> {
        let mut r = rng::stream(seed, rng::STREAM_DATA);
        (0..n)
            .map(|_| {
                let c: f64 = r.random_range(-1.0..1.0);
                let noise: f64 = r.random_range(-0.2..0.2);
                TrainingPair { condition: vec![c], x: vec![(1.5 * c + noise).clamp(-2.9, 2.9)] }
            })
            .collect()
    }

    #[test]
    fn held_out_likelihood_tracks_training() {
        let train = linear_data(2000, 1);
        let held = linear_data(500, 2);
        let cfg = TrainConfig {
            arch: small_arch(),
            steps: 600,
            batch_size: 64,
            learning_rate: 5e-3,
            ..TrainConfig::default()
        };
        let (model, report) = train_prior(&train, vec![JointLimit::symmetric(3.0)], &cfg).unwrap();
        let train_ll = mean_log_likelihood(&model, &train).unwrap();
        let held_ll = mean_log_likelihood(&model, &held).unwrap();
        assert!(held_ll >= train_ll - 0.5, "train {train_ll} held {held_ll}");
        assert!(report.final_mean_log_likelihood.is_finite());
        let first = report.history.first().unwrap().1;
        assert!(train_ll > first, "no progress: {first} -> {train_ll}");
    }

    #[test]
    fn data_order_barely_matters() {
        let data = linear_data(1000, 3);
        let mut reversed = data.clone();
        reversed.reverse();
        let cfg = TrainConfig {
            arch: small_arch(),
            steps: 400,
            batch_size: 64,
            learning_rate: 5e-3,
            ..TrainConfig::default()
        };
        let limits = vec![JointLimit::symmetric(3.0)];
        let (a, _) = train_prior(&data, limits.clone(), &cfg).unwrap();
        let (b, _) = train_prior(&reversed, limits, &cfg).unwrap();
        let la = mean_log_likelihood(&a, &data).unwrap();
        let lb = mean_log_likelihood(&b, &data).unwrap();
        assert!((la - lb).abs() < 0.1, "{la} vs {lb}");
    }

    #[test]
    fn rejects_out_of_limit_targets() {
        let data = vec![TrainingPair { condition: vec![], x: vec![3.5] }];
        let err = train_prior(&data, vec![JointLimit::symmetric(3.0)], &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, ModelError::OutOfLimits { joint: 0, .. }));
    }

    #[test]
    fn training_is_deterministic() {
        let data = linear_data(300, 4);
        let cfg = TrainConfig { arch: small_arch(), steps: 50, batch_size: 32, ..TrainConfig::default() };
        let limits = vec![JointLimit::symmetric(3.0)];
        let (a, _) = train_prior(&data, limits.clone(), &cfg).unwrap();
        let (b, _) = train_prior(&data, limits, &cfg).unwrap();
        let ga = ConditionedGmm::new(a, vec![0.0]).unwrap();
        let gb = ConditionedGmm::new(b, vec![0.0]).unwrap();
        assert!(ga.snapshot().bit_identical(&gb.snapshot()));
    }
}
