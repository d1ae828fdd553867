//! The shared sample → simulate → score → weight → fit loop.

use rand::Rng;
use rayon::prelude::*;
use std::time::Instant;

use super::record::{AdaptationRun, IterationRecord, PhaseTimings};
use super::{AdaptError, MaceConfig, Method, Score, Simulator};
use crate::models::{weighted_objective_grad, Adam, ModelError, TunableModel};
use crate::rng::{self, RunRng};

/// Elite threshold and the indices it admits.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub delta: f64,
    /// Indices with `score >= delta`, ascending.
    pub indices: Vec<usize>,
}

/// `delta` is the `elite_count`-th largest score (ties broken by lower index);
/// every sample scoring at least `delta` is selected.
pub fn select_elites(scores: &[f64], elite_count: usize) -> Selection {
    assert!(elite_count >= 1 && elite_count <= scores.len());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let delta = scores[order[elite_count - 1]];
    let indices = (0..scores.len()).filter(|&i| scores[i] >= delta).collect();
    Selection { delta, indices }
}

struct Weighting {
    weights: Vec<f64>,
    /// Minibatches are drawn from all samples rather than the positively
    /// weighted ones.
    pool_all: bool,
    delta: Option<f64>,
    ess: Option<f64>,
    max_weight: Option<f64>,
}

fn score_batch<X, S, F, E>(samples: &[X], simulator: &S, score: &F, evidence: &E) -> Result<Vec<f64>, AdaptError>
where
    X: Sync,
    S: Simulator<X>,
    F: Score<S::Output, E>,
    E: Sync,
{
    let scores: Vec<f64> = samples.par_iter().map(|x| score.score(&simulator.simulate(x), evidence)).collect();
    if let Some((index, value)) = scores.iter().enumerate().find(|(_, s)| !(**s >= 0.0 && **s <= 1.0)) {
        return Err(AdaptError::InvalidScore { index, value: *value });
    }
    Ok(scores)
}

fn non_finite<M: TunableModel>(iteration: usize, model: &M) -> AdaptError {
    AdaptError::NonFinite { iteration, snapshot: Box::new(model.snapshot()) }
}

fn lift<M: TunableModel>(iteration: usize, model: &M) -> impl Fn(ModelError) -> AdaptError + '_ {
    move |e| match e {
        ModelError::NonFinite { .. } | ModelError::NonFiniteObjective => non_finite(iteration, model),
        other => AdaptError::Model(other),
    }
}

/// Distinct indices drawn from `pool` by a partial Fisher-Yates shuffle.
fn minibatch(pool: &[usize], size: usize, rng: &mut RunRng) -> Vec<usize> {
    let mut v = pool.to_vec();
    for i in 0..size {
        let j = rng.random_range(i..v.len());
        v.swap(i, j);
    }
    v.truncate(size);
    v
}

fn run<M, S, F, E, W>(
    method: Method,
    model: &M,
    simulator: &S,
    score: &F,
    evidence: &E,
    cfg: &MaceConfig,
    mut weigh: W,
) -> Result<(M, AdaptationRun), AdaptError>
where
    M: TunableModel,
    S: Simulator<M::Sample>,
    F: Score<S::Output, E>,
    E: Sync,
    W: FnMut(&M, &[M::Sample], &[f64]) -> Result<Weighting, AdaptError>,
{
    cfg.validate()?;
    let theta_0 = model.snapshot();
    let mut current = model.clone();
    let mut records = Vec::with_capacity(cfg.iterations);
    let mut timings = PhaseTimings::default();
    let mut rng = rng::stream(cfg.seed, rng::STREAM_TUNE);

    for t in 1..=cfg.iterations {
        let mut resamples = 0;
        let (samples, scores) = loop {
            let clock = Instant::now();
            let samples = current.draw(cfg.batch_size, &mut rng).map_err(lift(t, &current))?;
            timings.sampling += clock.elapsed().as_secs_f64();
            let clock = Instant::now();
            let scores = score_batch(&samples, simulator, score, evidence)?;
            timings.simulate_score += clock.elapsed().as_secs_f64();
            if scores.iter().any(|s| *s > 0.0) {
                break (samples, scores);
            }
            resamples += 1;
            if resamples > cfg.max_zero_retries {
                return Err(AdaptError::AllZeroScores { iteration: t, retries: resamples });
            }
        };

        let clock = Instant::now();
        let w = weigh(&current, &samples, &scores)?;
        let active: Vec<usize> = (0..samples.len()).filter(|&i| w.weights[i] > 0.0).collect();
        let pool: Vec<usize> = if w.pool_all { (0..samples.len()).collect() } else { active.clone() };
        let mb = ((cfg.minibatch_fraction * pool.len() as f64).ceil() as usize).clamp(1, pool.len());
        let mut opt = Adam::new(current.num_params(), cfg.learning_rate);
        let mut params = current.params();
        for _ in 0..cfg.grad_steps {
            let idx = minibatch(&pool, mb, &mut rng);
            let xs: Vec<&M::Sample> = idx.iter().map(|&i| &samples[i]).collect();
            let ws: Vec<f64> = idx.iter().map(|&i| w.weights[i] / mb as f64).collect();
            let (_, grad) = weighted_objective_grad(&current, &xs, &ws).map_err(lift(t, &current))?;
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(non_finite(t, &current));
            }
            opt.ascend(&mut params, &grad);
            if params.iter().any(|p| !p.is_finite()) {
                return Err(non_finite(t, &current));
            }
            current.set_params(&params)?;
        }
        let objective_after = active
            .iter()
            .map(|&i| current.log_objective(&samples[i]))
            .sum::<Result<f64, _>>()
            .map_err(lift(t, &current))?
            / active.len() as f64;
        if !objective_after.is_finite() {
            return Err(non_finite(t, &current));
        }
        timings.optimize += clock.elapsed().as_secs_f64();

        records.push(IterationRecord {
            t,
            mean_score: scores.iter().sum::<f64>() / scores.len() as f64,
            max_score: scores.iter().copied().fold(f64::MIN, f64::max),
            scores,
            delta: w.delta,
            selected: active.len(),
            objective_after,
            ess: w.ess,
            max_weight: w.max_weight,
            resamples,
        });
    }

    let run = AdaptationRun { method, config: cfg.clone(), theta_0, theta_final: current.snapshot(), records, timings };
    Ok((current, run))
}

/// Elite-selection tuning: each iteration samples from the current model,
/// keeps every sample scoring at least the `floor(q N)`-th best score and
/// takes `M` Adam ascent steps on their mean objective.
pub fn mace_tune<M, S, F, E>(
    model: &M,
    simulator: &S,
    score: &F,
    evidence: &E,
    cfg: &MaceConfig,
) -> Result<(M, AdaptationRun), AdaptError>
where
    M: TunableModel,
    S: Simulator<M::Sample>,
    F: Score<S::Output, E>,
    E: Sync,
{
    let k = cfg.elite_count();
    run(Method::Mace, model, simulator, score, evidence, cfg, |_, _, scores| {
        let sel = select_elites(scores, k);
        let mut weights = vec![0.0; scores.len()];
        sel.indices.iter().for_each(|&i| weights[i] = 1.0);
        Ok(Weighting { weights, pool_all: false, delta: Some(sel.delta), ess: None, max_weight: None })
    })
}

/// Importance-sampling baseline: weights are the prior-to-current likelihood
/// ratio, clipped at `weight_clip`, times the score; no elite selection.
pub fn is_tune<M, S, F, E>(
    model: &M,
    simulator: &S,
    score: &F,
    evidence: &E,
    cfg: &MaceConfig,
) -> Result<(M, AdaptationRun), AdaptError>
where
    M: TunableModel,
    S: Simulator<M::Sample>,
    F: Score<S::Output, E>,
    E: Sync,
{
    let prior = model.clone();
    let clip = cfg.weight_clip;
    run(Method::Is, model, simulator, score, evidence, cfg, |current, samples, scores| {
        let pairs: Vec<(f64, f64)> = samples
            .par_iter()
            .map(|x| Ok((prior.log_objective(x)?, current.log_objective(x)?)))
            .collect::<Result<_, ModelError>>()?;
        let weights: Vec<f64> = pairs
            .iter()
            .zip(scores)
            .map(|((l0, lt), s)| if *s > 0.0 { (l0 - lt).exp().min(clip) * s } else { 0.0 })
            .collect();
        let sum: f64 = weights.iter().sum();
        let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
        Ok(Weighting {
            max_weight: Some(weights.iter().copied().fold(0.0, f64::max)),
            ess: Some(if sum_sq > 0.0 { sum * sum / sum_sq } else { 0.0 }),
            weights,
            pool_all: true,
            delta: None,
        })
    })
}

/// Importance ratios `p(x; θ_0) / p(x; θ)` before clipping.
pub fn importance_ratios<M: TunableModel>(
    prior: &M,
    current: &M,
    samples: &[M::Sample],
) -> Result<Vec<f64>, ModelError> {
    samples.iter().map(|x| Ok((prior.log_objective(x)? - current.log_objective(x)?).exp())).collect()
}
