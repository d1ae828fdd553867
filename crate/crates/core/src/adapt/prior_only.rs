use rayon::prelude::*;
use std::time::Instant;

use super::{AdaptError, Score, Simulator};
use crate::models::TunableModel;
use crate::rng;

#[derive(Clone, Debug)]
pub struct PriorOnlyResult<X> {
    pub best: X,
    pub best_score: f64,
    /// Position of `best` in the flattened evaluation order.
    pub best_index: usize,
    /// Every evaluated sample paired with its score, in evaluation order.
    pub evaluated: Vec<(X, f64)>,
    pub elapsed_secs: f64,
}

/// Draws `batches` batches of `batch_size` from the untuned model and returns
/// the highest-scoring sample. The lowest index wins ties, and batches are
/// drawn from one stream so a longer run extends a shorter one.
pub fn prior_only_best<M, S, F, E>(
    model: &M,
    simulator: &S,
    score: &F,
    evidence: &E,
    batches: usize,
    batch_size: usize,
    seed: u64,
) -> Result<PriorOnlyResult<M::Sample>, AdaptError>
where
    M: TunableModel,
    S: Simulator<M::Sample>,
    F: Score<S::Output, E>,
    E: Sync,
{
    if batches == 0 || batch_size == 0 {
        return Err(AdaptError::Config("batches and batch size must be at least 1".into()));
    }
    let clock = Instant::now();
    let mut rng = rng::stream(seed, rng::STREAM_TUNE);
    let mut evaluated = Vec::with_capacity(batches * batch_size);
    for _ in 0..batches {
        let samples = model.draw(batch_size, &mut rng)?;
        let scores: Vec<f64> = samples.par_iter().map(|x| score.score(&simulator.simulate(x), evidence)).collect();
        for (i, s) in scores.iter().enumerate() {
            if !(*s >= 0.0 && *s <= 1.0) {
                return Err(AdaptError::InvalidScore { index: evaluated.len() + i, value: *s });
            }
        }
        evaluated.extend(samples.into_iter().zip(scores));
    }
    let mut best_index = 0;
    for (i, (_, s)) in evaluated.iter().enumerate() {
        if *s > evaluated[best_index].1 {
            best_index = i;
        }
    }
    Ok(PriorOnlyResult {
        best: evaluated[best_index].0.clone(),
        best_score: evaluated[best_index].1,
        best_index,
        evaluated,
        elapsed_secs: clock.elapsed().as_secs_f64(),
    })
}
