use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AdaptError, Score, Simulator};
use crate::models::TunableModel;
use crate::rng;

/// Acceptance below this rate, once the draw cap is hit, is a fault.
pub const MIN_ACCEPTANCE_RATE: f64 = 1e-5;

const ORACLE_BATCH: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcceptRule {
    /// Accept with probability equal to the score.
    Bernoulli,
    /// Accept when the score is at least the given value.
    Threshold(f64),
}

#[derive(Clone, Debug)]
pub struct RejectionResult<X> {
    pub accepted: Vec<X>,
    pub draws: usize,
    pub acceptance_rate: f64,
    /// False when the draw cap was reached before `n_accepted`.
    pub complete: bool,
}

/// Samples the score-weighted prior by rejection: draws from `prior` and keeps
/// each sample according to `rule` until `n_accepted` are kept or `max_draws`
/// prior samples have been spent.
#[allow(clippy::too_many_arguments)]
pub fn rejection_posterior<M, S, F, E>(
    prior: &M,
    simulator: &S,
    score: &F,
    evidence: &E,
    rule: AcceptRule,
    n_accepted: usize,
    max_draws: usize,
    seed: u64,
) -> Result<RejectionResult<M::Sample>, AdaptError>
where
    M: TunableModel,
    S: Simulator<M::Sample>,
    F: Score<S::Output, E>,
    E: Sync,
{
    if n_accepted == 0 || max_draws == 0 {
        return Err(AdaptError::Config("accepted count and draw cap must be at least 1".into()));
    }
    let mut rng = rng::stream(seed, rng::STREAM_ORACLE);
    let mut accepted = Vec::with_capacity(n_accepted);
    let mut draws = 0;
    while accepted.len() < n_accepted && draws < max_draws {
        let n = ORACLE_BATCH.min(max_draws - draws);
        let samples = prior.draw(n, &mut rng)?;
        let scores: Vec<f64> = samples.par_iter().map(|x| score.score(&simulator.simulate(x), evidence)).collect();
        for (x, s) in samples.into_iter().zip(scores) {
            if !(0.0..=1.0).contains(&s) {
                return Err(AdaptError::InvalidScore { index: draws, value: s });
            }
            draws += 1;
            let keep = match rule {
                AcceptRule::Bernoulli => rng.random::<f64>() < s,
                AcceptRule::Threshold(t) => s >= t,
            };
            if keep {
                accepted.push(x);
                if accepted.len() == n_accepted {
                    break;
                }
            }
        }
    }
    let acceptance_rate = accepted.len() as f64 / draws as f64;
    let complete = accepted.len() == n_accepted;
    if !complete && acceptance_rate < MIN_ACCEPTANCE_RATE {
        return Err(AdaptError::OracleInfeasible { rate: acceptance_rate, draws });
    }
    Ok(RejectionResult { accepted, draws, acceptance_rate, complete })
}
