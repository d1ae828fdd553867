//! Score functions `S(o', o) ∈ [0, 1]`, Chamfer distances and diversity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::simulators::{ContactObservation, IkObservation, PointCloud};
use crate::space::{dist2_3, Vec2, Vec3};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("observations have {0} and {1} fingers")]
    FingerMismatch(usize, usize),
    #[error("cloud has {points} points, fewer than k = {k}")]
    TooFewPoints { points: usize, k: usize },
    #[error("diversity needs at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("invalid score parameter: {0}")]
    InvalidParameter(String),
}

/// `max(1 - mean_j ||p'_j - p_j||, 0)`; a finger without contact on either
/// side contributes distance 1.
pub fn grasp_score(simulated: &ContactObservation, evidence: &ContactObservation) -> Result<f64, ScoreError> {
    let k = evidence.fingers();
    if simulated.fingers() != k {
        return Err(ScoreError::FingerMismatch(simulated.fingers(), k));
    }
    if k == 0 {
        return Ok(1.0);
    }
    let total: f64 = simulated
        .contacts
        .iter()
        .zip(&evidence.contacts)
        .map(|(a, b)| match (a, b) {
            (Some(a), Some(b)) => dist2_3(a, b).sqrt(),
            _ => 1.0,
        })
        .sum();
    Ok((1.0 - total / k as f64).max(0.0))
}

/// Zero on collision, otherwise `exp(-||goal - ee||)`.
pub fn ik_score(obs: &IkObservation, goal: Vec2) -> f64 {
    if obs.collision {
        0.0
    } else {
        (-obs.ee_position.distance(goal)).exp()
    }
}

/// Sum over points of `a` of the squared distances to their `k` nearest
/// neighbours in `b`.
fn directed_knn_sum(a: &[Vec3], b: &[Vec3], k: usize) -> f64 {
    let mut best = vec![f64::INFINITY; k];
    let mut total = 0.0;
    for p in a {
        best.iter_mut().for_each(|v| *v = f64::INFINITY);
        for q in b {
            let d = dist2_3(p, q);
            if d < best[k - 1] {
                // insertion into the sorted top-k list
                let mut i = k - 1;
                while i > 0 && best[i - 1] > d {
                    best[i] = best[i - 1];
                    i -= 1;
                }
                best[i] = d;
            }
        }
        total += best.iter().sum::<f64>();
    }
    total
}

/// k-wise Chamfer distance: each point's squared distances to its `k`
/// nearest neighbours in the other cloud, summed over both directions and
/// divided by `k`. With `k = 1` this is the standard Chamfer distance.
pub fn chamfer_k(a: &PointCloud, b: &PointCloud, k: usize) -> Result<f64, ScoreError> {
    if k == 0 {
        return Err(ScoreError::InvalidParameter("k must be at least 1".into()));
    }
    for c in [a, b] {
        if c.len() < k {
            return Err(ScoreError::TooFewPoints { points: c.len(), k });
        }
    }
    let forward = directed_knn_sum(a.points(), b.points(), k);
    let backward = directed_knn_sum(b.points(), a.points(), k);
    Ok((forward + backward) / k as f64)
}

pub fn pc_score(simulated: &PointCloud, evidence: &PointCloud, tau: f64, k: usize) -> Result<f64, ScoreError> {
    if !(tau > 0.0) {
        return Err(ScoreError::InvalidParameter(format!("temperature must be positive, got {tau}")));
    }
    Ok((-tau * chamfer_k(simulated, evidence, k)?).exp())
}

/// Mean Chamfer distance over all unordered pairs.
pub fn diversity(samples: &[PointCloud]) -> Result<f64, ScoreError> {
    let n = samples.len();
    if n < 2 {
        return Err(ScoreError::TooFewSamples(n));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let dists: Vec<f64> =
        pairs.par_iter().map(|&(i, j)| chamfer_k(&samples[i], &samples[j], 1)).collect::<Result<_, _>>()?;
    Ok(dists.iter().sum::<f64>() / pairs.len() as f64)
}

/// Serializable description of a score function, `{"kind": ..., "params": {...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ScoreSpec {
    Grasp {
        fingers: usize,
    },
    Ik {
        goal: Vec2,
    },
    Chamfer {
        tau: f64,
        k_nn: usize,
    },
    /// `exp(-|x - target|)` on a scalar sample.
    Laplace {
        target: f64,
    },
    /// `1[|x - target| <= half_width]` on a scalar sample.
    Window {
        target: f64,
        half_width: f64,
    },
}

impl ScoreSpec {
    pub fn validate(&self) -> Result<(), ScoreError> {
        let bad = |m: &str| Err(ScoreError::InvalidParameter(m.to_string()));
        match self {
            ScoreSpec::Grasp { fingers } if *fingers == 0 => bad("grasp score needs at least one finger"),
            ScoreSpec::Ik { goal } if !goal.x.is_finite() || !goal.y.is_finite() => bad("goal must be finite"),
            ScoreSpec::Chamfer { tau, .. } if !(*tau > 0.0) => bad("temperature must be positive"),
            ScoreSpec::Chamfer { k_nn, .. } if *k_nn == 0 => bad("k_nn must be at least 1"),
            ScoreSpec::Window { half_width, .. } if !(*half_width > 0.0) => bad("window half width must be positive"),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScoreSpec::Grasp { .. } => "grasp",
            ScoreSpec::Ik { .. } => "ik",
            ScoreSpec::Chamfer { .. } => "chamfer",
            ScoreSpec::Laplace { .. } => "laplace",
            ScoreSpec::Window { .. } => "window",
        }
    }
}
