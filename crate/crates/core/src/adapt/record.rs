use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use super::{MaceConfig, Method};
use crate::models::ParamSnapshot;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    pub scores: Vec<f64>,
    /// Elite threshold; absent for the IS baseline.
    pub delta: Option<f64>,
    /// Samples with nonzero weight in the objective.
    pub selected: usize,
    pub mean_score: f64,
    pub max_score: f64,
    /// Mean objective over the selected set after the optimizer steps.
    pub objective_after: f64,
    /// Effective sample size of the IS weights.
    pub ess: Option<f64>,
    pub max_weight: Option<f64>,
    /// All-zero batches redrawn before this iteration's update.
    pub resamples: usize,
}

impl IterationRecord {
    /// Fraction of strictly positive scores.
    pub fn positive_fraction(&self) -> f64 {
        self.scores.iter().filter(|s| **s > 0.0).count() as f64 / self.scores.len() as f64
    }
}

/// Wall-clock seconds per phase.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub sampling: f64,
    pub simulate_score: f64,
    pub optimize: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptationRun {
    pub method: Method,
    pub config: MaceConfig,
    pub theta_0: ParamSnapshot,
    pub theta_final: ParamSnapshot,
    pub records: Vec<IterationRecord>,
    #[serde(default)]
    pub timings: PhaseTimings,
}

impl AdaptationRun {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run record serializes")
    }

    /// JSON with wall-clock timings zeroed; identical for reruns with the same seed.
    pub fn canonical_json(&self) -> String {
        let mut copy = self.clone();
        copy.timings = PhaseTimings::default();
        serde_json::to_string(&copy).expect("run record serializes")
    }

    /// Per-iteration metrics. With `success_column`, the fraction of
    /// positive scores is reported as the success rate (valid for scores that
    /// are zero exactly on failure, such as the IK score).
    pub fn metrics_csv(&self, success_column: bool) -> String {
        let mut out = String::from("t,delta,mean_score,max_score,selected,ess,max_weight,objective_after");
        if success_column {
            out.push_str(",success_rate");
        }
        out.push('\n');
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.t,
                opt(r.delta),
                r.mean_score,
                r.max_score,
                r.selected,
                opt(r.ess),
                opt(r.max_weight),
                r.objective_after
            );
            if success_column {
                let _ = write!(out, ",{}", r.positive_fraction());
            }
            out.push('\n');
        }
        out
    }

    /// Fraction of iterations whose max score is at least the previous one.
    pub fn max_score_monotone_fraction(&self) -> f64 {
        if self.records.len() < 2 {
            return 1.0;
        }
        let ok = self.records.windows(2).filter(|w| w[1].max_score >= w[0].max_score).count();
        ok as f64 / (self.records.len() - 1) as f64
    }
}
