//! Point-cloud completion: a box observed only on one side of a cutting
//! plane, matched by applying the same cut to decoded shapes.

use serde::{Deserialize, Serialize};

use crate::adapt::Simulator;
use crate::models::{BoxPlacement, BoxShapeCodec, LatentGaussianModel, LatentSample, ModelError};
use crate::rng;
use crate::scoring::{chamfer_k, pc_score};
use crate::simulators::{make_box_cloud, partition, sample_cut, BoxParams, Hyperplane, PointCloud, SimError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompletionTaskConfig {
    pub codec: BoxShapeCodec,
    pub target: BoxParams,
    pub target_seed: u64,
    pub target_points: usize,
    /// Seed of the cut drawn through the target.
    pub cut_seed: u64,
    pub tau: f64,
    pub k_nn: usize,
}

impl Default for CompletionTaskConfig {
    fn default() -> Self {
        Self {
            codec: BoxShapeCodec {
                placement: BoxPlacement::Resting,
                extent_min: 0.2,
                extent_max: 1.2,
                ..BoxShapeCodec::default()
            },
            target: BoxParams { half_extents: [0.9, 0.35, 0.5], yaw: -0.35 },
            target_seed: 0xc0ffee,
            target_points: 512,
            cut_seed: 3,
            tau: 0.1,
            k_nn: 5,
        }
    }
}

/// Keeps the side of a shape the fixed plane retains. Cuts leaving fewer
/// than `min_points` points yield `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutSimulator {
    pub plane: Hyperplane,
    pub min_points: usize,
}

impl CutSimulator {
    pub fn cut(&self, pc: &PointCloud) -> Option<PointCloud> {
        let (kept, _) = partition(pc, &self.plane);
        if kept.len() < self.min_points.max(1) {
            return None;
        }
        PointCloud::new(kept).ok()
    }
}

impl Simulator<LatentSample> for CutSimulator {
    type Output = Option<PointCloud>;

    fn simulate(&self, x: &LatentSample) -> Option<PointCloud> {
        self.cut(&x.cloud)
    }
}

impl Simulator<PointCloud> for CutSimulator {
    type Output = Option<PointCloud>;

    fn simulate(&self, x: &PointCloud) -> Option<PointCloud> {
        self.cut(x)
    }
}

/// The completion problem instance: observed partial cloud and the cut that
/// produced it.
#[derive(Clone, Debug)]
pub struct CompletionInstance {
    pub full: PointCloud,
    pub partial: PointCloud,
    pub simulator: CutSimulator,
}

impl CompletionTaskConfig {
    pub fn prior(&self) -> Result<LatentGaussianModel, ModelError> {
        LatentGaussianModel::standard(self.codec.clone())
    }

    pub fn instance(&self) -> Result<CompletionInstance, SimError> {
        let full = make_box_cloud(self.target.half_extents, self.target.yaw, self.target_points, self.target_seed)?;
        let full = match self.codec.placement {
            BoxPlacement::Resting => full,
            BoxPlacement::Centered => full.translated([0.0, 0.0, -self.target.half_extents[2]]),
        };
        let mut rng = rng::stream(self.cut_seed, rng::STREAM_TASK);
        let (plane, partial) = sample_cut(&full, &mut rng)?;
        Ok(CompletionInstance { full, partial, simulator: CutSimulator { plane, min_points: self.k_nn } })
    }

    /// `pc_score` of a simulated partial cloud; a missing cut scores zero.
    pub fn score(&self, simulated: &Option<PointCloud>, evidence: &PointCloud) -> f64 {
        simulated.as_ref().and_then(|pc| pc_score(pc, evidence, self.tau, self.k_nn).ok()).unwrap_or(0.0)
    }

    /// Partial-side `CD_k` to the observation; `None` when the cut is empty.
    pub fn partial_distance(&self, sim: &CutSimulator, sample: &PointCloud, evidence: &PointCloud) -> Option<f64> {
        sim.cut(sample).and_then(|pc| chamfer_k(&pc, evidence, self.k_nn).ok())
    }
}
