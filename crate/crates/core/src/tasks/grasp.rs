//! Shape inference from grasp contacts: a latent box prior, five fingers
//! closing on the object and a held-out target box.

use serde::{Deserialize, Serialize};

use crate::adapt::MaceConfig;
use crate::models::{BoxPlacement, BoxShapeCodec, LatentGaussianModel, LatentSample, ModelError};
use crate::scoring::grasp_score;
use crate::simulators::{
    five_finger_directions, make_box_cloud, BoxParams, ContactObservation, FingerRadius, GraspSimulator, PointCloud,
    SimError,
};
use crate::space::Vec3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraspTaskConfig {
    pub codec: BoxShapeCodec,
    pub finger_dirs: Vec<Vec3>,
    pub radius: FingerRadius,
    pub target: BoxParams,
    /// Surface pattern of the observed object, distinct from the decoder's.
    pub target_seed: u64,
    pub target_points: usize,
}

impl Default for GraspTaskConfig {
    fn default() -> Self {
        Self {
            codec: BoxShapeCodec {
                placement: BoxPlacement::Centered,
                extent_min: 0.5,
                extent_max: 4.0,
                ..BoxShapeCodec::default()
            },
            finger_dirs: five_finger_directions(),
            radius: FingerRadius::Absolute(0.5),
            target: BoxParams { half_extents: [2.75, 1.375, 1.5], yaw: 0.3 },
            target_seed: 0x7a59e7,
            target_points: 2048,
        }
    }
}

impl GraspTaskConfig {
    pub fn prior(&self) -> Result<LatentGaussianModel, ModelError> {
        LatentGaussianModel::standard(self.codec.clone())
    }

    /// Tuning schedule for this domain. The learning rate trades score gain
    /// against how much of the prior's spread survives.
    pub fn tuning(&self, seed: u64) -> MaceConfig {
        MaceConfig { learning_rate: 4e-4, seed, ..MaceConfig::grasp_reference() }
    }

    pub fn simulator(&self) -> GraspSimulator {
        GraspSimulator { finger_dirs: self.finger_dirs.clone(), radius: self.radius }
    }

    pub fn target_cloud(&self) -> Result<PointCloud, SimError> {
        let cloud = make_box_cloud(self.target.half_extents, self.target.yaw, self.target_points, self.target_seed)?;
        Ok(match self.codec.placement {
            BoxPlacement::Resting => cloud,
            BoxPlacement::Centered => cloud.translated([0.0, 0.0, -self.target.half_extents[2]]),
        })
    }

    pub fn evidence(&self) -> Result<ContactObservation, SimError> {
        Ok(self.simulator().observe(&self.target_cloud()?))
    }
}

/// Grasp score as a tuning objective; a finger-count mismatch scores zero.
pub fn grasp_objective(simulated: &ContactObservation, evidence: &ContactObservation) -> f64 {
    grasp_score(simulated, evidence).unwrap_or(0.0)
}

pub fn clouds(samples: &[LatentSample]) -> Vec<PointCloud> {
    samples.iter().map(|s| s.cloud.clone()).collect()
}
