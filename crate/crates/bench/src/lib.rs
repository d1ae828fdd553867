//! Fixed inputs shared by the benchmarks.

use mace_core::models::{ArchitectureConfig, AutoregressiveGmmModel, ConditionedGmm, TunableModel};
use mace_core::rng;
use mace_core::simulators::make_box_cloud;
use mace_core::tasks::ik::IkTaskConfig;
use mace_core::{JointLimit, PointCloud};

/// Two box clouds of `n` points with different shapes.
pub fn cloud_pair(n: usize) -> (PointCloud, PointCloud) {
    (
        make_box_cloud([0.5, 0.3, 0.2], 0.1, n, 1).expect("valid box"),
        make_box_cloud([0.4, 0.4, 0.25], -0.3, n, 2).expect("valid box"),
    )
}

/// Untrained IK-shaped prior bound to a goal behind the default wall.
pub fn ik_model() -> ConditionedGmm {
    let task = IkTaskConfig::default();
    let limits = vec![JointLimit::symmetric(task.joint_limit); task.links];
    let model =
        AutoregressiveGmmModel::new(2, limits, ArchitectureConfig::default(), &mut rng::stream(0, rng::STREAM_INIT))
            .expect("valid architecture");
    ConditionedGmm::new(model, vec![2.3, 0.0]).expect("condition matches")
}

/// A batch drawn from `model`.
pub fn draws(model: &ConditionedGmm, n: usize) -> Vec<Vec<f64>> {
    model.draw(n, &mut rng::stream(0, rng::STREAM_TUNE)).expect("draws")
}
