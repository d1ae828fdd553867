//! Deterministic forward maps from task samples to observations.

pub mod cloud;
pub mod geometry;
pub mod grasp;
pub mod kinematics;

pub use cloud::{hyperplane_cut, make_box_cloud, partition, sample_cut, BoxParams, Hyperplane, PointCloud};
pub use geometry::{segment_intersects_rect, segments_intersect, Rect, Segment};
pub use grasp::{five_finger_directions, grasp_contacts, ContactObservation, FingerRadius, GraspSimulator};
pub use kinematics::{
    check_collision, ik_simulate, self_collision, IkObservation, IkSimulator, KinematicChain, ObstaclePreset,
    ObstacleSet,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("point cloud contains a non-finite coordinate")]
    NonFinitePoint,
    #[error("hyperplane cut removed every point")]
    EmptyCut,
    #[error("cannot parse point cloud: {0}")]
    Parse(String),
}
