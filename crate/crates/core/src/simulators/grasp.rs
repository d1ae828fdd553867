//! Geometric grasp-contact simulator.
//!
//! Each finger approaches the origin along a direction `d`. Among cloud
//! points within `radius` of the ray `{t d : t >= 0}`, the one with the largest
//! projection `t = p·d` becomes the contact. Clouds are assumed to contain the
//! origin.

use serde::{Deserialize, Serialize};

use super::cloud::PointCloud;
use crate::adapt::Simulator;
use crate::models::LatentSample;
use crate::space::{dot3, norm3, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactObservation {
    /// One entry per finger; `None` when no point lies within the finger radius.
    pub contacts: Vec<Option<Vec3>>,
}

impl ContactObservation {
    pub fn fingers(&self) -> usize {
        self.contacts.len()
    }
}

pub fn grasp_contacts(pc: &PointCloud, finger_dirs: &[Vec3], radius: f64) -> ContactObservation {
    let contacts = finger_dirs
        .iter()
        .map(|d| {
            let mut best: Option<(f64, Vec3)> = None;
            for p in pc.points() {
                let t = dot3(p, d);
                if t < 0.0 {
                    continue;
                }
                let perp = [p[0] - t * d[0], p[1] - t * d[1], p[2] - t * d[2]];
                if norm3(&perp) > radius {
                    continue;
                }
                if best.map_or(true, |(bt, _)| t > bt) {
                    best = Some((t, *p));
                }
            }
            best.map(|(_, p)| p)
        })
        .collect();
    ContactObservation { contacts }
}

/// Four diagonal corners of the xy plane plus a finger along `+x`.
pub fn five_finger_directions() -> Vec<Vec3> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vec![[s, s, 0.0], [-s, s, 0.0], [-s, -s, 0.0], [s, -s, 0.0], [1.0, 0.0, 0.0]]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "snake_case")]
pub enum FingerRadius {
    Absolute(f64),
    /// Fraction of each cloud's bounding radius.
    Relative(f64),
}

impl Default for FingerRadius {
    fn default() -> Self {
        FingerRadius::Relative(0.1)
    }
}

impl FingerRadius {
    pub fn resolve(&self, pc: &PointCloud) -> f64 {
        match self {
            FingerRadius::Absolute(r) => *r,
            FingerRadius::Relative(f) => f * pc.bounding_radius(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraspSimulator {
    pub finger_dirs: Vec<Vec3>,
    pub radius: FingerRadius,
}

impl GraspSimulator {
    pub fn observe(&self, pc: &PointCloud) -> ContactObservation {
        grasp_contacts(pc, &self.finger_dirs, self.radius.resolve(pc))
    }
}

impl Simulator<LatentSample> for GraspSimulator {
    type Output = ContactObservation;

    fn simulate(&self, x: &LatentSample) -> ContactObservation {
        self.observe(&x.cloud)
    }
}

impl Simulator<PointCloud> for GraspSimulator {
    type Output = ContactObservation;

    fn simulate(&self, x: &PointCloud) -> ContactObservation {
        self.observe(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulators::cloud::make_box_cloud;

    fn unit_cube() -> PointCloud {
        make_box_cloud([0.5, 0.5, 0.5], 0.0, 4000, 1).unwrap().translated([0.0, 0.0, -0.5])
    }

    #[test]
    fn axis_finger_hits_the_face() {
        let obs = grasp_contacts(&unit_cube(), &[[1.0, 0.0, 0.0]], 0.2);
        let p = obs.contacts[0].unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert!(p[1].abs() <= 0.2 && p[2].abs() <= 0.2);
    }

    #[test]
    fn thin_finger_misses() {
        let cloud = PointCloud::new(vec![[1.0, 0.5, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let obs = grasp_contacts(&cloud, &[[1.0, 0.0, 0.0]], 0.1);
        assert_eq!(obs.contacts, vec![None]);
    }

    #[test]
    fn antipodal_fingers_have_opposite_projections() {
        let obs = grasp_contacts(&unit_cube(), &[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]], 0.1);
        let (a, b) = (obs.contacts[0].unwrap(), obs.contacts[1].unwrap());
        assert!(a[0] > 0.0 && b[0] < 0.0);
    }

    #[test]
    fn contacts_are_cloud_members() {
        let cloud = unit_cube();
        let obs = grasp_contacts(&cloud, &five_finger_directions(), 0.05);
        for c in obs.contacts.into_iter().flatten() {
            assert!(cloud.points().contains(&c));
        }
    }
}
