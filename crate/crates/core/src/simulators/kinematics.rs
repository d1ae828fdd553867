//! Planar serial chain, rectangular obstacles and the IK simulator.

use serde::{Deserialize, Serialize};

use super::geometry::{segment_intersects_rect, segments_intersect, Rect, Segment};
use super::SimError;
use crate::adapt::Simulator;
use crate::space::{JointLimit, Vec2};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinematicChain {
    pub link_lengths: Vec<f64>,
    pub joint_limits: Vec<JointLimit>,
    pub base: Vec2,
}

impl KinematicChain {
    pub fn new(link_lengths: Vec<f64>, joint_limits: Vec<JointLimit>, base: Vec2) -> Result<Self, SimError> {
        if link_lengths.len() < 2 {
            return Err(SimError::InvalidGeometry("a chain needs at least two links".into()));
        }
        if link_lengths.len() != joint_limits.len() {
            return Err(SimError::InvalidGeometry("one joint limit per link required".into()));
        }
        if link_lengths.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(SimError::InvalidGeometry("link lengths must be positive".into()));
        }
        Ok(Self { link_lengths, joint_limits, base })
    }

    /// Unit-length links with symmetric limits.
    pub fn uniform(links: usize, length: f64, limit: f64) -> Result<Self, SimError> {
        Self::new(vec![length; links], vec![JointLimit::symmetric(limit); links], Vec2::ZERO)
    }

    pub fn dof(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn reach(&self) -> f64 {
        self.link_lengths.iter().sum()
    }

    pub fn within_limits(&self, q: &[f64]) -> bool {
        q.len() == self.dof() && q.iter().zip(&self.joint_limits).all(|(v, l)| l.contains(*v))
    }

    /// End-effector position and link segments for relative joint angles `q`.
    pub fn forward_kinematics(&self, q: &[f64]) -> (Vec2, Vec<Segment>) {
        debug_assert_eq!(q.len(), self.dof());
        let mut angle = 0.0;
        let mut at = self.base;
        let mut segments = Vec::with_capacity(self.dof());
        for (len, dq) in self.link_lengths.iter().zip(q) {
            angle += dq;
            let next = at + Vec2::new(angle.cos(), angle.sin()) * *len;
            segments.push(Segment { a: at, b: next });
            at = next;
        }
        (at, segments)
    }
}

/// Any non-adjacent pair of links touching.
pub fn self_collision(segments: &[Segment]) -> bool {
    for i in 0..segments.len() {
        for j in i + 2..segments.len() {
            if segments_intersect(&segments[i], &segments[j]) {
                return true;
            }
        }
    }
    false
}

pub fn check_collision(segments: &[Segment], obstacles: &ObstacleSet) -> bool {
    segments.iter().any(|s| obstacles.rects.iter().any(|r| segment_intersects_rect(s, r))) || self_collision(segments)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSet {
    pub rects: Vec<Rect>,
}

/// Named obstacle layouts. All coordinates are in chain units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum ObstaclePreset {
    None,
    /// Vertical slab `[x, x + thickness] × [y_lo, y_hi]`.
    Wall {
        x: f64,
        thickness: f64,
        y_lo: f64,
        y_hi: f64,
    },
    /// Wall with an opening `[gap_lo, gap_hi]`, built from two slabs.
    Window {
        x: f64,
        thickness: f64,
        y_lo: f64,
        y_hi: f64,
        gap_lo: f64,
        gap_hi: f64,
    },
    /// Three slabs (top, bottom, back) around `center`, open towards `-x`.
    OpenBox {
        center: Vec2,
        half_width: f64,
        half_height: f64,
        thickness: f64,
    },
    Rects {
        rects: Vec<Rect>,
    },
}

impl ObstaclePreset {
    pub fn build(&self) -> Result<ObstacleSet, SimError> {
        let rect = |x0: f64, y0: f64, x1: f64, y1: f64| {
            Rect::new(x0, y0, x1, y1)
                .ok_or_else(|| SimError::InvalidGeometry(format!("degenerate rectangle [{x0},{x1}]x[{y0},{y1}]")))
        };
        let rects = match self {
            ObstaclePreset::None => Vec::new(),
            ObstaclePreset::Wall { x, thickness, y_lo, y_hi } => vec![rect(*x, *y_lo, x + thickness, *y_hi)?],
            ObstaclePreset::Window { x, thickness, y_lo, y_hi, gap_lo, gap_hi } => {
                if !(y_lo < gap_lo && gap_lo < gap_hi && gap_hi < y_hi) {
                    return Err(SimError::InvalidGeometry("window gap must lie strictly inside the wall".into()));
                }
                vec![rect(*x, *y_lo, x + thickness, *gap_lo)?, rect(*x, *gap_hi, x + thickness, *y_hi)?]
            }
            ObstaclePreset::OpenBox { center, half_width, half_height, thickness } => {
                let (x0, x1) = (center.x - half_width, center.x + half_width);
                let (y0, y1) = (center.y - half_height, center.y + half_height);
                vec![
                    rect(x0, y1, x1 + thickness, y1 + thickness)?,
                    rect(x0, y0 - thickness, x1 + thickness, y0)?,
                    rect(x1, y0, x1 + thickness, y1)?,
                ]
            }
            ObstaclePreset::Rects { rects } => {
                for r in rects {
                    rect(r.min.x, r.min.y, r.max.x, r.max.y)?;
                }
                rects.clone()
            }
        };
        Ok(ObstacleSet { rects })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IkObservation {
    pub collision: bool,
    pub ee_position: Vec2,
}

pub fn ik_simulate(chain: &KinematicChain, obstacles: &ObstacleSet, q: &[f64]) -> IkObservation {
    let (ee_position, segments) = chain.forward_kinematics(q);
    IkObservation { collision: check_collision(&segments, obstacles), ee_position }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IkSimulator {
    pub chain: KinematicChain,
    pub obstacles: ObstacleSet,
}

impl Simulator<Vec<f64>> for IkSimulator {
    type Output = IkObservation;

    fn simulate(&self, q: &Vec<f64>) -> IkObservation {
        ik_simulate(&self.chain, &self.obstacles, q)
    }
}
