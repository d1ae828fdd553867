//! Point clouds, the box surface generator and hyperplane cuts.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use super::SimError;
use crate::rng;
use crate::space::{dot3, norm3, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec3>", into = "Vec<Vec3>")]
pub struct PointCloud {
    points: Vec<Vec3>,
}

impl TryFrom<Vec<Vec3>> for PointCloud {
    type Error = SimError;
    fn try_from(points: Vec<Vec3>) -> Result<Self, SimError> {
        PointCloud::new(points)
    }
}

impl From<PointCloud> for Vec<Vec3> {
    fn from(c: PointCloud) -> Self {
        c.points
    }
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Result<Self, SimError> {
        if points.is_empty() {
            return Err(SimError::EmptyCloud);
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(SimError::NonFinitePoint);
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bounding_radius(&self) -> f64 {
        self.points.iter().map(norm3).fold(0.0, f64::max)
    }

    pub fn translated(&self, by: Vec3) -> PointCloud {
        PointCloud { points: self.points.iter().map(|p| [p[0] + by[0], p[1] + by[1], p[2] + by[2]]).collect() }
    }

    /// Rotation about the z axis by `angle`.
    pub fn rotated_z(&self, angle: f64) -> PointCloud {
        let (s, c) = angle.sin_cos();
        PointCloud { points: self.points.iter().map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]]).collect() }
    }

    pub fn to_xyz(&self) -> String {
        let mut out = String::with_capacity(self.points.len() * 48);
        for p in &self.points {
            let _ = writeln!(out, "{} {} {}", p[0], p[1], p[2]);
        }
        out
    }

    /// Parses whitespace-separated `x y z` triples, one point per line.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn from_xyz(text: &str) -> Result<Self, SimError> {
        let mut points = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e| SimError::Parse(format!("line {}: {e}", n + 1)))?;
            if vals.len() != 3 {
                return Err(SimError::Parse(format!("line {}: expected 3 values, got {}", n + 1, vals.len())));
            }
            points.push([vals[0], vals[1], vals[2]]);
        }
        PointCloud::new(points)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxParams {
    pub half_extents: Vec3,
    pub yaw: f64,
}

/// Index of the face a box-frame surface point lies on: axis `i` for the
/// `±x, ±y, ±z` pair, sign given by the coordinate.
pub const FACE_AXES: [usize; 6] = [0, 0, 1, 1, 2, 2];

/// `count` points uniform over the surface of a box with the given half
/// extents, resting on the xy plane, centered on the z axis, then yawed about z.
/// Each point picks a face with probability proportional to its area.
pub fn make_box_cloud(half_extents: Vec3, yaw: f64, count: usize, seed: u64) -> Result<PointCloud, SimError> {
    if half_extents.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
        return Err(SimError::InvalidGeometry(format!("box half extents must be positive: {half_extents:?}")));
    }
    if count == 0 {
        return Err(SimError::EmptyCloud);
    }
    let [hx, hy, hz] = half_extents;
    let areas = [hy * hz, hy * hz, hx * hz, hx * hz, hx * hy, hx * hy];
    let total: f64 = areas.iter().sum();
    let mut rng = rng::stream(seed, rng::STREAM_DATA);
    let (s, c) = yaw.sin_cos();
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let mut u = rng.random::<f64>() * total;
        let mut face = 5;
        for (f, a) in areas.iter().enumerate() {
            if u < *a {
                face = f;
                break;
            }
            u -= a;
        }
        let a: f64 = rng.random_range(-1.0..1.0);
        let b: f64 = rng.random_range(-1.0..1.0);
        let sign = if face % 2 == 0 { 1.0 } else { -1.0 };
        let local = match FACE_AXES[face] {
            0 => [sign * hx, a * hy, b * hz],
            1 => [a * hx, sign * hy, b * hz],
            _ => [a * hx, b * hy, sign * hz],
        };
        points.push([c * local[0] - s * local[1], s * local[0] + c * local[1], local[2] + hz]);
    }
    PointCloud::new(points)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub normal: Vec3,
    pub offset: f64,
}

impl Hyperplane {
    pub fn keeps(&self, p: &Vec3) -> bool {
        dot3(p, &self.normal) <= self.offset
    }
}

/// Splits a cloud into the points with `p·normal <= offset` and the rest,
/// preserving order. Either side may be empty.
pub fn partition(pc: &PointCloud, plane: &Hyperplane) -> (Vec<Vec3>, Vec<Vec3>) {
    pc.points.iter().copied().partition(|p| plane.keeps(p))
}

/// Points with `p·normal <= offset`; an empty result is an error.
pub fn hyperplane_cut(pc: &PointCloud, normal: Vec3, offset: f64) -> Result<PointCloud, SimError> {
    let (kept, _) = partition(pc, &Hyperplane { normal, offset });
    if kept.is_empty() {
        return Err(SimError::EmptyCut);
    }
    Ok(PointCloud { points: kept })
}

pub const CUT_ATTEMPTS: usize = 50;
pub const CUT_MIN_SURVIVING: f64 = 0.1;

/// Random hyperplane with a uniformly oriented normal and an offset uniform
/// over the cloud's projection range, retried until at least 10% of the points
/// survive.
pub fn sample_cut<R: Rng + ?Sized>(pc: &PointCloud, rng: &mut R) -> Result<(Hyperplane, PointCloud), SimError> {
    for _ in 0..CUT_ATTEMPTS {
        let v: Vec3 = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let n = norm3(&v);
        if n < 1e-12 {
            continue;
        }
        let normal = [v[0] / n, v[1] / n, v[2] / n];
        let (lo, hi) =
            pc.points.iter().map(|p| dot3(p, &normal)).fold((f64::MAX, f64::MIN), |(a, b), t| (a.min(t), b.max(t)));
        let offset = rng.random_range(lo..=hi);
        let plane = Hyperplane { normal, offset };
        let (kept, _) = partition(pc, &plane);
        if kept.len() as f64 >= CUT_MIN_SURVIVING * pc.len() as f64 && !kept.is_empty() {
            return Ok((plane, PointCloud { points: kept }));
        }
    }
    Err(SimError::EmptyCut)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_faces_are_area_balanced() {
        let p = 6000;
        let cloud = make_box_cloud([1.0, 1.0, 1.0], 0.0, p, 3).unwrap();
        let mut counts = [0usize; 6];
        for q in cloud.points() {
            let local = [q[0], q[1], q[2] - 1.0];
            let axis = (0..3).max_by(|&a, &b| local[a].abs().total_cmp(&local[b].abs())).unwrap();
            counts[2 * axis + usize::from(local[axis] < 0.0)] += 1;
        }
        let mean = p as f64 / 6.0;
        let sd = (p as f64 * (1.0 / 6.0) * (5.0 / 6.0)).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() <= 4.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn points_lie_on_exactly_one_face() {
        let h = [0.4, 0.7, 0.25];
        let cloud = make_box_cloud(h, 0.0, 2000, 5).unwrap();
        for q in cloud.points() {
            let rel = [q[0].abs() / h[0], q[1].abs() / h[1], (q[2] - h[2]).abs() / h[2]];
            let on: usize = rel.iter().filter(|r| (**r - 1.0).abs() < 1e-12).count();
            assert_eq!(on, 1);
            assert!(rel.iter().all(|r| *r <= 1.0 + 1e-12));
        }
        let zmin = cloud.points().iter().map(|p| p[2]).fold(f64::MAX, f64::min);
        assert!(zmin.abs() < 1e-9);
    }

    #[test]
    fn yaw_equals_rotating_the_unyawed_box() {
        let a = make_box_cloud([0.3, 0.5, 0.2], 0.0, 300, 9).unwrap().rotated_z(0.6);
        let b = make_box_cloud([0.3, 0.5, 0.2], 0.6, 300, 9).unwrap();
        for (p, q) in a.points().iter().zip(b.points()) {
            for k in 0..3 {
                assert!((p[k] - q[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cut_examples() {
        let cloud = make_box_cloud([0.5, 0.5, 0.5], 0.3, 500, 1).unwrap();
        assert_eq!(hyperplane_cut(&cloud, [0.0, 0.0, 1.0], 1e9).unwrap(), cloud);
        let bottom = hyperplane_cut(&cloud, [0.0, 0.0, 1.0], 0.0).unwrap();
        assert!(bottom.points().iter().all(|p| p[2] == 0.0));
        assert!(matches!(hyperplane_cut(&cloud, [0.0, 0.0, 1.0], -0.1), Err(SimError::EmptyCut)));
    }

    #[test]
    fn sampled_cut_keeps_enough_points() {
        let cloud = make_box_cloud([0.5, 0.2, 0.4], 0.0, 400, 2).unwrap();
        let mut r = rng::stream(4, 0);
        for _ in 0..20 {
            let (plane, kept) = sample_cut(&cloud, &mut r).unwrap();
            assert!(kept.len() >= 40);
            assert!(kept.points().iter().all(|p| plane.keeps(p)));
        }
    }

    #[test]
    fn xyz_round_trip_and_errors() {
        let cloud = make_box_cloud([0.5, 0.2, 0.4], 0.1, 50, 2).unwrap();
        assert_eq!(PointCloud::from_xyz(&cloud.to_xyz()).unwrap(), cloud);
        assert!(PointCloud::from_xyz("1 2\n").is_err());
        assert!(PointCloud::from_xyz("# only a comment\n").is_err());
        assert!(PointCloud::from_xyz("1 2 x\n").is_err());
    }
}
