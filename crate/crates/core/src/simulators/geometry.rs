//! Closed segment and axis-aligned rectangle predicates in the plane.

use serde::{Deserialize, Serialize};

use crate::space::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vec2,
    pub b: Vec2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Option<Self> {
        (x0 < x1 && y0 < y1).then_some(Self { min: Vec2::new(x0, y0), max: Vec2::new(x1, y1) })
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn area(&self) -> f64 {
        (self.max.x - self.min.x) * (self.max.y - self.min.y)
    }
}

fn orientation(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

/// Tolerance for collinearity and touching, in squared-length units.
const EPS: f64 = 1e-9;

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) - EPS && p.x <= a.x.max(b.x) + EPS && p.y >= a.y.min(b.y) - EPS && p.y <= a.y.max(b.y) + EPS
}

fn sign(v: f64) -> i8 {
    if v > EPS {
        1
    } else if v < -EPS {
        -1
    } else {
        0
    }
}

/// True when the two closed segments share at least one point, up to a
/// `1e-9` tolerance so that joints meeting after trigonometric roundoff count.
pub fn segments_intersect(s: &Segment, t: &Segment) -> bool {
    let d1 = sign(orientation(t.a, t.b, s.a));
    let d2 = sign(orientation(t.a, t.b, s.b));
    let d3 = sign(orientation(s.a, s.b, t.a));
    let d4 = sign(orientation(s.a, s.b, t.b));
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    (d1 == 0 && on_segment(t.a, t.b, s.a))
        || (d2 == 0 && on_segment(t.a, t.b, s.b))
        || (d3 == 0 && on_segment(s.a, s.b, t.a))
        || (d4 == 0 && on_segment(s.a, s.b, t.b))
}

/// Liang-Barsky clip of the segment against the closed rectangle.
pub fn segment_intersects_rect(s: &Segment, r: &Rect) -> bool {
    let d = s.b - s.a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let checks = [(-d.x, s.a.x - r.min.x), (d.x, r.max.x - s.a.x), (-d.y, s.a.y - r.min.y), (d.y, r.max.y - s.a.y)];
    for (p, q) in checks {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}
