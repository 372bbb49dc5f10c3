//! Minimal 2-D geometry for the micro-simulator: points, axis-aligned
//! rectangles, oriented rectangles and polyline routes.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// Perpendicular pointing to the left of this vector.
    pub fn left(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn length(self) -> f64 {
        math::hypot(self.x, self.y)
    }

    pub fn dist(self, o: Vec2) -> f64 {
        math::hypot(self.x - o.x, self.y - o.y)
    }

    pub fn normalized(self) -> Vec2 {
        let l = self.length();
        if l > 0.0 {
            Vec2::new(self.x / l, self.y / l)
        } else {
            Vec2::new(0.0, 0.0)
        }
    }

    pub fn angle(self) -> f64 {
        math::atan2(self.y, self.x)
    }

    pub fn from_angle(rad: f64) -> Vec2 {
        Vec2::new(math::cos(rad), math::sin(rad))
    }
}

impl core::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl core::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl core::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Rect { min, max }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// Rectangle with arbitrary heading, used for the ego footprint.
#[derive(Debug, Clone, Copy)]
pub struct OrientedRect {
    pub center: Vec2,
    pub half_len: f64,
    pub half_wid: f64,
    pub axis: Vec2,
}

impl OrientedRect {
    pub fn new(center: Vec2, length: f64, width: f64, heading: f64) -> Self {
        OrientedRect {
            center,
            half_len: length / 2.0,
            half_wid: width / 2.0,
            axis: Vec2::from_angle(heading),
        }
    }

    /// Signed local coordinates of a point (longitudinal, lateral).
    fn local(&self, p: Vec2) -> (f64, f64) {
        let d = p - self.center;
        (d.dot(self.axis), d.dot(self.axis.left()))
    }

    /// Distance from a point to this rectangle (0 when inside).
    pub fn distance_to_point(&self, p: Vec2) -> f64 {
        let (u, v) = self.local(p);
        let du = (u.abs() - self.half_len).max(0.0);
        let dv = (v.abs() - self.half_wid).max(0.0);
        math::hypot(du, dv)
    }

    pub fn overlaps_disc(&self, center: Vec2, radius: f64) -> bool {
        self.distance_to_point(center) <= radius
    }

    fn corners(&self) -> [Vec2; 4] {
        let a = self.axis * self.half_len;
        let b = self.axis.left() * self.half_wid;
        [
            self.center + a + b,
            self.center + a - b,
            self.center - a + b,
            self.center - a - b,
        ]
    }

    /// Separating-axis test against an axis-aligned rectangle.
    pub fn overlaps_rect(&self, r: &Rect) -> bool {
        let cs = self.corners();
        // world axes
        let (mut lo_x, mut hi_x) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut lo_y, mut hi_y) = (f64::INFINITY, f64::NEG_INFINITY);
        for c in cs {
            lo_x = lo_x.min(c.x);
            hi_x = hi_x.max(c.x);
            lo_y = lo_y.min(c.y);
            hi_y = hi_y.max(c.y);
        }
        if hi_x < r.min.x || lo_x > r.max.x || hi_y < r.min.y || lo_y > r.max.y {
            return false;
        }
        // oriented axes
        let rc = [
            r.min,
            Vec2::new(r.max.x, r.min.y),
            r.max,
            Vec2::new(r.min.x, r.max.y),
        ];
        for (axis, half) in [(self.axis, self.half_len), (self.axis.left(), self.half_wid)] {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for c in rc {
                let t = (c - self.center).dot(axis);
                lo = lo.min(t);
                hi = hi.max(t);
            }
            if hi < -half || lo > half {
                return false;
            }
        }
        true
    }
}

/// Polyline with precomputed cumulative arc lengths; the ego route.
#[derive(Debug, Clone)]
pub struct Polyline {
    points: Vec<Vec2>,
    cum: Vec<f64>,
}

impl Polyline {
    pub fn new(points: Vec<Vec2>) -> Option<Self> {
        if points.len() < 2 {
            return None;
        }
        let mut cum = Vec::with_capacity(points.len());
        cum.push(0.0);
        for i in 1..points.len() {
            let d = points[i].dist(points[i - 1]);
            cum.push(cum[i - 1] + d);
        }
        Some(Polyline { points, cum })
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    /// Index of the last waypoint at or before arc length `s`.
    pub fn cursor_at(&self, s: f64) -> usize {
        match self.cum.iter().rposition(|&c| c <= s) {
            Some(i) => i.min(self.points.len() - 1),
            None => 0,
        }
    }

    pub fn point_at(&self, s: f64) -> Vec2 {
        let s = s.clamp(0.0, self.length());
        let i = self.segment_index(s);
        let seg_len = self.cum[i + 1] - self.cum[i];
        let t = if seg_len > 0.0 { (s - self.cum[i]) / seg_len } else { 0.0 };
        self.points[i] + (self.points[i + 1] - self.points[i]) * t
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.length());
        let i = self.segment_index(s);
        (self.points[i + 1] - self.points[i]).angle()
    }

    fn segment_index(&self, s: f64) -> usize {
        let mut i = self.cursor_at(s);
        if i >= self.points.len() - 1 {
            i = self.points.len() - 2;
        }
        i
    }

    /// Project a point onto the polyline: (arc length, signed lateral offset).
    /// Lateral is positive to the left of the travel direction.
    pub fn project(&self, p: Vec2) -> (f64, f64) {
        let mut best = (0.0, f64::INFINITY, 0.0);
        for i in 0..self.points.len() - 1 {
            let a = self.points[i];
            let b = self.points[i + 1];
            let ab = b - a;
            let len2 = ab.dot(ab);
            let t = if len2 > 0.0 { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
            let q = a + ab * t;
            let d = p.dist(q);
            if d < best.1 {
                let lateral = (p - q).dot(ab.normalized().left());
                best = (self.cum[i] + ab.length() * t, d, lateral);
            }
        }
        (best.0, best.2)
    }
}

/// Project a point onto a segment, returning (t in [0,1], distance).
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> (f64, f64) {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = if len2 > 0.0 { ((p - a).dot(ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (t, p.dist(a + ab * t))
}
