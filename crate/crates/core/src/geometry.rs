//! Planar geometry: poses, polylines with arclength, simple polygons and
//! oriented boxes.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub type Point = [f64; 2];

/// Wrap an angle into (-π, π].
///
/// Angles already in range are returned bit-for-bit unchanged.
pub fn normalize_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let wrapped = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped <= -PI {
        wrapped + 2.0 * PI
    } else {
        wrapped
    }
}

/// Smallest signed difference `a - b`, wrapped into (-π, π].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    normalize_angle(a - b)
}

/// A planar pose. `theta` is counterclockwise from +x.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta: normalize_angle(theta) }
    }

    pub fn position(&self) -> Point {
        [self.x, self.y]
    }

    /// Express `self` (given in the global frame) in the frame of `origin`.
    pub fn relative_to(&self, origin: &Pose2D) -> Pose2D {
        let (s, c) = origin.theta.sin_cos();
        let dx = self.x - origin.x;
        let dy = self.y - origin.y;
        Pose2D {
            x: c * dx + s * dy,
            y: -s * dx + c * dy,
            theta: angle_diff(self.theta, origin.theta),
        }
    }

    /// Map `self` (given in the frame of `origin`) into the global frame.
    pub fn compose(origin: &Pose2D, local: &Pose2D) -> Pose2D {
        let (s, c) = origin.theta.sin_cos();
        Pose2D {
            x: origin.x + c * local.x - s * local.y,
            y: origin.y + s * local.x + c * local.y,
            theta: normalize_angle(origin.theta + local.theta),
        }
    }
}

pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(p1, q1, q2))
        || (d2 == 0.0 && on_segment(p2, q1, q2))
        || (d3 == 0.0 && on_segment(q1, p1, p2))
        || (d4 == 0.0 && on_segment(q2, p1, p2))
}

/// Result of projecting a point onto a polyline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    /// Arclength of the foot point; extrapolated past either end.
    pub s: f64,
    /// Signed lateral offset, positive to the left of the travel direction.
    pub lateral: f64,
    /// Tangent heading at the foot point.
    pub heading: f64,
    pub segment: usize,
}

/// A polyline with cached cumulative arclength.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Point>", into = "Vec<Point>")]
pub struct Polyline {
    points: Vec<Point>,
    cum: Vec<f64>,
}

impl From<Vec<Point>> for Polyline {
    fn from(points: Vec<Point>) -> Self {
        Self::new(points)
    }
}

impl From<Polyline> for Vec<Point> {
    fn from(p: Polyline) -> Self {
        p.points
    }
}

impl Polyline {
    pub fn new(points: Vec<Point>) -> Self {
        let mut cum = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        for (i, p) in points.iter().enumerate() {
            if i > 0 {
                acc += dist(points[i - 1], *p);
            }
            cum.push(acc);
        }
        Self { points, cum }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0)
    }

    pub fn segment_count(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    /// Same geometry, opposite traversal direction.
    pub fn reversed(&self) -> Polyline {
        let mut pts = self.points.clone();
        pts.reverse();
        Polyline::new(pts)
    }

    /// Foot-point parameter `t` (unclamped) and squared distance for segment `i`.
    fn segment_param(&self, i: usize, p: Point) -> (f64, f64) {
        let a = self.points[i];
        let b = self.points[i + 1];
        let ab = [b[0] - a[0], b[1] - a[1]];
        let len2 = ab[0] * ab[0] + ab[1] * ab[1];
        let t = if len2 > 0.0 { ((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2 } else { 0.0 };
        let last = self.segment_count() - 1;
        let tc = match (i == 0, i == last) {
            (true, true) => t,
            (true, false) => t.min(1.0),
            (false, true) => t.max(0.0),
            (false, false) => t.clamp(0.0, 1.0),
        };
        let f = [a[0] + tc * ab[0], a[1] + tc * ab[1]];
        let d2 = (p[0] - f[0]).powi(2) + (p[1] - f[1]).powi(2);
        (t, d2)
    }

    fn projection_on(&self, i: usize, p: Point) -> Projection {
        let a = self.points[i];
        let b = self.points[i + 1];
        let ab = [b[0] - a[0], b[1] - a[1]];
        let len = ab[0].hypot(ab[1]);
        let heading = ab[1].atan2(ab[0]);
        if len == 0.0 {
            return Projection { s: self.cum[i], lateral: 0.0, heading, segment: i };
        }
        let u = [ab[0] / len, ab[1] / len];
        let rel = [p[0] - a[0], p[1] - a[1]];
        let along = rel[0] * u[0] + rel[1] * u[1];
        let lateral = -rel[0] * u[1] + rel[1] * u[0];
        let last = self.segment_count() - 1;
        let along_c = match (i == 0, i == last) {
            (true, true) => along,
            (true, false) => along.min(len),
            (false, true) => along.max(0.0),
            (false, false) => along.clamp(0.0, len),
        };
        let lateral = if along_c == along {
            lateral
        } else {
            // corner region: signed distance to the vertex, sign from the segment side
            let f = [a[0] + along_c * u[0], a[1] + along_c * u[1]];
            dist(p, f).copysign(if lateral == 0.0 { 1.0 } else { lateral })
        };
        Projection { s: self.cum[i] + along_c, lateral, heading, segment: i }
    }

    /// Global nearest-segment projection.
    pub fn project(&self, p: Point) -> Projection {
        assert!(self.points.len() >= 2, "polyline needs at least two points");
        let mut best = 0;
        let mut best_d2 = f64::INFINITY;
        for i in 0..self.segment_count() {
            let (_, d2) = self.segment_param(i, p);
            if d2 < best_d2 {
                best_d2 = d2;
                best = i;
            }
        }
        self.projection_on(best, p)
    }

    /// Projection found by walking from segment `hint`; O(1) for points that
    /// move smoothly along the line.
    pub fn project_from(&self, p: Point, hint: usize) -> Projection {
        let n = self.segment_count();
        assert!(n >= 1, "polyline needs at least two points");
        let mut i = hint.min(n - 1);
        let mut d = self.segment_param(i, p).1;
        // descend on distance; strictly decreasing so it terminates
        loop {
            let up = if i + 1 < n { self.segment_param(i + 1, p).1 } else { f64::INFINITY };
            let down = if i > 0 { self.segment_param(i - 1, p).1 } else { f64::INFINITY };
            if up < d && up <= down {
                i += 1;
                d = up;
            } else if down < d {
                i -= 1;
                d = down;
            } else {
                break;
            }
        }
        self.projection_on(i, p)
    }

    /// Point and tangent heading at arclength `s` (extrapolated past the ends).
    pub fn point_at(&self, s: f64) -> (Point, f64) {
        let n = self.segment_count();
        assert!(n >= 1, "polyline needs at least two points");
        let i = match self.cum.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        };
        let a = self.points[i];
        let b = self.points[i + 1];
        let len = dist(a, b);
        let heading = (b[1] - a[1]).atan2(b[0] - a[0]);
        let t = if len > 0.0 { (s - self.cum[i]) / len } else { 0.0 };
        ([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])], heading)
    }

    /// Polyline offset laterally by `d` (positive left), vertex-wise along
    /// averaged normals.
    pub fn offset(&self, d: f64) -> Polyline {
        let n = self.points.len();
        let seg_heading = |i: usize| {
            let a = self.points[i];
            let b = self.points[i + 1];
            (b[1] - a[1]).atan2(b[0] - a[0])
        };
        let pts = (0..n)
            .map(|i| {
                let h = if i == 0 {
                    seg_heading(0)
                } else if i == n - 1 {
                    seg_heading(n - 2)
                } else {
                    let h0 = seg_heading(i - 1);
                    h0 + 0.5 * angle_diff(seg_heading(i), h0)
                };
                let p = self.points[i];
                [p[0] - d * h.sin(), p[1] + d * h.cos()]
            })
            .collect();
        Polyline::new(pts)
    }
}

/// A simple polygon (no self-intersections), vertices in either winding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Point>", into = "Vec<Point>")]
pub struct Polygon {
    points: Vec<Point>,
    bbox: [f64; 4],
}

impl From<Vec<Point>> for Polygon {
    fn from(points: Vec<Point>) -> Self {
        Self::new(points)
    }
}

impl From<Polygon> for Vec<Point> {
    fn from(p: Polygon) -> Self {
        p.points
    }
}

impl Polygon {
    pub fn new(points: Vec<Point>) -> Self {
        let mut bbox = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for p in &points {
            bbox[0] = bbox[0].min(p[0]);
            bbox[1] = bbox[1].min(p[1]);
            bbox[2] = bbox[2].max(p[0]);
            bbox[3] = bbox[3].max(p[1]);
        }
        Self { points, bbox }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Even-odd ray casting; points on the boundary count as inside.
    pub fn contains(&self, p: Point) -> bool {
        if p[0] < self.bbox[0] || p[0] > self.bbox[2] || p[1] < self.bbox[1] || p[1] > self.bbox[3] {
            return false;
        }
        let n = self.points.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (pi, pj) = (self.points[i], self.points[j]);
            if near_segment(pj, pi, p) {
                return true;
            }
            if (pi[1] > p[1]) != (pj[1] > p[1]) {
                let x = pj[0] + (p[1] - pj[1]) * (pi[0] - pj[0]) / (pi[1] - pj[1]);
                if p[0] < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// True when no two non-adjacent edges intersect.
    pub fn is_simple(&self) -> bool {
        let n = self.points.len();
        if n < 3 {
            return false;
        }
        for i in 0..n {
            let (a1, a2) = (self.points[i], self.points[(i + 1) % n]);
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                let (b1, b2) = (self.points[j], self.points[(j + 1) % n]);
                if segments_intersect(a1, a2, b1, b2) {
                    return false;
                }
            }
        }
        true
    }

    /// Signed area (positive for counterclockwise winding).
    pub fn signed_area(&self) -> f64 {
        let n = self.points.len();
        (0..n)
            .map(|i| {
                let a = self.points[i];
                let b = self.points[(i + 1) % n];
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
            * 0.5
    }
}

/// Gap (m) below which two boxes are considered touching.
pub const CONTACT_EPS: f64 = 1e-9;

/// An oriented rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientedBox {
    pub center: Point,
    pub heading: f64,
    pub half_length: f64,
    pub half_width: f64,
}

impl OrientedBox {
    pub fn new(pose: &Pose2D, length: f64, width: f64) -> Self {
        Self { center: [pose.x, pose.y], heading: pose.theta, half_length: 0.5 * length, half_width: 0.5 * width }
    }

    /// Corners counterclockwise starting front-left.
    pub fn corners(&self) -> [Point; 4] {
        let (s, c) = self.heading.sin_cos();
        let f = [c * self.half_length, s * self.half_length];
        let l = [-s * self.half_width, c * self.half_width];
        let [x, y] = self.center;
        [
            [x + f[0] + l[0], y + f[1] + l[1]],
            [x - f[0] + l[0], y - f[1] + l[1]],
            [x - f[0] - l[0], y - f[1] - l[1]],
            [x + f[0] - l[0], y + f[1] - l[1]],
        ]
    }

    pub fn bounding_radius(&self) -> f64 {
        self.half_length.hypot(self.half_width)
    }

    /// Separating-axis overlap test; touching boxes (gap below
    /// [`CONTACT_EPS`]) overlap.
    pub fn overlaps(&self, other: &OrientedBox) -> bool {
        let r = self.bounding_radius() + other.bounding_radius();
        if dist(self.center, other.center) > r + CONTACT_EPS {
            return false;
        }
        let ca = self.corners();
        let cb = other.corners();
        for h in [self.heading, other.heading] {
            let (s, c) = h.sin_cos();
            for axis in [[c, s], [-s, c]] {
                let (amin, amax) = project_corners(&ca, axis);
                let (bmin, bmax) = project_corners(&cb, axis);
                if amax + CONTACT_EPS < bmin || bmax + CONTACT_EPS < amin {
                    return false;
                }
            }
        }
        true
    }

    /// Convex overlap region (Sutherland–Hodgman); empty when disjoint.
    pub fn intersection(&self, other: &OrientedBox) -> Vec<Point> {
        let mut poly: Vec<Point> = other.corners().to_vec();
        let clip = self.corners();
        for i in 0..4 {
            if poly.is_empty() {
                break;
            }
            let a = clip[i];
            let b = clip[(i + 1) % 4];
            let inside = |p: Point| cross(a, b, p) >= 0.0;
            let mut out = Vec::with_capacity(poly.len() + 2);
            for j in 0..poly.len() {
                let cur = poly[j];
                let prev = poly[(j + poly.len() - 1) % poly.len()];
                let (ci, pi) = (inside(cur), inside(prev));
                if ci != pi {
                    let d1 = cross(a, b, prev);
                    let d2 = cross(a, b, cur);
                    let t = d1 / (d1 - d2);
                    out.push([prev[0] + t * (cur[0] - prev[0]), prev[1] + t * (cur[1] - prev[1])]);
                }
                if ci {
                    out.push(cur);
                }
            }
            poly = out;
        }
        poly
    }
}

fn near_segment(a: Point, b: Point, p: Point) -> bool {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let c = ab[0] * ap[1] - ab[1] * ap[0];
    let t = ab[0] * ap[0] + ab[1] * ap[1];
    c.abs() <= 1e-9 * len2.sqrt().max(1.0) && t >= 0.0 && t <= len2
}

fn project_corners(c: &[Point; 4], axis: [f64; 2]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in c {
        let v = p[0] * axis[0] + p[1] * axis[1];
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_keeps_in_range_values_bitwise() {
        for v in [0.1, -3.0, PI, 1e-300] {
            assert_eq!(normalize_angle(v).to_bits(), v.to_bits());
        }
        assert_eq!(normalize_angle(-PI), PI);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(-0.5 - 2.0 * PI) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn compose_inverts_relative() {
        let origin = Pose2D::new(3.0, -2.0, 1.1);
        let p = Pose2D::new(-7.0, 4.0, -2.5);
        let back = Pose2D::compose(&origin, &p.relative_to(&origin));
        assert!((back.x - p.x).abs() < 1e-12 && (back.y - p.y).abs() < 1e-12);
        assert!(angle_diff(back.theta, p.theta).abs() < 1e-12);
    }

    #[test]
    fn polyline_projection_signs_and_extrapolation() {
        let line = Polyline::new(vec![[0.0, 0.0], [10.0, 0.0], [10.0, 10.0]]);
        let p = line.project([5.0, 1.0]);
        assert_eq!(p.segment, 0);
        assert!((p.s - 5.0).abs() < 1e-12 && (p.lateral - 1.0).abs() < 1e-12);
        let behind = line.project([-4.0, -1.0]);
        assert!((behind.s + 4.0).abs() < 1e-12 && (behind.lateral + 1.0).abs() < 1e-12);
        let past = line.project([10.0, 14.0]);
        assert!((past.s - 24.0).abs() < 1e-12);
        let walked = line.project_from([9.0, 6.0], 0);
        assert_eq!(walked.segment, 1);
        assert!((walked.s - 16.0).abs() < 1e-12 && (walked.lateral - 1.0).abs() < 1e-12);
        let (pt, h) = line.point_at(15.0);
        assert!((pt[0] - 10.0).abs() < 1e-12 && (pt[1] - 5.0).abs() < 1e-12);
        assert!((h - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn polygon_contains_and_simplicity() {
        let sq = Polygon::new(vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]]);
        assert!(sq.contains([1.0, 1.0]));
        assert!(!sq.contains([3.0, 1.0]));
        assert!(sq.is_simple());
        let bowtie = Polygon::new(vec![[0.0, 0.0], [2.0, 2.0], [2.0, 0.0], [0.0, 2.0]]);
        assert!(!bowtie.is_simple());
    }

    #[test]
    fn box_overlap_basic() {
        let a = OrientedBox { center: [0.0, 0.0], heading: 0.0, half_length: 0.5, half_width: 0.5 };
        let b = OrientedBox { center: [0.5, 0.0], ..a };
        let c = OrientedBox { center: [2.0, 0.0], ..a };
        assert!(a.overlaps(&b));
        assert!(!a.overlaps(&c));
        let area = Polygon::new(a.intersection(&b)).signed_area().abs();
        assert!((area - 0.5).abs() < 1e-12);
        assert!(a.intersection(&c).is_empty());
    }
}
