//! Planar geometry for oriented rectangles.
//!
//! Rectangles are clipped against each other as convex polygons
//! (Sutherland-Hodgman), areas come from the shoelace formula, and angle
//! distances respect the pi-periodic symmetry of a parallel-plate grasp.

use alloc::vec::Vec;

use crate::fp;

/// Half-plane / dedup tolerance for the clipping routines.
const EPS: f64 = 1e-9;

/// A point in image coordinates (x rightward, y downward).
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    #[inline]
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Cross product of `(b - a)` and `(p - a)`; positive when `p` lies to the
/// left of the directed edge `a -> b` (in the shoelace-positive orientation).
#[inline]
fn cross(a: Point2, b: Point2, p: Point2) -> f64 {
    (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
}

/// Convex polygon with vertices ordered so that the shoelace signed area is
/// non-negative. An empty vertex list represents the empty region.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    /// Wraps a vertex list that is already ordered with non-negative signed
    /// area. Duplicate vertices within `1e-9` are merged; fewer than 3
    /// surviving vertices collapse to the empty polygon.
    pub fn from_vertices(vertices: Vec<Point2>) -> Self {
        let mut out: Vec<Point2> = Vec::with_capacity(vertices.len());
        for v in vertices {
            if let Some(last) = out.last() {
                if fp::abs(last.x - v.x) <= EPS && fp::abs(last.y - v.y) <= EPS {
                    continue;
                }
            }
            out.push(v);
        }
        while out.len() >= 2 {
            let first = out[0];
            let last = *out.last().unwrap();
            if fp::abs(first.x - last.x) <= EPS && fp::abs(first.y - last.y) <= EPS {
                out.pop();
            } else {
                break;
            }
        }
        if out.len() < 3 {
            out.clear();
        }
        Self { vertices: out }
    }

    pub fn empty() -> Self {
        Self { vertices: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }
}

/// Oriented rectangle: center `(cx, cy)`, extents `w` along the `theta`
/// direction and `h` across it, `theta` in `[0, pi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OrientedRect {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub theta: f64,
}

/// Geometry construction error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GeometryError {
    #[error("rectangle extents must be positive and finite")]
    InvalidExtent,
    #[error("coordinate is not finite")]
    NonFinite,
}

impl OrientedRect {
    /// Builds a rectangle, normalizing `theta` into `[0, pi)`.
    pub fn new(cx: f64, cy: f64, w: f64, h: f64, theta: f64) -> Result<Self, GeometryError> {
        if !(cx.is_finite() && cy.is_finite() && theta.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if !(w.is_finite() && h.is_finite()) || w <= 0.0 || h <= 0.0 {
            return Err(GeometryError::InvalidExtent);
        }
        Ok(Self {
            cx,
            cy,
            w,
            h,
            theta: normalize_angle(theta),
        })
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}

/// Normalizes an angle into `[0, pi)`.
#[inline]
pub fn normalize_angle(theta: f64) -> f64 {
    fp::rem_euclid(theta, core::f64::consts::PI)
}

/// Corner polygon of an oriented rectangle, ordered with positive shoelace
/// area. Edge lengths alternate `w, h, w, h` starting from the first edge
/// along the rectangle's `theta` axis.
pub fn rect_corners(r: &OrientedRect) -> ConvexPolygon {
    let (s, c) = (fp::sin(r.theta), fp::cos(r.theta));
    let hw = 0.5 * r.w;
    let hh = 0.5 * r.h;
    // Local corners (u, v) in the rectangle frame, u along theta.
    let local = [(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)];
    let vertices = local
        .iter()
        .map(|&(u, v)| Point2::new(r.cx + u * c - v * s, r.cy + u * s + v * c))
        .collect();
    ConvexPolygon { vertices }
}

/// Shoelace area of a convex polygon; 0 for the empty polygon.
pub fn polygon_area(p: &ConvexPolygon) -> f64 {
    let v = &p.vertices;
    if v.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..v.len() {
        let a = v[i];
        let b = v[(i + 1) % v.len()];
        twice += a.x * b.y - b.x * a.y;
    }
    0.5 * twice
}

/// Sutherland-Hodgman clipping of `subject` against convex `clip`.
/// Both polygons must be in positive (shoelace) orientation.
pub fn polygon_clip(subject: &ConvexPolygon, clip: &ConvexPolygon) -> ConvexPolygon {
    if subject.is_empty() || clip.is_empty() {
        return ConvexPolygon::empty();
    }
    let mut output = subject.vertices.clone();
    let cv = &clip.vertices;
    for j in 0..cv.len() {
        if output.is_empty() {
            break;
        }
        let a = cv[j];
        let b = cv[(j + 1) % cv.len()];
        let input = core::mem::take(&mut output);
        for i in 0..input.len() {
            let s = input[i];
            let e = input[(i + 1) % input.len()];
            let ds = cross(a, b, s);
            let de = cross(a, b, e);
            let s_in = ds >= -EPS;
            let e_in = de >= -EPS;
            if s_in && e_in {
                output.push(e);
            } else if s_in && !e_in {
                output.push(edge_intersection(a, b, s, e));
            } else if !s_in && e_in {
                output.push(edge_intersection(a, b, s, e));
                output.push(e);
            }
        }
    }
    ConvexPolygon::from_vertices(output)
}

/// Intersection of segment `s -> e` with the line through `a -> b`.
fn edge_intersection(a: Point2, b: Point2, s: Point2, e: Point2) -> Point2 {
    let ds = cross(a, b, s);
    let de = cross(a, b, e);
    let denom = ds - de;
    if fp::abs(denom) < EPS {
        // Segment nearly parallel to the clip line; either endpoint works.
        return e;
    }
    let t = ds / denom;
    Point2::new(s.x + t * (e.x - s.x), s.y + t * (e.y - s.y))
}

/// Intersection over union of two oriented rectangles via exact polygon
/// clipping. Symmetric and in `[0, 1]`.
pub fn rotated_iou(a: &OrientedRect, b: &OrientedRect) -> f64 {
    let pa = rect_corners(a);
    let pb = rect_corners(b);
    let inter = polygon_area(&polygon_clip(&pa, &pb));
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// IoU of the axis-aligned bounding boxes of two oriented rectangles.
/// Comparison variant; the grasp metric defaults to [`rotated_iou`].
pub fn aabb_iou(a: &OrientedRect, b: &OrientedRect) -> f64 {
    let ba = rect_aabb(a);
    let bb = rect_aabb(b);
    let ix = (ba.2.min(bb.2) - ba.0.max(bb.0)).max(0.0);
    let iy = (ba.3.min(bb.3) - ba.1.max(bb.1)).max(0.0);
    let inter = ix * iy;
    let union = (ba.2 - ba.0) * (ba.3 - ba.1) + (bb.2 - bb.0) * (bb.3 - bb.1) - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Axis-aligned bounding box `(xmin, ymin, xmax, ymax)` of a rectangle.
pub fn rect_aabb(r: &OrientedRect) -> (f64, f64, f64, f64) {
    let (s, c) = (fp::abs(fp::sin(r.theta)), fp::abs(fp::cos(r.theta)));
    let ex = 0.5 * (r.w * c + r.h * s);
    let ey = 0.5 * (r.w * s + r.h * c);
    (r.cx - ex, r.cy - ey, r.cx + ex, r.cy + ey)
}

/// Angle distance under the pi-periodic grasp symmetry; result in `[0, pi/2]`.
pub fn angle_distance(theta_a: f64, theta_b: f64) -> f64 {
    let m = fp::rem_euclid(theta_a - theta_b, core::f64::consts::PI);
    m.min(core::f64::consts::PI - m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn rect(cx: f64, cy: f64, w: f64, h: f64, theta: f64) -> OrientedRect {
        OrientedRect::new(cx, cy, w, h, theta).unwrap()
    }

    #[test]
    fn corners_axis_aligned_square() {
        let p = rect_corners(&rect(0.0, 0.0, 2.0, 2.0, 0.0));
        let v = p.vertices();
        assert_eq!(v.len(), 4);
        for pt in v {
            assert!((pt.x.abs() - 1.0).abs() < 1e-12);
            assert!((pt.y.abs() - 1.0).abs() < 1e-12);
        }
        // Centroid at the rectangle center.
        let (mx, my) = v.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
        assert!((mx / 4.0).abs() < 1e-9 && (my / 4.0).abs() < 1e-9);
    }

    #[test]
    fn corners_square_quarter_turn_same_set() {
        let a = rect_corners(&rect(0.0, 0.0, 2.0, 2.0, 0.0));
        let b = rect_corners(&rect(0.0, 0.0, 2.0, 2.0, PI / 2.0));
        for pb in b.vertices() {
            assert!(a
                .vertices()
                .iter()
                .any(|pa| (pa.x - pb.x).abs() < 1e-9 && (pa.y - pb.y).abs() < 1e-9));
        }
    }

    #[test]
    fn corners_rotated_rect_match_rotation_matrix() {
        // (cx=5, cy=5, w=4, h=2, theta=pi/4): corner (+2, +1) in the local
        // frame maps to (5 + (2 - 1)/sqrt(2), 5 + (2 + 1)/sqrt(2)).
        let p = rect_corners(&rect(5.0, 5.0, 4.0, 2.0, PI / 4.0));
        let r = core::f64::consts::FRAC_1_SQRT_2;
        let expect = [
            (5.0 + (-2.0 + 1.0) * r, 5.0 + (-2.0 - 1.0) * r),
            (5.0 + (2.0 + 1.0) * r, 5.0 + (2.0 - 1.0) * r),
            (5.0 + (2.0 - 1.0) * r, 5.0 + (2.0 + 1.0) * r),
            (5.0 + (-2.0 - 1.0) * r, 5.0 + (-2.0 + 1.0) * r),
        ];
        for (pt, (ex, ey)) in p.vertices().iter().zip(expect) {
            assert!((pt.x - ex).abs() < 1e-9 && (pt.y - ey).abs() < 1e-9);
        }
        // Edge lengths alternate w, h, w, h.
        let v = p.vertices();
        for (i, expect_len) in [4.0, 2.0, 4.0, 2.0].iter().enumerate() {
            let a = v[i];
            let b = v[(i + 1) % 4];
            assert!((fp::hypot(b.x - a.x, b.y - a.y) - expect_len).abs() < 1e-9);
        }
    }

    #[test]
    fn clip_self_is_identity() {
        let p = rect_corners(&rect(3.0, -2.0, 5.0, 1.5, 0.7));
        let clipped = polygon_clip(&p, &p);
        assert!((polygon_area(&clipped) - polygon_area(&p)).abs() < 1e-12);
    }

    #[test]
    fn clip_disjoint_is_empty() {
        let a = rect_corners(&rect(0.0, 0.0, 2.0, 2.0, 0.3));
        let b = rect_corners(&rect(100.0, 100.0, 2.0, 2.0, 1.0));
        assert!(polygon_clip(&a, &b).is_empty());
    }

    #[test]
    fn clip_square_with_rotated_square_gives_octagon() {
        let a = rect_corners(&rect(0.0, 0.0, 1.0, 1.0, 0.0));
        let b = rect_corners(&rect(0.0, 0.0, 1.0, 1.0, PI / 4.0));
        let inter = polygon_clip(&a, &b);
        assert_eq!(inter.vertices().len(), 8);
        let expect = 2.0 * (2f64.sqrt() - 1.0);
        assert!((polygon_area(&inter) - expect).abs() < 1e-12);
    }

    #[test]
    fn area_basics() {
        let sq = rect_corners(&rect(0.5, 0.5, 1.0, 1.0, 0.0));
        assert!((polygon_area(&sq) - 1.0).abs() < 1e-12);
        assert_eq!(polygon_area(&ConvexPolygon::empty()), 0.0);
        let tri = ConvexPolygon::from_vertices(alloc::vec![
            Point2::new(0.0, 0.0),
            Point2::new(4.0, 0.0),
            Point2::new(0.0, 3.0),
        ]);
        assert!((polygon_area(&tri) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn iou_identity_and_disjoint() {
        let a = rect(1.0, 2.0, 3.0, 4.0, 0.9);
        assert!((rotated_iou(&a, &a) - 1.0).abs() < 1e-9);
        let b = rect(100.0, 100.0, 3.0, 4.0, 0.9);
        assert_eq!(rotated_iou(&a, &b), 0.0);
    }

    #[test]
    fn iou_unit_squares_45_degrees() {
        let a = rect(0.0, 0.0, 1.0, 1.0, 0.0);
        let b = rect(0.0, 0.0, 1.0, 1.0, PI / 4.0);
        let expect = core::f64::consts::FRAC_1_SQRT_2;
        assert!((rotated_iou(&a, &b) - expect).abs() < 1e-9);
    }

    #[test]
    fn angle_distance_cases() {
        assert_eq!(angle_distance(0.3, 0.3), 0.0);
        assert!((angle_distance(0.05, PI - 0.05) - 0.10).abs() < 1e-12);
        assert!((angle_distance(0.0, PI / 2.0) - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn corner_area_matches_w_times_h() {
        let r = rect(7.0, -3.0, 11.0, 4.5, 2.1);
        assert!((polygon_area(&rect_corners(&r)) - r.area()).abs() < 1e-9);
    }

    #[test]
    fn invalid_rects_rejected() {
        assert!(OrientedRect::new(0.0, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(OrientedRect::new(0.0, 0.0, 1.0, -1.0, 0.0).is_err());
        assert!(OrientedRect::new(f64::NAN, 0.0, 1.0, 1.0, 0.0).is_err());
    }
}
