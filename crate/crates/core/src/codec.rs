//! Codecs between grasp candidates, region proposals, orientation classes and
//! the two regression-target parameterizations.
//!
//! The 4-vector targets transform an axis-aligned region proposal into a
//! ground-truth grasp box; the 5-vector targets transform a previously
//! predicted grasp into a refined one and are expressed in the predicted
//! grasp's rotated frame, with the orientation offset wrapped into `[0, pi)`
//! and stored normalized by pi.

use core::f64::consts::PI;

use crate::fp;
use crate::geometry::{self, OrientedRect};

/// Codec error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("angle outside [0, pi)")]
    AngleOutOfRange,
    #[error("orientation class 0 is the invalid class and has no angle")]
    InvalidClass,
    #[error("orientation class out of range")]
    ClassOutOfRange,
    #[error("extents must be positive and finite")]
    InvalidExtent,
    #[error("value is not finite")]
    NonFinite,
    #[error("score outside [0, 1]")]
    InvalidScore,
}

/// A grasp candidate: center `(x, y)`, opening width `w`, plate length `h`,
/// opening-axis orientation `theta` in `[0, pi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GraspCandidate {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub theta: f64,
    pub class_id: Option<u32>,
    pub score: Option<f64>,
}

impl GraspCandidate {
    /// Builds a candidate, normalizing `theta` into `[0, pi)`.
    pub fn new(x: f64, y: f64, w: f64, h: f64, theta: f64) -> Result<Self, CodecError> {
        if !(x.is_finite() && y.is_finite() && theta.is_finite()) {
            return Err(CodecError::NonFinite);
        }
        if !(w.is_finite() && h.is_finite()) || w <= 0.0 || h <= 0.0 {
            return Err(CodecError::InvalidExtent);
        }
        Ok(Self {
            x,
            y,
            w,
            h,
            theta: geometry::normalize_angle(theta),
            class_id: None,
            score: None,
        })
    }

    pub fn with_class(mut self, class_id: u32) -> Self {
        self.class_id = Some(class_id);
        self
    }

    pub fn with_score(self, score: f64) -> Result<Self, CodecError> {
        if !(0.0..=1.0).contains(&score) {
            return Err(CodecError::InvalidScore);
        }
        Ok(Self {
            score: Some(score),
            ..self
        })
    }
}

/// Axis-aligned region proposal: center `(x_hat, y_hat)` and extents.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegionProposal {
    pub x_hat: f64,
    pub y_hat: f64,
    pub w_hat: f64,
    pub h_hat: f64,
}

impl RegionProposal {
    pub fn new(x_hat: f64, y_hat: f64, w_hat: f64, h_hat: f64) -> Result<Self, CodecError> {
        if !(x_hat.is_finite() && y_hat.is_finite()) {
            return Err(CodecError::NonFinite);
        }
        if !(w_hat.is_finite() && h_hat.is_finite()) || w_hat <= 0.0 || h_hat <= 0.0 {
            return Err(CodecError::InvalidExtent);
        }
        Ok(Self {
            x_hat,
            y_hat,
            w_hat,
            h_hat,
        })
    }
}

/// Equal-width orientation bins over `[0, pi)`. Class index 0 is reserved for
/// the invalid class; classes `1..=n_classes` are orientations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrientationBins {
    n_classes: u32,
}

impl OrientationBins {
    /// The 18-bin discretization used for grasp orientation.
    pub const DEFAULT_CLASSES: u32 = 18;

    pub fn new(n_classes: u32) -> Result<Self, CodecError> {
        if n_classes == 0 {
            return Err(CodecError::ClassOutOfRange);
        }
        Ok(Self { n_classes })
    }

    pub fn default_bins() -> Self {
        Self {
            n_classes: Self::DEFAULT_CLASSES,
        }
    }

    pub fn n_classes(&self) -> u32 {
        self.n_classes
    }

    pub fn bin_width(&self) -> f64 {
        PI / self.n_classes as f64
    }
}

/// 4-vector regression targets (proposal -> grasp box).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrectionFactors4 {
    pub t_x: f64,
    pub t_y: f64,
    pub t_w: f64,
    pub t_h: f64,
}

impl CorrectionFactors4 {
    pub fn as_array(&self) -> [f64; 4] {
        [self.t_x, self.t_y, self.t_w, self.t_h]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self {
            t_x: a[0],
            t_y: a[1],
            t_w: a[2],
            t_h: a[3],
        }
    }
}

/// 5-vector rotation-aware regression targets (grasp -> refined grasp);
/// `t_theta` is the orientation offset wrapped into `[0, pi)` and divided by pi.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrectionFactors5 {
    pub t_x: f64,
    pub t_y: f64,
    pub t_w: f64,
    pub t_h: f64,
    pub t_theta: f64,
}

impl CorrectionFactors5 {
    pub fn as_array(&self) -> [f64; 5] {
        [self.t_x, self.t_y, self.t_w, self.t_h, self.t_theta]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        Self {
            t_x: a[0],
            t_y: a[1],
            t_w: a[2],
            t_h: a[3],
            t_theta: a[4],
        }
    }
}

/// Maps an orientation in `[0, pi)` to its bin: `floor(theta / width) + 1`.
/// A boundary angle belongs to the bin it opens (left-closed intervals).
pub fn orientation_to_class(theta: f64, bins: OrientationBins) -> Result<u32, CodecError> {
    if !theta.is_finite() || !(0.0..PI).contains(&theta) {
        return Err(CodecError::AngleOutOfRange);
    }
    let c = fp::floor(theta / bins.bin_width()) as u32 + 1;
    // floor can land on n_classes + 1 when theta is within rounding of pi.
    Ok(c.min(bins.n_classes))
}

/// Midpoint angle of an orientation class: `(c - 0.5) * pi / n`.
pub fn class_to_orientation(c: u32, bins: OrientationBins) -> Result<f64, CodecError> {
    if c == 0 {
        return Err(CodecError::InvalidClass);
    }
    if c > bins.n_classes {
        return Err(CodecError::ClassOutOfRange);
    }
    Ok((c as f64 - 0.5) * bins.bin_width())
}

/// Encodes a ground-truth grasp box relative to an axis-aligned proposal:
/// `t_x = (x* - x_hat) / w_hat`, `t_y = (y* - y_hat) / h_hat`,
/// `t_w = ln(w*/w_hat)`, `t_h = ln(h*/h_hat)`.
pub fn encode_box_targets(proposal: &RegionProposal, gt: &GraspCandidate) -> CorrectionFactors4 {
    CorrectionFactors4 {
        t_x: (gt.x - proposal.x_hat) / proposal.w_hat,
        t_y: (gt.y - proposal.y_hat) / proposal.h_hat,
        t_w: fp::ln(gt.w / proposal.w_hat),
        t_h: fp::ln(gt.h / proposal.h_hat),
    }
}

/// Inverse of [`encode_box_targets`] plus the class-midpoint orientation.
pub fn decode_box_targets(
    proposal: &RegionProposal,
    t: &CorrectionFactors4,
    theta_class: u32,
    bins: OrientationBins,
) -> Result<GraspCandidate, CodecError> {
    let theta = class_to_orientation(theta_class, bins)?;
    GraspCandidate::new(
        proposal.x_hat + t.t_x * proposal.w_hat,
        proposal.y_hat + t.t_y * proposal.h_hat,
        proposal.w_hat * fp::exp(t.t_w),
        proposal.h_hat * fp::exp(t.t_h),
        theta,
    )
}

/// Encodes a ground-truth grasp relative to a predicted grasp in the
/// predicted grasp's rotated frame; the orientation offset is wrapped into
/// `[0, pi)` and normalized by pi so `t_theta` lies in `[0, 1)`.
pub fn encode_refine_targets(g: &GraspCandidate, gt: &GraspCandidate) -> CorrectionFactors5 {
    let (s, c) = (fp::sin(g.theta), fp::cos(g.theta));
    let dx = gt.x - g.x;
    let dy = gt.y - g.y;
    CorrectionFactors5 {
        t_x: (dx * c + dy * s) / g.w,
        t_y: (dy * c - dx * s) / g.h,
        t_w: fp::ln(gt.w / g.w),
        t_h: fp::ln(gt.h / g.h),
        t_theta: fp::rem_euclid(gt.theta - g.theta, PI) / PI,
    }
}

/// Inverse of [`encode_refine_targets`]; the refined orientation is wrapped
/// back into `[0, pi)`.
pub fn decode_refine_targets(
    g: &GraspCandidate,
    t: &CorrectionFactors5,
) -> Result<GraspCandidate, CodecError> {
    let (s, c) = (fp::sin(g.theta), fp::cos(g.theta));
    let u = t.t_x * g.w;
    let v = t.t_y * g.h;
    let mut refined = GraspCandidate::new(
        g.x + u * c - v * s,
        g.y + u * s + v * c,
        g.w * fp::exp(t.t_w),
        g.h * fp::exp(t.t_h),
        g.theta + PI * t.t_theta,
    )?;
    refined.class_id = g.class_id;
    refined.score = g.score;
    Ok(refined)
}

/// Field-wise bridge into the geometry module (`w` axis at `theta`).
pub fn grasp_to_rect(g: &GraspCandidate) -> OrientedRect {
    OrientedRect {
        cx: g.x,
        cy: g.y,
        w: g.w,
        h: g.h,
        theta: g.theta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::angle_distance;

    fn grasp(x: f64, y: f64, w: f64, h: f64, theta: f64) -> GraspCandidate {
        GraspCandidate::new(x, y, w, h, theta).unwrap()
    }

    #[test]
    fn orientation_class_boundaries() {
        let bins = OrientationBins::default_bins();
        assert_eq!(orientation_to_class(0.0, bins).unwrap(), 1);
        assert_eq!(orientation_to_class(PI / 18.0 - 1e-6, bins).unwrap(), 1);
        assert_eq!(orientation_to_class(PI / 2.0, bins).unwrap(), 10);
        // Boundary belongs to the opening bin.
        assert_eq!(orientation_to_class(PI / 18.0, bins).unwrap(), 2);
        assert!(orientation_to_class(PI, bins).is_err());
        assert!(orientation_to_class(-0.1, bins).is_err());
    }

    #[test]
    fn class_midpoints() {
        let bins = OrientationBins::default_bins();
        assert!((class_to_orientation(1, bins).unwrap() - PI / 36.0).abs() < 1e-12);
        assert!((class_to_orientation(18, bins).unwrap() - 35.0 * PI / 36.0).abs() < 1e-12);
        assert_eq!(class_to_orientation(0, bins), Err(CodecError::InvalidClass));
        assert_eq!(
            class_to_orientation(19, bins),
            Err(CodecError::ClassOutOfRange)
        );
    }

    #[test]
    fn class_round_trip() {
        let bins = OrientationBins::default_bins();
        for c in 1..=18 {
            let theta = class_to_orientation(c, bins).unwrap();
            assert_eq!(orientation_to_class(theta, bins).unwrap(), c);
        }
    }

    #[test]
    fn box_target_examples() {
        let p = RegionProposal::new(10.0, 10.0, 4.0, 4.0).unwrap();
        let t = encode_box_targets(&p, &grasp(10.0, 10.0, 4.0, 4.0, 0.1));
        assert_eq!(t.as_array(), [0.0, 0.0, 0.0, 0.0]);

        let t = encode_box_targets(&p, &grasp(14.0, 10.0, 4.0, 4.0, 0.1));
        assert_eq!(t.as_array(), [1.0, 0.0, 0.0, 0.0]);

        let p = RegionProposal::new(0.0, 0.0, 2.0, 2.0).unwrap();
        let t = encode_box_targets(&p, &grasp(0.0, 0.0, 4.0, 1.0, 0.1));
        assert!((t.t_w - 2f64.ln()).abs() < 1e-12);
        assert!((t.t_h + 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn box_decode_examples() {
        let bins = OrientationBins::default_bins();
        let p = RegionProposal::new(3.0, 4.0, 2.0, 5.0).unwrap();
        let g = decode_box_targets(&p, &CorrectionFactors4::default(), 1, bins).unwrap();
        assert_eq!((g.x, g.y, g.w, g.h), (3.0, 4.0, 2.0, 5.0));
        assert!((g.theta - PI / 36.0).abs() < 1e-12);

        let p = RegionProposal::new(0.0, 0.0, 2.0, 2.0).unwrap();
        let t = CorrectionFactors4::from_array([1.0, 0.0, 2f64.ln(), 0.0]);
        let g = decode_box_targets(&p, &t, 10, bins).unwrap();
        assert!((g.x - 2.0).abs() < 1e-12);
        assert!((g.y - 0.0).abs() < 1e-12);
        assert!((g.w - 4.0).abs() < 1e-12);
        assert!((g.h - 2.0).abs() < 1e-12);
        assert!((g.theta - 19.0 * PI / 36.0).abs() < 1e-12);

        assert!(decode_box_targets(&p, &t, 0, bins).is_err());
    }

    #[test]
    fn box_round_trip() {
        let bins = OrientationBins::default_bins();
        let p = RegionProposal::new(12.0, -3.0, 7.0, 9.0).unwrap();
        let gt = grasp(15.5, -1.25, 3.0, 11.0, 0.6);
        let t = encode_box_targets(&p, &gt);
        let back =
            decode_box_targets(&p, &t, orientation_to_class(gt.theta, bins).unwrap(), bins)
                .unwrap();
        assert!((back.x - gt.x).abs() < 1e-9);
        assert!((back.y - gt.y).abs() < 1e-9);
        assert!((back.w - gt.w).abs() < 1e-9);
        assert!((back.h - gt.h).abs() < 1e-9);
    }

    #[test]
    fn refine_target_examples() {
        let g = grasp(3.0, 4.0, 2.0, 5.0, 1.0);
        let t = encode_refine_targets(&g, &g);
        assert_eq!(t.as_array(), [0.0, 0.0, 0.0, 0.0, 0.0]);

        // At theta = pi/2 an image-x shift of the ground truth appears as a
        // negative cross-axis offset.
        let delta = 0.75;
        let g = grasp(0.0, 0.0, 2.0, 2.0, PI / 2.0);
        let gt = grasp(delta, 0.0, 2.0, 2.0, PI / 2.0);
        let t = encode_refine_targets(&g, &gt);
        assert!(t.t_x.abs() < 1e-12);
        assert!((t.t_y + delta / 2.0).abs() < 1e-12);
        assert!(t.t_w.abs() < 1e-12 && t.t_h.abs() < 1e-12 && t.t_theta.abs() < 1e-12);

        let g = grasp(0.0, 0.0, 2.0, 2.0, PI / 4.0);
        let gt = grasp(0.0, 0.0, 2.0, 2.0, 0.0);
        let t = encode_refine_targets(&g, &gt);
        assert!((t.t_theta - 0.75).abs() < 1e-12);
    }

    #[test]
    fn refine_decode_examples() {
        let g = grasp(1.0, 2.0, 3.0, 4.0, 0.5);
        let back = decode_refine_targets(&g, &CorrectionFactors5::default()).unwrap();
        assert_eq!((back.x, back.y, back.w, back.h, back.theta), (1.0, 2.0, 3.0, 4.0, 0.5));

        let g = grasp(0.0, 0.0, 2.0, 2.0, 0.0);
        let t = CorrectionFactors5::from_array([0.5, 0.0, 0.0, 0.0, 0.25]);
        let out = decode_refine_targets(&g, &t).unwrap();
        assert!((out.x - 1.0).abs() < 1e-12);
        assert!(out.y.abs() < 1e-12);
        assert!((out.w - 2.0).abs() < 1e-12 && (out.h - 2.0).abs() < 1e-12);
        assert!((out.theta - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn refine_round_trip() {
        let g = grasp(10.0, 20.0, 6.0, 3.0, 2.8);
        let gt = grasp(11.5, 18.0, 5.0, 4.0, 0.2);
        let t = encode_refine_targets(&g, &gt);
        assert!((0.0..1.0).contains(&t.t_theta));
        let back = decode_refine_targets(&g, &t).unwrap();
        assert!((back.x - gt.x).abs() < 1e-9);
        assert!((back.y - gt.y).abs() < 1e-9);
        assert!((back.w - gt.w).abs() < 1e-9);
        assert!((back.h - gt.h).abs() < 1e-9);
        assert!(angle_distance(back.theta, gt.theta) < 1e-9);
    }

    #[test]
    fn grasp_to_rect_is_field_copy() {
        let g = grasp(1.0, 2.0, 3.0, 4.0, 0.5).with_class(7);
        let r = grasp_to_rect(&g);
        assert_eq!((r.cx, r.cy, r.w, r.h, r.theta), (1.0, 2.0, 3.0, 4.0, 0.5));
    }

    #[test]
    fn theta_normalized_at_construction() {
        let g = grasp(0.0, 0.0, 1.0, 1.0, PI + 0.25);
        assert!((g.theta - 0.25).abs() < 1e-12);
        let g = grasp(0.0, 0.0, 1.0, 1.0, -0.25);
        assert!((g.theta - (PI - 0.25)).abs() < 1e-12);
    }
}
