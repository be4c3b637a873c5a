//! Training losses as pure scalar functions paired with their analytic
//! gradients with respect to the prediction inputs.

use alloc::vec;
use alloc::vec::Vec;

use crate::codec::{CorrectionFactors4, CorrectionFactors5};
use crate::fp;
use crate::refine::ProbabilityMap;

/// Loss computation error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LossError {
    #[error("proposal batch is empty")]
    EmptyBatch,
    #[error("label out of range for the score vector")]
    LabelOutOfRange,
    #[error("probability map and mask shapes differ")]
    ShapeMismatch,
    #[error("ground-truth class probability must be positive")]
    NonPositiveProbability,
    #[error("mask label out of range")]
    InvalidMaskLabel,
}

/// Orientation logits for one proposal; index 0 is the invalid class,
/// indices `1..=n_classes` the orientation bins.
#[derive(Clone, Debug, PartialEq)]
pub struct OrientationScores {
    pub logits: Vec<f64>,
}

impl OrientationScores {
    pub fn new(logits: Vec<f64>) -> Self {
        Self { logits }
    }

    /// Softmax probabilities; strictly positive, summing to 1.
    pub fn softmax(&self) -> Vec<f64> {
        softmax(&self.logits)
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| fp::exp(z - max)).collect();
    let sum: f64 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    out
}

/// Batch of proposals for the orientation loss; label 0 marks an invalid
/// proposal, labels `1..=n_classes` the ground-truth orientation bin.
#[derive(Clone, Debug, PartialEq)]
pub struct ProposalBatch {
    pub entries: Vec<(OrientationScores, u32)>,
}

impl ProposalBatch {
    pub fn new(entries: Vec<(OrientationScores, u32)>) -> Self {
        Self { entries }
    }
}

/// Weighting factors of the composite loss.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub lambda_grasp: f64,
    pub lambda_sem: f64,
    pub lambda_refine: f64,
}

impl LossWeights {
    /// Weights used for Jacquard-style training (1.0 / 0.8 / 0.8).
    pub fn jacquard() -> Self {
        Self {
            lambda_grasp: 1.0,
            lambda_sem: 0.8,
            lambda_refine: 0.8,
        }
    }
}

/// Dense per-pixel class labels, values in `1..=n_classes`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SegmentationMask {
    pub height: usize,
    pub width: usize,
    /// Row-major labels, length `height * width`.
    pub labels: Vec<u32>,
}

impl SegmentationMask {
    pub fn new(height: usize, width: usize, labels: Vec<u32>) -> Result<Self, LossError> {
        if labels.len() != height * width {
            return Err(LossError::ShapeMismatch);
        }
        if labels.iter().any(|&l| l == 0) {
            return Err(LossError::InvalidMaskLabel);
        }
        Ok(Self {
            height,
            width,
            labels,
        })
    }

    #[inline]
    pub fn label(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }
}

/// Smooth-L1 norm: `0.5 z^2` for `|z| < 1`, `|z| - 0.5` otherwise.
/// Returns `(value, d value / d z)`.
pub fn smooth_l1(z: f64) -> (f64, f64) {
    if fp::abs(z) < 1.0 {
        (0.5 * z * z, z)
    } else {
        (fp::abs(z) - 0.5, z.signum())
    }
}

/// Box regression loss: sum of smooth-L1 over the four correction factors.
/// Returns the value and the gradient with respect to `pred`.
pub fn box_loss(
    pred: &CorrectionFactors4,
    target: &CorrectionFactors4,
) -> (f64, CorrectionFactors4) {
    let mut value = 0.0;
    let mut grad = [0.0; 4];
    for (i, (p, t)) in pred.as_array().iter().zip(target.as_array()).enumerate() {
        let (v, d) = smooth_l1(p - t);
        value += v;
        grad[i] = d;
    }
    (value, CorrectionFactors4::from_array(grad))
}

/// Refinement loss: sum of smooth-L1 over the five correction factors.
pub fn refine_loss(
    pred: &CorrectionFactors5,
    target: &CorrectionFactors5,
) -> (f64, CorrectionFactors5) {
    let mut value = 0.0;
    let mut grad = [0.0; 5];
    for (i, (p, t)) in pred.as_array().iter().zip(target.as_array()).enumerate() {
        let (v, d) = smooth_l1(p - t);
        value += v;
        grad[i] = d;
    }
    (value, CorrectionFactors5::from_array(grad))
}

/// Orientation classification loss over a proposal batch: mean negative log
/// probability of the correct class (the labeled bin for valid proposals, the
/// invalid class for the rest), both sums normalized by the full batch size.
/// Returns the value and per-entry gradients with respect to the logits.
pub fn rot_loss(batch: &ProposalBatch) -> Result<(f64, Vec<Vec<f64>>), LossError> {
    if batch.entries.is_empty() {
        return Err(LossError::EmptyBatch);
    }
    let n = batch.entries.len() as f64;
    let mut value = 0.0;
    let mut grads = Vec::with_capacity(batch.entries.len());
    for (scores, label) in &batch.entries {
        let target = *label as usize;
        if target >= scores.logits.len() {
            return Err(LossError::LabelOutOfRange);
        }
        let probs = scores.softmax();
        value -= fp::ln(probs[target]) / n;
        let mut g = probs;
        g[target] -= 1.0;
        for gi in &mut g {
            *gi /= n;
        }
        grads.push(g);
    }
    Ok((value, grads))
}

/// Fraction of pixels kept by the hard-negative selection.
const HARD_NEGATIVE_FRACTION: f64 = 0.25;

/// Weighted per-pixel segmentation loss with pixel-wise hard negative mining:
/// the `floor(0.25 * W * H)` pixels with the lowest predicted ground-truth
/// probability are weighted `4 / (W * H)`, the rest 0. Ties at the selection
/// threshold are broken by ascending row-major pixel index.
///
/// The gradient is taken with respect to the per-pixel logits of which `prob`
/// is the softmax, so unselected pixels carry zero gradient. Returned as a
/// row-major `H*W` list of per-class vectors.
pub fn seg_loss(
    prob: &ProbabilityMap,
    gt: &SegmentationMask,
) -> Result<(f64, Vec<Vec<f64>>), LossError> {
    if prob.height() != gt.height || prob.width() != gt.width {
        return Err(LossError::ShapeMismatch);
    }
    let n_pixels = gt.height * gt.width;
    let n_classes = prob.n_classes();

    // Ground-truth probability per pixel.
    let mut gt_prob = Vec::with_capacity(n_pixels);
    for (idx, &label) in gt.labels.iter().enumerate() {
        if label as usize > n_classes {
            return Err(LossError::InvalidMaskLabel);
        }
        let (row, col) = (idx / gt.width, idx % gt.width);
        let p = prob.value(row, col, label as usize - 1);
        if p <= 0.0 {
            return Err(LossError::NonPositiveProbability);
        }
        gt_prob.push(p);
    }

    let k = fp::floor(HARD_NEGATIVE_FRACTION * n_pixels as f64) as usize;
    let mut order: Vec<usize> = (0..n_pixels).collect();
    order.sort_by(|&a, &b| {
        gt_prob[a]
            .partial_cmp(&gt_prob[b])
            .unwrap()
            .then(a.cmp(&b))
    });

    let weight = 4.0 / n_pixels as f64;
    let mut value = 0.0;
    let mut grads = vec![vec![0.0; n_classes]; n_pixels];
    for &idx in order.iter().take(k) {
        value -= weight * fp::ln(gt_prob[idx]);
        let (row, col) = (idx / gt.width, idx % gt.width);
        let label = gt.labels[idx] as usize - 1;
        // d(-w log softmax(z)[y]) / d z_s = w * (p_s - [s == y])
        for s in 0..n_classes {
            let p = prob.value(row, col, s);
            grads[idx][s] = weight * (p - if s == label { 1.0 } else { 0.0 });
        }
    }
    Ok((value, grads))
}

/// Indices of the pixels selected by the hard-negative rule, in selection
/// order. Exposed for tie-break inspection in tests.
pub fn seg_loss_selection(
    prob: &ProbabilityMap,
    gt: &SegmentationMask,
) -> Result<Vec<usize>, LossError> {
    if prob.height() != gt.height || prob.width() != gt.width {
        return Err(LossError::ShapeMismatch);
    }
    let n_pixels = gt.height * gt.width;
    let mut gt_prob = Vec::with_capacity(n_pixels);
    for (idx, &label) in gt.labels.iter().enumerate() {
        let (row, col) = (idx / gt.width, idx % gt.width);
        gt_prob.push(prob.value(row, col, label as usize - 1));
    }
    let k = fp::floor(HARD_NEGATIVE_FRACTION * n_pixels as f64) as usize;
    let mut order: Vec<usize> = (0..n_pixels).collect();
    order.sort_by(|&a, &b| {
        gt_prob[a]
            .partial_cmp(&gt_prob[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    order.truncate(k);
    Ok(order)
}

/// Grasp detection loss: RPN term (supplied externally, 0 when absent) plus
/// box and orientation terms.
pub fn grasp_loss(l_rpn: f64, l_box: f64, l_rot: f64) -> f64 {
    l_rpn + l_box + l_rot
}

/// Composite training loss: weighted sum of the grasp, segmentation and
/// refinement losses.
pub fn composite_loss(grasp: f64, sem: f64, refine: f64, w: &LossWeights) -> f64 {
    w.lambda_grasp * grasp + w.lambda_sem * sem + w.lambda_refine * refine
}
