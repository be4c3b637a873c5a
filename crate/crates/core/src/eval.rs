//! Jaccard-index grasp evaluation: per-image accuracy, the per-class variant
//! with the center-on-mask constraint, segmentation IoU and threshold sweeps.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::codec::{self, GraspCandidate};
use crate::geometry::{aabb_iou, angle_distance, rotated_iou};
use crate::losses::SegmentationMask;

/// Evaluation error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("ground-truth grasp list is empty")]
    EmptyGroundTruth,
    #[error("segmentation masks have different shapes")]
    ShapeMismatch,
    #[error("candidate class id missing or unknown")]
    UnknownClass,
    #[error("threshold list is empty")]
    EmptyThresholds,
}

/// Acceptance thresholds of the grasp metric. A prediction counts as correct
/// against a ground-truth grasp when the angle distance is at most
/// `angle_threshold` and the IoU is strictly greater than `iou_threshold`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricConfig {
    pub iou_threshold: f64,
    pub angle_threshold: f64,
    /// Rotated-rectangle IoU when true, axis-aligned bounding boxes otherwise.
    pub rotated_iou: bool,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.25,
            angle_threshold: core::f64::consts::PI / 6.0,
            rotated_iou: true,
        }
    }
}

fn iou(pred: &GraspCandidate, gt: &GraspCandidate, cfg: &MetricConfig) -> f64 {
    let a = codec::grasp_to_rect(pred);
    let b = codec::grasp_to_rect(gt);
    if cfg.rotated_iou {
        rotated_iou(&a, &b)
    } else {
        aabb_iou(&a, &b)
    }
}

/// True iff some ground-truth grasp accepts the prediction under the metric.
pub fn grasp_correct(
    pred: &GraspCandidate,
    gts: &[GraspCandidate],
    cfg: &MetricConfig,
) -> Result<bool, EvalError> {
    if gts.is_empty() {
        return Err(EvalError::EmptyGroundTruth);
    }
    Ok(gts.iter().any(|gt| {
        angle_distance(pred.theta, gt.theta) <= cfg.angle_threshold
            && iou(pred, gt, cfg) > cfg.iou_threshold
    }))
}

/// Selects the highest-score candidate; ties and missing scores fall back to
/// list order.
pub fn select_best(candidates: &[GraspCandidate]) -> Option<&GraspCandidate> {
    let mut best: Option<&GraspCandidate> = None;
    for c in candidates {
        match best {
            None => best = Some(c),
            Some(b) => {
                if c.score.unwrap_or(0.0) > b.score.unwrap_or(0.0) {
                    best = Some(c);
                }
            }
        }
    }
    best
}

/// One evaluated image: the selected top prediction and its ground truths.
pub type ImageItem = (GraspCandidate, Vec<GraspCandidate>);

/// Fraction of images whose selected grasp is correct.
pub fn image_accuracy(items: &[ImageItem], cfg: &MetricConfig) -> Result<f64, EvalError> {
    if items.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for (pred, gts) in items {
        if grasp_correct(pred, gts, cfg)? {
            correct += 1;
        }
    }
    Ok(correct as f64 / items.len() as f64)
}

/// Per-image correctness flags, in item order.
pub fn per_image_correct(items: &[ImageItem], cfg: &MetricConfig) -> Result<Vec<bool>, EvalError> {
    items
        .iter()
        .map(|(pred, gts)| grasp_correct(pred, gts, cfg))
        .collect()
}

/// Class-level metric for a single scene: per class, the highest-score
/// candidate whose rounded center pixel carries that class in the predicted
/// segmentation is checked against that class's ground truths. Classes with
/// no qualifying candidate count as incorrect.
pub fn per_class_accuracy(
    preds: &[GraspCandidate],
    gts: &BTreeMap<u32, Vec<GraspCandidate>>,
    seg_pred: &SegmentationMask,
    cfg: &MetricConfig,
) -> Result<BTreeMap<u32, bool>, EvalError> {
    for p in preds {
        match p.class_id {
            Some(c) if gts.contains_key(&c) => {}
            _ => return Err(EvalError::UnknownClass),
        }
    }
    let mut out = BTreeMap::new();
    for (&class, class_gts) in gts {
        if class_gts.is_empty() {
            return Err(EvalError::EmptyGroundTruth);
        }
        let qualifying = preds
            .iter()
            .filter(|p| p.class_id == Some(class))
            .filter(|p| center_on_class(p, seg_pred, class));
        let mut best: Option<&GraspCandidate> = None;
        for c in qualifying {
            match best {
                None => best = Some(c),
                Some(b) => {
                    if c.score.unwrap_or(0.0) > b.score.unwrap_or(0.0) {
                        best = Some(c);
                    }
                }
            }
        }
        let correct = match best {
            Some(p) => grasp_correct(p, class_gts, cfg)?,
            None => false,
        };
        out.insert(class, correct);
    }
    Ok(out)
}

/// Nearest-integer center pixel test; out-of-image centers disqualify.
fn center_on_class(p: &GraspCandidate, mask: &SegmentationMask, class: u32) -> bool {
    let col = crate::fp::round(p.x - 0.5);
    let row = crate::fp::round(p.y - 0.5);
    if col < 0.0 || row < 0.0 || col >= mask.width as f64 || row >= mask.height as f64 {
        return false;
    }
    mask.label(row as usize, col as usize) == class
}

/// Per-class and mean segmentation IoU.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SegIouReport {
    /// IoU per class label, over the labels present in either mask.
    pub per_class: BTreeMap<u32, f64>,
    /// Mean over the present classes (absent classes are excluded, not 0).
    pub mean: f64,
}

/// IoU between predicted and ground-truth segmentation, per class and mean.
pub fn segmentation_iou(
    pred: &SegmentationMask,
    gt: &SegmentationMask,
) -> Result<SegIouReport, EvalError> {
    if pred.height != gt.height || pred.width != gt.width {
        return Err(EvalError::ShapeMismatch);
    }
    let mut inter: BTreeMap<u32, usize> = BTreeMap::new();
    let mut union: BTreeMap<u32, usize> = BTreeMap::new();
    for (&p, &g) in pred.labels.iter().zip(&gt.labels) {
        if p == g {
            *inter.entry(p).or_default() += 1;
            *union.entry(p).or_default() += 1;
        } else {
            *union.entry(p).or_default() += 1;
            *union.entry(g).or_default() += 1;
        }
    }
    let mut per_class = BTreeMap::new();
    let mut total = 0.0;
    for (&class, &u) in &union {
        let i = inter.get(&class).copied().unwrap_or(0);
        let iou = i as f64 / u as f64;
        per_class.insert(class, iou);
        total += iou;
    }
    let mean = if per_class.is_empty() {
        0.0
    } else {
        total / per_class.len() as f64
    };
    Ok(SegIouReport { per_class, mean })
}

/// Accuracy grid over IoU and angle threshold lists; rows follow the angle
/// list, columns the IoU list.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepGrid {
    pub iou_thresholds: Vec<f64>,
    pub angle_thresholds: Vec<f64>,
    /// `accuracy[row][col]` for angle row, IoU column.
    pub accuracy: Vec<Vec<f64>>,
}

impl SweepGrid {
    /// Accuracy never increases when either threshold tightens (larger IoU
    /// threshold, smaller angle threshold).
    pub fn is_monotone(&self) -> bool {
        let sorted_desc = |v: &[f64]| v.windows(2).all(|w| w[0] >= w[1]);
        // Compare along axes in threshold order regardless of list order.
        let mut iou_order: Vec<usize> = (0..self.iou_thresholds.len()).collect();
        iou_order.sort_by(|&a, &b| {
            self.iou_thresholds[a]
                .partial_cmp(&self.iou_thresholds[b])
                .unwrap()
        });
        let mut angle_order: Vec<usize> = (0..self.angle_thresholds.len()).collect();
        angle_order.sort_by(|&a, &b| {
            self.angle_thresholds[b]
                .partial_cmp(&self.angle_thresholds[a])
                .unwrap()
        });
        for row in &angle_order {
            let line: Vec<f64> = iou_order.iter().map(|&c| self.accuracy[*row][c]).collect();
            if !sorted_desc(&line) {
                return false;
            }
        }
        for col in &iou_order {
            let line: Vec<f64> = angle_order
                .iter()
                .map(|&r| self.accuracy[r][*col])
                .collect();
            if !sorted_desc(&line) {
                return false;
            }
        }
        true
    }
}

/// Evaluates the metric for every (IoU, angle) threshold pair.
pub fn threshold_sweep(
    items: &[ImageItem],
    iou_list: &[f64],
    angle_list: &[f64],
    rotated: bool,
) -> Result<SweepGrid, EvalError> {
    if iou_list.is_empty() || angle_list.is_empty() {
        return Err(EvalError::EmptyThresholds);
    }
    let mut accuracy = Vec::with_capacity(angle_list.len());
    for &angle in angle_list {
        let mut row = Vec::with_capacity(iou_list.len());
        for &iou in iou_list {
            let cfg = MetricConfig {
                iou_threshold: iou,
                angle_threshold: angle,
                rotated_iou: rotated,
            };
            row.push(image_accuracy(items, &cfg)?);
        }
        accuracy.push(row);
    }
    Ok(SweepGrid {
        iou_thresholds: iou_list.into(),
        angle_thresholds: angle_list.into(),
        accuracy,
    })
}

/// Aggregate evaluation report.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    /// Correctness per image, in input order.
    pub per_image: Vec<bool>,
    /// Fraction of correct images.
    pub accuracy: f64,
    pub seg_iou: Option<SegIouReport>,
    pub sweep: Option<SweepGrid>,
}
