//! Grasp refinement head: bilinear cropping of segmentation probability maps,
//! a two-layer MLP with Leaky-ReLU producing five correction factors per
//! candidate, manual backpropagation, and an SGD trainer on synthetic scenes.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::codec::{self, CorrectionFactors5, GraspCandidate};
use crate::fp;
use crate::geometry::OrientedRect;
use crate::losses::{self, SegmentationMask};

/// Refinement error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RefineError {
    #[error("probability map values must form per-pixel distributions")]
    InvalidProbabilities,
    #[error("output dimensions must be at least 1")]
    InvalidCropDims,
    #[error("channel index out of range")]
    ChannelOutOfRange,
    #[error("region center outside the map bounds")]
    RegionOutOfBounds,
    #[error("candidate list is empty")]
    EmptyCandidates,
    #[error("input width does not match the network input layer")]
    DimensionMismatch,
    #[error("forward cache does not match the parameters or gradient batch")]
    StaleCache,
    #[error("scene list is empty")]
    EmptyScenes,
    #[error("training diverged (loss exceeded 1e6)")]
    Diverged,
}

/// Per-pixel class probability grid (`H x W x S`, row-major, class-minor).
/// Channel `s` corresponds to mask label `s + 1`; for the default
/// {graspable, non-graspable} class set, channel 0 is the graspable class.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityMap {
    height: usize,
    width: usize,
    n_classes: usize,
    values: Vec<f64>,
}

impl ProbabilityMap {
    /// Per-pixel distribution tolerance.
    const SUM_TOL: f64 = 1e-6;

    pub fn new(
        height: usize,
        width: usize,
        n_classes: usize,
        values: Vec<f64>,
    ) -> Result<Self, RefineError> {
        if height == 0 || width == 0 || n_classes == 0 {
            return Err(RefineError::InvalidProbabilities);
        }
        if values.len() != height * width * n_classes {
            return Err(RefineError::InvalidProbabilities);
        }
        for pixel in values.chunks(n_classes) {
            let mut sum = 0.0;
            for &p in pixel {
                if !(0.0..=1.0).contains(&p) {
                    return Err(RefineError::InvalidProbabilities);
                }
                sum += p;
            }
            if fp::abs(sum - 1.0) > Self::SUM_TOL {
                return Err(RefineError::InvalidProbabilities);
            }
        }
        Ok(Self {
            height,
            width,
            n_classes,
            values,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize, class: usize) -> f64 {
        self.values[(row * self.width + col) * self.n_classes + class]
    }

    /// Bilinear sample of one channel at continuous image coordinates; pixel
    /// `(row, col)` is centered at `(col + 0.5, row + 0.5)`. Out-of-bounds
    /// samples clamp to the border.
    pub fn sample(&self, x: f64, y: f64, class: usize) -> f64 {
        let u = x - 0.5;
        let v = y - 0.5;
        let x0 = fp::floor(u);
        let y0 = fp::floor(v);
        let fx = u - x0;
        let fy = v - y0;
        let clamp_col = |c: f64| (c.max(0.0) as usize).min(self.width - 1);
        let clamp_row = |r: f64| (r.max(0.0) as usize).min(self.height - 1);
        let c0 = clamp_col(x0);
        let c1 = clamp_col(x0 + 1.0);
        let r0 = clamp_row(y0);
        let r1 = clamp_row(y0 + 1.0);
        let p00 = self.value(r0, c0, class);
        let p01 = self.value(r0, c1, class);
        let p10 = self.value(r1, c0, class);
        let p11 = self.value(r1, c1, class);
        let top = p00 + fx * (p01 - p00);
        let bottom = p10 + fx * (p11 - p10);
        top + fy * (bottom - top)
    }
}

/// How the crop lattice follows the candidate rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CropMode {
    /// Lattice rotated with the rectangle (default).
    Rotated,
    /// Lattice over the rectangle's axis-aligned bounding box.
    AxisAligned,
}

/// Stacked MLP input: per candidate, channel 0 is the crop around the
/// candidate and channel 1 the full map resampled to the crop resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct RefineInput {
    pub n: usize,
    pub crop_h: usize,
    pub crop_w: usize,
    /// Row-major `n x 2 x crop_h x crop_w` values.
    pub stacked: Vec<f64>,
}

impl RefineInput {
    /// Flattened feature width per candidate.
    pub fn row_len(&self) -> usize {
        2 * self.crop_h * self.crop_w
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let len = self.row_len();
        &self.stacked[i * len..(i + 1) * len]
    }
}

/// Resamples one channel of the map over a regular `out_h x out_w` lattice
/// spanning the oriented region. Sample `(i, j)` sits at the center of lattice
/// cell `(i, j)`; out-of-bounds samples clamp to border values.
pub fn bilinear_crop(
    map: &ProbabilityMap,
    region: &OrientedRect,
    out_h: usize,
    out_w: usize,
    channel: usize,
) -> Result<Vec<f64>, RefineError> {
    if out_h == 0 || out_w == 0 {
        return Err(RefineError::InvalidCropDims);
    }
    if channel >= map.n_classes {
        return Err(RefineError::ChannelOutOfRange);
    }
    if region.cx < 0.0
        || region.cy < 0.0
        || region.cx > map.width as f64
        || region.cy > map.height as f64
    {
        return Err(RefineError::RegionOutOfBounds);
    }
    let (s, c) = (fp::sin(region.theta), fp::cos(region.theta));
    let mut out = Vec::with_capacity(out_h * out_w);
    for i in 0..out_h {
        let v = ((i as f64 + 0.5) / out_h as f64 - 0.5) * region.h;
        for j in 0..out_w {
            let u = ((j as f64 + 0.5) / out_w as f64 - 0.5) * region.w;
            let x = region.cx + u * c - v * s;
            let y = region.cy + u * s + v * c;
            out.push(map.sample(x, y, channel));
        }
    }
    Ok(out)
}

/// Full-map axis-aligned region used for the context channel.
fn full_map_region(map: &ProbabilityMap) -> OrientedRect {
    OrientedRect {
        cx: map.width as f64 / 2.0,
        cy: map.height as f64 / 2.0,
        w: map.width as f64,
        h: map.height as f64,
        theta: 0.0,
    }
}

/// Builds the stacked MLP input for a batch of candidates: channel 0 crops the
/// given class channel over each candidate's rectangle, channel 1 is the full
/// map resampled to the crop resolution.
pub fn build_refine_input(
    map: &ProbabilityMap,
    candidates: &[GraspCandidate],
    crop_h: usize,
    crop_w: usize,
    channel: usize,
    mode: CropMode,
) -> Result<RefineInput, RefineError> {
    if candidates.is_empty() {
        return Err(RefineError::EmptyCandidates);
    }
    let context = bilinear_crop(map, &full_map_region(map), crop_h, crop_w, channel)?;
    let mut stacked = Vec::with_capacity(candidates.len() * 2 * crop_h * crop_w);
    for g in candidates {
        let rect = crop_region(g, mode);
        let crop = bilinear_crop(map, &rect, crop_h, crop_w, channel)?;
        stacked.extend_from_slice(&crop);
        stacked.extend_from_slice(&context);
    }
    Ok(RefineInput {
        n: candidates.len(),
        crop_h,
        crop_w,
        stacked,
    })
}

fn crop_region(g: &GraspCandidate, mode: CropMode) -> OrientedRect {
    let rect = codec::grasp_to_rect(g);
    match mode {
        CropMode::Rotated => rect,
        CropMode::AxisAligned => {
            let (x0, y0, x1, y1) = crate::geometry::rect_aabb(&rect);
            OrientedRect {
                cx: 0.5 * (x0 + x1),
                cy: 0.5 * (y0 + y1),
                w: x1 - x0,
                h: y1 - y0,
                theta: 0.0,
            }
        }
    }
}

/// Two-layer fully connected network with Leaky-ReLU (slope 0.01) after the
/// hidden layer and five linear outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub d_in: usize,
    pub d_hidden: usize,
    /// `d_hidden x d_in`, row per hidden unit.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `5 x d_hidden`, row per output unit.
    pub w2: Vec<f64>,
    pub b2: [f64; 5],
    pub leaky_slope: f64,
}

pub const N_OUTPUTS: usize = 5;

impl MlpParams {
    /// Leaky-ReLU slope.
    pub const DEFAULT_SLOPE: f64 = 0.01;

    /// All-zero parameters; forward output is identically zero, so decoding
    /// returns each candidate unchanged.
    pub fn zeros(d_in: usize, d_hidden: usize) -> Self {
        Self {
            d_in,
            d_hidden,
            w1: vec![0.0; d_hidden * d_in],
            b1: vec![0.0; d_hidden],
            w2: vec![0.0; N_OUTPUTS * d_hidden],
            b2: [0.0; N_OUTPUTS],
            leaky_slope: Self::DEFAULT_SLOPE,
        }
    }

    /// Seeded uniform init in `+-1/sqrt(fan_in)` per layer.
    pub fn init(d_in: usize, d_hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Self::zeros(d_in, d_hidden);
        let bound1 = 1.0 / fp::sqrt(d_in as f64);
        for w in &mut params.w1 {
            *w = uniform(&mut rng, -bound1, bound1);
        }
        for b in &mut params.b1 {
            *b = uniform(&mut rng, -bound1, bound1);
        }
        let bound2 = 1.0 / fp::sqrt(d_hidden as f64);
        for w in &mut params.w2 {
            *w = uniform(&mut rng, -bound2, bound2);
        }
        for b in &mut params.b2 {
            *b = uniform(&mut rng, -bound2, bound2);
        }
        params
    }

    pub fn n_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }
}

/// Uniform sample in `[lo, hi)` from 53 random mantissa bits.
fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let unit = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    lo + unit * (hi - lo)
}

/// Activations cached by the forward pass for backpropagation.
#[derive(Clone, Debug)]
pub struct MlpCache {
    n: usize,
    d_in: usize,
    d_hidden: usize,
    inputs: Vec<f64>,
    pre1: Vec<f64>,
    hidden: Vec<f64>,
}

/// Forward pass over a batch: `linear -> leaky-ReLU -> linear`.
/// Returns one 5-vector of correction factors per candidate plus the cache.
pub fn mlp_forward(
    params: &MlpParams,
    input: &RefineInput,
) -> Result<(Vec<CorrectionFactors5>, MlpCache), RefineError> {
    if input.row_len() != params.d_in {
        return Err(RefineError::DimensionMismatch);
    }
    let n = input.n;
    let mut pre1 = vec![0.0; n * params.d_hidden];
    let mut hidden = vec![0.0; n * params.d_hidden];
    let mut outputs = Vec::with_capacity(n);
    for i in 0..n {
        let row = input.row(i);
        for h in 0..params.d_hidden {
            let mut acc = params.b1[h];
            let wrow = &params.w1[h * params.d_in..(h + 1) * params.d_in];
            for (w, x) in wrow.iter().zip(row) {
                acc += w * x;
            }
            pre1[i * params.d_hidden + h] = acc;
            hidden[i * params.d_hidden + h] = if acc >= 0.0 {
                acc
            } else {
                params.leaky_slope * acc
            };
        }
        let hrow = &hidden[i * params.d_hidden..(i + 1) * params.d_hidden];
        let mut out = [0.0; N_OUTPUTS];
        for (o, out_o) in out.iter_mut().enumerate() {
            let mut acc = params.b2[o];
            let wrow = &params.w2[o * params.d_hidden..(o + 1) * params.d_hidden];
            for (w, hval) in wrow.iter().zip(hrow) {
                acc += w * hval;
            }
            *out_o = acc;
        }
        outputs.push(CorrectionFactors5::from_array(out));
    }
    Ok((
        outputs,
        MlpCache {
            n,
            d_in: params.d_in,
            d_hidden: params.d_hidden,
            inputs: input.stacked.clone(),
            pre1,
            hidden,
        },
    ))
}

/// Parameter gradients, same layout as [`MlpParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: [f64; 5],
}

/// Reverse-mode gradients of all weights and biases given the gradient of the
/// loss with respect to the network outputs.
pub fn mlp_backward(
    params: &MlpParams,
    cache: &MlpCache,
    output_grads: &[[f64; N_OUTPUTS]],
) -> Result<MlpGrads, RefineError> {
    if cache.d_in != params.d_in
        || cache.d_hidden != params.d_hidden
        || output_grads.len() != cache.n
    {
        return Err(RefineError::StaleCache);
    }
    let d_in = params.d_in;
    let d_hidden = params.d_hidden;
    let mut grads = MlpGrads {
        w1: vec![0.0; d_hidden * d_in],
        b1: vec![0.0; d_hidden],
        w2: vec![0.0; N_OUTPUTS * d_hidden],
        b2: [0.0; N_OUTPUTS],
    };
    let mut dhidden = vec![0.0; d_hidden];
    for i in 0..cache.n {
        let dout = &output_grads[i];
        let hrow = &cache.hidden[i * d_hidden..(i + 1) * d_hidden];
        let prow = &cache.pre1[i * d_hidden..(i + 1) * d_hidden];
        let xrow = &cache.inputs[i * d_in..(i + 1) * d_in];
        for h in &mut dhidden {
            *h = 0.0;
        }
        for o in 0..N_OUTPUTS {
            grads.b2[o] += dout[o];
            let wrow = &params.w2[o * d_hidden..(o + 1) * d_hidden];
            let grow = &mut grads.w2[o * d_hidden..(o + 1) * d_hidden];
            for h in 0..d_hidden {
                grow[h] += dout[o] * hrow[h];
                dhidden[h] += dout[o] * wrow[h];
            }
        }
        for h in 0..d_hidden {
            let slope = if prow[h] >= 0.0 {
                1.0
            } else {
                params.leaky_slope
            };
            let dpre = dhidden[h] * slope;
            grads.b1[h] += dpre;
            let grow = &mut grads.w1[h * d_in..(h + 1) * d_in];
            for (g, x) in grow.iter_mut().zip(xrow) {
                *g += dpre * x;
            }
        }
    }
    Ok(grads)
}

/// Desk-scale synthetic scene: a probability map with soft graspable blobs,
/// ground-truth grasps on the blob axes and noisy candidates paired by index.
#[derive(Clone, Debug)]
pub struct SyntheticScene {
    pub map: ProbabilityMap,
    pub mask: SegmentationMask,
    pub gts: Vec<GraspCandidate>,
    pub candidates: Vec<GraspCandidate>,
}

/// Uniform perturbation magnitudes applied to ground-truth grasps when
/// generating candidates. Center shifts are in pixels, size scales are
/// log-space half-ranges. The orientation perturbation is one-sided: the
/// candidate is rotated by `-U(0, theta)` so refinement targets stay in a
/// contiguous band away from the mod-pi wrap of the encoding.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseConfig {
    pub xy: f64,
    pub wh: f64,
    pub theta: f64,
}

impl NoiseConfig {
    pub fn zero() -> Self {
        Self {
            xy: 0.0,
            wh: 0.0,
            theta: 0.0,
        }
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            xy: 2.0,
            wh: 0.12,
            theta: 0.35,
        }
    }
}

/// Map side length used for generated scenes.
pub const SCENE_SIZE: usize = 48;
/// Mask label of the graspable class in generated scenes.
pub const GRASPABLE_LABEL: u32 = 1;
/// Probability-map channel of the graspable class.
pub const GRASPABLE_CHANNEL: usize = 0;

/// Generates `count` deterministic scenes for a seed. Each scene holds 1-3
/// soft rectangular blobs with one grasp per blob.
pub fn generate_synthetic_scenes(count: usize, seed: u64, noise: &NoiseConfig) -> Vec<SyntheticScene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scenes = Vec::with_capacity(count);
    for _ in 0..count {
        scenes.push(generate_scene(&mut rng, noise));
    }
    scenes
}

struct Blob {
    cx: f64,
    cy: f64,
    half_w: f64,
    half_h: f64,
    theta: f64,
}

fn generate_scene(rng: &mut ChaCha8Rng, noise: &NoiseConfig) -> SyntheticScene {
    let size = SCENE_SIZE;
    let n_blobs = 1 + (rng.next_u64() % 3) as usize;
    let mut blobs: Vec<Blob> = Vec::new();
    while blobs.len() < n_blobs {
        let blob = Blob {
            cx: uniform(rng, 13.0, size as f64 - 13.0),
            cy: uniform(rng, 13.0, size as f64 - 13.0),
            half_w: uniform(rng, 5.0, 9.0),
            half_h: uniform(rng, 2.5, 4.5),
            theta: uniform(rng, 0.0, core::f64::consts::PI),
        };
        // Keep blob centers apart so each crop sees one object.
        let ok = blobs
            .iter()
            .all(|b| fp::hypot(b.cx - blob.cx, b.cy - blob.cy) > 18.0);
        if ok || blobs.is_empty() {
            blobs.push(blob);
        } else {
            // Rejection may stall on crowded layouts; settle for fewer blobs.
            break;
        }
    }

    const SOFT: f64 = 2.0;
    const P_LO: f64 = 0.02;
    const P_HI: f64 = 0.98;
    let mut values = Vec::with_capacity(size * size * 2);
    let mut labels = Vec::with_capacity(size * size);
    for row in 0..size {
        for col in 0..size {
            let x = col as f64 + 0.5;
            let y = row as f64 + 0.5;
            let mut support: f64 = 0.0;
            for b in &blobs {
                let (s, c) = (fp::sin(b.theta), fp::cos(b.theta));
                let dx = x - b.cx;
                let dy = y - b.cy;
                let u = dx * c + dy * s;
                let v = dy * c - dx * s;
                let du = (fp::abs(u) - b.half_w).max(0.0);
                let dv = (fp::abs(v) - b.half_h).max(0.0);
                let fall = (1.0 - fp::hypot(du, dv) / SOFT).max(0.0);
                support = support.max(fall);
            }
            let p = P_LO + (P_HI - P_LO) * support;
            values.push(p);
            values.push(1.0 - p);
            labels.push(if p >= 0.5 { GRASPABLE_LABEL } else { 2 });
        }
    }
    let map = ProbabilityMap::new(size, size, 2, values).unwrap();
    let mask = SegmentationMask::new(size, size, labels).unwrap();

    let mut gts = Vec::with_capacity(blobs.len());
    let mut candidates = Vec::with_capacity(blobs.len());
    for b in &blobs {
        let gt = GraspCandidate::new(b.cx, b.cy, 2.0 * b.half_w, 2.0 * b.half_h, b.theta).unwrap();
        let cand = GraspCandidate::new(
            gt.x + uniform(rng, -noise.xy, noise.xy),
            gt.y + uniform(rng, -noise.xy, noise.xy),
            gt.w * fp::exp(uniform(rng, -noise.wh, noise.wh)),
            gt.h * fp::exp(uniform(rng, -noise.wh, noise.wh)),
            gt.theta - uniform(rng, 0.0, noise.theta),
        )
        .unwrap();
        debug_assert_eq!(
            mask.label(gt.y as usize, gt.x as usize),
            GRASPABLE_LABEL,
            "grasp center must lie on a graspable pixel"
        );
        gts.push(gt);
        candidates.push(cand);
    }
    SyntheticScene {
        map,
        mask,
        gts,
        candidates,
    }
}

/// Trainer hyperparameters. Training is plain full-batch SGD with Nesterov
/// momentum, single-threaded and bitwise deterministic for a given seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub nesterov: bool,
    pub epochs: usize,
    pub seed: u64,
    pub d_hidden: usize,
    pub crop_h: usize,
    pub crop_w: usize,
    pub crop_mode: CropMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            momentum: 0.9,
            nesterov: true,
            epochs: 500,
            seed: 0,
            d_hidden: 64,
            crop_h: 14,
            crop_w: 14,
            crop_mode: CropMode::Rotated,
        }
    }
}

/// Result of a training run: final parameters and the per-epoch mean loss.
#[derive(Clone, Debug)]
pub struct TrainRecord {
    pub params: MlpParams,
    /// `curve[e]` is the mean refinement loss over the batch at epoch `e + 1`.
    pub curve: Vec<f64>,
}

const DIVERGENCE_LIMIT: f64 = 1e6;

/// Trains the refinement head on the candidates of the given scenes against
/// targets encoded from their paired ground-truth grasps.
pub fn train_refine_head(
    scenes: &[SyntheticScene],
    config: &TrainConfig,
) -> Result<TrainRecord, RefineError> {
    if scenes.is_empty() {
        return Err(RefineError::EmptyScenes);
    }
    let d_in = 2 * config.crop_h * config.crop_w;

    // Inputs and targets are fixed; precompute once.
    let mut rows: Vec<f64> = Vec::new();
    let mut targets: Vec<CorrectionFactors5> = Vec::new();
    for scene in scenes {
        if scene.candidates.is_empty() {
            continue;
        }
        let input = build_refine_input(
            &scene.map,
            &scene.candidates,
            config.crop_h,
            config.crop_w,
            GRASPABLE_CHANNEL,
            config.crop_mode,
        )?;
        rows.extend_from_slice(&input.stacked);
        for (cand, gt) in scene.candidates.iter().zip(&scene.gts) {
            targets.push(codec::encode_refine_targets(cand, gt));
        }
    }
    if targets.is_empty() {
        return Err(RefineError::EmptyScenes);
    }
    let batch = RefineInput {
        n: targets.len(),
        crop_h: config.crop_h,
        crop_w: config.crop_w,
        stacked: rows,
    };

    let mut params = MlpParams::init(d_in, config.d_hidden, config.seed);
    let mut vel = MlpGrads {
        w1: vec![0.0; params.w1.len()],
        b1: vec![0.0; params.b1.len()],
        w2: vec![0.0; params.w2.len()],
        b2: [0.0; N_OUTPUTS],
    };
    let n = targets.len() as f64;
    let mut curve = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let (outputs, cache) = mlp_forward(&params, &batch)?;
        let mut loss = 0.0;
        let mut dout = Vec::with_capacity(outputs.len());
        for (out, target) in outputs.iter().zip(&targets) {
            let (value, grad) = losses::refine_loss(out, target);
            loss += value / n;
            let g = grad.as_array();
            dout.push([g[0] / n, g[1] / n, g[2] / n, g[3] / n, g[4] / n]);
        }
        if !loss.is_finite() || loss > DIVERGENCE_LIMIT {
            return Err(RefineError::Diverged);
        }
        curve.push(loss);
        let grads = mlp_backward(&params, &cache, &dout)?;
        sgd_step(&mut params, &mut vel, &grads, config);
    }
    Ok(TrainRecord { params, curve })
}

fn sgd_step(params: &mut MlpParams, vel: &mut MlpGrads, grads: &MlpGrads, config: &TrainConfig) {
    let mu = config.momentum;
    let lr = config.learning_rate;
    let nesterov = config.nesterov;
    let step = |p: &mut f64, v: &mut f64, g: f64| {
        *v = mu * *v + g;
        let d = if nesterov { g + mu * *v } else { *v };
        *p -= lr * d;
    };
    for ((p, v), &g) in params.w1.iter_mut().zip(&mut vel.w1).zip(&grads.w1) {
        step(p, v, g);
    }
    for ((p, v), &g) in params.b1.iter_mut().zip(&mut vel.b1).zip(&grads.b1) {
        step(p, v, g);
    }
    for ((p, v), &g) in params.w2.iter_mut().zip(&mut vel.w2).zip(&grads.w2) {
        step(p, v, g);
    }
    for ((p, v), &g) in params.b2.iter_mut().zip(&mut vel.b2).zip(&grads.b2) {
        step(p, v, g);
    }
}

/// Applies the refinement head to candidates: forward pass, then decode the
/// predicted correction factors into refined grasps.
pub fn refine_candidates(
    params: &MlpParams,
    map: &ProbabilityMap,
    candidates: &[GraspCandidate],
    crop_h: usize,
    crop_w: usize,
    mode: CropMode,
) -> Result<Vec<GraspCandidate>, RefineError> {
    let input = build_refine_input(map, candidates, crop_h, crop_w, GRASPABLE_CHANNEL, mode)?;
    let (outputs, _) = mlp_forward(params, &input)?;
    let mut refined = Vec::with_capacity(candidates.len());
    for (g, t) in candidates.iter().zip(&outputs) {
        // Decoding only fails on non-finite factors, which Diverged rules out.
        refined.push(
            codec::decode_refine_targets(g, t).map_err(|_| RefineError::Diverged)?,
        );
    }
    Ok(refined)
}
