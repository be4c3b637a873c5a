//! Command-line harness: evaluation, threshold sweeps, refinement training
//! and application, dataset conversion and a rotated-IoU debug helper.
//!
//! Exit codes: 0 success, 1 internal failure, 2 input or validation error.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use graspkit_core::codec::GraspCandidate;
use graspkit_core::eval::{
    grasp_correct, select_best, threshold_sweep, EvalReport, ImageItem, MetricConfig,
};
use graspkit_core::refine::{
    generate_synthetic_scenes, refine_candidates, train_refine_head, CropMode, NoiseConfig,
    TrainConfig,
};
use rayon::prelude::*;

use graspkit::canonical::{read_canonical, write_canonical, AnnotatedImage};
use graspkit::datasets::{parse_cornell, parse_jacquard, parse_ocid_grasp, ParseOutcome};
use graspkit::params::{read_params, write_params};
use graspkit::report::{curve_csv, report_json, sweep_csv};

#[derive(Parser)]
#[command(name = "graspkit", version, about = "Grasp detection toolkit")]
struct Cli {
    /// Worker threads for per-image evaluation work.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate predictions against ground truth and write reports.
    Eval(EvalArgs),
    /// Accuracy grid over IoU and angle threshold lists.
    Sweep(SweepArgs),
    /// Train or apply the grasp refinement head.
    #[command(subcommand)]
    Refine(RefineCommand),
    /// Convert a dataset into the canonical annotation format.
    Convert(ConvertArgs),
    /// Print the rotated IoU of two grasps given inline coordinates.
    Iou(IouArgs),
}

#[derive(Args)]
struct MetricArgs {
    /// Jaccard threshold; a grasp is correct when IoU is strictly above it.
    #[arg(long, default_value_t = 0.25)]
    iou_threshold: f64,
    /// Orientation threshold in degrees.
    #[arg(long, default_value_t = 30.0)]
    angle_threshold_deg: f64,
    /// Compare axis-aligned bounding boxes instead of rotated rectangles.
    #[arg(long)]
    axis_aligned: bool,
}

impl MetricArgs {
    fn config(&self) -> MetricConfig {
        MetricConfig {
            iou_threshold: self.iou_threshold,
            angle_threshold: self.angle_threshold_deg.to_radians(),
            rotated_iou: !self.axis_aligned,
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    /// Ground truth, canonical format.
    #[arg(long)]
    gt: PathBuf,
    /// Predictions, canonical format.
    #[arg(long)]
    pred: PathBuf,
    #[command(flatten)]
    metric: MetricArgs,
    /// Optional sweep IoU thresholds (comma-separated) for the report.
    #[arg(long, value_delimiter = ',')]
    sweep_iou: Vec<f64>,
    /// Optional sweep angle thresholds in degrees (comma-separated).
    #[arg(long, value_delimiter = ',')]
    sweep_angle_deg: Vec<f64>,
    /// JSON report output path.
    #[arg(long)]
    out_json: PathBuf,
    /// CSV sweep output path, written when sweep lists are given.
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// IoU thresholds, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    iou: Vec<f64>,
    /// Angle thresholds in degrees, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    angle_deg: Vec<f64>,
    #[arg(long)]
    axis_aligned: bool,
    /// CSV output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum RefineCommand {
    /// Train the refinement head on synthetic scenes.
    Train(RefineTrainArgs),
    /// Apply a trained head to synthetic scene candidates.
    Apply(RefineApplyArgs),
}

#[derive(Args)]
struct SceneArgs {
    /// Number of synthetic scenes to generate.
    #[arg(long, default_value_t = 100)]
    scenes: usize,
    /// Seed for scene generation and parameter init.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Candidate center noise in pixels.
    #[arg(long, default_value_t = 2.0)]
    noise_xy: f64,
    /// Candidate log-size noise half-range.
    #[arg(long, default_value_t = 0.12)]
    noise_wh: f64,
    /// Candidate orientation noise magnitude in radians (one-sided).
    #[arg(long, default_value_t = 0.35)]
    noise_theta: f64,
}

impl SceneArgs {
    fn noise(&self) -> NoiseConfig {
        NoiseConfig {
            xy: self.noise_xy,
            wh: self.noise_wh,
            theta: self.noise_theta,
        }
    }
}

#[derive(Args)]
struct RefineTrainArgs {
    #[command(flatten)]
    scenes: SceneArgs,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    #[arg(long, default_value_t = 64)]
    hidden: usize,
    /// Crop height and width for the probability-map window.
    #[arg(long, default_value_t = 14)]
    crop: usize,
    /// Sample axis-aligned crops instead of rotated ones.
    #[arg(long)]
    axis_aligned_crop: bool,
    /// Parameter file output path.
    #[arg(long)]
    params_out: PathBuf,
    /// Optional per-epoch loss CSV.
    #[arg(long)]
    curve_out: Option<PathBuf>,
}

#[derive(Args)]
struct RefineApplyArgs {
    #[command(flatten)]
    scenes: SceneArgs,
    /// Trained parameter file.
    #[arg(long)]
    params: PathBuf,
    /// Refined predictions output, canonical format.
    #[arg(long)]
    out: PathBuf,
    /// Optional unrefined candidate output for baseline comparison.
    #[arg(long)]
    baseline_out: Option<PathBuf>,
    /// Optional ground-truth output for evaluating the refinement.
    #[arg(long)]
    gt_out: Option<PathBuf>,
    #[arg(long)]
    axis_aligned_crop: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceFormat {
    Cornell,
    Jacquard,
    Ocid,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetFormat {
    Canonical,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long, value_enum)]
    from: SourceFormat,
    #[arg(long, value_enum, default_value = "canonical")]
    to: TargetFormat,
    /// Annotation file (cornell, jacquard) or directory (ocid).
    #[arg(long)]
    input: PathBuf,
    /// Canonical output path.
    #[arg(long)]
    out: PathBuf,
    /// Image width in pixels (cornell, jacquard).
    #[arg(long)]
    width: Option<u32>,
    /// Image height in pixels (cornell, jacquard).
    #[arg(long)]
    height: Option<u32>,
    /// Image id for single-file formats; defaults to the file stem.
    #[arg(long)]
    image_id: Option<String>,
}

#[derive(Args)]
struct IouArgs {
    /// First grasp as x,y,w,h,theta (radians).
    #[arg(long, value_delimiter = ',')]
    a: Vec<f64>,
    /// Second grasp as x,y,w,h,theta (radians).
    #[arg(long, value_delimiter = ',')]
    b: Vec<f64>,
    #[arg(long)]
    axis_aligned: bool,
}

/// Errors carry the process exit code: 2 for input problems, 1 otherwise.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

macro_rules! from_input_error {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::input(e.to_string())
            }
        }
    )*};
}

from_input_error!(
    graspkit::canonical::CanonicalError,
    graspkit::datasets::DatasetError,
    graspkit::params::ParamsError,
    graspkit_core::eval::EvalError,
    graspkit_core::codec::CodecError
);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(format!("io error: {e}"))
    }
}

impl From<graspkit_core::refine::RefineError> for CliError {
    fn from(e: graspkit_core::refine::RefineError) -> Self {
        CliError::internal(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.jobs == 0 {
        return Err(CliError::input("--jobs must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .map_err(|e| CliError::internal(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Eval(args) => cmd_eval(args, cli.jobs),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Refine(RefineCommand::Train(args)) => cmd_refine_train(args),
        Command::Refine(RefineCommand::Apply(args)) => cmd_refine_apply(args),
        Command::Convert(args) => cmd_convert(args),
        Command::Iou(args) => cmd_iou(args),
    })
}

/// Pairs prediction and ground-truth images by id and selects each image's
/// top-scoring prediction.
fn build_items(
    gts: &[AnnotatedImage],
    preds: &[AnnotatedImage],
) -> Result<Vec<ImageItem>, CliError> {
    if preds.is_empty() {
        return Err(CliError::input("prediction file contains no images"));
    }
    let by_id: BTreeMap<&str, &AnnotatedImage> =
        preds.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut items = Vec::with_capacity(gts.len());
    for gt in gts {
        let pred = by_id
            .get(gt.id.as_str())
            .ok_or_else(|| CliError::input(format!("no prediction for image {:?}", gt.id)))?;
        let best = select_best(&pred.grasps)
            .ok_or_else(|| CliError::input(format!("image {:?} has no predicted grasps", gt.id)))?;
        if gt.grasps.is_empty() {
            return Err(CliError::input(format!("image {:?} has no ground truths", gt.id)));
        }
        items.push((*best, gt.grasps.clone()));
    }
    Ok(items)
}

fn cmd_eval(args: EvalArgs, jobs: usize) -> Result<(), CliError> {
    let gts = read_canonical(&args.gt)?;
    let preds = read_canonical(&args.pred)?;
    let items = build_items(&gts, &preds)?;
    let cfg = args.metric.config();

    let per_image: Vec<bool> = if jobs > 1 {
        items
            .par_iter()
            .map(|(pred, gt)| grasp_correct(pred, gt, &cfg))
            .collect::<Result<_, _>>()?
    } else {
        graspkit_core::eval::per_image_correct(&items, &cfg)?
    };
    let accuracy =
        per_image.iter().filter(|&&c| c).count() as f64 / per_image.len().max(1) as f64;

    // Segmentation IoU over images where both sides carry masks.
    let mut seg_iou = None;
    let by_id: BTreeMap<&str, &AnnotatedImage> =
        preds.iter().map(|p| (p.id.as_str(), p)).collect();
    for gt in &gts {
        if let (Some(gm), Some(pm)) = (
            &gt.segmentation,
            by_id.get(gt.id.as_str()).and_then(|p| p.segmentation.as_ref()),
        ) {
            seg_iou = Some(graspkit_core::eval::segmentation_iou(pm, gm)?);
            break;
        }
    }

    let sweep = if !args.sweep_iou.is_empty() && !args.sweep_angle_deg.is_empty() {
        let angles: Vec<f64> = args.sweep_angle_deg.iter().map(|d| d.to_radians()).collect();
        Some(threshold_sweep(&items, &args.sweep_iou, &angles, cfg.rotated_iou)?)
    } else {
        None
    };

    let report = EvalReport { per_image, accuracy, seg_iou, sweep };
    std::fs::write(&args.out_json, report_json(&report))?;
    if let (Some(path), Some(grid)) = (&args.out_csv, &report.sweep) {
        std::fs::write(path, sweep_csv(grid))?;
    }
    println!("accuracy {accuracy:.6} over {} images", report.per_image.len());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let gts = read_canonical(&args.gt)?;
    let preds = read_canonical(&args.pred)?;
    let items = build_items(&gts, &preds)?;
    let angles: Vec<f64> = args.angle_deg.iter().map(|d| d.to_radians()).collect();
    let grid = threshold_sweep(&items, &args.iou, &angles, !args.axis_aligned)?;
    std::fs::write(&args.out, sweep_csv(&grid))?;
    Ok(())
}

fn cmd_refine_train(args: RefineTrainArgs) -> Result<(), CliError> {
    let scenes = generate_synthetic_scenes(args.scenes.scenes, args.scenes.seed, &args.scenes.noise());
    let config = TrainConfig {
        learning_rate: args.learning_rate,
        momentum: args.momentum,
        nesterov: true,
        epochs: args.epochs,
        seed: args.scenes.seed,
        d_hidden: args.hidden,
        crop_h: args.crop,
        crop_w: args.crop,
        crop_mode: if args.axis_aligned_crop {
            CropMode::AxisAligned
        } else {
            CropMode::Rotated
        },
    };
    let record = train_refine_head(&scenes, &config)?;
    write_params(&args.params_out, &record.params)?;
    if let Some(path) = &args.curve_out {
        std::fs::write(path, curve_csv(&record.curve))?;
    }
    let last = record.curve.last().copied().unwrap_or(f64::NAN);
    println!("trained {} epochs, final loss {last:.6}", record.curve.len());
    Ok(())
}

fn scene_image(id: String, grasps: Vec<GraspCandidate>) -> AnnotatedImage {
    let size = graspkit_core::refine::SCENE_SIZE as u32;
    AnnotatedImage::new(id, size, size, grasps)
}

fn cmd_refine_apply(args: RefineApplyArgs) -> Result<(), CliError> {
    let params = read_params(&args.params)?;
    let mode = if args.axis_aligned_crop {
        CropMode::AxisAligned
    } else {
        CropMode::Rotated
    };
    let crop_h = (params.d_in / 2).isqrt();
    let crop_w = params.d_in / 2 / crop_h.max(1);
    if 2 * crop_h * crop_w != params.d_in {
        return Err(CliError::input("parameter file input width is not a square crop"));
    }
    let scenes = generate_synthetic_scenes(args.scenes.scenes, args.scenes.seed, &args.scenes.noise());

    let mut refined_images = Vec::new();
    let mut baseline_images = Vec::new();
    let mut gt_images = Vec::new();
    for (i, scene) in scenes.iter().enumerate() {
        let id = format!("scene{i:05}");
        let refined =
            refine_candidates(&params, &scene.map, &scene.candidates, crop_h, crop_w, mode)?;
        refined_images.push(scene_image(id.clone(), refined));
        baseline_images.push(scene_image(id.clone(), scene.candidates.clone()));
        gt_images.push(scene_image(id, scene.gts.clone()));
    }
    write_canonical(&args.out, &refined_images)?;
    if let Some(path) = &args.baseline_out {
        write_canonical(path, &baseline_images)?;
    }
    if let Some(path) = &args.gt_out {
        write_canonical(path, &gt_images)?;
    }
    Ok(())
}

fn single_file_image(
    args: &ConvertArgs,
    outcome: ParseOutcome,
) -> Result<AnnotatedImage, CliError> {
    let (Some(width), Some(height)) = (args.width, args.height) else {
        return Err(CliError::input("--width and --height are required for this format"));
    };
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    let id = args.image_id.clone().unwrap_or_else(|| {
        args.input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "image".to_string())
    });
    Ok(AnnotatedImage::new(id, width, height, outcome.grasps))
}

fn cmd_convert(args: ConvertArgs) -> Result<(), CliError> {
    let TargetFormat::Canonical = args.to;
    let images = match args.from {
        SourceFormat::Cornell => {
            let text = std::fs::read_to_string(&args.input)?;
            vec![single_file_image(&args, parse_cornell(&text)?)?]
        }
        SourceFormat::Jacquard => {
            let text = std::fs::read_to_string(&args.input)?;
            vec![single_file_image(&args, parse_jacquard(&text)?)?]
        }
        SourceFormat::Ocid => parse_ocid_grasp(&args.input)?,
    };
    write_canonical(&args.out, &images)?;
    println!("wrote {} images", images.len());
    Ok(())
}

fn cmd_iou(args: IouArgs) -> Result<(), CliError> {
    let grasp = |v: &[f64]| -> Result<GraspCandidate, CliError> {
        if v.len() != 5 {
            return Err(CliError::input("grasps need exactly 5 comma-separated values"));
        }
        Ok(GraspCandidate::new(v[0], v[1], v[2], v[3], v[4])?)
    };
    let a = graspkit_core::codec::grasp_to_rect(&grasp(&args.a)?);
    let b = graspkit_core::codec::grasp_to_rect(&grasp(&args.b)?);
    let iou = if args.axis_aligned {
        graspkit_core::geometry::aabb_iou(&a, &b)
    } else {
        graspkit_core::geometry::rotated_iou(&a, &b)
    };
    println!("{iou:.9}");
    Ok(())
}
