//! Dataset parsers: Cornell corner files, Jacquard grasp lines and the
//! OCID-style class-annotated layout. All parsers are total: every record
//! either becomes a grasp or a structured warning, never a silent drop.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use graspkit_core::codec::GraspCandidate;
use graspkit_core::geometry::normalize_angle;
use graspkit_core::losses::SegmentationMask;

use crate::canonical::AnnotatedImage;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("corner count {0} is not divisible by 4")]
    CornerCount(usize),
    #[error("line {line}: non-positive size in {record:?}")]
    NonPositiveSize { line: usize, record: String },
    #[error("missing segmentation mask {0}")]
    MissingMask(String),
    #[error("mask image {0}: {1}")]
    Mask(String, String),
    #[error("class id {0} absent from the class table")]
    UnknownClass(u32),
    #[error("image {id}: rectangle and class counts differ ({rects} vs {classes})")]
    ClassCount { id: String, rects: usize, classes: usize },
}

/// Parser output: grasps plus one warning per skipped record.
#[derive(Clone, Debug, Default)]
pub struct ParseOutcome {
    pub grasps: Vec<GraspCandidate>,
    pub warnings: Vec<String>,
    /// Indices of input records that were skipped with a warning.
    pub skipped: Vec<usize>,
}

/// Parses a Cornell rectangle file: 4k lines of "x y" corners. Each group of
/// four corners lists a gripper plate edge first (p1 to p2), so the plate
/// length is |p1 - p2| and the opening axis runs along p2 to p3. Groups with
/// NaN or degenerate edges are skipped with a warning.
pub fn parse_cornell(text: &str) -> Result<ParseOutcome, DatasetError> {
    let mut corners = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let x = parts.next().and_then(|t| t.parse::<f64>().ok());
        let y = parts.next().and_then(|t| t.parse::<f64>().ok());
        match (x, y, parts.next()) {
            (Some(x), Some(y), None) => corners.push((i + 1, x, y)),
            _ => {
                return Err(DatasetError::Malformed {
                    line: i + 1,
                    message: format!("expected \"x y\", got {line:?}"),
                })
            }
        }
    }
    if corners.len() % 4 != 0 {
        return Err(DatasetError::CornerCount(corners.len()));
    }

    let mut out = ParseOutcome::default();
    for (gi, group) in corners.chunks(4).enumerate() {
        let first_line = group[0].0;
        if group.iter().any(|&(_, x, y)| !x.is_finite() || !y.is_finite()) {
            out.warnings
                .push(format!("group at line {first_line}: non-finite corner, skipped"));
            out.skipped.push(gi);
            continue;
        }
        let (_, x1, y1) = group[0];
        let (_, x2, y2) = group[1];
        let (_, x3, y3) = group[2];
        let cx = group.iter().map(|&(_, x, _)| x).sum::<f64>() / 4.0;
        let cy = group.iter().map(|&(_, _, y)| y).sum::<f64>() / 4.0;
        let h = (x2 - x1).hypot(y2 - y1);
        let w = (x3 - x2).hypot(y3 - y2);
        let theta = (y3 - y2).atan2(x3 - x2);
        match GraspCandidate::new(cx, cy, w, h, theta) {
            Ok(g) => out.grasps.push(g),
            Err(e) => {
                out.warnings
                    .push(format!("group at line {first_line}: {e}, skipped"));
                out.skipped.push(gi);
            }
        }
    }
    Ok(out)
}

/// Writes grasps back to Cornell corner format, inverse of `parse_cornell`.
pub fn export_cornell(grasps: &[GraspCandidate]) -> String {
    let mut text = String::new();
    for g in grasps {
        let (s, c) = (g.theta.sin(), g.theta.cos());
        // d: opening axis (width), n: plate direction (height).
        let (dx, dy) = (c * g.w / 2.0, s * g.w / 2.0);
        let (nx, ny) = (-s * g.h / 2.0, c * g.h / 2.0);
        let corners = [
            (g.x - dx - nx, g.y - dy - ny),
            (g.x - dx + nx, g.y - dy + ny),
            (g.x + dx + nx, g.y + dy + ny),
            (g.x + dx - nx, g.y + dy - ny),
        ];
        for (x, y) in corners {
            text.push_str(&format!("{x} {y}\n"));
        }
    }
    text
}

/// Parses Jacquard grasp lines: "x;y;theta_degrees;opening;jaw_size". Angles
/// are stored counter-clockwise in a y-up frame, so the sign flips on the way
/// into the y-down pixel frame.
pub fn parse_jacquard(text: &str) -> Result<ParseOutcome, DatasetError> {
    let mut out = ParseOutcome::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(';').collect();
        let parsed: Option<Vec<f64>> = (fields.len() == 5)
            .then(|| fields.iter().map(|t| t.trim().parse::<f64>().ok()).collect())
            .flatten();
        let Some(v) = parsed else {
            return Err(DatasetError::Malformed {
                line: i + 1,
                message: format!("expected \"x;y;theta;opening;jaw\", got {line:?}"),
            });
        };
        let (x, y, deg, opening, jaw) = (v[0], v[1], v[2], v[3], v[4]);
        if !(opening > 0.0 && jaw > 0.0) {
            return Err(DatasetError::NonPositiveSize {
                line: i + 1,
                record: line.to_string(),
            });
        }
        let theta = normalize_angle(-deg.to_radians());
        match GraspCandidate::new(x, y, opening, jaw, theta) {
            Ok(g) => out.grasps.push(g),
            Err(e) => {
                out.warnings.push(format!("line {}: {e}, skipped", i + 1));
                out.skipped.push(i);
            }
        }
    }
    Ok(out)
}

/// OCID-style annotation directory layout:
///
/// - `class_names.txt`: one class name per line; line number is the 1-based
///   class id and line 1 is the background class.
/// - `<image>_rects.txt`: Cornell corner format, grasps grouped per object.
/// - `<image>_classes.txt`: one class id per rectangle, same order.
/// - `<image>_mask.png`: grayscale label image; pixel value is the class id.
pub fn parse_ocid_grasp(dir: &Path) -> Result<Vec<AnnotatedImage>, DatasetError> {
    let names_text = fs::read_to_string(dir.join("class_names.txt"))?;
    let class_names: BTreeMap<u32, String> = names_text
        .lines()
        .enumerate()
        .map(|(i, name)| (i as u32 + 1, name.trim().to_string()))
        .collect();

    let mut ids: Vec<String> = Vec::new();
    for entry in fs::read_dir(dir)? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if let Some(id) = name.strip_suffix("_rects.txt") {
            ids.push(id.to_string());
        }
    }
    ids.sort();

    let mut images = Vec::new();
    for id in ids {
        let rects_text = fs::read_to_string(dir.join(format!("{id}_rects.txt")))?;
        let classes_text = fs::read_to_string(dir.join(format!("{id}_classes.txt")))?;
        let parsed = parse_cornell(&rects_text)?;
        let classes: Vec<u32> = classes_text
            .split_whitespace()
            .map(|t| {
                t.parse::<u32>().map_err(|_| DatasetError::Malformed {
                    line: 0,
                    message: format!("bad class id {t:?} in {id}_classes.txt"),
                })
            })
            .collect::<Result<_, _>>()?;
        let n_rects = parsed.grasps.len() + parsed.skipped.len();
        if classes.len() != n_rects {
            return Err(DatasetError::ClassCount {
                id,
                rects: n_rects,
                classes: classes.len(),
            });
        }
        for &c in &classes {
            if !class_names.contains_key(&c) {
                return Err(DatasetError::UnknownClass(c));
            }
        }
        // Skipped rectangle groups consumed a class label each; drop those
        // labels so the remaining grasps pair up by position.
        let kept_classes = classes
            .iter()
            .enumerate()
            .filter(|(gi, _)| !parsed.skipped.contains(gi))
            .map(|(_, &c)| c);
        let grasps: Vec<GraspCandidate> = parsed
            .grasps
            .iter()
            .zip(kept_classes)
            .map(|(g, c)| g.with_class(c))
            .collect();

        let mask_path = dir.join(format!("{id}_mask.png"));
        if !mask_path.exists() {
            return Err(DatasetError::MissingMask(mask_path.display().to_string()));
        }
        let mask_img = image::open(&mask_path)
            .map_err(|e| DatasetError::Mask(mask_path.display().to_string(), e.to_string()))?
            .into_luma8();
        let (width, height) = mask_img.dimensions();
        let labels: Vec<u32> = mask_img.pixels().map(|p| p.0[0] as u32).collect();
        for &l in &labels {
            if !class_names.contains_key(&l) {
                return Err(DatasetError::UnknownClass(l));
            }
        }
        let mask = SegmentationMask::new(height as usize, width as usize, labels)
            .map_err(|e| DatasetError::Mask(mask_path.display().to_string(), e.to_string()))?;

        let mut image = AnnotatedImage::new(id, width, height, grasps);
        image.segmentation = Some(mask);
        image.class_names = Some(class_names.clone());
        images.push(image);
    }
    Ok(images)
}
