//! Canonical annotation format: line-delimited JSON, one image per line.
//!
//! Each line is an object with a versioned `schema` tag so readers can reject
//! records written by an incompatible tool. Angles are radians in [0, pi),
//! coordinates are pixels with y growing downward.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use graspkit_core::codec::GraspCandidate;
use graspkit_core::losses::SegmentationMask;
use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "graspkit.annotated_image.v1";

#[derive(Debug, thiserror::Error)]
pub enum CanonicalError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
}

/// One annotated image: grasps, optional negatives, optional segmentation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedImage {
    pub schema: String,
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub grasps: Vec<GraspCandidate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neg_grasps: Option<Vec<GraspCandidate>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segmentation: Option<SegmentationMask>,
    /// Class id to name, for class-annotated datasets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_names: Option<BTreeMap<u32, String>>,
}

impl AnnotatedImage {
    pub fn new(id: impl Into<String>, width: u32, height: u32, grasps: Vec<GraspCandidate>) -> Self {
        Self {
            schema: SCHEMA.to_string(),
            id: id.into(),
            width,
            height,
            grasps,
            neg_grasps: None,
            segmentation: None,
            class_names: None,
        }
    }

    /// Structural checks shared by the reader and the parsers.
    pub fn validate(&self) -> Result<(), String> {
        if self.schema != SCHEMA {
            return Err(format!("unsupported schema {:?}, expected {:?}", self.schema, SCHEMA));
        }
        let all = self.grasps.iter().chain(self.neg_grasps.iter().flatten());
        for g in all {
            if g.x < 0.0 || g.x > self.width as f64 || g.y < 0.0 || g.y > self.height as f64 {
                return Err(format!(
                    "grasp center ({}, {}) outside image {}x{}",
                    g.x, g.y, self.width, self.height
                ));
            }
            if let (Some(class), Some(names)) = (g.class_id, &self.class_names) {
                if !names.contains_key(&class) {
                    return Err(format!("class id {class} missing from class table"));
                }
            }
        }
        if let Some(seg) = &self.segmentation {
            if seg.width != self.width as usize || seg.height != self.height as usize {
                return Err(format!(
                    "segmentation {}x{} does not match image {}x{}",
                    seg.width, seg.height, self.width, self.height
                ));
            }
        }
        Ok(())
    }
}

pub fn read_canonical(path: &Path) -> Result<Vec<AnnotatedImage>, CanonicalError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let image: AnnotatedImage =
            serde_json::from_str(&line).map_err(|e| CanonicalError::Schema {
                line: i + 1,
                message: e.to_string(),
            })?;
        image.validate().map_err(|message| CanonicalError::Schema {
            line: i + 1,
            message,
        })?;
        out.push(image);
    }
    Ok(out)
}

pub fn write_canonical(path: &Path, images: &[AnnotatedImage]) -> Result<(), CanonicalError> {
    let mut writer = BufWriter::new(File::create(path)?);
    for (i, image) in images.iter().enumerate() {
        image.validate().map_err(|message| CanonicalError::Schema {
            line: i + 1,
            message,
        })?;
        // Infallible for this schema once validated.
        let line = serde_json::to_string(image).expect("serializable record");
        writeln!(writer, "{line}")?;
    }
    Ok(())
}
