//! OCID-style fixture: class-annotated grasps plus a label mask.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use graspkit::datasets::{export_cornell, parse_ocid_grasp, DatasetError};
use graspkit_core::codec::GraspCandidate;

const BACKGROUND: u32 = 1;
const BOX_CLASS: u32 = 2;
const BALL_CLASS: u32 = 3;

fn write_mask(path: &Path, width: u32, height: u32, paint: impl Fn(u32, u32) -> u32) {
    let img = image::GrayImage::from_fn(width, height, |x, y| image::Luma([paint(x, y) as u8]));
    img.save(path).unwrap();
}

/// Two objects: a box around (8, 8) and a ball around (24, 8).
fn write_fixture(dir: &Path) -> Vec<GraspCandidate> {
    fs::write(dir.join("class_names.txt"), "background\nbox\nball\n").unwrap();
    let grasps = vec![
        GraspCandidate::new(8.0, 8.0, 8.0, 4.0, 0.0).unwrap(),
        GraspCandidate::new(8.0, 8.0, 8.0, 4.0, 1.2).unwrap(),
        GraspCandidate::new(24.0, 8.0, 6.0, 3.0, 0.5).unwrap(),
    ];
    fs::write(dir.join("scene0_rects.txt"), export_cornell(&grasps)).unwrap();
    fs::write(dir.join("scene0_classes.txt"), "2\n2\n3\n").unwrap();
    write_mask(&dir.join("scene0_mask.png"), 32, 16, |x, y| {
        let near = |cx: u32, r: u32| x.abs_diff(cx) <= r && y.abs_diff(8) <= r;
        if near(8, 4) {
            BOX_CLASS
        } else if near(24, 3) {
            BALL_CLASS
        } else {
            BACKGROUND
        }
    });
    grasps
}

#[test]
fn fixture_parses_with_classes_and_mask() {
    let dir = tempfile::tempdir().unwrap();
    let grasps = write_fixture(dir.path());
    let images = parse_ocid_grasp(dir.path()).unwrap();
    assert_eq!(images.len(), 1);
    let image = &images[0];
    assert_eq!(image.id, "scene0");
    assert_eq!((image.width, image.height), (32, 16));
    assert_eq!(image.grasps.len(), 3);
    for (g, orig) in image.grasps.iter().zip(&grasps) {
        assert!((g.x - orig.x).abs() < 1e-9);
        assert!((g.w - orig.w).abs() < 1e-9);
    }
    let classes: Vec<u32> = image.grasps.iter().map(|g| g.class_id.unwrap()).collect();
    assert_eq!(classes, [BOX_CLASS, BOX_CLASS, BALL_CLASS]);

    let mask = image.segmentation.as_ref().unwrap();
    assert_eq!(mask.label(8, 8), BOX_CLASS);
    assert_eq!(mask.label(8, 24), BALL_CLASS);
    assert_eq!(mask.label(0, 0), BACKGROUND);

    let names = image.class_names.as_ref().unwrap();
    assert_eq!(names[&BALL_CLASS], "ball");
    assert!(image.validate().is_ok());
}

/// Grouping the parsed grasps by class matches the fixture construction.
#[test]
fn per_class_ground_truth_lists_match_fixture() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let images = parse_ocid_grasp(dir.path()).unwrap();
    let mut by_class: BTreeMap<u32, usize> = BTreeMap::new();
    for g in &images[0].grasps {
        *by_class.entry(g.class_id.unwrap()).or_default() += 1;
    }
    assert_eq!(by_class, BTreeMap::from([(BOX_CLASS, 2), (BALL_CLASS, 1)]));
}

#[test]
fn unknown_class_id_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    fs::write(dir.path().join("scene0_classes.txt"), "2\n2\n9\n").unwrap();
    assert!(matches!(
        parse_ocid_grasp(dir.path()),
        Err(DatasetError::UnknownClass(9))
    ));
}

#[test]
fn missing_mask_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    fs::remove_file(dir.path().join("scene0_mask.png")).unwrap();
    assert!(matches!(
        parse_ocid_grasp(dir.path()),
        Err(DatasetError::MissingMask(_))
    ));
}
