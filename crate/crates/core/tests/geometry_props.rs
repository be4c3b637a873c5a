//! Property tests for the oriented-rectangle geometry.

mod common;

use common::{random_pair, random_rect, raster_iou, uniform};
use graspkit_core::geometry::{
    angle_distance, polygon_area, rect_corners, rotated_iou, OrientedRect,
};
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

#[test]
fn iou_symmetric_over_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..10_000 {
        let (a, b) = random_pair(&mut rng, 1.0, 50.0);
        let ab = rotated_iou(&a, &b);
        let ba = rotated_iou(&b, &a);
        assert!((ab - ba).abs() < 1e-12, "{ab} vs {ba}");
        assert!((0.0..=1.0).contains(&ab));
    }
}

#[test]
fn iou_self_is_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for _ in 0..1000 {
        let r = random_rect(&mut rng, 0.5, 200.0);
        assert!((rotated_iou(&r, &r) - 1.0).abs() < 1e-9);
    }
}

#[test]
fn iou_matches_raster_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for i in 0..1000 {
        let (a, b) = random_pair(&mut rng, 1.0, 60.0);
        let exact = rotated_iou(&a, &b);
        let approx = raster_iou(&a, &b, 2000);
        assert!(
            (exact - approx).abs() <= 1e-3,
            "pair {i}: exact {exact} raster {approx}\n{a:?}\n{b:?}"
        );
    }
}

#[test]
fn corner_polygon_area_equals_w_times_h() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for _ in 0..1000 {
        let r = random_rect(&mut rng, 0.1, 300.0);
        assert!((polygon_area(&rect_corners(&r)) - r.w * r.h).abs() < 1e-9 * (1.0 + r.w * r.h));
    }
}

#[test]
fn iou_invariant_under_common_rigid_transform() {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for _ in 0..1000 {
        let (a, b) = random_pair(&mut rng, 1.0, 40.0);
        let base = rotated_iou(&a, &b);
        let delta = uniform(&mut rng, 0.0, core::f64::consts::TAU);
        let tx = uniform(&mut rng, -50.0, 50.0);
        let ty = uniform(&mut rng, -50.0, 50.0);
        let moved = |r: &OrientedRect| {
            let (s, c) = (delta.sin(), delta.cos());
            OrientedRect::new(
                r.cx * c - r.cy * s + tx,
                r.cx * s + r.cy * c + ty,
                r.w,
                r.h,
                r.theta + delta,
            )
            .unwrap()
        };
        let transformed = rotated_iou(&moved(&a), &moved(&b));
        assert!((base - transformed).abs() <= 1e-9, "{base} vs {transformed}");
    }
}

proptest! {
    #[test]
    fn angle_distance_is_a_pseudometric(
        a in 0.0..core::f64::consts::PI,
        b in 0.0..core::f64::consts::PI,
        c in 0.0..core::f64::consts::PI,
    ) {
        let dab = angle_distance(a, b);
        let dba = angle_distance(b, a);
        prop_assert!((dab - dba).abs() < 1e-12);
        prop_assert!(angle_distance(a, a) < 1e-12);
        prop_assert!((0.0..=core::f64::consts::FRAC_PI_2 + 1e-12).contains(&dab));
        let dac = angle_distance(a, c);
        let dcb = angle_distance(c, b);
        prop_assert!(dab <= dac + dcb + 1e-9);
    }
}
