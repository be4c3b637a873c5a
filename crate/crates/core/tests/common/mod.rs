//! Shared test helpers: seeded random rectangles and an independent
//! rasterization IoU oracle.

// Each test binary uses its own subset of these helpers.
#![allow(dead_code)]

use graspkit_core::geometry::{rect_aabb, OrientedRect};
use rand_chacha::ChaCha8Rng;
use rand_core::RngCore;

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let unit = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    lo + unit * (hi - lo)
}

/// Random rectangle with extents in `[min_extent, max_extent]`.
pub fn random_rect(rng: &mut ChaCha8Rng, min_extent: f64, max_extent: f64) -> OrientedRect {
    OrientedRect::new(
        uniform(rng, -100.0, 100.0),
        uniform(rng, -100.0, 100.0),
        uniform(rng, min_extent, max_extent),
        uniform(rng, min_extent, max_extent),
        uniform(rng, 0.0, core::f64::consts::PI),
    )
    .unwrap()
}

/// Overlapping random pair: the second rectangle is a bounded perturbation of
/// the first so the oracle exercises non-trivial intersections.
pub fn random_pair(rng: &mut ChaCha8Rng, min_extent: f64, max_extent: f64) -> (OrientedRect, OrientedRect) {
    let a = random_rect(rng, min_extent, max_extent);
    let b = OrientedRect::new(
        a.cx + uniform(rng, -a.w, a.w),
        a.cy + uniform(rng, -a.h, a.h),
        uniform(rng, min_extent, max_extent),
        uniform(rng, min_extent, max_extent),
        uniform(rng, 0.0, core::f64::consts::PI),
    )
    .unwrap();
    (a, b)
}

/// Interval of x where `(x, y)` lies inside the rectangle, if any.
fn row_interval(r: &OrientedRect, y: f64) -> Option<(f64, f64)> {
    let (s, c) = (r.theta.sin(), r.theta.cos());
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    // u = c*(x - cx) + s*(y - cy) in [-w/2, w/2]
    // v = -s*(x - cx) + c*(y - cy) in [-h/2, h/2]
    for (coef, offset, half) in [
        (c, s * (y - r.cy) - c * r.cx, 0.5 * r.w),
        (-s, c * (y - r.cy) + s * r.cx, 0.5 * r.h),
    ] {
        if coef.abs() < 1e-12 {
            if offset.abs() > half {
                return None;
            }
            continue;
        }
        let a = (-half - offset) / coef;
        let b = (half - offset) / coef;
        lo = lo.max(a.min(b));
        hi = hi.min(a.max(b));
    }
    if lo <= hi {
        Some((lo, hi))
    } else {
        None
    }
}

/// Rasterization IoU oracle: counts cell centers covered by each rectangle on
/// an `n x n` grid spanning the bounding box of the pair. Per grid row the
/// covered cells of a convex rectangle form one index interval, which is
/// counted in closed form; the result is identical to brute-force cell-center
/// testing.
pub fn raster_iou(a: &OrientedRect, b: &OrientedRect, n: usize) -> f64 {
    let ba = rect_aabb(a);
    let bb = rect_aabb(b);
    let xmin = ba.0.min(bb.0);
    let ymin = ba.1.min(bb.1);
    let xmax = ba.2.max(bb.2);
    let ymax = ba.3.max(bb.3);
    let dx = (xmax - xmin) / n as f64;
    let dy = (ymax - ymin) / n as f64;

    let count_cells = |iv: Option<(f64, f64)>| -> Option<(i64, i64)> {
        let (lo, hi) = iv?;
        let jlo = ((lo - xmin) / dx - 0.5).ceil().max(0.0) as i64;
        let jhi = (((hi - xmin) / dx - 0.5).floor()).min(n as f64 - 1.0) as i64;
        if jlo > jhi {
            None
        } else {
            Some((jlo, jhi))
        }
    };

    let mut cells_a = 0i64;
    let mut cells_b = 0i64;
    let mut cells_ab = 0i64;
    for i in 0..n {
        let y = ymin + (i as f64 + 0.5) * dy;
        let ra = count_cells(row_interval(a, y));
        let rb = count_cells(row_interval(b, y));
        if let Some((lo, hi)) = ra {
            cells_a += hi - lo + 1;
        }
        if let Some((lo, hi)) = rb {
            cells_b += hi - lo + 1;
        }
        if let (Some((alo, ahi)), Some((blo, bhi))) = (ra, rb) {
            let lo = alo.max(blo);
            let hi = ahi.min(bhi);
            if lo <= hi {
                cells_ab += hi - lo + 1;
            }
        }
    }
    let union = cells_a + cells_b - cells_ab;
    if union == 0 {
        return 0.0;
    }
    cells_ab as f64 / union as f64
}
