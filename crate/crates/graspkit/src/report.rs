//! Report writers: sweep grids as CSV, full evaluation reports as JSON and
//! training curves as CSV. Numbers are formatted with fixed precision so
//! identical runs produce byte-identical files.

use graspkit_core::eval::{EvalReport, SweepGrid};

/// Grid CSV: one row per angle threshold, one column per IoU threshold.
pub fn sweep_csv(grid: &SweepGrid) -> String {
    let mut out = String::from("angle_deg");
    for iou in &grid.iou_thresholds {
        out.push_str(&format!(",iou_{iou:.2}"));
    }
    out.push('\n');
    for (row, angle) in grid.accuracy.iter().zip(&grid.angle_thresholds) {
        out.push_str(&format!("{:.2}", angle.to_degrees()));
        for acc in row {
            out.push_str(&format!(",{acc:.6}"));
        }
        out.push('\n');
    }
    out
}

pub fn report_json(report: &EvalReport) -> String {
    // EvalReport is a plain data tree; serialization cannot fail.
    let mut s = serde_json::to_string_pretty(report).expect("serializable report");
    s.push('\n');
    s
}

/// Training curve CSV: epoch index (1-based) and mean loss.
pub fn curve_csv(curve: &[f64]) -> String {
    let mut out = String::from("epoch,loss\n");
    for (e, loss) in curve.iter().enumerate() {
        out.push_str(&format!("{},{loss:.9}\n", e + 1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_csv_shape_and_values() {
        let grid = SweepGrid {
            iou_thresholds: vec![0.25, 0.5],
            angle_thresholds: vec![std::f64::consts::PI / 6.0],
            accuracy: vec![vec![1.0, 0.5]],
        };
        let csv = sweep_csv(&grid);
        assert_eq!(csv, "angle_deg,iou_0.25,iou_0.50\n30.00,1.000000,0.500000\n");
    }

    #[test]
    fn curve_csv_is_one_based() {
        assert_eq!(curve_csv(&[0.5, 0.25]), "epoch,loss\n1,0.500000000\n2,0.250000000\n");
    }
}
