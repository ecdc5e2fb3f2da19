//! Achievable segmentation accuracy, boundary recall and under-segmentation
//! error against one or more ground-truth segmentations.
//!
//! USE is the leakage form `Σ_s (|s| − max_g |s ∩ g|) / N`, which makes
//! `asa + use = 1` exactly.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::LabelGrid;

/// Human-readable name of the USE formula, echoed into reports.
pub const USE_VARIANT: &str = "leakage: sum_s (|s| - max_g |s & g|) / N = 1 - ASA";

/// A reference segmentation with dense labels.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    grid: LabelGrid,
}

impl GroundTruth {
    /// Relabels densely if needed.
    pub fn new(grid: LabelGrid) -> Self {
        let grid = if grid.is_dense() { grid } else { grid.densified() };
        GroundTruth { grid }
    }

    pub fn grid(&self) -> &LabelGrid {
        &self.grid
    }

    pub fn segment_count(&self) -> usize {
        self.grid.distinct_count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub asa: f64,
    pub br: f64,
    #[serde(rename = "use")]
    pub use_: f64,
    pub boundary_tolerance: usize,
    pub use_variant: String,
    /// Set when some ground truth had no internal boundary and BR was defined as 1.
    pub br_undefined: bool,
}

fn check_dims(sp: &LabelGrid, gt: &GroundTruth) -> Result<()> {
    if sp.same_shape(gt.grid()) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "superpixels {}x{} vs ground truth {}x{}",
            sp.width(),
            sp.height(),
            gt.grid().width(),
            gt.grid().height()
        )))
    }
}

/// Pixels of each superpixel that fall in its best-overlapping ground-truth segment, summed.
fn best_overlap_total(sp: &LabelGrid, gt: &GroundTruth) -> usize {
    let mut table: HashMap<u32, HashMap<u32, usize>> = HashMap::new();
    for (&s, &g) in sp.labels().iter().zip(gt.grid().labels()) {
        *table.entry(s).or_default().entry(g).or_default() += 1;
    }
    table.values().map(|row| row.values().copied().max().unwrap_or(0)).sum()
}

pub fn asa(sp: &LabelGrid, gt: &GroundTruth) -> Result<f64> {
    check_dims(sp, gt)?;
    Ok(best_overlap_total(sp, gt) as f64 / sp.len() as f64)
}

pub fn under_segmentation_error(sp: &LabelGrid, gt: &GroundTruth) -> Result<f64> {
    check_dims(sp, gt)?;
    Ok((sp.len() - best_overlap_total(sp, gt)) as f64 / sp.len() as f64)
}

/// Marks every pixel within Chebyshev distance `radius` of a set pixel.
fn dilate(mask: &[bool], width: usize, height: usize, radius: usize) -> Vec<bool> {
    if radius == 0 {
        return mask.to_vec();
    }
    let mut horiz = vec![false; mask.len()];
    for y in 0..height {
        let row = &mask[y * width..(y + 1) * width];
        let mut last: Option<usize> = None;
        // forward pass records distance to the nearest set pixel on the left
        let mut left = vec![usize::MAX; width];
        for x in 0..width {
            if row[x] {
                last = Some(x);
            }
            if let Some(l) = last {
                left[x] = x - l;
            }
        }
        last = None;
        for x in (0..width).rev() {
            if row[x] {
                last = Some(x);
            }
            let right = last.map_or(usize::MAX, |r| r - x);
            horiz[y * width + x] = left[x].min(right) <= radius;
        }
    }
    let mut out = vec![false; mask.len()];
    for x in 0..width {
        let mut up = vec![usize::MAX; height];
        let mut last: Option<usize> = None;
        for y in 0..height {
            if horiz[y * width + x] {
                last = Some(y);
            }
            if let Some(l) = last {
                up[y] = y - l;
            }
        }
        last = None;
        for y in (0..height).rev() {
            if horiz[y * width + x] {
                last = Some(y);
            }
            let down = last.map_or(usize::MAX, |d| d - y);
            out[y * width + x] = up[y].min(down) <= radius;
        }
    }
    out
}

/// Boundary recall and whether it was undefined (ground truth without boundary).
pub fn boundary_recall_detailed(sp: &LabelGrid, gt: &GroundTruth, tolerance: usize) -> Result<(f64, bool)> {
    check_dims(sp, gt)?;
    let gt_b = gt.grid().boundary_mask();
    let total = gt_b.iter().filter(|&&b| b).count();
    if total == 0 {
        return Ok((1.0, true));
    }
    let near = dilate(&sp.boundary_mask(), sp.width(), sp.height(), tolerance);
    let hit = gt_b.iter().zip(&near).filter(|&(&g, &s)| g && s).count();
    Ok((hit as f64 / total as f64, false))
}

/// Fraction of ground-truth boundary pixels with a superpixel boundary
/// pixel within Chebyshev distance `tolerance`.
pub fn boundary_recall(sp: &LabelGrid, gt: &GroundTruth, tolerance: usize) -> Result<f64> {
    boundary_recall_detailed(sp, gt, tolerance).map(|(v, _)| v)
}

/// Mean of each metric over all ground truths.
pub fn evaluate_multi(sp: &LabelGrid, gts: &[GroundTruth], tolerance: usize) -> Result<MetricReport> {
    if gts.is_empty() {
        return Err(Error::invalid("at least one ground truth is required"));
    }
    let (mut a, mut b, mut u) = (0.0, 0.0, 0.0);
    let mut undefined = false;
    for gt in gts {
        a += asa(sp, gt)?;
        u += under_segmentation_error(sp, gt)?;
        let (r, flag) = boundary_recall_detailed(sp, gt, tolerance)?;
        b += r;
        undefined |= flag;
    }
    let m = gts.len() as f64;
    Ok(MetricReport {
        asa: a / m,
        br: b / m,
        use_: u / m,
        boundary_tolerance: tolerance,
        use_variant: USE_VARIANT.to_string(),
        br_undefined: undefined,
    })
}
