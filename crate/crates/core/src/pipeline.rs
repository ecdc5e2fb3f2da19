//! End-to-end segmentation: units → features → weights → ADMM → affinity →
//! spectral cut → merge.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cluster::{affinity, merge_isolated, ncut, MergeOptions, SuperpixelLabeling};
use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::metrics::{evaluate_multi, GroundTruth, MetricReport};
use crate::solver::{solve, AdmmConfig, SolveReport};
use crate::units::{extract_features, oversegment_with, unit_adjacency, FeatureOptions, DEFAULT_COMPACTNESS};
use crate::weights::build_weight_matrix;

/// Everything that determines a segmentation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Requested number of superpixels K.
    pub k_superpixels: usize,
    /// Raw units per superpixel; `n = round(ratio · K)`.
    pub unit_ratio: f64,
    /// Spatial weight of the unit K-means.
    pub compactness: f64,
    pub admm: AdmmConfig,
    pub br_tolerance: usize,
    pub seed: u64,
    pub features: FeatureOptions,
    /// Final regions below this fraction of `H·W/K` pixels are merged.
    pub min_region_fraction: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k_superpixels: 100,
            unit_ratio: 3.0,
            compactness: DEFAULT_COMPACTNESS,
            admm: AdmmConfig::default(),
            br_tolerance: 2,
            seed: 0,
            features: FeatureOptions::default(),
            min_region_fraction: MergeOptions::default().min_size_fraction,
        }
    }
}

impl PipelineConfig {
    pub fn new(k_superpixels: usize) -> Self {
        PipelineConfig { k_superpixels, ..Default::default() }
    }

    /// `n = round(ratio · K)`, checked against the pixel count.
    pub fn unit_count(&self, pixels: usize) -> Result<usize> {
        let n = (self.unit_ratio * self.k_superpixels as f64).round();
        if !(n >= 1.0) || n > pixels as f64 {
            return Err(Error::invalid(format!(
                "unit count round({} * {}) = {n} must lie in [1, {pixels}]",
                self.unit_ratio, self.k_superpixels
            )));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_superpixels == 0 {
            return Err(Error::invalid("K must be positive"));
        }
        if !(self.unit_ratio.is_finite() && self.unit_ratio > 0.0) {
            return Err(Error::invalid("unit ratio must be positive"));
        }
        if !(self.compactness.is_finite() && self.compactness > 0.0) {
            return Err(Error::invalid("compactness must be positive"));
        }
        if !(self.min_region_fraction.is_finite() && self.min_region_fraction >= 0.0) {
            return Err(Error::invalid("min region fraction must be non-negative"));
        }
        self.admm.validate()
    }
}

/// Wall-clock milliseconds per pipeline stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub oversegment_ms: f64,
    pub features_ms: f64,
    pub weights_ms: f64,
    pub solve_ms: f64,
    pub affinity_ms: f64,
    pub ncut_ms: f64,
    pub merge_ms: f64,
}

impl StageTimings {
    pub fn total_ms(&self) -> f64 {
        self.oversegment_ms + self.features_ms + self.weights_ms + self.solve_ms + self.affinity_ms + self.ncut_ms + self.merge_ms
    }
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub labeling: SuperpixelLabeling,
    pub report: SolveReport,
    pub unit_count: usize,
    pub metrics: Option<MetricReport>,
    pub timing: StageTimings,
}

fn timed<T>(slot: &mut f64, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    *slot = start.elapsed().as_secs_f64() * 1e3;
    out
}

/// Runs the full pipeline on an in-memory image.
pub fn segment_image(image: &ImageBuffer, config: &PipelineConfig) -> Result<RunArtifacts> {
    config.validate().map_err(|e| e.in_stage("config"))?;
    let n = config.unit_count(image.len()).map_err(|e| e.in_stage("config"))?;
    let mut t = StageTimings::default();

    let units = timed(&mut t.oversegment_ms, || oversegment_with(image, n, config.seed, config.compactness)).map_err(|e| e.in_stage("oversegment"))?;
    let x = timed(&mut t.features_ms, || extract_features(image, &units, config.features))
        .map_err(|e| e.in_stage("features"))?;
    let weights = timed(&mut t.weights_ms, || build_weight_matrix(&unit_adjacency(&units)));
    let (z, report) = timed(&mut t.solve_ms, || solve(&x, &weights, &config.admm)).map_err(|e| e.in_stage("solve"))?;
    let g = timed(&mut t.affinity_ms, || affinity(&z)).map_err(|e| e.in_stage("affinity"))?;
    let k = config.k_superpixels.min(units.unit_count());
    let unit_labels = timed(&mut t.ncut_ms, || ncut(&g, k, config.seed)).map_err(|e| e.in_stage("ncut"))?;
    let merge = MergeOptions { min_size_fraction: config.min_region_fraction };
    let labeling =
        timed(&mut t.merge_ms, || merge_isolated(&unit_labels, &units, &x, merge)).map_err(|e| e.in_stage("merge"))?;

    log::info!(
        "segmented {}x{}: {} units -> {} superpixels in {:.1} ms",
        image.width(),
        image.height(),
        units.unit_count(),
        labeling.realized_k(),
        t.total_ms()
    );
    Ok(RunArtifacts { labeling, report, unit_count: units.unit_count(), metrics: None, timing: t })
}

/// [`segment_image`] followed by evaluation against the given ground truths.
pub fn segment_and_evaluate(image: &ImageBuffer, gts: &[GroundTruth], config: &PipelineConfig) -> Result<RunArtifacts> {
    let mut run = segment_image(image, config)?;
    run.metrics = Some(evaluate_multi(run.labeling.grid(), gts, config.br_tolerance).map_err(|e| e.in_stage("metrics"))?);
    Ok(run)
}

/// Deterministic JSON summary of one `segment` run (no wall-clock data).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub image: String,
    pub width: usize,
    pub height: usize,
    pub config: PipelineConfig,
    pub unit_count: usize,
    pub realized_k: usize,
    pub solve: SolveReport,
    pub metrics: Option<MetricReport>,
}
