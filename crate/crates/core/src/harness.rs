//! Dataset benchmark: segment every image at every requested K and score it
//! against its ground truths.
//!
//! A dataset is a directory of `.png`/`.ppm` images. The ground truths of
//! `<stem>.png` are the files `<stem>.gt<i>.png` (16-bit label PNG) or
//! `<stem>.gt<i>.csv`, for any non-negative integer `i`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::labels::LabelGrid;
use crate::metrics::{GroundTruth, USE_VARIANT};
use crate::par;
use crate::pipeline::{segment_and_evaluate, PipelineConfig, StageTimings};

/// One image together with its ground-truth files.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub image: PathBuf,
    pub ground_truths: Vec<PathBuf>,
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "ppm"))
}

/// `Some((stem, index))` when `name` looks like `<stem>.gt<index>.<ext>`.
fn parse_gt_name(name: &str) -> Option<(&str, u32)> {
    let (rest, ext) = name.rsplit_once('.')?;
    if !matches!(ext.to_ascii_lowercase().as_str(), "png" | "csv") {
        return None;
    }
    let (stem, tag) = rest.rsplit_once('.')?;
    let idx = tag.strip_prefix("gt")?;
    if idx.is_empty() || !idx.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((stem, idx.parse().ok()?))
}

/// Lists images (sorted by file name) and their ground truths (sorted by index).
pub fn discover(dir: &Path) -> Result<Vec<DatasetEntry>> {
    let io = |source| Error::Io { path: dir.to_path_buf(), source };
    let mut names: Vec<String> = fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().map(|t| t.is_file()).unwrap_or(false))
        .filter_map(|e| e.file_name().into_string().ok())
        .collect();
    names.sort();
    let mut gts: Vec<(&str, u32, &str)> = names.iter().filter_map(|n| parse_gt_name(n).map(|(s, i)| (s, i, n.as_str()))).collect();
    gts.sort();
    let entries = names
        .iter()
        .filter(|n| parse_gt_name(n).is_none() && is_image(Path::new(n)))
        .map(|n| {
            let stem = Path::new(n).file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            DatasetEntry {
                image: dir.join(n),
                ground_truths: gts.iter().filter(|(s, _, _)| *s == stem).map(|(_, _, f)| dir.join(f)).collect(),
            }
        })
        .collect();
    Ok(entries)
}

/// Metrics of one image at one K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageResult {
    pub image: String,
    pub k: usize,
    pub unit_count: usize,
    pub realized_k: usize,
    pub ground_truths: usize,
    pub asa: f64,
    pub br: f64,
    #[serde(rename = "use")]
    pub use_: f64,
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual_z: f64,
    pub primal_residual_v: f64,
}

/// Means over all scored images at one K; one point of a metric-vs-K curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSummary {
    pub k: usize,
    pub images: usize,
    pub mean_realized_k: f64,
    pub asa: f64,
    pub br: f64,
    #[serde(rename = "use")]
    pub use_: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub image: String,
    pub k: Option<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: PipelineConfig,
    pub k_list: Vec<usize>,
    pub use_variant: String,
    pub results: Vec<ImageResult>,
    pub summary: Vec<KSummary>,
    pub skipped: Vec<Skipped>,
}

/// Per-image stage timings, kept out of the deterministic report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub image: String,
    pub k: usize,
    pub timing: StageTimings,
}

fn display_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn load_gts(entry: &DatasetEntry) -> Result<Vec<GroundTruth>> {
    entry.ground_truths.iter().map(|p| LabelGrid::load(p).map(GroundTruth::new)).collect()
}

/// Means of the scored rows per K.
pub fn summarize(k_list: &[usize], results: &[ImageResult]) -> Vec<KSummary> {
    k_list
        .iter()
        .map(|&k| {
            let rows: Vec<&ImageResult> = results.iter().filter(|r| r.k == k).collect();
            let m = rows.len().max(1) as f64;
            KSummary {
                k,
                images: rows.len(),
                mean_realized_k: rows.iter().map(|r| r.realized_k as f64).sum::<f64>() / m,
                asa: rows.iter().map(|r| r.asa).sum::<f64>() / m,
                br: rows.iter().map(|r| r.br).sum::<f64>() / m,
                use_: rows.iter().map(|r| r.use_).sum::<f64>() / m,
            }
        })
        .collect()
}

/// Runs the benchmark. Images are processed concurrently on up to `workers`
/// threads; results are collected in dataset order so the report does not
/// depend on the worker count.
pub fn benchmark(
    dataset: &Path,
    config: &PipelineConfig,
    k_list: &[usize],
    workers: Option<usize>,
) -> Result<(BenchmarkReport, Vec<TimingRow>)> {
    if k_list.is_empty() {
        return Err(Error::invalid("k list is empty"));
    }
    config.validate()?;
    let entries = discover(dataset)?;
    let mut skipped = Vec::new();
    let mut jobs = Vec::new();
    for entry in &entries {
        if entry.ground_truths.is_empty() {
            log::warn!("{}: no ground truth found, skipping", entry.image.display());
            skipped.push(Skipped { image: display_name(&entry.image), k: None, reason: "no ground truth".into() });
            continue;
        }
        for &k in k_list {
            jobs.push((entry, k));
        }
    }

    let outcomes = par::with_workers(workers, || {
        par::map_slice(&jobs, |&(entry, k)| -> Result<_> {
            let image = ImageBuffer::load(&entry.image)?;
            let gts = load_gts(entry)?;
            let cfg = PipelineConfig { k_superpixels: k, ..config.clone() };
            let run = segment_and_evaluate(&image, &gts, &cfg)?;
            Ok((run, gts.len()))
        })
    });

    let mut results = Vec::new();
    let mut timings = Vec::new();
    for (&(entry, k), outcome) in jobs.iter().zip(outcomes) {
        let name = display_name(&entry.image);
        match outcome {
            Ok((run, n_gt)) => {
                let m = run.metrics.expect("metrics computed");
                results.push(ImageResult {
                    image: name.clone(),
                    k,
                    unit_count: run.unit_count,
                    realized_k: run.labeling.realized_k(),
                    ground_truths: n_gt,
                    asa: m.asa,
                    br: m.br,
                    use_: m.use_,
                    iterations: run.report.iterations_run,
                    converged: run.report.converged,
                    primal_residual_z: run.report.primal_residual_z,
                    primal_residual_v: run.report.primal_residual_v,
                });
                timings.push(TimingRow { image: name, k, timing: run.timing });
            }
            Err(e) => {
                log::warn!("{name} at K={k}: {e}");
                skipped.push(Skipped { image: name, k: Some(k), reason: e.to_string() });
            }
        }
    }
    let summary = summarize(k_list, &results);
    let report = BenchmarkReport {
        config: config.clone(),
        k_list: k_list.to_vec(),
        use_variant: USE_VARIANT.to_string(),
        results,
        summary,
        skipped,
    };
    Ok((report, timings))
}

impl BenchmarkReport {
    /// Writes `results.json`, `results.csv` (one row per image and K) and
    /// `curves.csv` (mean metrics per K) into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| Error::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let json_path = dir.join("results.json");
        let json = serde_json::to_string_pretty(self).expect("report serializes");
        fs::write(&json_path, json + "\n").map_err(io(&json_path))?;
        write_csv(&dir.join("results.csv"), &self.results)?;
        write_csv(&dir.join("curves.csv"), &self.summary)
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let fmt = |e: csv::Error| Error::Format { path: path.to_path_buf(), detail: e.to_string() };
    let mut w = csv::Writer::from_path(path).map_err(fmt)?;
    for r in rows {
        w.serialize(r).map_err(fmt)?;
    }
    w.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })
}
