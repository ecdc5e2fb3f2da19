use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lcsseg::harness::benchmark;
use lcsseg::labels::LabelGrid;
use lcsseg::metrics::{evaluate_multi, GroundTruth};
use lcsseg::overlay::{render_overlay, DEFAULT_COLOR};
use lcsseg::pipeline::{segment_image, PipelineConfig, SegmentReport};
use lcsseg::{Error, ImageBuffer};

#[derive(Parser)]
#[command(name = "lcsseg", version, about = "Superpixels by locality-constrained sparse subspace clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment one image into K superpixels.
    Segment(SegmentArgs),
    /// Segment and score every image of a dataset directory.
    Benchmark(BenchmarkArgs),
    /// Draw the boundaries of an existing label map over an image.
    Overlay(OverlayArgs),
}

/// Pipeline settings shared by `segment` and `benchmark`. Flags override the
/// config file, which overrides built-in defaults.
#[derive(Args)]
struct ConfigArgs {
    /// TOML file with pipeline settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Raw units per superpixel.
    #[arg(long)]
    ratio: Option<f64>,
    /// Spatial weight of the unit K-means.
    #[arg(long)]
    compactness: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Boundary-recall tolerance in pixels.
    #[arg(long)]
    br_tol: Option<usize>,
    /// Drop the texture feature rows.
    #[arg(long)]
    no_texture: bool,
}

impl ConfigArgs {
    fn resolve(&self, k: usize) -> Result<PipelineConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.clone(), source })?;
                toml::from_str(&text).map_err(|e| Error::Format { path: path.clone(), detail: e.to_string() })?
            }
            None => PipelineConfig::default(),
        };
        cfg.k_superpixels = k;
        if let Some(v) = self.ratio {
            cfg.unit_ratio = v;
        }
        if let Some(v) = self.compactness {
            cfg.compactness = v;
        }
        if let Some(v) = self.lambda1 {
            cfg.admm.lambda1 = v;
        }
        if let Some(v) = self.lambda2 {
            cfg.admm.lambda2 = v;
        }
        if let Some(v) = self.max_iters {
            cfg.admm.max_iters = v;
        }
        if let Some(v) = self.tol {
            cfg.admm.tol = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.br_tol {
            cfg.br_tolerance = v;
        }
        if self.no_texture {
            cfg.features.texture = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long)]
    image: PathBuf,
    /// Requested number of superpixels.
    #[arg(long)]
    k: usize,
    /// Label map output (`.csv` for CSV, otherwise 16-bit PNG).
    #[arg(long)]
    out: PathBuf,
    /// Boundary overlay output.
    #[arg(long)]
    overlay: Option<PathBuf>,
    /// JSON report path (defaults to the label map path with a `.json` extension).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Optional JSON file for per-stage wall-clock timings.
    #[arg(long)]
    timing: Option<PathBuf>,
    /// Ground-truth label maps to score against.
    #[arg(long = "gt")]
    ground_truths: Vec<PathBuf>,
    #[command(flatten)]
    settings: ConfigArgs,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Comma-separated superpixel counts.
    #[arg(long, value_delimiter = ',', required = true)]
    k_list: Vec<usize>,
    /// Output directory for results.json, results.csv and curves.csv.
    #[arg(long)]
    out: PathBuf,
    /// Images processed concurrently (defaults to all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    settings: ConfigArgs,
}

#[derive(Args)]
struct OverlayArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Boundary colour as R,G,B.
    #[arg(long, value_delimiter = ',')]
    color: Option<Vec<u8>>,
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn run_segment(args: &SegmentArgs) -> Result<(), Error> {
    let config = args.settings.resolve(args.k).map_err(|e| e.in_stage("config"))?;
    let image = ImageBuffer::load(&args.image).map_err(|e| e.in_stage("load"))?;
    let run = segment_image(&image, &config)?;
    let metrics = if args.ground_truths.is_empty() {
        None
    } else {
        let gts = args
            .ground_truths
            .iter()
            .map(|p| LabelGrid::load(p).map(GroundTruth::new))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.in_stage("ground truth"))?;
        Some(evaluate_multi(run.labeling.grid(), &gts, config.br_tolerance).map_err(|e| e.in_stage("metrics"))?)
    };

    run.labeling.grid().save(&args.out).map_err(|e| e.in_stage("write"))?;
    if let Some(path) = &args.overlay {
        let img = render_overlay(&image, run.labeling.grid(), DEFAULT_COLOR)?;
        img.save(path).map_err(|source| Error::Image { path: path.clone(), source }.in_stage("write"))?;
    }
    let report = SegmentReport {
        image: args.image.display().to_string(),
        width: image.width(),
        height: image.height(),
        config,
        unit_count: run.unit_count,
        realized_k: run.labeling.realized_k(),
        solve: run.report,
        metrics,
    };
    let report_path = args.report.clone().unwrap_or_else(|| args.out.with_extension("json"));
    write_json(&report_path, &report).map_err(|e| e.in_stage("write"))?;
    if let Some(path) = &args.timing {
        write_json(path, &run.timing).map_err(|e| e.in_stage("write"))?;
    }
    println!("{} superpixels from {} units -> {}", report.realized_k, report.unit_count, args.out.display());
    Ok(())
}

fn run_benchmark(args: &BenchmarkArgs) -> Result<(), Error> {
    let config = args.settings.resolve(args.k_list[0]).map_err(|e| e.in_stage("config"))?;
    let (report, timings) = benchmark(&args.dataset, &config, &args.k_list, args.workers)?;
    report.write(&args.out).map_err(|e| e.in_stage("write"))?;
    write_json(&args.out.join("timing.json"), &timings).map_err(|e| e.in_stage("write"))?;
    for s in &report.summary {
        println!("K={:<5} images={:<4} ASA={:.4} BR={:.4} USE={:.4}", s.k, s.images, s.asa, s.br, s.use_);
    }
    if !report.skipped.is_empty() {
        eprintln!("skipped {} item(s); see results.json", report.skipped.len());
    }
    Ok(())
}

fn run_overlay(args: &OverlayArgs) -> Result<(), Error> {
    let color = match args.color.as_deref() {
        None => DEFAULT_COLOR,
        Some([r, g, b]) => [*r, *g, *b],
        Some(other) => return Err(Error::InvalidInput(format!("--color needs three values, got {}", other.len()))),
    };
    let labels = LabelGrid::load(&args.labels)?;
    lcsseg::overlay::render_overlay_file(&args.image, &labels, &args.out, color)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Segment(a) => run_segment(a),
        Command::Benchmark(a) => run_benchmark(a),
        Command::Overlay(a) => run_overlay(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
