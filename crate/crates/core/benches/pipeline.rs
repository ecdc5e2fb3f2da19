use std::hint::black_box;
use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lcsseg::harness::benchmark;
use lcsseg::par::with_workers;
use lcsseg::pipeline::{segment_image, PipelineConfig};
use lcsseg::{extract_features, oversegment, FeatureOptions, ImageBuffer};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// `None` uses every core (or the sequential build without `parallel`), `Some(1)` pins one thread.
const MODES: [(&str, Option<usize>); 2] = [("all_threads", None), ("one_thread", Some(1))];

fn units(c: &mut Criterion) {
    let img = ImageBuffer::load(fixture("natural/astronaut.png")).unwrap();
    let mut g = c.benchmark_group("oversegment");
    for (mode, workers) in MODES {
        g.bench_with_input(BenchmarkId::new(mode, 300), &workers, |b, &w| {
            b.iter(|| with_workers(w, || oversegment(black_box(&img), 300, 0).unwrap()))
        });
    }
    g.finish();

    let u = oversegment(&img, 300, 0).unwrap();
    let mut g = c.benchmark_group("features");
    for (mode, workers) in MODES {
        g.bench_with_input(BenchmarkId::new(mode, 300), &workers, |b, &w| {
            b.iter(|| with_workers(w, || extract_features(black_box(&img), &u, FeatureOptions::default()).unwrap()))
        });
    }
    g.finish();
}

fn end_to_end(c: &mut Criterion) {
    let img = ImageBuffer::load(fixture("natural/coffee.png")).unwrap();
    let cfg = PipelineConfig::new(100);
    let mut g = c.benchmark_group("segment_image");
    g.sample_size(10);
    for (mode, workers) in MODES {
        g.bench_with_input(BenchmarkId::new(mode, 100), &workers, |b, &w| {
            b.iter(|| with_workers(w, || segment_image(black_box(&img), &cfg).unwrap()))
        });
    }
    g.finish();
}

fn dataset(c: &mut Criterion) {
    let dir = fixture("ablation");
    let cfg = PipelineConfig::new(16);
    let mut g = c.benchmark_group("benchmark_harness");
    g.sample_size(10);
    for (mode, workers) in MODES {
        g.bench_with_input(BenchmarkId::new(mode, "10x2"), &workers, |b, &w| {
            b.iter(|| benchmark(black_box(&dir), &cfg, &[8, 16], w).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, units, end_to_end, dataset);
criterion_main!(benches);
