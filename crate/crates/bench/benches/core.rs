use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use persgrad::classifiers::train;
use persgrad::flow::{entropy_loss_and_gradient, evolve, vanilla_loss_and_gradient, FlowConfig};
use persgrad::pipeline::{extract_features, FeatureMode};
use persgrad::{pairwise_distances, vr_persistence, vr_persistence_h0, ModelSpec};
use persgrad_bench::{blobs, planar};

fn h0(c: &mut Criterion) {
    let mut g = c.benchmark_group("h0_persistence");
    for n in [100, 500] {
        let dm = pairwise_distances(&blobs(n, 1).cloud);
        g.bench_with_input(BenchmarkId::from_parameter(n), &dm, |b, dm| {
            b.iter(|| vr_persistence_h0(black_box(dm)))
        });
    }
    g.finish();
}

fn rips_h1(c: &mut Criterion) {
    let mut g = c.benchmark_group("rips_h1");
    g.sample_size(20);
    for n in [30, 60] {
        let dm = pairwise_distances(&planar(n, 2));
        g.bench_with_input(BenchmarkId::from_parameter(n), &dm, |b, dm| {
            b.iter(|| vr_persistence(black_box(dm), 1).unwrap())
        });
    }
    g.finish();
}

fn gradients(c: &mut Criterion) {
    let cloud = blobs(200, 3).cloud;
    c.bench_function("entropy_gradient_h0_n200", |b| {
        b.iter(|| entropy_loss_and_gradient(black_box(&cloud), &[0]).unwrap())
    });
    c.bench_function("vanilla_gradient_n200", |b| {
        b.iter(|| vanilla_loss_and_gradient(black_box(&cloud)))
    });
}

fn flows(c: &mut Criterion) {
    let mut g = c.benchmark_group("flow_30_cycles_n500");
    g.sample_size(10);
    let cloud = blobs(500, 4).cloud;
    g.bench_function("topo", |b| b.iter(|| evolve(black_box(&cloud), &FlowConfig::default()).unwrap()));
    g.bench_function("vanilla", |b| b.iter(|| evolve(black_box(&cloud), &FlowConfig::vanilla()).unwrap()));
    g.finish();
}

fn forest(c: &mut Criterion) {
    let ds = blobs(400, 5);
    let x = extract_features(&ds.cloud, &FeatureMode::default()).unwrap();
    let mut g = c.benchmark_group("train_n400");
    g.sample_size(10);
    for kind in ["rf", "gb", "lr"] {
        let spec = ModelSpec::from_short_name(kind).unwrap();
        g.bench_function(kind, |b| b.iter(|| train(black_box(&x), &ds.labels, &spec, 0).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, h0, rips_h1, gradients, flows, forest);
criterion_main!(benches);
