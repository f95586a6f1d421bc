//! Sequential vs. parallel batch feature extraction and prediction.

use std::hint::black_box;
use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use simpgate::classifiers::{predict_batch, SvmModel, SvmParams};
use simpgate::corpus::{load_annotated, load_parallel, AnnotatedPair};
use simpgate::features::extract_batch;
use simpgate::lexicon::Model1Config;
use simpgate::par::Execution;
use simpgate::resources::train_resources;

const REPLICAS: usize = 40;

fn modes() -> Vec<(&'static str, Execution)> {
    let mut m = vec![("sequential", Execution::Sequential)];
    if Execution::available() {
        m.push(("parallel", Execution::Parallel));
    }
    m
}

fn batch(c: &mut Criterion) {
    let toy = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/toy");
    let corpus = load_parallel(toy.join("parallel.src"), toy.join("parallel.tgt")).unwrap();
    let res = train_resources(&corpus, Model1Config::default(), "bench").unwrap();
    let base = load_annotated(toy.join("train.jsonl")).unwrap();
    let pairs: Vec<AnnotatedPair> = (0..REPLICAS).flat_map(|_| base.iter().cloned()).collect();

    let matrix = extract_batch(&res, &pairs, Execution::Sequential).unwrap();
    let rows = matrix.to_vecs();
    let model = SvmModel::train(&rows, &matrix.labels, SvmParams::default()).unwrap();

    let mut g = c.benchmark_group("extract_batch");
    g.throughput(Throughput::Elements(pairs.len() as u64));
    for (name, mode) in modes() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| extract_batch(black_box(&res), black_box(&pairs), mode).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("predict_batch");
    g.throughput(Throughput::Elements(rows.len() as u64));
    for (name, mode) in modes() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| predict_batch(black_box(&model), black_box(&rows), mode).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, batch);
criterion_main!(benches);
