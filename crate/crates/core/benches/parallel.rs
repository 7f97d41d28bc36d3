//! Sequential versus data-parallel execution of the three hot loops:
//! enrollment, impostor scoring and population fitness.
//!
//! Build with `--no-default-features` to check that the parallel variant
//! degrades to the sequential one.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lve_core::engine::{Fitness, FitnessKind};
use lve_core::exec::{worker_count, Execution};
use lve_core::gallery::{enroll, impostor_scores, threshold_for_fmr, Gallery};
use lve_core::generator::{fixtures, random_latents};
use lve_core::matcher::Matcher;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn benches(c: &mut Criterion) {
    eprintln!("parallel workers: {}", worker_count());
    let gallery = Gallery::synthetic(20, 6, 1);
    let prepared = enroll(&gallery, Execution::Parallel).prepare(&Matcher::default(), Execution::Parallel);
    let impostors = impostor_scores(&prepared, 5_000, 0, Execution::Parallel).unwrap();
    let threshold = threshold_for_fmr(&impostors.scores, 0.01, "default").unwrap();
    let model = fixtures::ridge_generator(1, 128);
    let population = random_latents(model.latent_dim(), 17, 3);
    let fitness = Fitness::new(&model, &prepared, &threshold, FitnessKind::Count).unwrap();

    let mut group = c.benchmark_group("enroll_120_partials");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| enroll(&gallery, mode)));
    }
    group.finish();

    let mut group = c.benchmark_group("impostor_scores_5000_pairs");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| impostor_scores(&prepared, 5_000, 0, mode).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("population_fitness_17");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| mode.map_slice(&population, |z| fitness.evaluate(z.values()).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(parallel, benches);
criterion_main!(parallel);
