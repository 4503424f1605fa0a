//! Benchmarks for the exact Steiner solve, one full adaptive policy run,
//! and the exhaustive oracle. Instance construction stays outside the
//! timed loops.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use num::{BigInt, BigRational};

use rcds_core::{
    fixture_tri_branch, generate, optimal_wavg, run_greedy, run_polymatroid_policy, Family,
    FeedbackModel, GeneratorConfig, Graph, ScenarioSet, solve_min_weight_cds,
};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn unit_disk(n: usize, m: usize, seed: u64) -> (Graph, ScenarioSet) {
    let cfg = GeneratorConfig::new(Family::UnitDisk, n, m, seed);
    generate(&cfg).expect("benchmark instance")
}

fn bench_min_weight_cds(c: &mut Criterion) {
    let (g, _) = unit_disk(14, 2, 42);
    let domain = g.all_nodes();
    c.bench_function("min_weight_cds_unit_disk_14", |b| {
        b.iter(|| {
            solve_min_weight_cds(black_box(&g), black_box(&domain), &domain, None)
                .expect("solvable")
        })
    });
}

fn bench_policy_run(c: &mut Criterion) {
    let (g, s) = unit_disk(14, 4, 42);
    c.bench_function("polymatroid_policy_unit_disk_14", |b| {
        b.iter(|| {
            run_polymatroid_policy(
                black_box(&g),
                black_box(&s),
                FeedbackModel::Full,
                s.scenario(0),
                None,
            )
            .expect("policy run")
        })
    });
    c.bench_function("greedy_policy_unit_disk_14", |b| {
        b.iter(|| {
            run_greedy(
                black_box(&g),
                black_box(&s),
                FeedbackModel::Full,
                s.scenario(0),
            )
            .expect("greedy run")
        })
    });
}

fn bench_oracle(c: &mut Criterion) {
    let (g, s) = fixture_tri_branch(&rat(1, 1), &rat(2, 1), &rat(3, 1)).expect("fixture");
    c.bench_function("oracle_tri_branch", |b| {
        b.iter(|| optimal_wavg(black_box(&g), black_box(&s), FeedbackModel::Full).expect("oracle"))
    });
}

criterion_group!(benches, bench_min_weight_cds, bench_policy_run, bench_oracle);
criterion_main!(benches);
