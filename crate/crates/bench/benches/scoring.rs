use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use reason_eval::{evaluate, reason_trajectory_score, simplex_sweep, ReasonKind};
use reason_eval_bench::{default_scene, default_scores};

fn bench_evaluate(c: &mut Criterion) {
    let p = default_scene();
    c.bench_function("evaluate_default_candidates", |b| {
        b.iter(|| {
            evaluate(
                &p.context,
                black_box(&p.candidates),
                &p.environment,
                &p.agents,
                &p.weights,
                1e-9,
            )
            .unwrap()
        })
    });
    c.bench_function("cyclist_reason_single_trajectory", |b| {
        b.iter(|| {
            reason_trajectory_score(
                &p.context,
                black_box(&p.candidates[0]),
                &p.environment,
                ReasonKind::CyclistSafetyComfort,
            )
            .unwrap()
        })
    });
}

fn bench_sweep(c: &mut Criterion) {
    let scores = default_scores();
    let w_star = [1.0 / 3.0; 3];
    let mut group = c.benchmark_group("sweep");
    for resolution in [20usize, 100] {
        group.bench_function(format!("resolution_{resolution}"), |b| {
            b.iter(|| simplex_sweep(black_box(&scores), &w_star, resolution, 1e-6).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_evaluate, bench_sweep);
criterion_main!(benches);
