//! Construction and evaluation benchmarks: dense vs sparse rank-revealing
//! pipelines across grid sizes (the sparse path should scale linearly in
//! N at fixed rank), plus chain evaluation throughput.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qtt_core::cheb::{ChebSystem, LocalInterpSystem};
use qtt_core::construct::{
    construct_basic, construct_rank_revealing, construct_rank_revealing_sparse, TruncationPolicy,
};
use qtt_core::oracle::FunctionOracle;

fn peak(alpha: f64) -> FunctionOracle {
    FunctionOracle::univariate(move |x| {
        let d = x - 0.5;
        alpha / (alpha * alpha + d * d).sqrt()
    })
}

fn bench_pipelines(c: &mut Criterion) {
    let mut group = c.benchmark_group("rank_revealing");
    group.sample_size(10);
    let depth = 18;
    let policy = TruncationPolicy::rank_cap(12);
    for n in [128usize, 256, 512] {
        group.bench_with_input(BenchmarkId::new("dense", n), &n, |b, &n| {
            let sys = ChebSystem::new(n).unwrap();
            b.iter(|| {
                let f = peak(0.05);
                construct_rank_revealing(&f, &sys, depth, &policy).unwrap()
            });
        });
        group.bench_with_input(BenchmarkId::new("sparse_m10", n), &n, |b, &n| {
            let sys = ChebSystem::new(n).unwrap();
            let lsys = LocalInterpSystem::new(sys, 10).unwrap();
            b.iter(|| {
                let f = peak(0.05);
                construct_rank_revealing_sparse(&f, &lsys, depth, &policy).unwrap()
            });
        });
    }
    group.finish();
}

fn bench_eval(c: &mut Criterion) {
    let mut group = c.benchmark_group("eval");
    group.sample_size(20);
    let depth = 20;
    let f = FunctionOracle::univariate(|x| (25.0 * x).sin());
    let sys = ChebSystem::new(32).unwrap();
    let (tt, _) = construct_basic(&f, &sys, depth).unwrap();
    let indices: Vec<Vec<usize>> = (0..1000u64)
        .map(|j| {
            let j = j.wrapping_mul(0x9e37_79b9_7f4a_7c15) >> (64 - depth as u32);
            (0..depth)
                .map(|k| ((j >> (depth - 1 - k)) & 1) as usize)
                .collect()
        })
        .collect();
    group.bench_function("eval_many_1000_points", |b| {
        b.iter(|| tt.eval_many(&indices).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_pipelines, bench_eval);
criterion_main!(benches);
