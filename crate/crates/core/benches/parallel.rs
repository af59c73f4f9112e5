use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::ThreadPoolBuilder;
use tvnewton::alm::{self, AlmParams};
use tvnewton::problems::{make_problem, AlphaChoice, OperatorKind, ProblemConfig};
use tvnewton::vecops;

fn vectors(c: &mut Criterion) {
    let n = 1 << 21;
    let a: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
    let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.11).cos()).collect();
    let mut g = c.benchmark_group("dot");
    g.bench_function("seq", |bench| bench.iter(|| vecops::seq::dot(black_box(&a), black_box(&b))));
    g.bench_function("par", |bench| bench.iter(|| vecops::par::dot(black_box(&a), black_box(&b))));
    g.finish();
    let mut y = b.clone();
    let mut g = c.benchmark_group("axpy");
    g.bench_function("seq", |bench| bench.iter(|| vecops::seq::axpy(1e-9, black_box(&a), &mut y)));
    g.bench_function("par", |bench| bench.iter(|| vecops::par::axpy(1e-9, black_box(&a), &mut y)));
    g.finish();
}

fn thread_counts() -> Vec<usize> {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get());
    if all > 1 {
        vec![1, all]
    } else {
        vec![1]
    }
}

fn radon_problem(n: usize) -> ProblemConfig {
    ProblemConfig {
        n_row: n,
        n_col: n,
        n_angles: 60,
        alpha: Some(AlphaChoice::Value(1.0)),
        ..ProblemConfig::default()
    }
}

fn operators(c: &mut Criterion) {
    let gen = make_problem(&radon_problem(128)).unwrap();
    let a = gen.problem.forward();
    let x: Vec<f64> = (0..a.domain_dim()).map(|i| (i % 7) as f64).collect();
    let y = a.apply(&x);
    let mut g = c.benchmark_group("radon128");
    for threads in thread_counts() {
        let pool = ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        g.bench_with_input(BenchmarkId::new("apply", threads), &threads, |bench, _| {
            bench.iter(|| pool.install(|| a.apply(black_box(&x))))
        });
        g.bench_with_input(BenchmarkId::new("adjoint", threads), &threads, |bench, _| {
            bench.iter(|| pool.install(|| a.adjoint(black_box(&y))))
        });
    }
    g.finish();
}

fn solve(c: &mut Criterion) {
    let cfg = ProblemConfig {
        operator: OperatorKind::Blur,
        n_row: 48,
        n_col: 48,
        alpha: Some(AlphaChoice::Value(0.01)),
        ..ProblemConfig::default()
    };
    let p = make_problem(&cfg).unwrap().problem;
    let params = AlmParams {
        eps_opt: 1e-6,
        ..AlmParams::default()
    };
    let (x0, zs0) = (vec![0.0; p.n()], vec![0.0; p.l()]);
    let mut g = c.benchmark_group("alm_blur48");
    g.sample_size(10);
    for threads in thread_counts() {
        let pool = ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(threads), &threads, |bench, _| {
            bench.iter(|| pool.install(|| alm::solve(&p, &x0, &zs0, &params, None).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, vectors, operators, solve);
criterion_main!(benches);
