use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kpos_bench::{fixtures, random_psd_matrix};
use kpos_core::sdp::{decomposability_d, f_relaxation, kyfan_sdp, ppt2_joint, SolverOptions};
use kpos_core::seeds::lambda_tilde;
use kpos_core::Tolerances;

fn decomposability(c: &mut Criterion) {
    let tols = Tolerances::default();
    let mut group = c.benchmark_group("decomposability");
    group.sample_size(10);
    for (name, map) in fixtures() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &map, |b, m| {
            b.iter(|| decomposability_d(m, &tols).unwrap())
        });
    }
    group.finish();
}

fn relaxations(c: &mut Criterion) {
    let opts = SolverOptions::with_tol(Tolerances::default().solver_tol);
    let mut group = c.benchmark_group("relaxations");
    group.sample_size(10);
    let map = lambda_tilde();
    for k in 1..=2 {
        group.bench_with_input(BenchmarkId::new("f_relaxation", k), &k, |b, &k| {
            b.iter(|| f_relaxation(&map, k, opts).unwrap())
        });
    }
    for n in [4, 6] {
        let m = random_psd_matrix(n, n as u64);
        group.bench_with_input(BenchmarkId::new("kyfan", n), &m, |b, m| {
            b.iter(|| kyfan_sdp(m, n / 2, opts).unwrap())
        });
    }
    group.bench_function("ppt2_joint/lambda_tilde", |b| {
        b.iter(|| ppt2_joint(&map, 3.0, &Tolerances::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, decomposability, relaxations);
criterion_main!(benches);
