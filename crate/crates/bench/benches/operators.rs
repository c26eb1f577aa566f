use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use semiclass::operators::{assemble_kappa, assemble_rho, operator_norm, power_iteration, RhoOperator};
use semiclass::symbolics::catalogue::parse_kernel;
use semiclass::toeplitz::{cayley_symbol, toeplitz_assemble};
use semiclass::{Domain, NormMethod, NormOptions};
use semiclass_bench::{finest_hbar, gaussian, grid};

fn assembly(c: &mut Criterion) {
    let f = gaussian();
    let k = parse_kernel("rank1:alpha=1,beta=1").unwrap();
    let mut group = c.benchmark_group("assemble");
    group.sample_size(10);
    for n in [256, 512, 1024] {
        let g = grid(Domain::HalfSpace, n);
        let h = finest_hbar(&g, &f);
        group.bench_with_input(BenchmarkId::new("rho", n), &n, |b, _| b.iter(|| assemble_rho(&f, h, &g).unwrap()));
        let h = 8.0 * g.max_spacing() / k.decay_radius();
        group.bench_with_input(BenchmarkId::new("kappa", n), &n, |b, _| b.iter(|| assemble_kappa(&k, h, &g).unwrap()));
    }
    group.finish();
}

fn norms(c: &mut Criterion) {
    let f = gaussian();
    let mut group = c.benchmark_group("norm");
    group.sample_size(10);
    for n in [256, 512, 1024] {
        let g = grid(Domain::FullSpace, n);
        let a = assemble_rho(&f, finest_hbar(&g, &f), &g).unwrap();
        group.bench_with_input(BenchmarkId::new("svd", n), &n, |b, _| {
            b.iter(|| operator_norm(black_box(&a), NormMethod::Svd, 1e-8).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("power", n), &n, |b, _| {
            b.iter(|| operator_norm(black_box(&a), NormMethod::PowerIteration, 1e-8).unwrap())
        });
    }
    let g = grid(Domain::FullSpace, 4096);
    let op = RhoOperator::new(&f, finest_hbar(&g, &f), &g).unwrap();
    group.bench_function("matrix-free/4096", |b| b.iter(|| power_iteration(&op, &NormOptions::default()).unwrap()));
    group.finish();
}

fn toeplitz(c: &mut Criterion) {
    let f = gaussian();
    let mut group = c.benchmark_group("toeplitz");
    group.sample_size(10);
    group.bench_function("cayley/1024", |b| b.iter(|| cayley_symbol(&f, 1024).unwrap()));
    let phi = cayley_symbol(&f, 1024).unwrap();
    for n in [128, 256, 512] {
        group.bench_with_input(BenchmarkId::new("section-norm", n), &n, |b, &n| {
            b.iter(|| toeplitz_assemble(&phi, n).unwrap().norm().unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, assembly, norms, toeplitz);
criterion_main!(benches);
