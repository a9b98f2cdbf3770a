use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use helmcsg::{
    dense_eigenvalues, fgmres, gmres_right, BandLu, DenseLu, Dims, KrylovOptions, MgHierarchy,
    MgOptions, C64,
};
use helmcsg_bench::{dense_laplacian, dense_pair_1d, problem_2d};

fn dense(c: &mut Criterion) {
    let a = dense_laplacian(64);
    c.bench_function("dense_eigenvalues n=64", |b| {
        b.iter(|| dense_eigenvalues(black_box(&a)).unwrap())
    });
    let (h, m) = dense_pair_1d(64, 16.4);
    c.bench_function("preconditioned spectrum n=64", |b| {
        b.iter(|| {
            let prod = DenseLu::factor(black_box(&m)).unwrap().solve_matrix(&h);
            dense_eigenvalues(&prod).unwrap()
        })
    });
}

fn banded(c: &mut Criterion) {
    let p = problem_2d(64, 16.4);
    c.bench_function("band LU factor 2D n=64", |b| {
        b.iter(|| BandLu::from_sparse(black_box(&p.m)).unwrap())
    });
    let lu = BandLu::from_sparse(&p.m).unwrap();
    c.bench_function("band LU solve 2D n=64", |b| {
        b.iter(|| lu.solve(black_box(&p.b)))
    });
}

fn krylov(c: &mut Criterion) {
    let opts = KrylovOptions::default();
    let p = problem_2d(64, 16.4);
    let lu = BandLu::from_sparse(&p.m).unwrap();
    let x0 = vec![C64::new(0.0, 0.0); p.b.len()];
    c.bench_function("gmres csg-exact 2D n=64", |b| {
        b.iter(|| gmres_right(&p.h, &lu, black_box(&p.b), &x0, &opts).unwrap())
    });
    let mg = MgHierarchy::build(&p.pair.csg, 16.4, Dims::Two, &MgOptions::default()).unwrap();
    c.bench_function("v-cycle 2D n=64", |b| {
        b.iter(|| mg.v_cycle(0, black_box(&p.b), &x0).unwrap())
    });
    let mut group = c.benchmark_group("slow");
    group.sample_size(10);
    group.bench_function("fgmres csg-mg 2D n=64", |b| {
        b.iter(|| fgmres(&p.h, &mg, black_box(&p.b), &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, dense, banded, krylov);
criterion_main!(benches);
