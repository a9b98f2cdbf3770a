//! Benchmark fixtures on the standard test domain (`r = 1`, `R = 1.25`,
//! `theta_gamma = pi/6`, `theta_beta = 0.18`, `m = n / 4`).

use std::f64::consts::FRAC_PI_6;

use helmcsg::{
    assemble_helmholtz_1d, assemble_helmholtz_2d, assemble_neg_laplacian_1d, build_csg_grid,
    build_ecs_grid, point_source_rhs, ComplexSparseMatrix, DenseMatrix, DomainPair, EcsDomain, C64,
};

pub fn pair(n: usize) -> DomainPair {
    let ecs = EcsDomain::ecs(1.0, 1.25, FRAC_PI_6, n, (n / 4).max(1)).expect("valid domain");
    DomainPair::new(ecs, 0.18).expect("valid CSG angle")
}

/// Dense negative Laplacian on the ECS grid.
pub fn dense_laplacian(n: usize) -> DenseMatrix {
    let grid = build_ecs_grid(&pair(n).ecs).expect("grid");
    assemble_neg_laplacian_1d(&grid)
        .expect("operator")
        .to_dense()
}

/// 2D Helmholtz operator, CSG operator and point source.
pub struct Problem2d {
    pub pair: DomainPair,
    pub h: ComplexSparseMatrix,
    pub m: ComplexSparseMatrix,
    pub b: Vec<C64>,
}

pub fn problem_2d(n: usize, k: f64) -> Problem2d {
    let pair = pair(n);
    let ecs = build_ecs_grid(&pair.ecs).expect("grid");
    let csg = build_csg_grid(&pair.csg).expect("grid");
    Problem2d {
        h: assemble_helmholtz_2d(&ecs, k).expect("operator"),
        m: assemble_helmholtz_2d(&csg, k).expect("operator"),
        b: point_source_rhs(&ecs, 2).expect("source"),
        pair,
    }
}

/// 1D Helmholtz and CSG operators as dense matrices.
pub fn dense_pair_1d(n: usize, k: f64) -> (DenseMatrix, DenseMatrix) {
    let pair = pair(n);
    let h = assemble_helmholtz_1d(&build_ecs_grid(&pair.ecs).expect("grid"), k).expect("operator");
    let m = assemble_helmholtz_1d(&build_csg_grid(&pair.csg).expect("grid"), k).expect("operator");
    (h.to_dense(), m.to_dense())
}
