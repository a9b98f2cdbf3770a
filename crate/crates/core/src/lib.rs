//! Complex-stretched-grid (CSG) preconditioned Krylov solvers for the
//! Helmholtz equation with exterior complex scaling (ECS), and the spectral
//! machinery that predicts their convergence.
//!
//! Module map:
//!
//! * [`grid`]: ECS and CSG domains and their complex grids.
//! * [`operators`]: Shortley-Weller 1D and Kronecker-sum 2D operators.
//! * [`dense`]: LU solves and the dense nonsymmetric eigensolver.
//! * [`krylov`]: GMRES, FGMRES and the GMRES smoother.
//! * [`multigrid`]: V(1,1)-cycle on rediscretized CSG operators.
//! * [`spectral`]: continuous and discrete spectra, the preconditioned
//!   eigenvalue curve, Lambert-W and branch-point prediction.
//! * [`experiments`]: sweep drivers and CSV/JSON run records.

pub mod dense;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod krylov;
pub mod multigrid;
pub mod operators;
pub mod spectral;

pub use num_complex::Complex64 as C64;

pub use dense::{
    banded_lu_solve, dense_eigenvalues, dense_lu_solve, BandLu, DenseLu, DenseMatrix, EigenResult,
};
pub use error::{Error, Result};
pub use grid::{build_csg_grid, build_ecs_grid, ContourGrid, EcsDomain};
pub use krylov::{
    fgmres, gmres, gmres_right, gmres_smoother_step, KrylovOptions, LinearOperator, Preconditioner,
    SolveLog,
};
pub use multigrid::{Dims, MgHierarchy, MgOptions};
pub use operators::{
    assemble_helmholtz_1d, assemble_helmholtz_2d, assemble_neg_laplacian_1d, point_source_rhs,
    ComplexBandedMatrix, ComplexSparseMatrix,
};
pub use spectral::{DomainPair, SpectrumReport, SpectrumSource};
