//! Full-memory GMRES and flexible GMRES over abstract complex operators.
//!
//! Both methods use modified Gram-Schmidt Arnoldi and Givens rotations for
//! the small least-squares problem. Convergence is judged on the recurrence
//! residual relative to `||b||`; the true residual is checked once at the end.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dense::{BandLu, DenseLu, DenseMatrix};
use crate::error::{Error, Result};
use crate::operators::{ComplexBandedMatrix, ComplexSparseMatrix};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// A square linear map `y = A x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);
    fn label(&self) -> &str {
        "operator"
    }
}

impl LinearOperator for ComplexBandedMatrix {
    fn dim(&self) -> usize {
        self.order()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matvec(x, y)
    }
}

impl LinearOperator for ComplexSparseMatrix {
    fn dim(&self) -> usize {
        self.order()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matvec(x, y)
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.copy_from_slice(&self.matvec(x));
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        (**self).apply(x, y)
    }
    fn label(&self) -> &str {
        (**self).label()
    }
}

/// Wraps a closure as a [`LinearOperator`].
pub struct FnOperator<F> {
    dim: usize,
    f: F,
    label: String,
}

impl<F: Fn(&[C64], &mut [C64])> FnOperator<F> {
    pub fn new(dim: usize, label: impl Into<String>, f: F) -> Self {
        Self {
            dim,
            f,
            label: label.into(),
        }
    }
}

impl<F: Fn(&[C64], &mut [C64])> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        (self.f)(x, y)
    }
    fn label(&self) -> &str {
        &self.label
    }
}

/// Approximate inverse action `z = M^{-1} r`. May vary between calls.
pub trait Preconditioner {
    fn precondition(&self, r: &[C64], z: &mut [C64]) -> Result<()>;
}

/// `M = I`.
pub struct Identity;

impl Preconditioner for Identity {
    fn precondition(&self, r: &[C64], z: &mut [C64]) -> Result<()> {
        z.copy_from_slice(r);
        Ok(())
    }
}

impl Preconditioner for BandLu {
    fn precondition(&self, r: &[C64], z: &mut [C64]) -> Result<()> {
        z.copy_from_slice(r);
        self.solve_in_place(z);
        Ok(())
    }
}

impl Preconditioner for DenseLu {
    fn precondition(&self, r: &[C64], z: &mut [C64]) -> Result<()> {
        z.copy_from_slice(r);
        self.solve_in_place(z);
        Ok(())
    }
}

impl<F: Fn(&[C64], &mut [C64]) -> Result<()>> Preconditioner for F {
    fn precondition(&self, r: &[C64], z: &mut [C64]) -> Result<()> {
        self(r, z)
    }
}

/// Solver settings shared by [`gmres`] and [`fgmres`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrylovOptions {
    pub max_iter: usize,
    pub rel_tol: f64,
    /// Second Gram-Schmidt pass.
    pub reorthogonalize: bool,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            rel_tol: 1e-6,
            reorthogonalize: false,
        }
    }
}

/// Iteration history of one Krylov solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveLog {
    /// `||r_0||, ||r_1||, ...` from the Arnoldi recurrence.
    pub residual_norms: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Geometric mean of `||r_{i+1}|| / ||r_i||`.
    pub avg_rate: f64,
    /// `||b - A x|| / ||b||` evaluated after the last iteration.
    pub true_relative_residual: f64,
}

impl SolveLog {
    fn finish(residual_norms: Vec<f64>, converged: bool, true_rel: f64) -> Self {
        let iterations = residual_norms.len().saturating_sub(1);
        let avg_rate = match (residual_norms.first(), residual_norms.last()) {
            (Some(&r0), Some(&rn)) if iterations > 0 && r0 > 0.0 => (rn / r0)
                .powf(1.0 / iterations as f64)
                .max(f64::MIN_POSITIVE),
            _ => 1.0,
        };
        Self {
            residual_norms,
            iterations,
            converged,
            avg_rate,
            true_relative_residual: true_rel,
        }
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        Err(Error::DimensionMismatch { expected, got })
    } else {
        Ok(())
    }
}

fn relative_residual<A: LinearOperator + ?Sized>(a: &A, b: &[C64], x: &[C64], bnorm: f64) -> f64 {
    let mut ax = vec![ZERO; b.len()];
    a.apply(x, &mut ax);
    let r: f64 = ax
        .iter()
        .zip(b)
        .map(|(p, q)| (q - p).norm_sqr())
        .sum::<f64>()
        .sqrt();
    r / bnorm
}

/// How the search direction is formed from the Arnoldi vector.
enum Precond<'a> {
    None,
    /// Fixed right preconditioner; the solution is `x0 + M^{-1} V y`.
    Right(&'a dyn Preconditioner),
    /// Flexible; the preconditioned vectors `Z` are stored.
    Flexible(&'a dyn Preconditioner),
}

struct ArnoldiOutcome {
    x: Vec<C64>,
    residuals: Vec<f64>,
    /// Recurrence residual reached the tolerance or broke down luckily.
    reached: bool,
    breakdown_at: Option<usize>,
}

/// Core Arnoldi-GMRES loop. `tol_abs = 0` disables early exit.
fn arnoldi<A: LinearOperator + ?Sized>(
    a: &A,
    precond: Precond<'_>,
    b: &[C64],
    x0: &[C64],
    max_iter: usize,
    tol_abs: f64,
    reorth: bool,
) -> Result<ArnoldiOutcome> {
    let n = a.dim();
    let mut r = vec![ZERO; n];
    a.apply(x0, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let beta = norm(&r);
    let mut residuals = vec![beta];
    if beta == 0.0 || beta <= tol_abs {
        return Ok(ArnoldiOutcome {
            x: x0.to_vec(),
            residuals,
            reached: true,
            breakdown_at: None,
        });
    }

    let mut v: Vec<Vec<C64>> = Vec::with_capacity(max_iter + 1);
    let mut z: Vec<Vec<C64>> = Vec::new();
    v.push(r.iter().map(|ri| ri / beta).collect());
    // Hessenberg columns, rotated in place.
    let mut hcols: Vec<Vec<C64>> = Vec::with_capacity(max_iter);
    let mut rot: Vec<(f64, C64)> = Vec::with_capacity(max_iter);
    let mut g = vec![C64::new(beta, 0.0)];
    let mut reached = false;
    let mut breakdown_at = None;
    let mut w = vec![ZERO; n];
    let mut tmp = vec![ZERO; n];

    for j in 0..max_iter {
        match precond {
            Precond::None => a.apply(&v[j], &mut w),
            Precond::Right(m) => {
                m.precondition(&v[j], &mut tmp)?;
                a.apply(&tmp, &mut w);
            }
            Precond::Flexible(m) => {
                m.precondition(&v[j], &mut tmp)?;
                check_dim(n, tmp.len())?;
                a.apply(&tmp, &mut w);
                z.push(tmp.clone());
            }
        }
        let mut h = vec![ZERO; j + 2];
        let passes = if reorth { 2 } else { 1 };
        for _ in 0..passes {
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(vi, &w);
                h[i] += hij;
                axpy(-hij, vi, &mut w);
            }
        }
        let wn = norm(&w);
        h[j + 1] = C64::new(wn, 0.0);

        for (i, &(c, s)) in rot.iter().enumerate() {
            let (p, q) = (h[i], h[i + 1]);
            h[i] = c * p + s * q;
            h[i + 1] = -s.conj() * p + c * q;
        }
        let (c, s) = crate::dense::givens(h[j], h[j + 1]);
        let (p, q) = (h[j], h[j + 1]);
        h[j] = c * p + s * q;
        h[j + 1] = ZERO;
        rot.push((c, s));
        let gj = g[j];
        g[j] = c * gj;
        g.push(-s.conj() * gj);
        hcols.push(h);

        let res = g[j + 1].norm();
        residuals.push(res);
        if res <= tol_abs {
            reached = true;
            break;
        }
        let hnorm: f64 = hcols[j].iter().map(|x| x.norm()).fold(0.0, f64::max);
        if wn <= 1e-14 * hnorm.max(beta * f64::EPSILON) {
            breakdown_at = Some(j + 1);
            reached = true;
            break;
        }
        v.push(w.iter().map(|wi| wi / wn).collect());
    }

    // Back substitution on the rotated upper-triangular system.
    let k = hcols.len();
    let mut y = vec![ZERO; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for (jj, yj) in y.iter().enumerate().skip(i + 1) {
            s -= hcols[jj][i] * yj;
        }
        y[i] = if hcols[i][i] == ZERO {
            ZERO
        } else {
            s / hcols[i][i]
        };
    }
    let mut x = x0.to_vec();
    match precond {
        Precond::None => {
            for (yi, vi) in y.iter().zip(&v) {
                axpy(*yi, vi, &mut x);
            }
        }
        Precond::Right(m) => {
            let mut u = vec![ZERO; n];
            for (yi, vi) in y.iter().zip(&v) {
                axpy(*yi, vi, &mut u);
            }
            m.precondition(&u, &mut tmp)?;
            axpy(C64::new(1.0, 0.0), &tmp, &mut x);
        }
        Precond::Flexible(_) => {
            for (yi, zi) in y.iter().zip(&z) {
                axpy(*yi, zi, &mut x);
            }
        }
    }
    Ok(ArnoldiOutcome {
        x,
        residuals,
        reached,
        breakdown_at,
    })
}

fn run<A: LinearOperator + ?Sized>(
    a: &A,
    precond: Precond<'_>,
    b: &[C64],
    x0: &[C64],
    opts: &KrylovOptions,
) -> Result<(Vec<C64>, SolveLog)> {
    let n = a.dim();
    check_dim(n, b.len())?;
    check_dim(n, x0.len())?;
    if opts.rel_tol.is_nan() || opts.rel_tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "rel_tol must be > 0, got {}",
            opts.rel_tol
        )));
    }
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((vec![ZERO; n], SolveLog::finish(vec![0.0], true, 0.0)));
    }
    let out = arnoldi(
        a,
        precond,
        b,
        x0,
        opts.max_iter,
        opts.rel_tol * bnorm,
        opts.reorthogonalize,
    )?;
    let last = *out.residuals.last().unwrap() / bnorm;
    if let Some(it) = out.breakdown_at {
        if last > opts.rel_tol {
            return Err(Error::Breakdown {
                iteration: it,
                residual: last,
            });
        }
    }
    let true_rel = relative_residual(a, b, &out.x, bnorm);
    let converged = out.reached && true_rel <= 10.0 * opts.rel_tol;
    Ok((out.x, SolveLog::finish(out.residuals, converged, true_rel)))
}

/// Unpreconditioned full-memory GMRES from the initial guess `x0`.
pub fn gmres<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[C64],
    x0: &[C64],
    opts: &KrylovOptions,
) -> Result<(Vec<C64>, SolveLog)> {
    run(a, Precond::None, b, x0, opts)
}

/// Right-preconditioned GMRES for a fixed preconditioner; the residual is
/// that of the original system.
pub fn gmres_right<A: LinearOperator + ?Sized, M: Preconditioner + ?Sized>(
    a: &A,
    m: &M,
    b: &[C64],
    x0: &[C64],
    opts: &KrylovOptions,
) -> Result<(Vec<C64>, SolveLog)> {
    let m: &dyn Preconditioner = &DynRef(m);
    run(a, Precond::Right(m), b, x0, opts)
}

/// Flexible GMRES from a zero initial guess. The preconditioner may change
/// from one application to the next.
pub fn fgmres<A: LinearOperator + ?Sized, M: Preconditioner + ?Sized>(
    a: &A,
    m: &M,
    b: &[C64],
    opts: &KrylovOptions,
) -> Result<(Vec<C64>, SolveLog)> {
    let x0 = vec![ZERO; a.dim()];
    let m: &dyn Preconditioner = &DynRef(m);
    run(a, Precond::Flexible(m), b, &x0, opts)
}

struct DynRef<'a, M: ?Sized>(&'a M);

impl<M: Preconditioner + ?Sized> Preconditioner for DynRef<'_, M> {
    fn precondition(&self, r: &[C64], z: &mut [C64]) -> Result<()> {
        self.0.precondition(r, z)
    }
}

/// `steps` GMRES iterations on `A e = b - A x` from `e = 0`; returns `x + e`.
/// Breakdown counts as exact convergence.
pub fn gmres_smoother_step<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[C64],
    x: &[C64],
    steps: usize,
) -> Result<Vec<C64>> {
    let n = a.dim();
    check_dim(n, b.len())?;
    check_dim(n, x.len())?;
    if steps == 0 {
        return Err(Error::InvalidArgument(
            "smoother needs at least one step".into(),
        ));
    }
    let out = arnoldi(a, Precond::None, b, x, steps, 0.0, false)?;
    Ok(out.x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn rand_vec(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    fn rand_matrix(n: usize, seed: u64, shift: f64) -> DenseMatrix {
        let v = rand_vec(n * n, seed);
        DenseMatrix::from_fn(n, n, |i, j| {
            v[i * n + j] + if i == j { c(shift) } else { ZERO }
        })
    }

    #[test]
    fn identity_in_one_iteration() {
        let a = DenseMatrix::identity(6);
        let b = rand_vec(6, 1);
        let (x, log) = gmres(&a, &b, &[ZERO; 6], &KrylovOptions::default()).unwrap();
        assert_eq!(log.iterations, 1);
        assert!(log.converged);
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).norm() < 1e-14);
        }
    }

    #[test]
    fn diagonal_finite_termination() {
        let a = DenseMatrix::from_diagonal(&[c(1.0), c(2.0), c(3.0), c(4.0)]);
        let opts = KrylovOptions {
            rel_tol: 1e-12,
            ..Default::default()
        };
        let (x, log) = gmres(&a, &[c(1.0); 4], &[ZERO; 4], &opts).unwrap();
        assert!(log.iterations <= 4);
        assert!(log.converged);
        for (i, xi) in x.iter().enumerate() {
            assert!((xi - c(1.0 / (i + 1) as f64)).norm() < 1e-10);
        }
    }

    #[test]
    fn zero_rhs() {
        let a = DenseMatrix::identity(3);
        let (x, log) = gmres(&a, &[ZERO; 3], &[c(1.0); 3], &KrylovOptions::default()).unwrap();
        assert_eq!(x, vec![ZERO; 3]);
        assert!(log.converged);
        assert_eq!(log.iterations, 0);
    }

    #[test]
    fn rejects_bad_input() {
        let a = DenseMatrix::identity(3);
        assert!(gmres(&a, &[ZERO; 2], &[ZERO; 3], &KrylovOptions::default()).is_err());
        let opts = KrylovOptions {
            rel_tol: 0.0,
            ..Default::default()
        };
        assert!(gmres(&a, &[c(1.0); 3], &[ZERO; 3], &opts).is_err());
        assert!(gmres_smoother_step(&a, &[c(1.0); 3], &[ZERO; 3], 0).is_err());
    }

    #[test]
    fn exact_preconditioner_one_iteration() {
        let a = rand_matrix(20, 3, 5.0);
        let lu = DenseLu::factor(&a).unwrap();
        let b = rand_vec(20, 4);
        let (_, log) = fgmres(&a, &lu, &b, &KrylovOptions::default()).unwrap();
        assert_eq!(log.iterations, 1);
        assert!(log.true_relative_residual < 1e-12);
    }

    #[test]
    fn fgmres_identity_matches_gmres() {
        let a = rand_matrix(30, 5, 3.0);
        let b = rand_vec(30, 6);
        let opts = KrylovOptions {
            rel_tol: 1e-10,
            ..Default::default()
        };
        let (x1, l1) = gmres(&a, &b, &[ZERO; 30], &opts).unwrap();
        let (x2, l2) = fgmres(&a, &Identity, &b, &opts).unwrap();
        assert_eq!(l1.residual_norms, l2.residual_norms);
        assert_eq!(x1, x2);
    }

    #[test]
    fn smoother_fixed_point_and_exact_solve() {
        let a = rand_matrix(8, 9, 4.0);
        let xs = rand_vec(8, 10);
        let b = a.matvec(&xs);
        let same = gmres_smoother_step(&a, &b, &xs, 3).unwrap();
        assert_eq!(same, xs);
        let full = gmres_smoother_step(&a, &b, &[ZERO; 8], 8).unwrap();
        for (p, q) in full.iter().zip(&xs) {
            assert!((p - q).norm() < 1e-10);
        }
    }

    #[test]
    fn smoother_reduces_csg_residual() {
        use crate::grid::{build_csg_grid, EcsDomain};
        use crate::operators::assemble_helmholtz_1d;
        let d = EcsDomain::csg(1.0, 1.25, std::f64::consts::FRAC_PI_6, 0.18, 32, 8).unwrap();
        let a = assemble_helmholtz_1d(&build_csg_grid(&d).unwrap(), 10.0).unwrap();
        let b = rand_vec(a.order(), 12);
        let x0 = vec![ZERO; a.order()];
        let x1 = gmres_smoother_step(&a, &b, &x0, 3).unwrap();
        let r = |x: &[C64]| {
            let mut ax = vec![ZERO; x.len()];
            a.matvec(x, &mut ax);
            norm(&ax.iter().zip(&b).map(|(p, q)| q - p).collect::<Vec<_>>())
        };
        assert!(r(&x1) < r(&x0));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]

        #[test]
        fn residuals_monotone_and_finite_termination(n in 2usize..50, seed in 0u64..500, shift in 0.0f64..3.0) {
            let a = rand_matrix(n, seed, shift);
            let b = rand_vec(n, seed + 1);
            let opts = KrylovOptions { rel_tol: 1e-10, max_iter: n, reorthogonalize: true };
            let (_, log) = gmres(&a, &b, &vec![ZERO; n], &opts).unwrap();
            for w in log.residual_norms.windows(2) {
                proptest::prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
            proptest::prop_assert!(log.true_relative_residual <= 1e-8);
        }

        #[test]
        fn fgmres_fixed_matches_right_gmres(n in 2usize..40, seed in 0u64..500) {
            let a = rand_matrix(n, seed, 2.0);
            let m = DenseLu::factor(&rand_matrix(n, seed + 7, 6.0)).unwrap();
            let b = rand_vec(n, seed + 2);
            let opts = KrylovOptions { rel_tol: 1e-12, max_iter: n, reorthogonalize: false };
            let (x1, l1) = gmres_right(&a, &m, &b, &vec![ZERO; n], &opts).unwrap();
            let (x2, l2) = fgmres(&a, &m, &b, &opts).unwrap();
            proptest::prop_assert_eq!(l1.iterations, l2.iterations);
            for (p, q) in l1.residual_norms.iter().zip(&l2.residual_norms) {
                proptest::prop_assert!((p - q).abs() <= 1e-10 * l1.residual_norms[0]);
            }
            let xn = norm(&x1).max(1.0);
            for (p, q) in x1.iter().zip(&x2) {
                proptest::prop_assert!((p - q).norm() <= 1e-10 * xn);
            }
        }
    }
}
