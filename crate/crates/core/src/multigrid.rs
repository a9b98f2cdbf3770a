//! Geometric multigrid V(1,1)-cycle for CSG Helmholtz operators, smoothed by
//! a few GMRES iterations per level.
//!
//! Every level rediscretizes the Helmholtz operator on the same complex
//! domain with halved interval counts. Transfers are linear interpolation in
//! the grid index and its full-weighting transpose; 2D uses tensor products.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dense::BandLu;
use crate::error::{Error, Result};
use crate::grid::{build_csg_grid, EcsDomain};
use crate::krylov::{gmres_smoother_step, LinearOperator, Preconditioner};
use crate::operators::{
    assemble_helmholtz_1d, assemble_helmholtz_2d, ComplexBandedMatrix, ComplexSparseMatrix,
};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Spatial dimension of the discretized problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dims {
    One,
    Two,
}

impl Dims {
    pub fn from_count(d: usize) -> Result<Self> {
        match d {
            1 => Ok(Dims::One),
            2 => Ok(Dims::Two),
            _ => Err(Error::InvalidArgument(format!(
                "dims must be 1 or 2, got {d}"
            ))),
        }
    }

    pub fn count(self) -> usize {
        match self {
            Dims::One => 1,
            Dims::Two => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgOptions {
    /// Smallest interior interval count `n` on the coarsest level.
    pub min_coarse_n: usize,
    /// Exact number of levels; `None` coarsens as far as allowed.
    pub levels: Option<usize>,
    /// GMRES iterations per smoothing application.
    pub smoother_steps: usize,
}

impl Default for MgOptions {
    fn default() -> Self {
        Self {
            min_coarse_n: 4,
            levels: None,
            smoother_steps: 3,
        }
    }
}

/// Operator on one level.
#[derive(Debug, Clone)]
pub enum LevelOperator {
    OneD(ComplexBandedMatrix),
    TwoD(ComplexSparseMatrix),
}

impl LinearOperator for LevelOperator {
    fn dim(&self) -> usize {
        match self {
            LevelOperator::OneD(a) => a.order(),
            LevelOperator::TwoD(a) => a.order(),
        }
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        match self {
            LevelOperator::OneD(a) => a.matvec(x, y),
            LevelOperator::TwoD(a) => a.matvec(x, y),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MgLevel {
    pub domain: EcsDomain,
    pub operator: LevelOperator,
}

impl MgLevel {
    /// Unknowns per dimension.
    pub fn line_unknowns(&self) -> usize {
        self.domain.unknowns()
    }
}

/// Immutable multigrid hierarchy, finest level first.
#[derive(Debug, Clone)]
pub struct MgHierarchy {
    levels: Vec<MgLevel>,
    coarse: BandLu,
    dims: Dims,
    smoother_steps: usize,
}

/// Interval counts for each level, finest first.
pub fn level_counts(n: usize, m: usize, opts: &MgOptions) -> Result<Vec<(usize, usize)>> {
    let mut counts = vec![(n, m)];
    match opts.levels {
        Some(levels) => {
            if levels < 2 {
                return Err(Error::Hierarchy(format!(
                    "need at least 2 levels, got {levels}"
                )));
            }
            let f = 1usize << (levels - 1);
            if !n.is_multiple_of(f) || !m.is_multiple_of(f) || n / f < 2 || m / f < 1 {
                return Err(Error::Hierarchy(format!(
                    "n={n}, m={m} cannot be halved {} times",
                    levels - 1
                )));
            }
            for l in 1..levels {
                counts.push((n >> l, m >> l));
            }
        }
        None => {
            let (mut cn, mut cm) = (n, m);
            while cn % 2 == 0 && cm % 2 == 0 && cn / 2 >= opts.min_coarse_n.max(2) && cm / 2 >= 1 {
                cn /= 2;
                cm /= 2;
                counts.push((cn, cm));
            }
            if counts.len() < 2 {
                return Err(Error::Hierarchy(format!(
                    "n={n}, m={m} cannot be coarsened (min_coarse_n={})",
                    opts.min_coarse_n
                )));
            }
        }
    }
    Ok(counts)
}

impl MgHierarchy {
    /// Rediscretize the Helmholtz operator on every level of `domain` and
    /// factor the coarsest one.
    pub fn build(domain: &EcsDomain, k: f64, dims: Dims, opts: &MgOptions) -> Result<Self> {
        domain.validate()?;
        if opts.smoother_steps == 0 {
            return Err(Error::InvalidArgument("smoother_steps must be >= 1".into()));
        }
        let counts = level_counts(domain.n, domain.m, opts)?;
        let mut levels = Vec::with_capacity(counts.len());
        for (n, m) in counts {
            let d = domain.with_counts(n, m);
            let grid = build_csg_grid(&d)?;
            let operator = match dims {
                Dims::One => LevelOperator::OneD(assemble_helmholtz_1d(&grid, k)?),
                Dims::Two => LevelOperator::TwoD(assemble_helmholtz_2d(&grid, k)?),
            };
            levels.push(MgLevel {
                domain: d,
                operator,
            });
        }
        let coarse = match &levels.last().unwrap().operator {
            LevelOperator::OneD(a) => BandLu::from_tridiagonal(a)?,
            LevelOperator::TwoD(a) => BandLu::from_sparse(a)?,
        };
        Ok(Self {
            levels,
            coarse,
            dims,
            smoother_steps: opts.smoother_steps,
        })
    }

    pub fn levels(&self) -> &[MgLevel] {
        &self.levels
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Unknowns on `level` (all dimensions).
    pub fn level_size(&self, level: usize) -> usize {
        self.levels[level].operator.dim()
    }

    /// Full-weighting restriction from `level` to `level + 1`.
    pub fn restrict(&self, level: usize, fine: &[C64]) -> Result<Vec<C64>> {
        self.check_transfer(level)?;
        let nf = self.levels[level].line_unknowns();
        let nc = self.levels[level + 1].line_unknowns();
        match self.dims {
            Dims::One => restrict_1d(fine, nf, nc),
            Dims::Two => restrict_2d(fine, nf, nc),
        }
    }

    /// Linear-interpolation prolongation from `level + 1` to `level`.
    pub fn prolong(&self, level: usize, coarse: &[C64]) -> Result<Vec<C64>> {
        self.check_transfer(level)?;
        let nf = self.levels[level].line_unknowns();
        let nc = self.levels[level + 1].line_unknowns();
        match self.dims {
            Dims::One => prolong_1d(coarse, nc, nf),
            Dims::Two => prolong_2d(coarse, nc, nf),
        }
    }

    fn check_transfer(&self, level: usize) -> Result<()> {
        if level + 1 >= self.levels.len() {
            return Err(Error::Hierarchy(format!(
                "no coarser level below {level} (have {})",
                self.levels.len()
            )));
        }
        Ok(())
    }

    /// One V(1,1)-cycle on `level` for `A x = b`, starting from `x`.
    pub fn v_cycle(&self, level: usize, b: &[C64], x: &[C64]) -> Result<Vec<C64>> {
        if level >= self.levels.len() {
            return Err(Error::Hierarchy(format!("level {level} out of range")));
        }
        let size = self.level_size(level);
        for len in [b.len(), x.len()] {
            if len != size {
                return Err(Error::DimensionMismatch {
                    expected: size,
                    got: len,
                });
            }
        }
        if level + 1 == self.levels.len() {
            return Ok(self.coarse.solve(b));
        }
        let a = &self.levels[level].operator;
        let mut x = gmres_smoother_step(a, b, x, self.smoother_steps)?;
        let r = residual(a, b, &x);
        let rc = self.restrict(level, &r)?;
        let ec = self.v_cycle(level + 1, &rc, &vec![ZERO; rc.len()])?;
        let e = self.prolong(level, &ec)?;
        for (xi, ei) in x.iter_mut().zip(&e) {
            *xi += ei;
        }
        gmres_smoother_step(a, b, &x, self.smoother_steps)
    }

    /// `||b - A_0 x||` on the finest level.
    pub fn residual_norm(&self, b: &[C64], x: &[C64]) -> f64 {
        residual(&self.levels[0].operator, b, x)
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

impl Preconditioner for MgHierarchy {
    fn precondition(&self, r: &[C64], z: &mut [C64]) -> Result<()> {
        let x = self.v_cycle(0, r, &vec![ZERO; r.len()])?;
        z.copy_from_slice(&x);
        Ok(())
    }
}

fn residual(a: &LevelOperator, b: &[C64], x: &[C64]) -> Vec<C64> {
    let mut ax = vec![ZERO; b.len()];
    a.apply(x, &mut ax);
    b.iter().zip(&ax).map(|(p, q)| p - q).collect()
}

fn check_sizes(nf: usize, nc: usize, len: usize, expected: usize) -> Result<()> {
    if nf != 2 * nc + 1 {
        return Err(Error::Hierarchy(format!("fine size {nf} is not 2*{nc}+1")));
    }
    if len != expected {
        return Err(Error::DimensionMismatch { expected, got: len });
    }
    Ok(())
}

/// Coarse unknown `c` sits on fine unknown `2c + 1`.
pub fn prolong_1d(coarse: &[C64], nc: usize, nf: usize) -> Result<Vec<C64>> {
    check_sizes(nf, nc, coarse.len(), nc)?;
    let mut fine = vec![ZERO; nf];
    for (c, v) in coarse.iter().enumerate() {
        fine[2 * c] += 0.5 * v;
        fine[2 * c + 1] += v;
        fine[2 * c + 2] += 0.5 * v;
    }
    Ok(fine)
}

pub fn restrict_1d(fine: &[C64], nf: usize, nc: usize) -> Result<Vec<C64>> {
    check_sizes(nf, nc, fine.len(), nf)?;
    Ok((0..nc)
        .map(|c| 0.25 * fine[2 * c] + 0.5 * fine[2 * c + 1] + 0.25 * fine[2 * c + 2])
        .collect())
}

pub fn prolong_2d(coarse: &[C64], nc: usize, nf: usize) -> Result<Vec<C64>> {
    check_sizes(nf, nc, coarse.len(), nc * nc)?;
    // rows first, then columns
    let mut half = vec![ZERO; nf * nc];
    for j in 0..nc {
        let col: Vec<C64> = (0..nc).map(|i| coarse[i * nc + j]).collect();
        for (i, v) in prolong_1d(&col, nc, nf)?.into_iter().enumerate() {
            half[i * nc + j] = v;
        }
    }
    let mut fine = Vec::with_capacity(nf * nf);
    for i in 0..nf {
        fine.extend(prolong_1d(&half[i * nc..(i + 1) * nc], nc, nf)?);
    }
    Ok(fine)
}

pub fn restrict_2d(fine: &[C64], nf: usize, nc: usize) -> Result<Vec<C64>> {
    check_sizes(nf, nc, fine.len(), nf * nf)?;
    let mut half = Vec::with_capacity(nf * nc);
    for i in 0..nf {
        half.extend(restrict_1d(&fine[i * nf..(i + 1) * nf], nf, nc)?);
    }
    let mut coarse = vec![ZERO; nc * nc];
    for j in 0..nc {
        let col: Vec<C64> = (0..nf).map(|i| half[i * nc + j]).collect();
        for (i, v) in restrict_1d(&col, nf, nc)?.into_iter().enumerate() {
            coarse[i * nc + j] = v;
        }
    }
    Ok(coarse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{dense_eigenvalues, DenseMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_6;

    fn rand_vec(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    fn paper_csg(n: usize, m: usize) -> EcsDomain {
        EcsDomain::csg(1.0, 1.25, FRAC_PI_6, 0.18, n, m).unwrap()
    }

    fn norm(v: &[C64]) -> f64 {
        v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn level_arithmetic() {
        let c = level_counts(64, 16, &MgOptions::default()).unwrap();
        assert_eq!(c, vec![(64, 16), (32, 8), (16, 4), (8, 2), (4, 1)]);
        let two = MgOptions {
            levels: Some(2),
            ..Default::default()
        };
        assert_eq!(level_counts(64, 16, &two).unwrap().len(), 2);
        let one = MgOptions {
            levels: Some(1),
            ..Default::default()
        };
        assert!(level_counts(64, 16, &one).is_err());
        let deep = MgOptions {
            levels: Some(6),
            ..Default::default()
        };
        assert!(level_counts(64, 16, &deep).is_err());
        assert!(level_counts(5, 3, &MgOptions::default()).is_err());
    }

    #[test]
    fn transfers_preserve_constants() {
        let one = C64::new(1.0, 0.0);
        let p = prolong_1d(&[one; 7], 7, 15).unwrap();
        // interior fine points away from the Dirichlet ends
        assert!(p[1..14].iter().all(|v| (v - one).norm() < 1e-15));
        let r = restrict_1d(&[one; 15], 15, 7).unwrap();
        assert!(r.iter().all(|v| (v - one).norm() < 1e-15));
        let r2 = restrict_2d(&[one; 225], 15, 7).unwrap();
        assert!(r2.iter().all(|v| (v - one).norm() < 1e-15));
        assert!(restrict_1d(&[one; 14], 15, 7).is_err());
        assert!(prolong_1d(&[one; 7], 7, 14).is_err());
    }

    #[test]
    fn restrict_prolong_spectrum() {
        // explicit 15x7 and 7x15 matrices
        let unit = |n: usize, i: usize| {
            let mut e = vec![ZERO; n];
            e[i] = C64::new(1.0, 0.0);
            e
        };
        let p = DenseMatrix::from_fn(15, 7, |i, j| prolong_1d(&unit(7, j), 7, 15).unwrap()[i]);
        let r = DenseMatrix::from_fn(7, 15, |i, j| restrict_1d(&unit(15, j), 15, 7).unwrap()[i]);
        for i in 0..15 {
            for j in 0..7 {
                assert!((r[(j, i)] - 0.5 * p[(i, j)]).norm() < 1e-15);
            }
        }
        let rp = r.matmul(&p);
        let v = rand_vec(7, 3);
        let y = rp.matvec(&v);
        let y2 = restrict_1d(&prolong_1d(&v, 7, 15).unwrap(), 15, 7).unwrap();
        for (a, b) in y.iter().zip(&y2) {
            assert!((a - b).norm() < 1e-14);
        }
        for ev in dense_eigenvalues(&rp).unwrap().eigenvalues {
            assert!(ev.im.abs() < 1e-12);
            assert!(ev.re > -1e-12 && ev.re < 1.0 + 1e-12);
        }
    }

    #[test]
    fn two_d_transfers_are_tensor_products() {
        let (nc, nf) = (3, 7);
        let a = rand_vec(nc, 1);
        let b = rand_vec(nc, 2);
        let outer: Vec<C64> = a
            .iter()
            .flat_map(|x| b.iter().map(move |y| x * y))
            .collect();
        let pa = prolong_1d(&a, nc, nf).unwrap();
        let pb = prolong_1d(&b, nc, nf).unwrap();
        let p2 = prolong_2d(&outer, nc, nf).unwrap();
        for i in 0..nf {
            for j in 0..nf {
                assert!((p2[i * nf + j] - pa[i] * pb[j]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_is_fixed_point() {
        let h =
            MgHierarchy::build(&paper_csg(16, 4), 5.0, Dims::One, &MgOptions::default()).unwrap();
        let n = h.level_size(0);
        let x = h.v_cycle(0, &vec![ZERO; n], &vec![ZERO; n]).unwrap();
        assert!(x.iter().all(|v| *v == ZERO));
        let h2 =
            MgHierarchy::build(&paper_csg(16, 4), 5.0, Dims::Two, &MgOptions::default()).unwrap();
        let n2 = h2.level_size(0);
        let x2 = h2.v_cycle(0, &vec![ZERO; n2], &vec![ZERO; n2]).unwrap();
        assert!(x2.iter().all(|v| *v == ZERO));
    }

    #[test]
    fn coarsest_level_is_exact() {
        let h =
            MgHierarchy::build(&paper_csg(16, 4), 7.0, Dims::Two, &MgOptions::default()).unwrap();
        let last = h.num_levels() - 1;
        let b = rand_vec(h.level_size(last), 5);
        let x = h.v_cycle(last, &b, &vec![ZERO; b.len()]).unwrap();
        let r = residual(&h.levels()[last].operator, &b, &x);
        assert!(norm(&r) / norm(&b) <= 1e-12);
    }

    #[test]
    fn cycle_contracts_paper_1d() {
        let h =
            MgHierarchy::build(&paper_csg(64, 16), 16.4, Dims::One, &MgOptions::default()).unwrap();
        assert_eq!(h.num_levels(), 5);
        let b = rand_vec(h.level_size(0), 9);
        let x0 = vec![ZERO; b.len()];
        let x1 = h.v_cycle(0, &b, &x0).unwrap();
        let factor = h.residual_norm(&b, &x1) / h.residual_norm(&b, &x0);
        eprintln!("1D V(1,1) residual reduction at k=16.4: {factor:.4}");
        assert!(factor < 1.0);
    }

    #[test]
    fn cycle_is_deterministic() {
        let h =
            MgHierarchy::build(&paper_csg(32, 8), 16.4, Dims::Two, &MgOptions::default()).unwrap();
        let b = rand_vec(h.level_size(0), 4);
        let x0 = vec![ZERO; b.len()];
        assert_eq!(
            h.v_cycle(0, &b, &x0).unwrap(),
            h.v_cycle(0, &b, &x0).unwrap()
        );
    }

    #[test]
    fn coarse_operator_is_nonsingular() {
        let opts = MgOptions {
            levels: Some(2),
            ..Default::default()
        };
        for k in [5.0, 16.4, 26.4, 40.0] {
            let h = MgHierarchy::build(&paper_csg(16, 4), k, Dims::One, &opts).unwrap();
            let LevelOperator::OneD(a) = &h.levels()[1].operator else {
                unreachable!()
            };
            let min = dense_eigenvalues(&a.to_dense())
                .unwrap()
                .eigenvalues
                .iter()
                .map(|z| z.norm())
                .fold(f64::INFINITY, f64::min);
            assert!(min > 1e-3, "k={k}: smallest |eig| {min}");
        }
    }
}
