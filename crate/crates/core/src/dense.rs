//! Complex dense and banded linear algebra: LU with partial pivoting and a
//! nonsymmetric eigenvalue solver (balancing, Householder reduction to
//! Hessenberg form, single-shift complex QR with deflation).

use std::ops::{Index, IndexMut};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operators::{ComplexBandedMatrix, ComplexSparseMatrix};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Default cap on the order accepted by [`dense_eigenvalues`].
pub const DEFAULT_EIG_CAP: usize = 4096;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut a = Self::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = ONE;
        }
        a
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut a = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            a[(i, i)] = *d;
        }
        a
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for p in 0..self.cols {
                let a = self[(i, p)];
                if a == ZERO {
                    continue;
                }
                let orow = other.row(p);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Returns a copy with `shift` added on the diagonal.
    pub fn shifted(&self, shift: C64) -> Self {
        let mut a = self.clone();
        for i in 0..self.rows.min(self.cols) {
            a[(i, i)] += shift;
        }
        a
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

// ---------------------------------------------------------------------------
// LU factorizations

/// Dense LU factorization `P A = L U` with partial pivoting.
#[derive(Debug, Clone)]
pub struct DenseLu {
    lu: DenseMatrix,
    piv: Vec<usize>,
}

impl DenseLu {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: a.rows,
                got: a.cols,
            });
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut piv = vec![0; n];
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| lu[(x, k)].norm().total_cmp(&lu[(y, k)].norm()))
                .unwrap();
            if lu[(p, k)] == ZERO {
                return Err(Error::Singular(k));
            }
            piv[k] = p;
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
            }
            let inv = ONE / lu[(k, k)];
            for i in k + 1..n {
                let l = lu[(i, k)] * inv;
                lu[(i, k)] = l;
                if l == ZERO {
                    continue;
                }
                let (top, bottom) = lu.data.split_at_mut(i * n);
                let src = &top[k * n + k + 1..k * n + n];
                let dst = &mut bottom[k + 1..n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d -= l * s;
                }
            }
        }
        Ok(Self { lu, piv })
    }

    pub fn order(&self) -> usize {
        self.piv.len()
    }

    pub fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.order();
        assert_eq!(b.len(), n);
        for k in 0..n {
            b.swap(k, self.piv[k]);
        }
        for i in 0..n {
            let row = self.lu.row(i);
            let s: C64 = row[..i].iter().zip(&b[..i]).map(|(l, x)| l * x).sum();
            b[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: C64 = row[i + 1..]
                .iter()
                .zip(&b[i + 1..])
                .map(|(u, x)| u * x)
                .sum();
            b[i] = (b[i] - s) / row[i];
        }
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// `A^{-1} B` column by column.
    pub fn solve_matrix(&self, b: &DenseMatrix) -> DenseMatrix {
        assert_eq!(b.rows, self.order());
        let mut out = DenseMatrix::zeros(b.rows, b.cols);
        for j in 0..b.cols {
            let x = self.solve(&b.column(j));
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }
}

/// Solve a dense system with partial pivoting.
pub fn dense_lu_solve(a: &DenseMatrix, b: &[C64]) -> Result<Vec<C64>> {
    if b.len() != a.rows {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            got: b.len(),
        });
    }
    Ok(DenseLu::factor(a)?.solve(b))
}

/// Banded LU factorization with partial pivoting. Pivoting grows the upper
/// bandwidth of `U` from `ku` to `kl + ku`.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    ab: Vec<C64>,
    piv: Vec<usize>,
}

impl BandLu {
    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    fn empty(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            ab: vec![ZERO; n * width],
            piv: vec![0; n],
        }
    }

    pub fn from_tridiagonal(a: &ComplexBandedMatrix) -> Result<Self> {
        let n = a.order();
        let mut f = Self::empty(n, 1.min(n - 1), 1.min(n - 1));
        for i in 0..n {
            for j in i.saturating_sub(1)..(i + 2).min(n) {
                let p = f.at(i, j);
                f.ab[p] = a.get(i, j);
            }
        }
        f.factor()?;
        Ok(f)
    }

    pub fn from_sparse(a: &ComplexSparseMatrix) -> Result<Self> {
        let (kl, ku) = a.bandwidth();
        let mut f = Self::empty(a.order(), kl, ku);
        for i in 0..a.order() {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let p = f.at(i, j);
                f.ab[p] = v;
            }
        }
        f.factor()?;
        Ok(f)
    }

    fn factor(&mut self) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.ab[self.at(k, k)].norm();
            for i in k + 1..=last {
                let v = self.ab[self.at(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::Singular(k));
            }
            self.piv[k] = p;
            let jmax = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (a, b) = (self.at(k, j), self.at(p, j));
                    self.ab.swap(a, b);
                }
            }
            let inv = ONE / self.ab[self.at(k, k)];
            for i in k + 1..=last {
                let li = self.at(i, k);
                let l = self.ab[li] * inv;
                self.ab[li] = l;
                if l == ZERO {
                    continue;
                }
                let (rk, ri) = (self.at(k, k + 1), self.at(i, k + 1));
                let len = jmax - k;
                for t in 0..len {
                    let u = self.ab[rk + t];
                    self.ab[ri + t] -= l * u;
                }
            }
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.n
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve_in_place(&self, b: &mut [C64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        assert_eq!(b.len(), n);
        for k in 0..n {
            b.swap(k, self.piv[k]);
            let bk = b[k];
            if bk == ZERO {
                continue;
            }
            for i in k + 1..=(k + kl).min(n - 1) {
                b[i] -= self.ab[self.at(i, k)] * bk;
            }
        }
        for i in (0..n).rev() {
            let jmax = (i + kl + ku).min(n - 1);
            let base = self.at(i, i);
            let mut s = b[i];
            for (t, j) in (i + 1..=jmax).enumerate() {
                s -= self.ab[base + 1 + t] * b[j];
            }
            b[i] = s / self.ab[base];
        }
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Solve a tridiagonal system by banded LU with partial pivoting.
pub fn banded_lu_solve(a: &ComplexBandedMatrix, b: &[C64]) -> Result<Vec<C64>> {
    if b.len() != a.order() {
        return Err(Error::DimensionMismatch {
            expected: a.order(),
            got: b.len(),
        });
    }
    Ok(BandLu::from_tridiagonal(a)?.solve(b))
}

// ---------------------------------------------------------------------------
// Eigenvalues

/// Eigenvalues of a dense matrix, unordered.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub eigenvalues: Vec<C64>,
    /// `false` where the QR iteration hit its cap before deflating the value.
    pub converged: Vec<bool>,
}

impl EigenResult {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

/// All eigenvalues of a square matrix with the default order cap.
pub fn dense_eigenvalues(a: &DenseMatrix) -> Result<EigenResult> {
    dense_eigenvalues_capped(a, DEFAULT_EIG_CAP)
}

pub fn dense_eigenvalues_capped(a: &DenseMatrix, cap: usize) -> Result<EigenResult> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows,
            got: a.cols,
        });
    }
    if a.rows > cap {
        return Err(Error::TooLarge { order: a.rows, cap });
    }
    if a.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "matrix has non-finite entries".into(),
        ));
    }
    let mut h = a.clone();
    balance(&mut h);
    hessenberg(&mut h);
    Ok(hessenberg_qr(h))
}

/// Diagonal similarity scaling by powers of two so that row and column
/// norms are comparable.
fn balance(a: &mut DenseMatrix) {
    const RADIX: f64 = 2.0;
    let n = a.rows;
    let l1 = |z: C64| z.re.abs() + z.im.abs();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += l1(a[(j, i)]);
                    r += l1(a[(i, j)]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg(a: &mut DenseMatrix) {
    let n = a.rows;
    if n < 3 {
        return;
    }
    let mut v = vec![ZERO; n];
    for k in 0..n - 2 {
        let alpha2: f64 = (k + 2..n).map(|i| a[(i, k)].norm_sqr()).sum();
        if alpha2 == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let xnorm = (alpha2 + x0.norm_sqr()).sqrt();
        let phase = if x0 == ZERO { ONE } else { x0 / x0.norm() };
        // v = x + phase * |x| e1, H = I - 2 v v^H / (v^H v)
        v[k + 1] = x0 + phase * xnorm;
        for i in k + 2..n {
            v[i] = a[(i, k)];
        }
        let vnorm2: f64 = (k + 1..n).map(|i| v[i].norm_sqr()).sum();
        let tau = 2.0 / vnorm2;
        // A <- H A
        for j in k..n {
            let s: C64 = (k + 1..n).map(|i| v[i].conj() * a[(i, j)]).sum();
            let s = s * tau;
            for i in k + 1..n {
                let vi = v[i];
                a[(i, j)] -= vi * s;
            }
        }
        // A <- A H
        for i in 0..n {
            let s: C64 = (k + 1..n).map(|j| a[(i, j)] * v[j]).sum();
            let s = s * tau;
            for j in k + 1..n {
                let vj = v[j].conj();
                a[(i, j)] -= s * vj;
            }
        }
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }
    }
}

/// Rotation `[c s; -conj(s) c]` with real `c` mapping `(x, y)` to `(r, 0)`.
#[inline]
pub(crate) fn givens(x: C64, y: C64) -> (f64, C64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, ZERO);
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let r = ax.hypot(ay);
    (ax / r, (x / ax) * y.conj() / r)
}

/// Eigenvalue of the 2x2 block `[a b; c d]` closest to `d`.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let e1 = d + half + disc;
    let e2 = d + half - disc;
    if (e1 - d).norm() <= (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

/// Single-shift implicit QR on an upper Hessenberg matrix, eigenvalues only.
fn hessenberg_qr(mut h: DenseMatrix) -> EigenResult {
    let n = h.rows;
    let mut eig = vec![ZERO; n];
    let mut conv = vec![true; n];
    if n == 0 {
        return EigenResult {
            eigenvalues: eig,
            converged: conv,
        };
    }
    let l1 = |z: C64| z.re.abs() + z.im.abs();
    let anorm: f64 = h.data.iter().map(|z| l1(*z)).fold(0.0, f64::max);
    let max_total = 30 * n;
    let mut total = 0usize;
    let mut iter = 0usize;
    let mut hi = n - 1;
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        // Locate the start of the active unreduced block.
        let mut lo = hi;
        while lo > 0 {
            let mut s = l1(h[(lo - 1, lo - 1)]) + l1(h[(lo, lo)]);
            if s == 0.0 {
                s = anorm;
            }
            if l1(h[(lo, lo - 1)]) <= f64::EPSILON * s {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            iter = 0;
            continue;
        }
        if total >= max_total {
            for i in 0..=hi {
                eig[i] = h[(i, i)];
                conv[i] = false;
            }
            break;
        }
        total += 1;
        iter += 1;

        let shift = if iter.is_multiple_of(10) {
            // exceptional shift
            h[(hi, hi)] + 0.75 * h[(hi, hi - 1)].norm()
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        let mut x = h[(lo, lo)] - shift;
        let mut y = h[(lo + 1, lo)];
        for k in lo..hi {
            if k > lo {
                x = h[(k, k - 1)];
                y = h[(k + 1, k - 1)];
            }
            let (c, s) = givens(x, y);
            let jstart = if k > lo { k - 1 } else { lo };
            for j in jstart..=hi {
                let a = h[(k, j)];
                let b = h[(k + 1, j)];
                h[(k, j)] = c * a + s * b;
                h[(k + 1, j)] = -s.conj() * a + c * b;
            }
            let iend = (k + 2).min(hi);
            let sc = s.conj();
            for i in lo..=iend {
                let a = h[(i, k)];
                let b = h[(i, k + 1)];
                h[(i, k)] = c * a + sc * b;
                h[(i, k + 1)] = -s * a + c * b;
            }
            if k > lo {
                h[(k + 1, k - 1)] = ZERO;
            }
        }
    }
    EigenResult {
        eigenvalues: eig,
        converged: conv,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sorted(mut v: Vec<C64>) -> Vec<C64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    fn residual(a: &DenseMatrix, x: &[C64], b: &[C64]) -> f64 {
        let ax = a.matvec(x);
        let num: f64 = ax
            .iter()
            .zip(b)
            .map(|(p, q)| (p - q).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let den: f64 = b.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt();
        num / den
    }

    fn random_matrix(n: usize, seed: u64, dominance: f64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = DenseMatrix::from_fn(n, n, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        for i in 0..n {
            a[(i, i)] += dominance;
        }
        a
    }

    #[test]
    fn identity_solves() {
        let b = vec![c(1.0, 2.0), c(-3.0, 0.5), c(0.0, 1.0)];
        assert_eq!(dense_lu_solve(&DenseMatrix::identity(3), &b).unwrap(), b);
        assert_eq!(
            banded_lu_solve(&ComplexBandedMatrix::identity(3), &b).unwrap(),
            b
        );
    }

    #[test]
    fn tridiagonal_hand_solve() {
        let a = ComplexBandedMatrix::new(
            vec![c(-1.0, 0.0); 3],
            vec![c(2.0, 0.0); 4],
            vec![c(-1.0, 0.0); 3],
        )
        .unwrap();
        let x = banded_lu_solve(&a, &[c(1.0, 0.0); 4]).unwrap();
        for (xi, want) in x.iter().zip([2.0, 3.0, 3.0, 2.0]) {
            assert!((xi - c(want, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn upper_triangular_back_substitution() {
        let a = DenseMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, _) => c(1.0, 0.0),
            (1, 1) => c(2.0, 0.0),
            _ => ZERO,
        });
        let x = dense_lu_solve(&a, &[c(3.0, 0.0), c(4.0, 0.0)]).unwrap();
        assert!((x[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((x[1] - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn random_dense_residual() {
        let a = random_matrix(50, 7, 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let b: Vec<C64> = (0..50).map(|_| c(rng.gen(), rng.gen())).collect();
        let x = dense_lu_solve(&a, &b).unwrap();
        assert!(residual(&a, &x, &b) <= 1e-11);
    }

    #[test]
    fn singular_is_reported() {
        let a = DenseMatrix::zeros(3, 3);
        assert!(matches!(
            dense_lu_solve(&a, &[ZERO; 3]),
            Err(Error::Singular(0))
        ));
        let t =
            ComplexBandedMatrix::new(vec![ZERO; 2], vec![ONE, ZERO, ONE], vec![ZERO; 2]).unwrap();
        assert!(matches!(
            banded_lu_solve(&t, &[ZERO; 3]),
            Err(Error::Singular(1))
        ));
    }

    #[test]
    fn band_lu_matches_dense_on_random_band() {
        let n: usize = 40;
        let (kl, ku) = (3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut trip = vec![];
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                // weak diagonal to force pivoting
                let v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                trip.push((i, j, if i == j { v * 0.01 } else { v }));
            }
        }
        let s = ComplexSparseMatrix::from_triplets(n, trip);
        let b: Vec<C64> = (0..n).map(|i| c(i as f64, 1.0)).collect();
        let x = BandLu::from_sparse(&s).unwrap().solve(&b);
        assert!(residual(&s.to_dense(), &x, &b) < 1e-10);
    }

    #[test]
    fn diagonal_eigenvalues() {
        let a = DenseMatrix::from_diagonal(&[c(1.0, 0.0), c(2.0, 1.0), c(-3.0, 0.0)]);
        let e = dense_eigenvalues(&a).unwrap();
        assert!(e.all_converged());
        let got = sorted(e.eigenvalues);
        let want = sorted(vec![c(1.0, 0.0), c(2.0, 1.0), c(-3.0, 0.0)]);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-14);
        }
    }

    #[test]
    fn toeplitz_eigenvalues() {
        let h = 1.0 / 8.0;
        let s = 1.0 / (h * h);
        let a = DenseMatrix::from_fn(7, 7, |i, j| {
            if i == j {
                c(2.0 * s, 0.0)
            } else if i.abs_diff(j) == 1 {
                c(-s, 0.0)
            } else {
                ZERO
            }
        });
        let mut got: Vec<f64> = dense_eigenvalues(&a)
            .unwrap()
            .eigenvalues
            .iter()
            .map(|z| z.re)
            .collect();
        got.sort_by(f64::total_cmp);
        for (j, g) in got.iter().enumerate() {
            let want = (2.0 - 2.0 * ((j + 1) as f64 * std::f64::consts::PI / 8.0).cos()) * s;
            assert!(((g - want) / want).abs() < 1e-9, "{g} vs {want}");
        }
    }

    #[test]
    fn companion_matrix_roots() {
        // roots 1, 2i, -3, 0.5 - i
        let roots = [c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 0.0), c(0.5, -1.0)];
        let mut coeffs = vec![ONE];
        for r in roots {
            let mut next = vec![ZERO; coeffs.len() + 1];
            for (i, a) in coeffs.iter().enumerate() {
                next[i] += *a;
                next[i + 1] -= a * r;
            }
            coeffs = next;
        }
        let n = roots.len();
        let a = DenseMatrix::from_fn(n, n, |i, j| {
            if i == 0 {
                -coeffs[j + 1]
            } else if i == j + 1 {
                ONE
            } else {
                ZERO
            }
        });
        let e = dense_eigenvalues(&a).unwrap();
        for r in roots {
            let best = e
                .eigenvalues
                .iter()
                .map(|z| (z - r).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(best / r.norm() < 1e-9);
        }
    }

    #[test]
    fn eig_cap_and_shape() {
        assert!(matches!(
            dense_eigenvalues_capped(&DenseMatrix::identity(5), 4),
            Err(Error::TooLarge { order: 5, cap: 4 })
        ));
        assert!(dense_eigenvalues(&DenseMatrix::zeros(2, 3)).is_err());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]

        #[test]
        fn lu_residual_diag_dominant(n in 1usize..40, seed in 0u64..1000) {
            let a = random_matrix(n, seed, 2.0 * n as f64);
            let b: Vec<C64> = (0..n).map(|i| c(1.0 + i as f64, -(i as f64))).collect();
            let x = dense_lu_solve(&a, &b).unwrap();
            proptest::prop_assert!(residual(&a, &x, &b) <= 1e-12);
        }

        #[test]
        fn eigenvalue_sum_is_trace(n in 1usize..40, seed in 0u64..1000) {
            let a = random_matrix(n, seed, 0.0);
            let e = dense_eigenvalues(&a).unwrap();
            proptest::prop_assert!(e.all_converged());
            let sum: C64 = e.eigenvalues.iter().sum();
            let tr = a.trace();
            let scale: f64 = e.eigenvalues.iter().map(|z| z.norm()).sum::<f64>().max(1.0);
            proptest::prop_assert!((sum - tr).norm() <= 1e-8 * scale);
        }

        #[test]
        fn shift_moves_spectrum(n in 2usize..25, seed in 0u64..1000, sr in -5.0f64..5.0, si in -5.0f64..5.0) {
            let a = random_matrix(n, seed, 0.0);
            let shift = c(sr, si);
            let e0 = dense_eigenvalues(&a).unwrap().eigenvalues;
            let e1 = dense_eigenvalues(&a.shifted(shift)).unwrap().eigenvalues;
            for z in &e0 {
                let target = z + shift;
                let best = e1.iter().map(|w| (w - target).norm()).fold(f64::INFINITY, f64::min);
                proptest::prop_assert!(best < 1e-7 * (1.0 + target.norm()));
            }
        }
    }
}
