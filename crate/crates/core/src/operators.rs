//! Discrete negative Laplacian and Helmholtz operators on contour grids.
//!
//! The 1D operator is the three-point Shortley-Weller stencil on the
//! non-uniform complex grid with both Dirichlet end points eliminated, so
//! the unknowns are the `n + m - 1` interior grid points. The 2D operator
//! is the Kronecker sum of two copies of the 1D operator.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::ContourGrid;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Default cap on the order of assembled 2D operators.
pub const DEFAULT_2D_ORDER_CAP: usize = 1 << 24;

/// Tridiagonal complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexBandedMatrix {
    /// Sub-diagonal, length `order - 1`; `sub[i]` sits at `(i + 1, i)`.
    pub sub: Vec<C64>,
    /// Main diagonal, length `order`.
    pub main: Vec<C64>,
    /// Super-diagonal, length `order - 1`; `sup[i]` sits at `(i, i + 1)`.
    pub sup: Vec<C64>,
}

impl ComplexBandedMatrix {
    pub fn new(sub: Vec<C64>, main: Vec<C64>, sup: Vec<C64>) -> Result<Self> {
        let n = main.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty tridiagonal matrix".into()));
        }
        for band in [&sub, &sup] {
            if band.len() != n - 1 {
                return Err(Error::DimensionMismatch {
                    expected: n - 1,
                    got: band.len(),
                });
            }
        }
        Ok(Self { sub, main, sup })
    }

    pub fn identity(order: usize) -> Self {
        Self {
            sub: vec![ZERO; order.saturating_sub(1)],
            main: vec![C64::new(1.0, 0.0); order],
            sup: vec![ZERO; order.saturating_sub(1)],
        }
    }

    pub fn order(&self) -> usize {
        self.main.len()
    }

    /// Returns a copy with `shift` added to every diagonal entry.
    pub fn shifted(&self, shift: C64) -> Self {
        let mut out = self.clone();
        out.main.iter_mut().for_each(|d| *d += shift);
        out
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        if i == j {
            self.main[i]
        } else if i == j + 1 {
            self.sub[j]
        } else if j == i + 1 {
            self.sup[i]
        } else {
            ZERO
        }
    }

    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        let n = self.order();
        assert_eq!(x.len(), n);
        assert_eq!(y.len(), n);
        for i in 0..n {
            let mut acc = self.main[i] * x[i];
            if i > 0 {
                acc += self.sub[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.sup[i] * x[i + 1];
            }
            y[i] = acc;
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> crate::dense::DenseMatrix {
        let n = self.order();
        let mut a = crate::dense::DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(1)..(i + 2).min(n) {
                a[(i, j)] = self.get(i, j);
            }
        }
        a
    }

    pub fn to_sparse(&self) -> ComplexSparseMatrix {
        let n = self.order();
        let mut trip = Vec::with_capacity(3 * n);
        for i in 0..n {
            for j in i.saturating_sub(1)..(i + 2).min(n) {
                trip.push((i, j, self.get(i, j)));
            }
        }
        ComplexSparseMatrix::from_triplets(n, trip)
    }
}

/// Square complex matrix in compressed sparse row storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSparseMatrix {
    order: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl ComplexSparseMatrix {
    /// Build from `(row, col, value)` triplets. Duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(order: usize, mut trip: Vec<(usize, usize, C64)>) -> Self {
        trip.sort_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; order + 1];
        let mut indices = Vec::with_capacity(trip.len());
        let mut values: Vec<C64> = Vec::with_capacity(trip.len());
        let mut row_of: Vec<usize> = Vec::with_capacity(trip.len());
        for (i, j, v) in trip {
            assert!(i < order && j < order, "triplet ({i}, {j}) out of range");
            if let (Some(&li), Some(&lj)) = (row_of.last(), indices.last()) {
                if li == i && lj == j {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            row_of.push(i);
            indices.push(j);
            values.push(v);
        }
        // Drop explicit zeros, then count per row.
        let mut keep_idx = Vec::with_capacity(indices.len());
        let mut keep_val = Vec::with_capacity(values.len());
        for ((i, j), v) in row_of.into_iter().zip(indices).zip(values) {
            if v != ZERO {
                indptr[i + 1] += 1;
                keep_idx.push(j);
                keep_val.push(v);
            }
        }
        for i in 0..order {
            indptr[i + 1] += indptr[i];
        }
        Self {
            order,
            indptr,
            indices: keep_idx,
            values: keep_val,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[C64]) {
        let span = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => ZERO,
        }
    }

    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.order);
        assert_eq!(y.len(), self.order);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, v)| v * x[j]).sum();
        }
    }

    /// Largest `|i - j|` over stored entries, as (lower, upper).
    pub fn bandwidth(&self) -> (usize, usize) {
        let (mut kl, mut ku) = (0, 0);
        for i in 0..self.order {
            for &j in self.row(i).0 {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    pub fn to_dense(&self) -> crate::dense::DenseMatrix {
        let mut a = crate::dense::DenseMatrix::zeros(self.order, self.order);
        for i in 0..self.order {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                a[(i, j)] = v;
            }
        }
        a
    }
}

/// Shortley-Weller negative second derivative on the grid's interior points.
pub fn assemble_neg_laplacian_1d(grid: &ContourGrid) -> Result<ComplexBandedMatrix> {
    let h = &grid.spacings;
    if h.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid needs at least 3 points, has {}",
            h.len() + 1
        )));
    }
    if let Some(j) = h.iter().position(|s| s.norm() == 0.0 || !s.is_finite()) {
        return Err(Error::DegenerateSpacing(j));
    }
    let order = h.len() - 1;
    let mut sub = Vec::with_capacity(order - 1);
    let mut main = Vec::with_capacity(order);
    let mut sup = Vec::with_capacity(order - 1);
    for i in 0..order {
        let (hl, hr) = (h[i], h[i + 1]);
        let c = 2.0 / (hl + hr);
        main.push(c * (1.0 / hl + 1.0 / hr));
        if i > 0 {
            sub.push(-c / hl);
        }
        if i + 1 < order {
            sup.push(-c / hr);
        }
    }
    Ok(ComplexBandedMatrix { sub, main, sup })
}

/// `-L_h - k^2 I`.
pub fn assemble_helmholtz_1d(grid: &ContourGrid, k: f64) -> Result<ComplexBandedMatrix> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "wave number must be >= 0, got {k}"
        )));
    }
    Ok(assemble_neg_laplacian_1d(grid)?.shifted(C64::new(-k * k, 0.0)))
}

/// `(-L) (x) I + I (x) (-L) - k^2 I` on the tensor grid, row-major numbering
/// with the first factor selecting the block.
pub fn assemble_helmholtz_2d(grid: &ContourGrid, k: f64) -> Result<ComplexSparseMatrix> {
    assemble_helmholtz_2d_capped(grid, k, DEFAULT_2D_ORDER_CAP)
}

pub fn assemble_helmholtz_2d_capped(
    grid: &ContourGrid,
    k: f64,
    cap: usize,
) -> Result<ComplexSparseMatrix> {
    let l = assemble_helmholtz_1d(grid, 0.0)?;
    let n = l.order();
    let order = n.saturating_mul(n);
    if order > cap {
        return Err(Error::TooLarge { order, cap });
    }
    Ok(kronecker_sum(&l, &l, C64::new(-k * k, 0.0)))
}

/// `A (x) I_b + I_a (x) B + shift I`.
pub fn kronecker_sum(
    a: &ComplexBandedMatrix,
    b: &ComplexBandedMatrix,
    shift: C64,
) -> ComplexSparseMatrix {
    let (na, nb) = (a.order(), b.order());
    let mut trip = Vec::with_capacity(5 * na * nb);
    for i in 0..na {
        for p in 0..nb {
            let row = i * nb + p;
            if i > 0 {
                trip.push((row, row - nb, a.get(i, i - 1)));
            }
            if p > 0 {
                trip.push((row, row - 1, b.get(p, p - 1)));
            }
            trip.push((row, row, a.main[i] + b.main[p] + shift));
            if p + 1 < nb {
                trip.push((row, row + 1, b.get(p, p + 1)));
            }
            if i + 1 < na {
                trip.push((row, row + nb, a.get(i, i + 1)));
            }
        }
    }
    ComplexSparseMatrix::from_triplets(na * nb, trip)
}

/// 1-based grid index of the interior point nearest to `x = 1/2`, with ties
/// going to the lower index.
pub fn source_index(grid: &ContourGrid) -> usize {
    let target = 0.5 / grid.h;
    let j = (target - 0.5).ceil();
    (j.max(1.0) as usize).min(grid.unknowns())
}

/// Unit point source at the unknown nearest `1/2` (1D) or `(1/2, 1/2)` (2D).
pub fn point_source_rhs(grid: &ContourGrid, dims: usize) -> Result<Vec<C64>> {
    let n = grid.unknowns();
    let i = source_index(grid) - 1;
    match dims {
        1 => {
            let mut f = vec![ZERO; n];
            f[i] = C64::new(1.0, 0.0);
            Ok(f)
        }
        2 => {
            let mut f = vec![ZERO; n * n];
            f[i * n + i] = C64::new(1.0, 0.0);
            Ok(f)
        }
        d => Err(Error::InvalidArgument(format!(
            "dims must be 1 or 2, got {d}"
        ))),
    }
}
