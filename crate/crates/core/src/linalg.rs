//! Small dense linear algebra: row-major matrices, Cholesky, triangular
//! solves and a Householder QR with an in-order rank check.
//!
//! Everything here is sized for desk-scale models (a few hundred rows, a few
//! dozen columns), so the routines favour clarity over blocking.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data.
    ///
    /// Panics if `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * p);
        for r in rows {
            assert_eq!(r.len(), p, "ragged rows");
            data.extend_from_slice(r);
        }
        Self::from_row_major(n, p, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = out.row_mut(i);
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ · v`
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "tr_matvec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    /// `selfᵀ · self`
    pub fn gram(&self) -> Matrix {
        let p = self.cols;
        let mut out = Matrix::zeros(p, p);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..p {
                let ra = r[a];
                if ra == 0.0 {
                    continue;
                }
                for b in a..p {
                    out[(a, b)] += ra * r[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                out[(a, b)] = out[(b, a)];
            }
        }
        out
    }

    /// Returns a copy keeping only the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Matrix::from_row_major(rows.len(), self.cols, data)
    }

    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, cols.len(), |i, j| self[(i, cols[j])])
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Lower Cholesky factor `L` with `A = L Lᵀ`.
///
/// Returns `None` when a pivot is not strictly positive.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "cholesky needs a square matrix");
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let djj = libm::sqrt(d);
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn solve_lower(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.nrows();
    let mut x = b.to_vec();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solves `Lᵀ x = b` for lower-triangular `L`.
pub fn solve_lower_transpose(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.nrows();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solves `L X = B` column by column.
pub fn solve_lower_matrix(l: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(b.nrows(), b.ncols());
    for j in 0..b.ncols() {
        let x = solve_lower(l, &b.column(j));
        for (i, v) in x.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    out
}

/// Inverse of `A = L Lᵀ` given its Cholesky factor.
pub fn cholesky_inverse(l: &Matrix) -> Matrix {
    let n = l.nrows();
    let mut inv = Matrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let y = solve_lower(l, &e);
        let x = solve_lower_transpose(l, &y);
        for i in 0..n {
            inv[(i, j)] = x[i];
        }
    }
    inv
}

/// Sum of `ln(L_ii²)`, the log-determinant of `L Lᵀ`.
pub fn log_det_from_cholesky(l: &Matrix) -> f64 {
    (0..l.nrows()).map(|i| 2.0 * libm::log(l[(i, i)])).sum()
}

/// Householder QR of a tall matrix with an in-order rank check.
///
/// Columns are processed left to right. A column whose remaining norm falls
/// below `tol · (largest column norm)` is linearly dependent on the columns
/// before it; its index is reported as the first offending column.
#[derive(Debug, Clone)]
pub struct Qr {
    /// Householder vectors stored below the diagonal, `R` on and above it.
    qr: Matrix,
    /// Scalar factors of the reflectors.
    tau: Vec<f64>,
    /// Diagonal of `R`.
    rdiag: Vec<f64>,
}

/// Relative tolerance for the rank check.
pub const RANK_TOL: f64 = 1e-10;

impl Qr {
    /// Factors `a` (n × p, n ≥ p). Returns `Err(j)` with the first column
    /// that is numerically dependent on earlier ones.
    pub fn new(a: &Matrix) -> Result<Self, usize> {
        let (n, p) = (a.nrows(), a.ncols());
        assert!(n >= p, "QR needs at least as many rows as columns");
        let mut qr = a.clone();
        let mut tau = vec![0.0; p];
        let mut rdiag = vec![0.0; p];
        let scale = (0..p)
            .map(|j| norm2(&a.column(j)))
            .fold(0.0_f64, f64::max);
        for k in 0..p {
            let mut nrm = 0.0;
            for i in k..n {
                nrm += qr[(i, k)] * qr[(i, k)];
            }
            let nrm = libm::sqrt(nrm);
            if nrm <= RANK_TOL * scale || nrm == 0.0 {
                return Err(k);
            }
            let alpha = if qr[(k, k)] > 0.0 { -nrm } else { nrm };
            // v = x - alpha e1, normalised so v[0] = 1
            let v0 = qr[(k, k)] - alpha;
            for i in (k + 1)..n {
                qr[(i, k)] /= v0;
            }
            let t = -v0 / alpha;
            tau[k] = t;
            rdiag[k] = alpha;
            qr[(k, k)] = alpha;
            for j in (k + 1)..p {
                let mut s = qr[(k, j)];
                for i in (k + 1)..n {
                    s += qr[(i, k)] * qr[(i, j)];
                }
                s *= t;
                qr[(k, j)] -= s;
                for i in (k + 1)..n {
                    let vik = qr[(i, k)];
                    qr[(i, j)] -= s * vik;
                }
            }
        }
        Ok(Self { qr, tau, rdiag })
    }

    pub fn ncols(&self) -> usize {
        self.qr.ncols()
    }

    /// Applies `Qᵀ` to `b` in place.
    fn apply_qt(&self, b: &mut [f64]) {
        let (n, p) = (self.qr.nrows(), self.qr.ncols());
        for k in 0..p {
            let mut s = b[k];
            for i in (k + 1)..n {
                s += self.qr[(i, k)] * b[i];
            }
            s *= self.tau[k];
            b[k] -= s;
            for i in (k + 1)..n {
                b[i] -= s * self.qr[(i, k)];
            }
        }
    }

    /// Least-squares solution of `A x ≈ b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let p = self.ncols();
        let mut qtb = b.to_vec();
        self.apply_qt(&mut qtb);
        let mut x = qtb[..p].to_vec();
        for i in (0..p).rev() {
            let mut s = x[i];
            for j in (i + 1)..p {
                s -= self.qr[(i, j)] * x[j];
            }
            x[i] = s / self.rdiag[i];
        }
        x
    }

    /// `(AᵀA)⁻¹ = R⁻¹ R⁻ᵀ`.
    pub fn unscaled_covariance(&self) -> Matrix {
        let p = self.ncols();
        // R⁻¹ by back substitution, upper triangular
        let mut rinv = Matrix::zeros(p, p);
        for j in 0..p {
            rinv[(j, j)] = 1.0 / self.rdiag[j];
            for i in (0..j).rev() {
                let mut s = 0.0;
                for k in (i + 1)..=j {
                    s += self.qr[(i, k)] * rinv[(k, j)];
                }
                rinv[(i, j)] = -s / self.rdiag[i];
            }
        }
        let mut out = Matrix::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                let mut s = 0.0;
                for k in j..p {
                    s += rinv[(i, k)] * rinv[(j, k)];
                }
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }
}
