//! Small dense linear algebra: a row-major matrix, Cholesky factorization,
//! SPD solves and inverse quadratic forms.
//!
//! Nothing in this crate forms an explicit inverse; every `A^{-1} b` is a
//! factor-and-solve through [`Cholesky`].

use std::ops::{Index, IndexMut};

use serde::Serialize;

use crate::error::{Error, Result};

/// Relative tolerance on `|a_ij - a_ji|` accepted before symmetrization.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Dense real matrix in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major entries. All entries must be finite.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries".into()));
        }
        Ok(Self { rows, cols, data })
    }

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

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.cols
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// `selfᵀ · self`, the Gram matrix of the columns.
    pub fn gram(&self) -> Matrix {
        let m = self.cols;
        let mut g = Matrix::zeros(m, m);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..m {
                for j in i..m {
                    g[(i, j)] += row[i] * row[j];
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                g[(i, j)] = g[(j, i)];
            }
        }
        g
    }

    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|v| *v *= c);
    }

    /// Largest absolute entry (the max norm).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Replaces the matrix by `(A + Aᵀ)/2`. Errors if an off-diagonal pair
    /// differs by more than [`SYMMETRY_TOL`] relative to the largest entry.
    pub fn symmetrize(&mut self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix is not square",
                self.rows, self.cols
            )));
        }
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let n = self.rows;
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (self[(i, j)], self[(j, i)]);
                let gap = (a - b).abs();
                if gap > SYMMETRY_TOL * scale {
                    return Err(Error::NotSymmetric { i, j, gap });
                }
                let avg = 0.5 * (a + b);
                self[(i, j)] = avg;
                self[(j, i)] = avg;
            }
        }
        Ok(())
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

/// Cholesky factor `L` (lower triangular, positive diagonal) of an SPD matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Factors `a = L·Lᵀ`.
    ///
    /// `a` is symmetrized first (see [`Matrix::symmetrize`]). A pivot must
    /// exceed `n · ε · max_i a_ii`, otherwise the matrix is reported as not
    /// positive definite.
    pub fn factor(a: &Matrix) -> Result<Self> {
        let mut a = a.clone();
        a.symmetrize()?;
        let n = a.rows();
        let max_diag = (0..n).fold(0.0_f64, |acc, i| acc.max(a[(i, i)]));
        let threshold = n as f64 * f64::EPSILON * max_diag;

        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let pivot = a[(j, j)] - dot(&l.row(j)[..j], &l.row(j)[..j]);
            if pivot <= threshold || pivot.is_nan() {
                return Err(Error::NotPositiveDefinite { row: j, pivot });
            }
            let ljj = pivot.sqrt();
            l[(j, j)] = ljj;
            for i in j + 1..n {
                let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    pub fn l(&self) -> &Matrix {
        &self.l
    }

    pub fn into_l(self) -> Matrix {
        self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    fn check_len(&self, b: &[f64]) -> Result<()> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side of length {} for a {}x{} system",
                b.len(),
                self.dim(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Solves `L·y = b`.
    pub fn forward(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.check_len(b)?;
        let n = self.dim();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let s = b[i] - dot(&self.l.row(i)[..i], &y[..i]);
            y[i] = s / self.l[(i, i)];
        }
        Ok(y)
    }

    /// Solves `Lᵀ·x = y`.
    pub fn backward(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_len(y)?;
        let n = self.dim();
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s = y[i] - (i + 1..n).map(|k| self.l[(k, i)] * x[k]).sum::<f64>();
            x[i] = s / self.l[(i, i)];
        }
        Ok(x)
    }

    /// Solves `A·x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let y = self.forward(b)?;
        self.backward(&y)
    }

    /// `vᵀ A⁻¹ v = |L⁻¹ v|²`.
    pub fn quadratic_form_inv(&self, v: &[f64]) -> Result<f64> {
        let y = self.forward(v)?;
        Ok(dot(&y, &y))
    }

    /// `uᵀ A⁻¹ v`, computed as `(L⁻¹u)·(L⁻¹v)` so it is exactly symmetric in
    /// its arguments.
    pub fn bilinear_inv(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        let yu = self.forward(u)?;
        let yv = self.forward(v)?;
        Ok(dot(&yu, &yv))
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    Cholesky::factor(a).map(Cholesky::into_l)
}

/// Solves `a·x = b` for SPD `a`.
pub fn solve_spd(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    Cholesky::factor(a)?.solve(b)
}

/// Computes `vᵀ a⁻¹ v` for SPD `a`.
pub fn quadratic_form_inv(a: &Matrix, v: &[f64]) -> Result<f64> {
    Cholesky::factor(a)?.quadratic_form_inv(v)
}
