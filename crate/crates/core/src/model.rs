//! Datasets, ordering to concomitants, and least-squares fitting.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, solve_spd, Matrix};

/// Rows `(key, x, y)` of a regression on concomitants.
///
/// The same type represents the raw sample and the sample sorted by its
/// ordering key; [`Dataset::is_ordered`] tells them apart. A dataset with no
/// covariates (`m = 0`) is allowed only as a staging state before
/// [`add_intercept`].
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    order_key: Option<Vec<f64>>,
    x: Matrix,
    y: Vec<f64>,
    ordered: bool,
}

impl Dataset {
    /// Validates shapes and rejects NaN/Inf anywhere in the data.
    pub fn new(order_key: Option<Vec<f64>>, x: Matrix, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 rows, got {n}"
            )));
        }
        if x.rows() != n {
            return Err(Error::InvalidDataset(format!(
                "covariate matrix has {} rows but response has {n}",
                x.rows()
            )));
        }
        if n < x.cols() + 1 {
            return Err(Error::InvalidDataset(format!(
                "need n >= m + 1, got n = {n}, m = {}",
                x.cols()
            )));
        }
        if let Some((i, _)) = y.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite(format!("response at row {i}")));
        }
        if x.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("covariates".into()));
        }
        if let Some(key) = &order_key {
            if key.len() != n {
                return Err(Error::InvalidDataset(format!(
                    "ordering key has {} entries but response has {n}",
                    key.len()
                )));
            }
            if let Some((i, _)) = key.iter().enumerate().find(|(_, v)| !v.is_finite()) {
                return Err(Error::NonFinite(format!("ordering key at row {i}")));
            }
        }
        Ok(Self {
            order_key,
            x,
            y,
            ordered: false,
        })
    }

    /// Marks rows as already arranged in the intended order.
    pub fn assume_ordered(mut self) -> Self {
        self.ordered = true;
        self
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn m(&self) -> usize {
        self.x.cols()
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn order_key(&self) -> Option<&[f64]> {
        self.order_key.as_deref()
    }

    pub fn is_ordered(&self) -> bool {
        self.ordered
    }

    /// Replaces the ordering key by a copy of covariate column `j`.
    pub fn with_key_from_column(mut self, j: usize) -> Result<Self> {
        if j >= self.m() {
            return Err(Error::InvalidDataset(format!(
                "ordering column {j} out of range for {} covariates",
                self.m()
            )));
        }
        self.order_key = Some(self.x.column(j));
        self.ordered = false;
        Ok(self)
    }

    /// Replaces the response, keeping covariates and key.
    pub fn with_response(mut self, y: Vec<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "response of length {} for {} rows",
                y.len(),
                self.n()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("response".into()));
        }
        self.y = y;
        Ok(self)
    }

    /// Replaces the covariate matrix, keeping response and key.
    pub fn with_covariates(mut self, x: Matrix) -> Result<Self> {
        if x.rows() != self.n() || self.n() < x.cols() + 1 {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} covariates for {} rows",
                x.rows(),
                x.cols(),
                self.n()
            )));
        }
        self.x = x;
        Ok(self)
    }
}

/// Sorts rows by the ordering key, carrying covariates and response along.
///
/// The sort is stable, so tied keys keep their original relative order. Ties
/// have probability zero for a continuous key; the test's null distribution
/// assumes one.
pub fn order_by_key(d: Dataset) -> Result<Dataset> {
    let key = d.order_key.as_ref().ok_or(Error::MissingOrderKey)?;
    let mut perm: Vec<usize> = (0..d.n()).collect();
    perm.sort_by(|&a, &b| key[a].total_cmp(&key[b]));

    let m = d.m();
    let mut xs = Vec::with_capacity(d.n() * m);
    for &i in &perm {
        xs.extend_from_slice(d.x.row(i));
    }
    let x = Matrix::new(d.n(), m, xs)?;
    let y = perm.iter().map(|&i| d.y[i]).collect();
    let k = perm.iter().map(|&i| key[i]).collect();
    Ok(Dataset {
        order_key: Some(k),
        x,
        y,
        ordered: true,
    })
}

/// Appends an all-ones column as the last covariate.
pub fn add_intercept(d: Dataset) -> Result<Dataset> {
    let n = d.n();
    let m = d.m();
    if n < m + 2 {
        return Err(Error::InvalidDataset(format!(
            "need n >= m + 1 after adding an intercept, got n = {n}, m = {}",
            m + 1
        )));
    }
    let mut xs = Vec::with_capacity(n * (m + 1));
    for i in 0..n {
        xs.extend_from_slice(d.x.row(i));
        xs.push(1.0);
    }
    Ok(Dataset {
        x: Matrix::new(n, m + 1, xs)?,
        ..d
    })
}

/// Least-squares fit `θ̂ = (XᵀX)⁻¹XᵀY` with residuals and `σ̂² = Σ ε̂ᵢ² / n`.
///
/// The divisor is `n`, not `n - m`, so `σ̂²` is biased downward by the factor
/// `(n - m)/n` in small samples.
///
/// A fit whose residual RMS is at most [`EXACT_FIT_TOL`] times the RMS of the
/// response is treated as exact: residuals are set to zero so that
/// downstream degeneracy checks see `σ̂² = 0` rather than rounding noise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionFit {
    pub theta_hat: Vec<f64>,
    pub residuals: Vec<f64>,
    pub sigma_hat2: f64,
    pub n: usize,
    pub m: usize,
}

/// Relative residual size below which a fit counts as exact.
pub const EXACT_FIT_TOL: f64 = 1e-14;

pub fn fit_lse(d: &Dataset) -> Result<RegressionFit> {
    let (n, m) = (d.n(), d.m());
    if m == 0 {
        return Err(Error::InvalidDataset(
            "no covariates; add an intercept or a covariate column".into(),
        ));
    }
    let xtx = d.x.gram();
    let xty = d.x.transpose().matvec(&d.y)?;
    let theta_hat = solve_spd(&xtx, &xty).map_err(|e| match e {
        e @ Error::NotPositiveDefinite { .. } => Error::RankDeficient(Box::new(e)),
        e => e,
    })?;
    let mut residuals: Vec<f64> = (0..n)
        .map(|i| d.y[i] - dot(d.x.row(i), &theta_hat))
        .collect();
    let mut rss: f64 = residuals.iter().map(|e| e * e).sum();
    let yss: f64 = d.y.iter().map(|v| v * v).sum();
    if rss <= EXACT_FIT_TOL * EXACT_FIT_TOL * yss {
        residuals.iter_mut().for_each(|e| *e = 0.0);
        rss = 0.0;
    }
    let sigma_hat2 = rss / n as f64;
    Ok(RegressionFit {
        theta_hat,
        residuals,
        sigma_hat2,
        n,
        m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> Matrix {
        Matrix::new(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn order_by_key_permutes_concomitants() {
        let d = Dataset::new(
            Some(vec![3.0, 1.0, 2.0]),
            col(&[30.0, 10.0, 20.0]),
            vec![0.0, 1.0, 2.0],
        )
        .unwrap();
        let o = order_by_key(d).unwrap();
        assert!(o.is_ordered());
        assert_eq!(o.y(), &[1.0, 2.0, 0.0]);
        assert_eq!(o.x().as_slice(), &[10.0, 20.0, 30.0]);
        assert_eq!(o.order_key().unwrap(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn order_by_key_sorted_is_identity() {
        let d = Dataset::new(
            Some(vec![1.0, 2.0, 3.0]),
            col(&[4.0, 5.0, 6.0]),
            vec![7.0, 8.0, 9.0],
        )
        .unwrap();
        let o = order_by_key(d.clone()).unwrap();
        assert_eq!(o.x(), d.x());
        assert_eq!(o.y(), d.y());
    }

    #[test]
    fn order_by_key_is_stable() {
        let d = Dataset::new(
            Some(vec![1.0, 1.0, 0.5]),
            col(&[1.0, 2.0, 3.0]),
            vec![10.0, 20.0, 30.0],
        )
        .unwrap();
        let o = order_by_key(d).unwrap();
        assert_eq!(o.y(), &[30.0, 10.0, 20.0]);
    }

    #[test]
    fn order_by_key_requires_key() {
        let d = Dataset::new(None, col(&[1.0, 2.0]), vec![1.0, 2.0]).unwrap();
        assert_eq!(order_by_key(d).unwrap_err(), Error::MissingOrderKey);
    }

    #[test]
    fn fit_constant() {
        let d = Dataset::new(None, col(&[1.0, 1.0, 1.0]), vec![2.0, 2.0, 2.0]).unwrap();
        let f = fit_lse(&d).unwrap();
        assert!((f.theta_hat[0] - 2.0).abs() < 1e-15);
        assert_eq!(f.residuals, vec![0.0; 3]);
        assert_eq!(f.sigma_hat2, 0.0);
    }

    #[test]
    fn fit_single_slope() {
        let d = Dataset::new(None, col(&[1.0, 2.0, 3.0]), vec![1.0, 2.0, 4.0]).unwrap();
        let f = fit_lse(&d).unwrap();
        assert!((f.theta_hat[0] - 17.0 / 14.0).abs() < 1e-15);
        let rss: f64 = f.residuals.iter().map(|e| e * e).sum();
        assert!((f.sigma_hat2 - rss / 3.0).abs() < 1e-15);
    }

    #[test]
    fn fit_collinear_is_rank_deficient() {
        let x = Matrix::from_rows(&[[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]).unwrap();
        let d = Dataset::new(None, x, vec![1.0, 2.0, 4.0]).unwrap();
        assert!(matches!(fit_lse(&d), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn intercept_appends_ones() {
        let d = Dataset::new(None, col(&[5.0, 6.0, 7.0]), vec![1.0, 2.0, 3.0]).unwrap();
        let d = add_intercept(d).unwrap();
        assert_eq!(d.m(), 2);
        assert_eq!(d.x().column(1), vec![1.0; 3]);
        assert_eq!(d.x().column(0), vec![5.0, 6.0, 7.0]);
    }

    #[test]
    fn double_intercept_is_rank_deficient() {
        let d = Dataset::new(None, col(&[5.0, 6.0, 7.0, 9.0]), vec![1.0, 2.0, 3.0, 5.0]).unwrap();
        let d = add_intercept(add_intercept(d).unwrap()).unwrap();
        assert!(matches!(fit_lse(&d), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn intercept_on_empty_design() {
        let d = Dataset::new(None, Matrix::zeros(2, 0), vec![0.0, 2.0]).unwrap();
        assert!(fit_lse(&d).is_err());
        let f = fit_lse(&add_intercept(d).unwrap()).unwrap();
        assert!((f.theta_hat[0] - 1.0).abs() < 1e-15);
        assert!((f.residuals[0] + 1.0).abs() < 1e-15 && (f.residuals[1] - 1.0).abs() < 1e-15);
        assert!((f.sigma_hat2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn construction_validates() {
        assert!(matches!(
            Dataset::new(None, col(&[1.0, 2.0]), vec![1.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            Dataset::new(
                Some(vec![f64::INFINITY, 1.0]),
                col(&[1.0, 2.0]),
                vec![1.0, 2.0]
            ),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            Dataset::new(None, col(&[1.0]), vec![1.0]),
            Err(Error::InvalidDataset(_))
        ));
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert!(matches!(
            Dataset::new(None, x, vec![1.0, 2.0]),
            Err(Error::InvalidDataset(_))
        ));
    }
}
