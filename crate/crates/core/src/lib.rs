//! Empirical-bridge goodness-of-fit test for linear regression on induced
//! order statistics (concomitants).
//!
//! Rows `(key, x, y)` are sorted by the ordering key, a least-squares fit is
//! computed, and the partial sums of the residuals are turned into a
//! self-centered, self-normalized process pinned at both ends (the empirical
//! bridge). Sampling the bridge on an equispaced grid and weighting it by the
//! estimated covariance kernel yields a statistic that is asymptotically
//! chi-square with `d` degrees of freedom under the linear model.
//!
//! # Modules
//!
//! - [`linalg`] - dense SPD factorization, solves and quadratic forms
//! - [`model`] - datasets, concomitant ordering, least squares
//! - [`bridge`] - empirical bridge, induced Lorentz curve, estimated kernel
//! - [`chisq_test`] - grid vector, covariance matrix, statistic and p-value
//! - [`simulate`] - synthetic data, theoretical kernels, Monte Carlo studies
//!
//! ```
//! use empbridge_core::{run_test, Dataset, Matrix, OrderBy};
//!
//! let x = Matrix::zeros(2, 0);
//! let ds = Dataset::new(None, x, vec![0.0, 2.0]).unwrap();
//! let res = run_test(ds, 1, true, OrderBy::Preordered).unwrap();
//! assert!((res.statistic - 2.0).abs() < 1e-12);
//! ```

pub mod bridge;
pub mod error;
pub mod linalg;
pub mod model;
pub mod simulate;

pub use bridge::{
    empirical_bridge, g_hat, lorentz_curve, partial_sums, BridgeProcess, CovarianceModel,
};
pub use chisq_test::{
    chi2_cdf, chi2_sf, covariance_matrix, grid_points, grid_vector, run_test, run_test_detailed,
    statistic, OrderBy, TestResult,
};
pub use error::{Error, Result};
pub use linalg::{cholesky, quadratic_form_inv, solve_spd, Cholesky, Matrix};
pub use model::{add_intercept, fit_lse, order_by_key, Dataset, RegressionFit};
pub use simulate::{
    CovariateDist, Design, KernelKind, MeanShift, ModelSpec, NoiseDist, TheoreticalKernel,
};
