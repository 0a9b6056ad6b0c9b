//! The empirical bridge of regression residuals and its estimated covariance
//! kernel.
//!
//! With `Δ̂ₖ = ε̂₁ + … + ε̂ₖ` the residual partial sums of an ordered fit, the
//! bridge has node values
//!
//! ```text
//! Z⁰ₙ(k/n) = (Δ̂ₖ − (k/n)·Δ̂ₙ) / (σ̂·√n)
//! ```
//!
//! and is linearly interpolated between nodes. Its covariance is estimated by
//!
//! ```text
//! K̂⁰(s,t) = min(s,t) − s·t − L⁰ₙ(s) Ĝ⁻¹ L⁰ₙ(t)ᵀ
//! ```
//!
//! where `Lₙ` is the empirical induced Lorentz curve (normalized prefix sums
//! of the sorted covariates, a step function), `L⁰ₙ(u) = Lₙ(u) − u·Lₙ(1)`
//! and `Ĝ = XᵀX/n`.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::model::RegressionFit;

/// Arguments within this distance of a node `k/n` (in units of `1/n`) are
/// snapped to the node before the floor convention is applied.
pub const NODE_SNAP: f64 = 1e-9;

/// `[0, r₁, r₁+r₂, …]`, length `n + 1`.
pub fn partial_sums(residuals: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(residuals.len() + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for r in residuals {
        acc += r;
        out.push(acc);
    }
    out
}

fn check_unit(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::OutOfDomain(t))
    }
}

/// Index `[n·t]`, after snapping `n·t` to an integer when it is within
/// [`NODE_SNAP`] of one.
fn floor_index(n: usize, t: f64) -> usize {
    let nt = t * n as f64;
    let r = nt.round();
    let k = if (nt - r).abs() < NODE_SNAP {
        r
    } else {
        nt.floor()
    };
    (k as usize).min(n)
}

/// Piecewise-linear process on `[0, 1]` with nodes at `k/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeProcess {
    node_values: Vec<f64>,
}

impl BridgeProcess {
    /// Wraps node values `z(0/n), …, z(n/n)`; needs at least two nodes.
    pub fn from_nodes(node_values: Vec<f64>) -> Result<Self> {
        if node_values.len() < 2 {
            return Err(Error::InvalidDataset(
                "a process needs at least two nodes".into(),
            ));
        }
        if node_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("process nodes".into()));
        }
        Ok(Self { node_values })
    }

    pub fn n(&self) -> usize {
        self.node_values.len() - 1
    }

    pub fn node_values(&self) -> &[f64] {
        &self.node_values
    }

    /// Linear interpolation between the nodes adjacent to `t`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        check_unit(t)?;
        let n = self.n();
        if t == 1.0 {
            return Ok(self.node_values[n]);
        }
        let nt = t * n as f64;
        let k = (nt.floor() as usize).min(n - 1);
        let lambda = nt - k as f64;
        Ok((1.0 - lambda) * self.node_values[k] + lambda * self.node_values[k + 1])
    }

    /// Writes the path as TSV with header `t\tz0`, one row per node, values
    /// with 17 significant digits.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.n() as f64;
        writeln!(w, "t\tz0")?;
        for (k, z) in self.node_values.iter().enumerate() {
            writeln!(w, "{:.16e}\t{:.16e}", k as f64 / n, z)?;
        }
        Ok(())
    }
}

/// Self-centered, self-normalized residual partial-sum process of an ordered
/// fit. The unknown noise scale cancels, so only `σ̂` enters.
pub fn empirical_bridge(fit: &RegressionFit) -> Result<BridgeProcess> {
    if fit.sigma_hat2 <= 0.0 || fit.sigma_hat2.is_nan() {
        return Err(Error::DegenerateResiduals);
    }
    let n = fit.residuals.len();
    let sums = partial_sums(&fit.residuals);
    let total = sums[n];
    let scale = (fit.sigma_hat2 * n as f64).sqrt();
    let mut nodes: Vec<f64> = sums
        .iter()
        .enumerate()
        .map(|(k, s)| (s - (k as f64 / n as f64) * total) / scale)
        .collect();
    nodes[0] = 0.0;
    nodes[n] = 0.0;
    BridgeProcess::from_nodes(nodes)
}

/// Empirical induced Lorentz curve at the nodes: row `k` is the column sums
/// of the first `k` rows of `x`, divided by `n`.
pub fn lorentz_curve(x: &Matrix) -> Matrix {
    let (n, m) = (x.rows(), x.cols());
    let mut out = Matrix::zeros(n + 1, m);
    let inv_n = 1.0 / n as f64;
    let mut acc = vec![0.0; m];
    for k in 0..n {
        for (j, a) in acc.iter_mut().enumerate() {
            *a += x[(k, j)];
            out[(k + 1, j)] = *a * inv_n;
        }
    }
    out
}

/// Second-moment matrix `XᵀX / n`.
pub fn g_hat(x: &Matrix) -> Matrix {
    let mut g = x.gram();
    g.scale(1.0 / x.rows() as f64);
    g
}

/// Estimated covariance kernel of the empirical bridge.
///
/// Holds the Lorentz curve at the nodes and the Cholesky factor of `Ĝ`;
/// read-only after construction, so one model can serve many `(s, t)`
/// evaluations from several threads.
#[derive(Debug, Clone)]
pub struct CovarianceModel {
    lorentz_nodes: Matrix,
    g_hat: Matrix,
    g_chol: Cholesky,
}

impl CovarianceModel {
    /// Builds the model from the covariates of an ordered dataset.
    pub fn new(x: &Matrix) -> Result<Self> {
        Self::from_parts(lorentz_curve(x), g_hat(x))
    }

    pub fn from_parts(lorentz_nodes: Matrix, g_hat: Matrix) -> Result<Self> {
        if lorentz_nodes.cols() != g_hat.cols() || lorentz_nodes.rows() < 2 {
            return Err(Error::DimensionMismatch(format!(
                "Lorentz nodes {}x{} with {}x{} second moments",
                lorentz_nodes.rows(),
                lorentz_nodes.cols(),
                g_hat.rows(),
                g_hat.cols()
            )));
        }
        let g_chol = Cholesky::factor(&g_hat)?;
        Ok(Self {
            lorentz_nodes,
            g_hat,
            g_chol,
        })
    }

    pub fn n(&self) -> usize {
        self.lorentz_nodes.rows() - 1
    }

    pub fn lorentz_nodes(&self) -> &Matrix {
        &self.lorentz_nodes
    }

    pub fn g_hat(&self) -> &Matrix {
        &self.g_hat
    }

    /// `Lₙ(t)` under the floor convention `[n·t]`.
    pub fn lorentz(&self, t: f64) -> Result<Vec<f64>> {
        check_unit(t)?;
        Ok(self.lorentz_nodes.row(floor_index(self.n(), t)).to_vec())
    }

    /// `L⁰ₙ(t) = Lₙ(t) − t·Lₙ(1)`.
    pub fn lorentz_centered(&self, t: f64) -> Result<Vec<f64>> {
        let end = self.lorentz_nodes.row(self.n());
        let mut l = self.lorentz(t)?;
        for (v, e) in l.iter_mut().zip(end) {
            *v -= t * e;
        }
        Ok(l)
    }

    /// `K̂⁰(s, t)`.
    pub fn k0_hat(&self, s: f64, t: f64) -> Result<f64> {
        let ls = self.lorentz_centered(s)?;
        let lt = self.lorentz_centered(t)?;
        Ok(s.min(t) - s * t - self.g_chol.bilinear_inv(&ls, &lt)?)
    }
}
