//! Monte Carlo experiments: test level and power, empirical covariance of the
//! bridge, and draws from the limiting Gaussian vector.
//!
//! Replicate `r` always uses the seed [`replicate_seed`]`(seed, r)`, and
//! results are gathered in replicate order before aggregation, so reports do
//! not depend on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::kernel::{kernel_for, ProcessTarget, TheoreticalKernel};
use super::spec::{generate_dataset, ModelSpec};
use crate::bridge::{empirical_bridge, partial_sums, BridgeProcess};
use crate::chisq_test::{run_test, OrderBy};
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};
use crate::model::{add_intercept, fit_lse, order_by_key};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replicate `index` in a run seeded with `seed`.
pub fn replicate_seed(seed: u64, index: usize) -> u64 {
    splitmix64(splitmix64(seed) ^ (index as u64).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Rejection-rate report of a level or power experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectionReport {
    pub spec: ModelSpec,
    pub n: usize,
    pub reps: usize,
    pub d: usize,
    pub alpha: f64,
    /// Fraction of non-failed replicates with `p_value < alpha`.
    pub rejection_rate: f64,
    /// Binomial standard error of `rejection_rate`.
    pub standard_error: f64,
    /// Replicates whose grid covariance matrix was singular.
    pub failures: usize,
}

/// Empirical-versus-theoretical covariance report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceReport {
    pub spec: ModelSpec,
    pub n: usize,
    pub reps: usize,
    pub failures: usize,
    pub grid: Vec<f64>,
    pub empirical: Vec<Vec<f64>>,
    pub theoretical: Vec<Vec<f64>>,
    pub max_abs_deviation: f64,
}

fn check_run(n: usize, reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(Error::InvalidSpec("reps must be at least 1".into()));
    }
    if n < 2 {
        return Err(Error::InvalidSpec("n must be at least 2".into()));
    }
    Ok(())
}

/// Rejection rate of the test at level `alpha` under `spec`.
///
/// Replicates failing with a singular grid covariance are counted in
/// `failures` and excluded from the rate; any other error aborts the run and
/// names the first failing replicate.
pub fn monte_carlo_rejection(
    spec: &ModelSpec,
    n: usize,
    reps: usize,
    d: usize,
    alpha: f64,
    seed: u64,
) -> Result<RejectionReport> {
    spec.validate()?;
    check_run(n, reps)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidSpec(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    let outcomes: Vec<Result<Option<bool>>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let ds = generate_dataset(spec, n, replicate_seed(seed, r))?;
            match run_test(ds, d, spec.intercept, OrderBy::Key) {
                Ok(res) => Ok(Some(res.p_value < alpha)),
                Err(Error::SingularCovariance { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();

    let (mut rejections, mut failures) = (0usize, 0usize);
    for (index, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(Some(true)) => rejections += 1,
            Ok(Some(false)) => {}
            Ok(None) => failures += 1,
            Err(e) => {
                return Err(Error::Replicate {
                    index,
                    source: Box::new(e),
                })
            }
        }
    }
    let ok = reps - failures;
    let (rate, se) = if ok == 0 {
        (0.0, 0.0)
    } else {
        let p = rejections as f64 / ok as f64;
        (p, (p * (1.0 - p) / ok as f64).sqrt())
    };
    Ok(RejectionReport {
        spec: spec.clone(),
        n,
        reps,
        d,
        alpha,
        rejection_rate: rate,
        standard_error: se,
        failures,
    })
}

/// Level of the test: the rejection rate when the linear model holds.
pub fn monte_carlo_level(
    spec: &ModelSpec,
    n: usize,
    reps: usize,
    d: usize,
    alpha: f64,
    seed: u64,
) -> Result<RejectionReport> {
    if spec.mean_shift.is_some() {
        return Err(Error::InvalidSpec(
            "a level study needs the null model; remove the mean shift".into(),
        ));
    }
    monte_carlo_rejection(spec, n, reps, d, alpha, seed)
}

/// Power of the test against the mean shift in `spec`.
pub fn monte_carlo_power(
    spec: &ModelSpec,
    n: usize,
    reps: usize,
    d: usize,
    alpha: f64,
    seed: u64,
) -> Result<RejectionReport> {
    if spec.mean_shift.is_none() {
        return Err(Error::InvalidSpec(
            "a power study needs a mean shift".into(),
        ));
    }
    monte_carlo_rejection(spec, n, reps, d, alpha, seed)
}

/// One replicate of the selected process, evaluated on `grid`.
fn process_on_grid(
    spec: &ModelSpec,
    n: usize,
    grid: &[f64],
    seed: u64,
    target: ProcessTarget,
) -> Result<Vec<f64>> {
    let ds = order_by_key(generate_dataset(spec, n, seed)?)?;
    let ds = if spec.intercept {
        add_intercept(ds)?
    } else {
        ds
    };
    let fit = fit_lse(&ds)?;
    let process = match target {
        ProcessTarget::Bridge => empirical_bridge(&fit)?,
        ProcessTarget::PartialSum => {
            let scale = spec.noise_sd * (n as f64).sqrt();
            let nodes = partial_sums(&fit.residuals)
                .into_iter()
                .map(|s| s / scale)
                .collect();
            BridgeProcess::from_nodes(nodes)?
        }
    };
    grid.iter().map(|&t| process.eval(t)).collect()
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
        return Err(Error::InvalidSpec("grid points must lie in (0, 1)".into()));
    }
    Ok(())
}

/// Sample covariance (divisor `reps − 1`) of the process at the grid points;
/// the zero matrix for a single replicate. Returns the matrix and the number
/// of degenerate replicates excluded.
pub fn empirical_process_covariance(
    spec: &ModelSpec,
    n: usize,
    reps: usize,
    grid: &[f64],
    seed: u64,
    target: ProcessTarget,
) -> Result<(Matrix, usize)> {
    spec.validate()?;
    check_run(n, reps)?;
    check_grid(grid)?;
    let draws: Vec<Result<Vec<f64>>> = (0..reps)
        .into_par_iter()
        .map(|r| process_on_grid(spec, n, grid, replicate_seed(seed, r), target))
        .collect();

    let k = grid.len();
    let mut rows = Vec::with_capacity(reps);
    let mut failures = 0;
    for (index, draw) in draws.into_iter().enumerate() {
        match draw {
            Ok(v) => rows.push(v),
            Err(e) if e.is_degeneracy() => failures += 1,
            Err(e) => {
                return Err(Error::Replicate {
                    index,
                    source: Box::new(e),
                })
            }
        }
    }
    Ok((sample_covariance(&rows, k), failures))
}

/// Sample covariance of the empirical bridge at the grid points.
pub fn empirical_bridge_covariance(
    spec: &ModelSpec,
    n: usize,
    reps: usize,
    grid: &[f64],
    seed: u64,
) -> Result<Matrix> {
    empirical_process_covariance(spec, n, reps, grid, seed, ProcessTarget::Bridge).map(|(m, _)| m)
}

pub(crate) fn sample_covariance(rows: &[Vec<f64>], k: usize) -> Matrix {
    let mut cov = Matrix::zeros(k, k);
    if rows.len() < 2 {
        return cov;
    }
    let count = rows.len() as f64;
    let mut mean = vec![0.0; k];
    for r in rows {
        mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= count);
    for r in rows {
        for i in 0..k {
            let di = r[i] - mean[i];
            for j in 0..=i {
                cov[(i, j)] += di * (r[j] - mean[j]);
            }
        }
    }
    for i in 0..k {
        for j in 0..=i {
            let v = cov[(i, j)] / (count - 1.0);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Compares the empirical covariance of the selected process with its
/// limiting kernel on `grid`.
pub fn covariance_experiment(
    spec: &ModelSpec,
    n: usize,
    reps: usize,
    grid: &[f64],
    seed: u64,
    target: ProcessTarget,
) -> Result<CovarianceReport> {
    let kernel = kernel_for(spec, target)?;
    let (empirical, failures) = empirical_process_covariance(spec, n, reps, grid, seed, target)?;
    let theoretical = kernel.matrix(grid)?;
    let max_abs_deviation = empirical
        .as_slice()
        .iter()
        .zip(theoretical.as_slice())
        .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
    Ok(CovarianceReport {
        spec: spec.clone(),
        n,
        reps,
        failures,
        grid: grid.to_vec(),
        empirical: to_rows(&empirical),
        theoretical: to_rows(&theoretical),
        max_abs_deviation,
    })
}

/// Draws centered Gaussian vectors whose covariance is a kernel on a grid.
#[derive(Debug, Clone)]
pub struct LimitSampler {
    chol: Cholesky,
}

impl LimitSampler {
    pub fn new(kernel: &TheoreticalKernel, grid: &[f64]) -> Result<Self> {
        Ok(Self {
            chol: Cholesky::factor(&kernel.matrix(grid)?)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.chol.dim()
    }

    pub fn sample<R: rand::Rng>(&self, rng: &mut R) -> Vec<f64> {
        let w: Vec<f64> = (0..self.dim())
            .map(|_| StandardNormal.sample(rng))
            .collect();
        self.chol.l().matvec(&w).expect("square factor")
    }

    /// `z K⁻¹ zᵀ` for a draw `z`, against the sampler's own kernel matrix.
    pub fn statistic(&self, z: &[f64]) -> Result<f64> {
        self.chol.quadratic_form_inv(z)
    }
}

/// One draw of the limiting Gaussian vector at the grid points.
pub fn sample_limit_vector(
    kernel: &TheoreticalKernel,
    grid: &[f64],
    seed: u64,
) -> Result<Vec<f64>> {
    let sampler = LimitSampler::new(kernel, grid)?;
    Ok(sampler.sample(&mut ChaCha8Rng::seed_from_u64(seed)))
}

/// Quadratic-form statistics of `draws` limit vectors, one seed per draw.
pub fn limit_statistics(
    kernel: &TheoreticalKernel,
    grid: &[f64],
    draws: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let sampler = LimitSampler::new(kernel, grid)?;
    (0..draws)
        .into_par_iter()
        .map(|r| {
            let z = sampler.sample(&mut ChaCha8Rng::seed_from_u64(replicate_seed(seed, r)));
            sampler.statistic(&z)
        })
        .collect()
}

/// `sup |F̂ − F|` between the empirical CDF of `samples` and `cdf`.
pub fn kolmogorov_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0, |acc, (i, &x)| {
        let f = cdf(x);
        acc.max(((i + 1) as f64 / n - f).abs())
            .max((f - i as f64 / n).abs())
    })
}
