use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Open01, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::Dataset;

/// Distribution family of a covariate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CovariateDist {
    Uniform { a: f64, b: f64 },
    Normal { mean: f64, sd: f64 },
    Exponential { rate: f64 },
}

impl CovariateDist {
    pub const STANDARD_UNIFORM: Self = CovariateDist::Uniform { a: 0.0, b: 1.0 };

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            CovariateDist::Uniform { a, b } => a.is_finite() && b.is_finite() && a < b,
            CovariateDist::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
            CovariateDist::Exponential { rate } => rate.is_finite() && rate > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!(
                "bad covariate distribution parameters: {self}"
            )))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            CovariateDist::Uniform { a, b } => 0.5 * (a + b),
            CovariateDist::Normal { mean, .. } => mean,
            CovariateDist::Exponential { rate } => 1.0 / rate,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            CovariateDist::Uniform { a, b } => (b - a) * (b - a) / 12.0,
            CovariateDist::Normal { sd, .. } => sd * sd,
            CovariateDist::Exponential { rate } => 1.0 / (rate * rate),
        }
    }

    /// Quantile function `F⁻¹(p)` for `p ∈ (0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            CovariateDist::Uniform { a, b } => a + (b - a) * p,
            CovariateDist::Normal { mean, sd } => mean + sd * std_normal_quantile(p),
            CovariateDist::Exponential { rate } => -(-p).ln_1p() / rate,
        }
    }

    /// `∫₀ᵗ F⁻¹(u) du`, the induced Lorentz curve of a sample ordered by this
    /// covariate.
    pub fn lorentz(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match *self {
            CovariateDist::Uniform { a, b } => a * t + 0.5 * (b - a) * t * t,
            CovariateDist::Normal { mean, sd } => {
                // ∫₀ᵗ Φ⁻¹ = −φ(Φ⁻¹(t))
                if t == 0.0 {
                    0.0
                } else if t == 1.0 {
                    mean
                } else {
                    mean * t - sd * std_normal_pdf(std_normal_quantile(t))
                }
            }
            CovariateDist::Exponential { rate } => {
                let tail = 1.0 - t;
                let xlogx = if tail > 0.0 { tail * tail.ln() } else { 0.0 };
                (xlogx + t) / rate
            }
        }
    }
}

impl fmt::Display for CovariateDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovariateDist::Uniform { a, b } => write!(f, "uniform:{a}:{b}"),
            CovariateDist::Normal { mean, sd } => write!(f, "normal:{mean}:{sd}"),
            CovariateDist::Exponential { rate } => write!(f, "exponential:{rate}"),
        }
    }
}

fn parse_params(s: &str, what: &str) -> Result<(String, Vec<f64>)> {
    let mut parts = s.split(':');
    let name = parts.next().unwrap_or_default().trim().to_ascii_lowercase();
    let params = parts
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidSpec(format!("bad {what} parameter {p:?} in {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((name, params))
}

/// Parses `uniform:A:B`, `normal:MEAN:SD` or `exponential:RATE`. Bare
/// family names take the standard parameters.
impl FromStr for CovariateDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, p) = parse_params(s, "distribution")?;
        let dist = match (name.as_str(), p.as_slice()) {
            ("uniform", []) => CovariateDist::STANDARD_UNIFORM,
            ("uniform", [a, b]) => CovariateDist::Uniform { a: *a, b: *b },
            ("normal", []) => CovariateDist::Normal { mean: 0.0, sd: 1.0 },
            ("normal", [mean, sd]) => CovariateDist::Normal {
                mean: *mean,
                sd: *sd,
            },
            ("exponential", []) => CovariateDist::Exponential { rate: 1.0 },
            ("exponential", [rate]) => CovariateDist::Exponential { rate: *rate },
            _ => {
                return Err(Error::InvalidSpec(format!(
                    "unknown covariate distribution {s:?}"
                )))
            }
        };
        dist.validate()?;
        Ok(dist)
    }
}

pub(crate) fn std_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

pub(crate) fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Polynomial conditional mean `h(x) = Σ cₖ xᵏ` of the covariate given the
/// (unobserved) uniform ordering variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub coefficients: Vec<f64>,
}

impl Polynomial {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Self { coefficients }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c)
    }

    /// `∫₀ᵗ h`.
    pub fn integral(&self, t: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(k, c)| c * t.powi(k as i32 + 1) / (k + 1) as f64)
            .sum()
    }

    /// `∫₀¹ h²`.
    pub fn integral_of_square(&self) -> f64 {
        let c = &self.coefficients;
        let mut s = 0.0;
        for (j, cj) in c.iter().enumerate() {
            for (k, ck) in c.iter().enumerate() {
                s += cj * ck / (j + k + 1) as f64;
            }
        }
        s
    }
}

/// How covariates arise and how rows are ordered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Design {
    /// No covariates; rows ordered by an external uniform key.
    InterceptOnly,
    /// One covariate `ξ = h(δ) + (s − E s)` with `s` drawn from `scatter`;
    /// rows ordered by the external uniform key `δ`, which is not observed as
    /// a covariate.
    ExternalOrder {
        h: Polynomial,
        scatter: CovariateDist,
    },
    /// One covariate drawn from `dist`; rows ordered by that covariate.
    OrderByCovariate { dist: CovariateDist },
}

impl Design {
    /// Number of non-intercept covariates.
    pub fn covariates(&self) -> usize {
        match self {
            Design::InterceptOnly => 0,
            _ => 1,
        }
    }
}

/// Error distribution, always standardized to unit variance before scaling
/// by the noise standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDist {
    Normal,
    Uniform,
    /// Student t with 5 degrees of freedom.
    StudentT5,
}

impl NoiseDist {
    fn sample_standardized<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseDist::Normal => StandardNormal.sample(rng),
            NoiseDist::Uniform => 3f64.sqrt() * (2.0 * rng.random::<f64>() - 1.0),
            NoiseDist::StudentT5 => {
                // Var t₅ = 5/3
                let t: f64 = StudentT::new(5.0).expect("valid dof").sample(rng);
                t * (3.0f64 / 5.0).sqrt()
            }
        }
    }
}

impl FromStr for NoiseDist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "gaussian" => Ok(NoiseDist::Normal),
            "uniform" => Ok(NoiseDist::Uniform),
            "t5" | "student-t5" | "student_t5" => Ok(NoiseDist::StudentT5),
            _ => Err(Error::InvalidSpec(format!(
                "unknown noise distribution {s:?}"
            ))),
        }
    }
}

/// Misspecification added to the mean response, for power studies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MeanShift {
    /// `coef · v²` with `v` the ordering variable.
    Quadratic { coef: f64 },
    /// `jump` for rows whose uniform ordering variable exceeds 1/2.
    ChangePoint { jump: f64 },
}

impl FromStr for MeanShift {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, p) = parse_params(s, "mean shift")?;
        match (name.as_str(), p.as_slice()) {
            ("quadratic", [c]) => Ok(MeanShift::Quadratic { coef: *c }),
            ("changepoint" | "change-point", [j]) => Ok(MeanShift::ChangePoint { jump: *j }),
            _ => Err(Error::InvalidSpec(format!("unknown mean shift {s:?}"))),
        }
    }
}

/// Data-generating model `Y = ξθ (+ intercept) (+ shift) + σ·e`.
///
/// `theta` lists the covariate coefficient first and the intercept last,
/// matching the column order produced by `add_intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub design: Design,
    pub intercept: bool,
    pub theta: Vec<f64>,
    pub noise: NoiseDist,
    pub noise_sd: f64,
    pub mean_shift: Option<MeanShift>,
}

impl ModelSpec {
    pub fn intercept_only() -> Self {
        Self {
            design: Design::InterceptOnly,
            intercept: true,
            theta: vec![1.0],
            noise: NoiseDist::Normal,
            noise_sd: 1.0,
            mean_shift: None,
        }
    }

    /// `Y = θ₁X + θ₂ + e` with the rows ordered by `X ~ dist`.
    pub fn order_by_covariate(dist: CovariateDist, intercept: bool) -> Self {
        Self {
            design: Design::OrderByCovariate { dist },
            intercept,
            theta: if intercept { vec![2.0, 1.0] } else { vec![2.0] },
            noise: NoiseDist::Normal,
            noise_sd: 1.0,
            mean_shift: None,
        }
    }

    pub fn external_order(h: Polynomial, scatter: CovariateDist, intercept: bool) -> Self {
        Self {
            design: Design::ExternalOrder { h, scatter },
            ..Self::order_by_covariate(scatter, intercept)
        }
    }

    pub fn with_noise(mut self, noise: NoiseDist, sd: f64) -> Self {
        self.noise = noise;
        self.noise_sd = sd;
        self
    }

    pub fn with_mean_shift(mut self, shift: MeanShift) -> Self {
        self.mean_shift = Some(shift);
        self
    }

    /// Number of design columns, counting the intercept.
    pub fn columns(&self) -> usize {
        self.design.covariates() + usize::from(self.intercept)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sd.is_finite() && self.noise_sd > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "noise_sd must be positive, got {}",
                self.noise_sd
            )));
        }
        if self.columns() == 0 {
            return Err(Error::InvalidSpec(
                "intercept-only design needs the intercept".into(),
            ));
        }
        if self.theta.len() != self.columns() {
            return Err(Error::InvalidSpec(format!(
                "theta has {} entries, design has {} columns",
                self.theta.len(),
                self.columns()
            )));
        }
        if self.theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("theta must be finite".into()));
        }
        match &self.design {
            Design::InterceptOnly => {}
            Design::ExternalOrder { h, scatter } => {
                scatter.validate()?;
                if h.coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidSpec("h coefficients must be finite".into()));
                }
            }
            Design::OrderByCovariate { dist } => dist.validate()?,
        }
        match self.mean_shift {
            Some(MeanShift::Quadratic { coef: v } | MeanShift::ChangePoint { jump: v })
                if !v.is_finite() =>
            {
                Err(Error::InvalidSpec("mean shift must be finite".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Draws `n` i.i.d. rows under `spec`. The covariate matrix holds only the
/// non-intercept covariates; the ordering key is the uniform `δ` for external
/// ordering and the covariate itself when ordering by covariate.
pub fn generate_dataset(spec: &ModelSpec, n: usize, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    if n < spec.columns() + 1 || n < 2 {
        return Err(Error::InvalidSpec(format!(
            "n = {n} too small for {} design columns",
            spec.columns()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = spec.design.covariates();
    let mut key = Vec::with_capacity(n);
    let mut xs = Vec::with_capacity(n * k);
    let mut y = Vec::with_capacity(n);

    for _ in 0..n {
        let delta: f64 = rng.sample(Open01);
        let (xi, order_var) = match &spec.design {
            Design::InterceptOnly => (None, delta),
            Design::ExternalOrder { h, scatter } => {
                let s = scatter.quantile(rng.sample(Open01)) - scatter.mean();
                (Some(h.eval(delta) + s), delta)
            }
            Design::OrderByCovariate { dist } => {
                let xi = dist.quantile(delta);
                (Some(xi), xi)
            }
        };
        let mut mean = 0.0;
        if let Some(xi) = xi {
            xs.push(xi);
            mean += spec.theta[0] * xi;
        }
        if spec.intercept {
            mean += spec.theta[k];
        }
        mean += match spec.mean_shift {
            None => 0.0,
            Some(MeanShift::Quadratic { coef }) => coef * order_var * order_var,
            Some(MeanShift::ChangePoint { jump }) if delta > 0.5 => jump,
            Some(MeanShift::ChangePoint { .. }) => 0.0,
        };
        let e = spec.noise_sd * spec.noise.sample_standardized(&mut rng);
        key.push(order_var);
        y.push(mean + e);
    }
    Dataset::new(Some(key), Matrix::new(n, k, xs)?, y)
}
