//! Closed-form limiting covariance kernels.
//!
//! For one covariate with induced Lorentz curve `L₁(t) = ∫₀ᵗ h` and second
//! moment `E ξ²`, the design row is `(ξ)` or `(ξ, 1)`, so
//! `L(t) = (L₁(t))` or `(L₁(t), t)` and `G = E[rowᵀ row]`.

use serde::{Deserialize, Serialize};

use super::spec::{Design, ModelSpec};
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, Matrix};

/// Which limit the kernel describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    /// `min(s,t) − L(s) G⁻¹ L(t)ᵀ`, the partial-sum process with known σ.
    PartialSum,
    /// `min(s,t) − st − L⁰(s) G⁻¹ L⁰(t)ᵀ`, the bridge.
    Bridge,
    /// `min(s,t) − L₁(s)L₁(t) / E ξ²`: ordering by the only covariate, no
    /// intercept (partial-sum process).
    CovariatePartialSum,
    /// `min(s,t) − st − L₁⁰(s)L₁⁰(t) / Var ξ`: ordering by the covariate,
    /// with intercept.
    CovariateBridge,
    /// `min(s,t) − st`.
    BrownianBridge,
}

/// The process whose covariance a kernel describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessTarget {
    /// Residual partial sums scaled by the true σ.
    PartialSum,
    /// The self-normalized empirical bridge.
    Bridge,
}

impl KernelKind {
    pub fn target(self) -> ProcessTarget {
        match self {
            KernelKind::PartialSum | KernelKind::CovariatePartialSum => ProcessTarget::PartialSum,
            _ => ProcessTarget::Bridge,
        }
    }
}

#[derive(Debug, Clone)]
enum CovariateLaw {
    Quantile(super::CovariateDist),
    Conditional {
        h: super::Polynomial,
        scatter_var: f64,
    },
}

impl CovariateLaw {
    fn from_design(design: &Design) -> Option<Self> {
        match design {
            Design::InterceptOnly => None,
            Design::ExternalOrder { h, scatter } => Some(CovariateLaw::Conditional {
                h: h.clone(),
                scatter_var: scatter.variance(),
            }),
            Design::OrderByCovariate { dist } => Some(CovariateLaw::Quantile(*dist)),
        }
    }

    fn lorentz(&self, t: f64) -> f64 {
        match self {
            CovariateLaw::Quantile(d) => d.lorentz(t),
            CovariateLaw::Conditional { h, .. } => h.integral(t),
        }
    }

    fn mean(&self) -> f64 {
        self.lorentz(1.0)
    }

    fn second_moment(&self) -> f64 {
        match self {
            CovariateLaw::Quantile(d) => d.variance() + d.mean() * d.mean(),
            CovariateLaw::Conditional { h, scatter_var } => h.integral_of_square() + scatter_var,
        }
    }
}

/// A limiting covariance kernel evaluable on `[0, 1]²`.
#[derive(Debug, Clone)]
pub struct TheoreticalKernel {
    kind: KernelKind,
    law: Option<CovariateLaw>,
    intercept: bool,
    g: Option<Cholesky>,
}

impl TheoreticalKernel {
    /// The kernel of the given kind for the model `spec`.
    pub fn new(kind: KernelKind, spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let law = CovariateLaw::from_design(&spec.design);
        let by_covariate = matches!(spec.design, Design::OrderByCovariate { .. });
        match kind {
            KernelKind::CovariatePartialSum if !(by_covariate && !spec.intercept) => {
                return Err(Error::UnsupportedSpec(
                    "covariate partial-sum kernel needs ordering by the covariate without intercept".into(),
                ))
            }
            KernelKind::CovariateBridge if !(by_covariate && spec.intercept) => {
                return Err(Error::UnsupportedSpec(
                    "covariate bridge kernel needs ordering by the covariate with intercept".into(),
                ))
            }
            _ => {}
        }
        let g = match kind {
            KernelKind::PartialSum | KernelKind::Bridge => {
                let g = second_moments(law.as_ref(), spec.intercept);
                Some(Cholesky::factor(&g).map_err(|e| {
                    Error::UnsupportedSpec(format!("second-moment matrix is singular: {e}"))
                })?)
            }
            _ => None,
        };
        Ok(Self {
            kind,
            law,
            intercept: spec.intercept,
            g,
        })
    }

    pub fn brownian_bridge() -> Self {
        Self {
            kind: KernelKind::BrownianBridge,
            law: None,
            intercept: true,
            g: None,
        }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    fn lorentz_vec(&self, t: f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(2);
        if let Some(law) = &self.law {
            v.push(law.lorentz(t));
        }
        if self.intercept {
            v.push(t);
        }
        v
    }

    fn lorentz_centered_vec(&self, t: f64) -> Vec<f64> {
        let end = self.lorentz_vec(1.0);
        let mut v = self.lorentz_vec(t);
        v.iter_mut().zip(end).for_each(|(a, e)| *a -= t * e);
        v
    }

    fn law(&self) -> &CovariateLaw {
        self.law.as_ref().expect("kernel kind requires a covariate")
    }

    /// Kernel value at `(s, t)`.
    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        for v in [s, t] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutOfDomain(v));
            }
        }
        let min = s.min(t);
        let g = || self.g.as_ref().expect("factored at construction");
        Ok(match self.kind {
            KernelKind::BrownianBridge => min - s * t,
            KernelKind::PartialSum => {
                min - g().bilinear_inv(&self.lorentz_vec(s), &self.lorentz_vec(t))?
            }
            KernelKind::Bridge => {
                let (ls, lt) = (self.lorentz_centered_vec(s), self.lorentz_centered_vec(t));
                min - s * t - g().bilinear_inv(&ls, &lt)?
            }
            KernelKind::CovariatePartialSum => {
                let law = self.law();
                min - law.lorentz(s) * law.lorentz(t) / law.second_moment()
            }
            KernelKind::CovariateBridge => {
                let law = self.law();
                let mean = law.mean();
                let var = law.second_moment() - mean * mean;
                let c = |u: f64| law.lorentz(u) - u * mean;
                min - s * t - c(s) * c(t) / var
            }
        })
    }

    /// Kernel matrix on a grid.
    pub fn matrix(&self, grid: &[f64]) -> Result<Matrix> {
        let k = grid.len();
        let mut m = Matrix::zeros(k, k);
        for i in 0..k {
            for j in 0..=i {
                let v = self.eval(grid[i], grid[j])?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Ok(m)
    }
}

fn second_moments(law: Option<&CovariateLaw>, intercept: bool) -> Matrix {
    match (law, intercept) {
        (Some(l), true) => Matrix::from_rows(&[[l.second_moment(), l.mean()], [l.mean(), 1.0]]),
        (Some(l), false) => Matrix::from_rows(&[[l.second_moment()]]),
        (None, _) => Matrix::from_rows(&[[1.0]]),
    }
    .expect("finite moments")
}

/// The closed-form kernel matching `spec`: Brownian bridge for an
/// intercept-only design, the covariate-ordering kernels (partial-sum process
/// without intercept, bridge with intercept) when ordering by the covariate,
/// and the general bridge kernel otherwise.
pub fn theoretical_kernel(spec: &ModelSpec) -> Result<TheoreticalKernel> {
    let kind = match (&spec.design, spec.intercept) {
        (Design::InterceptOnly, _) => KernelKind::BrownianBridge,
        (Design::OrderByCovariate { .. }, true) => KernelKind::CovariateBridge,
        (Design::OrderByCovariate { .. }, false) => KernelKind::CovariatePartialSum,
        (Design::ExternalOrder { .. }, _) => KernelKind::Bridge,
    };
    spec.validate()?;
    if kind == KernelKind::BrownianBridge {
        return Ok(TheoreticalKernel::brownian_bridge());
    }
    TheoreticalKernel::new(kind, spec)
}

/// The limiting kernel of the process selected by `target`.
pub fn kernel_for(spec: &ModelSpec, target: ProcessTarget) -> Result<TheoreticalKernel> {
    let k = theoretical_kernel(spec)?;
    if k.kind().target() == target {
        return Ok(k);
    }
    match target {
        ProcessTarget::Bridge => TheoreticalKernel::new(KernelKind::Bridge, spec),
        ProcessTarget::PartialSum => TheoreticalKernel::new(KernelKind::PartialSum, spec),
    }
}

#[cfg(test)]
mod tests {
    use super::super::{CovariateDist, Polynomial};
    use super::*;

    fn uniform(intercept: bool) -> ModelSpec {
        ModelSpec::order_by_covariate(CovariateDist::STANDARD_UNIFORM, intercept)
    }

    #[test]
    fn intercept_only_is_brownian_bridge() {
        let k = theoretical_kernel(&ModelSpec::intercept_only()).unwrap();
        assert_eq!(k.kind(), KernelKind::BrownianBridge);
        assert_eq!(k.eval(0.3, 0.6).unwrap(), 0.3 - 0.18);
        // the general form reduces to it as well
        let g = TheoreticalKernel::new(KernelKind::Bridge, &ModelSpec::intercept_only()).unwrap();
        assert!((g.eval(0.3, 0.6).unwrap() - (0.3 - 0.18)).abs() < 1e-15);
    }

    #[test]
    fn covariate_bridge_uniform_centre() {
        let k = theoretical_kernel(&uniform(true)).unwrap();
        assert_eq!(k.kind(), KernelKind::CovariateBridge);
        assert!((k.eval(0.5, 0.5).unwrap() - 0.0625).abs() < 1e-15);
        // closed form for uniform(0,1)
        for (s, t) in [(0.2, 0.7), (0.25, 0.75), (0.9, 0.1)] {
            let want =
                f64::min(s, t) - s * t - (s * s / 2.0 - s / 2.0) * (t * t / 2.0 - t / 2.0) * 12.0;
            assert!((k.eval(s, t).unwrap() - want).abs() < 1e-15);
        }
    }

    #[test]
    fn covariate_partial_sum_uniform_end() {
        let k = theoretical_kernel(&uniform(false)).unwrap();
        assert_eq!(k.kind(), KernelKind::CovariatePartialSum);
        assert_eq!(k.kind().target(), ProcessTarget::PartialSum);
        assert!((k.eval(1.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn corollaries_match_general_forms() {
        let grid = [0.1, 0.35, 0.5, 0.8, 1.0];
        for dist in [
            CovariateDist::STANDARD_UNIFORM,
            CovariateDist::Normal { mean: 1.0, sd: 2.0 },
            CovariateDist::Exponential { rate: 0.7 },
        ] {
            let with = ModelSpec::order_by_covariate(dist, true);
            let c3 = TheoreticalKernel::new(KernelKind::CovariateBridge, &with).unwrap();
            let k0 = TheoreticalKernel::new(KernelKind::Bridge, &with).unwrap();
            let t1 = TheoreticalKernel::new(KernelKind::PartialSum, &with).unwrap();
            let without = ModelSpec::order_by_covariate(dist, false);
            let c2 = TheoreticalKernel::new(KernelKind::CovariatePartialSum, &without).unwrap();
            let t1n = TheoreticalKernel::new(KernelKind::PartialSum, &without).unwrap();
            for &s in &grid {
                for &t in &grid {
                    let a = c3.eval(s, t).unwrap();
                    assert!((a - k0.eval(s, t).unwrap()).abs() < 1e-12, "{dist} {s} {t}");
                    assert!((a - t1.eval(s, t).unwrap()).abs() < 1e-12, "{dist} {s} {t}");
                    let b = c2.eval(s, t).unwrap();
                    assert!((b - t1n.eval(s, t).unwrap()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn bridge_kernels_vanish_on_boundary_and_are_symmetric() {
        let specs = [
            uniform(true),
            uniform(false),
            ModelSpec::external_order(
                Polynomial::new(vec![0.5, 2.0]),
                CovariateDist::Normal { mean: 0.0, sd: 0.5 },
                true,
            ),
        ];
        for spec in &specs {
            let k = kernel_for(spec, ProcessTarget::Bridge).unwrap();
            for i in 0..=10 {
                let s = i as f64 / 10.0;
                assert!(k.eval(0.0, s).unwrap().abs() < 1e-14);
                assert!(k.eval(1.0, s).unwrap().abs() < 1e-14);
                for j in 0..=10 {
                    let t = j as f64 / 10.0;
                    assert_eq!(k.eval(s, t).unwrap(), k.eval(t, s).unwrap());
                }
            }
        }
    }

    #[test]
    fn unsupported_combinations() {
        assert!(matches!(
            TheoreticalKernel::new(KernelKind::CovariateBridge, &uniform(false)),
            Err(Error::UnsupportedSpec(_))
        ));
        assert!(matches!(
            TheoreticalKernel::new(
                KernelKind::CovariatePartialSum,
                &ModelSpec::intercept_only()
            ),
            Err(Error::UnsupportedSpec(_))
        ));
        let k = theoretical_kernel(&uniform(true)).unwrap();
        assert!(matches!(k.eval(1.5, 0.0), Err(Error::OutOfDomain(_))));
    }
}
