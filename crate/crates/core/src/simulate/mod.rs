//! Synthetic data under the linear model on concomitants, closed-form
//! limiting kernels, and Monte Carlo validation.

mod kernel;
mod monte_carlo;
mod spec;

pub use kernel::{kernel_for, theoretical_kernel, KernelKind, ProcessTarget, TheoreticalKernel};
pub use monte_carlo::{
    covariance_experiment, empirical_bridge_covariance, empirical_process_covariance,
    kolmogorov_distance, limit_statistics, monte_carlo_level, monte_carlo_power,
    monte_carlo_rejection, replicate_seed, sample_limit_vector, CovarianceReport, LimitSampler,
    RejectionReport,
};
pub use spec::{
    generate_dataset, CovariateDist, Design, MeanShift, ModelSpec, NoiseDist, Polynomial,
};
