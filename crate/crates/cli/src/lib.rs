//! Command-line front end for the empirical-bridge test.
//!
//! `empbridge test` reads a CSV file, runs the test and prints a JSON report
//! (or a text table). `empbridge simulate level|power|covariance` runs Monte
//! Carlo studies and prints their JSON reports.
//!
//! Exit codes: 0 on success, 1 when the data are statistically degenerate
//! (perfect fit, rank-deficient design, singular grid covariance), 2 for
//! input errors.

pub mod ingest;

use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use empbridge_core::simulate::{
    covariance_experiment, generate_dataset, monte_carlo_level, monte_carlo_power, CovariateDist,
    MeanShift, ModelSpec, NoiseDist, Polynomial, ProcessTarget,
};
use empbridge_core::{grid_points, run_test_detailed, OrderBy, TestResult};

use crate::ingest::{ingest_csv, write_dataset_csv, ColumnMap, IngestError, Ordering};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DEGENERATE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "empbridge",
    version,
    about = "Empirical-bridge goodness-of-fit test for regression on concomitants"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the test on a CSV file.
    Test(TestArgs),
    /// Run a Monte Carlo study.
    Simulate {
        #[command(subcommand)]
        study: Study,
    },
    /// Write a synthetic dataset as CSV.
    Generate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path (standard output if omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Column to order rows by, or "none" if rows are already in order.
    ///
    /// With "none" the rows must arrive in the intended order; the test is
    /// meaningless under an arbitrary row order.
    #[arg(long, default_value = "none")]
    pub order_by: String,
    #[arg(long)]
    pub response: String,
    /// Comma-separated covariate columns, or "all-remaining".
    #[arg(long, default_value = "all-remaining")]
    pub covariates: String,
    /// Do not append an intercept column.
    #[arg(long)]
    pub no_intercept: bool,
    /// Number of grid points (degrees of freedom).
    #[arg(long, default_value_t = empbridge_core::chisq_test::DEFAULT_D)]
    pub d: usize,
    /// Significance level used by the text report.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Write the bridge path as TSV to this file.
    #[arg(long)]
    pub emit_bridge: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub output: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DesignArg {
    InterceptOnly,
    Covariate,
    External,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Data-generating design.
    #[arg(long, value_enum, default_value_t = DesignArg::Covariate)]
    pub design: DesignArg,
    /// Covariate distribution: uniform:A:B, normal:MEAN:SD or exponential:RATE.
    #[arg(long, default_value = "uniform:0:1")]
    pub covariate_dist: String,
    /// Polynomial coefficients of the conditional mean for the external design.
    #[arg(long, default_value = "0,1")]
    pub h: String,
    #[arg(long)]
    pub no_intercept: bool,
    /// True coefficients, covariate first and intercept last.
    #[arg(long)]
    pub theta: Option<String>,
    /// Error distribution: normal, uniform or t5.
    #[arg(long, default_value = "normal")]
    pub noise: String,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    /// Mean shift: quadratic:COEF or changepoint:JUMP.
    #[arg(long)]
    pub shift: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProcessArg {
    Bridge,
    PartialSum,
}

#[derive(Debug, Subcommand)]
pub enum Study {
    /// Rejection rate under the null model.
    Level {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Rejection rate under a mean shift.
    Power {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Empirical covariance of the bridge against its limiting kernel.
    Covariance {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated grid in (0,1); defaults to i/(d+1).
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, value_enum, default_value_t = ProcessArg::Bridge)]
        process: ProcessArg,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<empbridge_core::Error> for CliError {
    fn from(e: empbridge_core::Error) -> Self {
        let code = if e.is_degeneracy() {
            EXIT_DEGENERATE
        } else {
            EXIT_INPUT
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Dataset(e) => e.into(),
            e => CliError::input(e.to_string()),
        }
    }
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::input(format!("bad {what} value {v:?}")))
        })
        .collect()
}

impl ModelArgs {
    pub fn to_spec(&self) -> Result<ModelSpec, CliError> {
        let intercept = !self.no_intercept;
        let dist: CovariateDist = self.covariate_dist.parse()?;
        let mut spec = match self.design {
            DesignArg::InterceptOnly => {
                if !intercept {
                    return Err(CliError::input("intercept-only design needs the intercept"));
                }
                ModelSpec::intercept_only()
            }
            DesignArg::Covariate => ModelSpec::order_by_covariate(dist, intercept),
            DesignArg::External => {
                let h = Polynomial::new(parse_list(&self.h, "h coefficient")?);
                ModelSpec::external_order(h, dist, intercept)
            }
        };
        if let Some(theta) = &self.theta {
            spec.theta = parse_list(theta, "theta")?;
        }
        spec.noise = self.noise.parse::<NoiseDist>()?;
        spec.noise_sd = self.noise_sd;
        spec.mean_shift = self
            .shift
            .as_deref()
            .map(str::parse::<MeanShift>)
            .transpose()?;
        spec.validate()?;
        Ok(spec)
    }
}

fn write_json<T: serde::Serialize, W: Write>(value: &T, mut out: W) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| CliError::input(format!("cannot write report: {e}")))?;
    writeln!(out).map_err(|e| CliError::input(format!("cannot write report: {e}")))
}

/// Aligned plain-text report.
pub fn format_text(r: &TestResult, alpha: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<12} {}", "n", r.n);
    let _ = writeln!(s, "{:<12} {}", "m", r.m);
    let _ = writeln!(s, "{:<12} {}", "d", r.d);
    let _ = writeln!(s, "{:<12} {:.6e}", "sigma_hat2", r.sigma_hat2);
    for (j, t) in r.theta_hat.iter().enumerate() {
        let _ = writeln!(s, "{:<12} {:.6e}", format!("theta_hat[{j}]"), t);
    }
    let _ = writeln!(s, "\n{:>10} {:>14} {:>14}", "t", "q", "Q_tt");
    for i in 0..r.d {
        let _ = writeln!(
            s,
            "{:>10.6} {:>14.6e} {:>14.6e}",
            r.grid[i],
            r.q[i],
            r.q_matrix[(i, i)]
        );
    }
    let _ = writeln!(s, "\n{:<12} {:.6}", "statistic", r.statistic);
    let _ = writeln!(s, "{:<12} {:.6}", "p_value", r.p_value);
    let verdict = if r.p_value < alpha {
        "reject"
    } else {
        "do not reject"
    };
    let _ = writeln!(s, "{:<12} {verdict} at alpha = {alpha}", "decision");
    s
}

pub fn cmd_test<W: Write>(args: &TestArgs, out: W) -> Result<(), CliError> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::input(format!(
            "alpha must lie in (0, 1), got {}",
            args.alpha
        )));
    }
    let map = ColumnMap {
        response: args.response.clone(),
        order_by: (args.order_by != "none").then(|| args.order_by.clone()),
        covariates: (args.covariates != "all-remaining").then(|| {
            args.covariates
                .split(',')
                .map(|c| c.trim().to_string())
                .collect()
        }),
    };
    let (ds, ordering) = ingest_csv(&args.input, &map)?;
    let order_by = match ordering {
        Ordering::Preordered => OrderBy::Preordered,
        Ordering::ExternalKey => OrderBy::Key,
        Ordering::Covariate(j) => OrderBy::Covariate(j),
    };
    let (result, bridge) = run_test_detailed(ds, args.d, !args.no_intercept, order_by)?;

    if let Some(path) = &args.emit_bridge {
        let f = File::create(path)
            .map_err(|e| CliError::input(format!("cannot create {}: {e}", path.display())))?;
        bridge
            .write_tsv(BufWriter::new(f))
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
    }
    match args.output {
        OutputFormat::Json => write_json(&result, out),
        OutputFormat::Text => {
            let mut out = out;
            out.write_all(format_text(&result, args.alpha).as_bytes())
                .map_err(|e| CliError::input(e.to_string()))
        }
    }
}

pub fn cmd_simulate<W: Write>(study: &Study, out: W) -> Result<(), CliError> {
    match study {
        Study::Level { model, run } => {
            let spec = model.to_spec()?;
            let r = monte_carlo_level(&spec, run.n, run.reps, run.d, run.alpha, run.seed)?;
            write_json(&r, out)
        }
        Study::Power { model, run } => {
            let spec = model.to_spec()?;
            let r = monte_carlo_power(&spec, run.n, run.reps, run.d, run.alpha, run.seed)?;
            write_json(&r, out)
        }
        Study::Covariance {
            model,
            run,
            grid,
            process,
        } => {
            let spec = model.to_spec()?;
            let grid = match grid {
                Some(g) => parse_list(g, "grid")?,
                None => grid_points(run.d),
            };
            let target = match process {
                ProcessArg::Bridge => ProcessTarget::Bridge,
                ProcessArg::PartialSum => ProcessTarget::PartialSum,
            };
            let r = covariance_experiment(&spec, run.n, run.reps, &grid, run.seed, target)?;
            write_json(&r, out)
        }
    }
}

pub fn cmd_generate<W: Write>(
    model: &ModelArgs,
    n: usize,
    seed: u64,
    output: Option<&PathBuf>,
    out: W,
) -> Result<(), CliError> {
    let spec = model.to_spec()?;
    let ds = generate_dataset(&spec, n, seed)?;
    let res = match output {
        Some(path) => {
            let f = File::create(path)
                .map_err(|e| CliError::input(format!("cannot create {}: {e}", path.display())))?;
            write_dataset_csv(&ds, BufWriter::new(f))
        }
        None => write_dataset_csv(&ds, out),
    };
    res.map_err(|e| CliError::input(format!("cannot write CSV: {e}")))
}

/// Runs a parsed command, writing reports to `out`.
pub fn run<W: Write>(cli: &Cli, out: W) -> Result<(), CliError> {
    match &cli.command {
        Command::Test(args) => cmd_test(args, out),
        Command::Simulate { study } => cmd_simulate(study, out),
        Command::Generate {
            model,
            n,
            seed,
            output,
        } => cmd_generate(model, *n, *seed, output.as_ref(), out),
    }
}

/// Entry point shared by the binary: returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let stdout = io::stdout();
    match run(&cli, stdout.lock()) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
