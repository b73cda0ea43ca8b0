//! Command-line front end. `run` parses arguments, dispatches, and returns
//! the process exit code: 0 success, 1 usage or I/O error, 2 budget
//! exhausted (or too few usable errors for `rate`).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::analysis::{self, AnalysisError, Regime};
use crate::harness::{
    self, ExperimentSpec, HarnessError, LabelMode, ProblemKind, ProblemParams, SolverKind,
};
use crate::models::{self, check_derivatives};
use crate::solver::{PgConfig, SolverConfig};
use crate::trace::{RunConfig, Termination, Trace};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;

const EXIT_HELP: &str =
    "Exit codes: 0 success, 1 usage or I/O error, 2 iteration budget exhausted \
(solve) or too few usable errors (rate).\nThe last stdout line is \
`RESULT F=<..> residual=<..> iters=<..> regime=<..>`.";

#[derive(Debug, Parser)]
#[command(name = "klprox", version, about = "Inexact proximal Newton with q-order regularization, a proximal gradient baseline, and H1/H2 rate verification", after_help = EXIT_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Run a solver on a generated or libsvm problem and write the trace
    Solve(SolveArgs),
    /// Fit and check the decrease (H1) and relative-error (H2) constants of a trace
    Verify(VerifyArgs),
    /// Estimate the convergence order of a trace with stored iterates
    Rate(RateArgs),
    /// Write a seeded random data set in libsvm format
    GenData(GenDataArgs),
    /// Run built-in consistency checks
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemArg {
    Quadratic,
    LeastSquaresL0,
    LeastSquaresL1,
    LogisticL0,
    LibsvmLogistic,
    LibsvmLeastSquares,
    Synthetic,
}

impl From<ProblemArg> for ProblemKind {
    fn from(p: ProblemArg) -> Self {
        match p {
            ProblemArg::Quadratic => ProblemKind::QuadraticSmooth,
            ProblemArg::LeastSquaresL0 => ProblemKind::LeastSquaresL0,
            ProblemArg::LeastSquaresL1 => ProblemKind::LeastSquaresL1,
            ProblemArg::LogisticL0 => ProblemKind::LogisticL0,
            ProblemArg::LibsvmLogistic => ProblemKind::LibsvmLogistic,
            ProblemArg::LibsvmLeastSquares => ProblemKind::LibsvmLeastSquares,
            ProblemArg::Synthetic => ProblemKind::SyntheticKl,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverArg {
    ProxNewton,
    Pg,
    Synth,
}

/// Every option is optional so that a `--config` file can fill the gaps;
/// explicit flags win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SolveArgs {
    /// TOML file with the same keys as the long flags
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// problem to build [default: quadratic]
    #[arg(long, value_enum)]
    pub problem: Option<ProblemArg>,
    /// method [default: prox-newton; synth for the synthetic problem]
    #[arg(long, value_enum)]
    pub solver: Option<SolverArg>,
    /// regularization order q ∈ [2, 3] [default: 3]
    #[arg(long)]
    pub q: Option<f64>,
    /// stationarity tolerance ε [default: 1e-8]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// escalation factor τ > 1 [default: 2]
    #[arg(long)]
    pub tau: Option<f64>,
    /// sufficient-decrease fraction δ ∈ (0, 1) [default: 0.5]
    #[arg(long)]
    pub delta: Option<f64>,
    /// lower bound L_min on the regularization weight [default: 1e-3]
    #[arg(long)]
    pub l_min: Option<f64>,
    /// upper bound L_max on the initial weight [default: 1e3]
    #[arg(long)]
    pub l_max: Option<f64>,
    /// inexactness constant b [default: 1]
    #[arg(long)]
    pub b: Option<f64>,
    /// outer iteration budget [default: 500 for prox-newton, 5000 for pg]
    #[arg(long)]
    pub max_outer: Option<usize>,
    /// inner iteration budget per subproblem [default: 2000]
    #[arg(long)]
    pub max_inner: Option<usize>,
    /// escalation budget j_max [default: 60]
    #[arg(long)]
    pub max_j: Option<usize>,
    /// data and starting-point seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// rows of generated data [default: 200]
    #[arg(long)]
    pub n: Option<usize>,
    /// columns of generated data [default: 50]
    #[arg(long)]
    pub dim: Option<usize>,
    /// ridge weight μ of the logistic model [default: 1e-5]
    #[arg(long)]
    pub mu: Option<f64>,
    /// sparsity weight λ [default: 0.1]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// exponent γ of the synthetic function ‖x‖^γ [default: 2]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// step exponent p of the synthetic generator [default: q − 1]
    #[arg(long)]
    pub p: Option<f64>,
    /// KL exponent θ used for the predicted order [default: 1 − 1/γ, else 0.5]
    #[arg(long)]
    pub theta: Option<f64>,
    /// libsvm file for the libsvm-* problems
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// output directory [default: klprox-out]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// also write iterate vectors to trace.bin
    #[arg(long)]
    #[serde(default)]
    pub full_trace: bool,
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl SolveArgs {
    /// Fills unset options from `file`.
    pub fn merged_with(mut self, file: SolveArgs) -> Self {
        merge_fields!(self, file; problem, solver, q, epsilon, tau, delta, l_min, l_max, b,
            max_outer, max_inner, max_j, seed, n, dim, mu, lambda, gamma, p, theta, data, out);
        self.full_trace |= file.full_trace;
        self
    }

    pub fn to_spec(&self) -> Result<ExperimentSpec, String> {
        let problem = self.problem.unwrap_or(ProblemArg::Quadratic);
        let solver = match (self.solver, problem) {
            (Some(SolverArg::ProxNewton), _) => SolverKind::ProxNewton,
            (Some(SolverArg::Pg), _) => SolverKind::PgBaseline,
            (Some(SolverArg::Synth), _) | (None, ProblemArg::Synthetic) => {
                SolverKind::SynthGenerator
            }
            (None, _) => SolverKind::ProxNewton,
        };
        if matches!(
            problem,
            ProblemArg::LibsvmLogistic | ProblemArg::LibsvmLeastSquares
        ) && self.data.is_none()
        {
            return Err("--data is required for libsvm problems".into());
        }
        let d = SolverConfig::default();
        let config = SolverConfig {
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            b: self.b.unwrap_or(d.b),
            q: self.q.unwrap_or(d.q),
            tau: self.tau.unwrap_or(d.tau),
            l_min: self.l_min.unwrap_or(d.l_min),
            l_max: self.l_max.unwrap_or(d.l_max),
            delta: self.delta.unwrap_or(d.delta),
            max_outer: self.max_outer.unwrap_or(d.max_outer),
            max_inner: self.max_inner.unwrap_or(d.max_inner),
            max_j: self.max_j.unwrap_or(d.max_j),
        };
        config.validate().map_err(|e| e.to_string())?;
        let pd = PgConfig::default();
        let pg_config = PgConfig {
            epsilon: config.epsilon,
            max_outer: self.max_outer.unwrap_or(pd.max_outer),
            ..pd
        };
        let mut params = ProblemParams::with_seed(self.seed.unwrap_or(0));
        params.n = self.n.unwrap_or(params.n);
        params.dim = self.dim.unwrap_or(params.dim);
        if params.n == 0 || params.dim == 0 {
            return Err("--n and --dim must be positive".into());
        }
        params.mu = self.mu.unwrap_or(params.mu);
        params.lambda = self.lambda.unwrap_or(params.lambda);
        params.gamma = self.gamma.unwrap_or(params.gamma);
        params.p = self.p;
        params.theta = self.theta.unwrap_or(if problem == ProblemArg::Synthetic {
            1.0 - 1.0 / params.gamma
        } else {
            params.theta
        });
        params.data = self.data.clone();
        Ok(ExperimentSpec {
            problem: problem.into(),
            problem_params: params,
            solver,
            config,
            pg_config,
            output_path: self
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from("klprox-out")),
            full_trace: self.full_trace,
        })
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// trace CSV (the JSON sidecar must sit next to it)
    #[arg(long)]
    pub trace: PathBuf,
    /// exponent p of both conditions
    #[arg(long)]
    pub p: f64,
    /// decrease constant a to check [default: fitted value]
    #[arg(long)]
    pub a: Option<f64>,
    /// relative-error constant b to check [default: fitted value]
    #[arg(long)]
    pub b: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    /// trace CSV with a trace.bin iterate sidecar
    #[arg(long)]
    pub trace: PathBuf,
    /// KL exponent θ
    #[arg(long)]
    pub theta: f64,
    /// exponent p of the framework
    #[arg(long)]
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataKind {
    Logistic,
    LeastSquares,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long, value_enum)]
    pub kind: DataKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// nonzeros in the generating coefficients
    #[arg(long, default_value_t = 5)]
    pub support: usize,
    /// response noise σ (least squares only)
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Failure modes mapped onto exit codes.
enum Failure {
    Usage(String),
    Budget(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn result_line(out: &mut dyn Write, trace: &Trace, regime: Option<Regime>) -> std::io::Result<()> {
    let last = trace.last();
    let regime = regime.map_or("none".to_string(), |r| r.to_string());
    writeln!(
        out,
        "RESULT F={:.16e} residual={:.6e} iters={} regime={regime}",
        last.f_value,
        last.prox_residual,
        trace.records.len() - 1
    )
}

fn solve(args: SolveArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let args = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            let file: SolveArgs = toml::from_str(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            args.clone().merged_with(file)
        }
        None => args,
    };
    let spec = args.to_spec().map_err(Failure::Usage)?;
    let outcome = harness::run_experiment(&spec)?;
    let trace = &outcome.trace;
    let io = |e: std::io::Error| Failure::Usage(e.to_string());
    writeln!(out, "termination: {:?}", trace.termination).map_err(io)?;
    writeln!(out, "trace: {}", spec.trace_path().display()).map_err(io)?;
    writeln!(
        out,
        "fitted a={:.6e} b={:.6e} (p={})",
        outcome.framework.a_fit, outcome.framework.b_fit, outcome.framework.p
    )
    .map_err(io)?;
    match &outcome.rate {
        Ok(r) => writeln!(
            out,
            "q-order tail={:.4} regime={}",
            r.q_order_tail, r.regime
        )
        .map_err(io)?,
        Err(e) => writeln!(out, "rate: {e}").map_err(io)?,
    }
    result_line(out, trace, outcome.rate.as_ref().ok().map(|r| r.regime)).map_err(io)?;
    match trace.termination {
        Termination::Stationary => Ok(()),
        // the generator runs a fixed number of steps by design
        Termination::MaxOuter if matches!(trace.config, RunConfig::Synthetic { .. }) => Ok(()),
        t => Err(Failure::Budget(format!("run ended with {t:?}"))),
    }
}

fn verify(args: VerifyArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let trace = harness::read_trace(&args.trace)?;
    let report =
        analysis::fit_constants(&trace, args.p).map_err(|e| Failure::Usage(e.to_string()))?;
    let io = |e: std::io::Error| Failure::Usage(e.to_string());
    writeln!(
        out,
        "fitted a={:.6e} b={:.6e} (p={})",
        report.a_fit, report.b_fit, args.p
    )
    .map_err(io)?;
    let a = args.a.unwrap_or(report.a_fit);
    let b = args.b.unwrap_or(report.b_fit);
    let (h1, v1) = analysis::check_h1(&trace, a, args.p);
    let (h2, v2) = analysis::check_h2(&trace, b, args.p);
    let verdict = |ok: bool| if ok { "pass" } else { "FAIL" };
    writeln!(out, "H1 a={a:.6e}: {}", verdict(h1)).map_err(io)?;
    for v in &v1 {
        writeln!(out, "  H1 violation at k={} slack={:.3e}", v.k, v.slack).map_err(io)?;
    }
    writeln!(out, "H2 b={b:.6e}: {}", verdict(h2)).map_err(io)?;
    for v in &v2 {
        writeln!(out, "  H2 violation at k={} slack={:.3e}", v.k, v.slack).map_err(io)?;
    }
    result_line(out, &trace, None).map_err(io)?;
    if h1 && h2 {
        Ok(())
    } else {
        Err(Failure::Usage("framework conditions violated".into()))
    }
}

fn rate(args: RateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let trace = harness::read_trace(&args.trace)?;
    if !trace.has_iterates() {
        return Err(Failure::Usage(format!(
            "{} has no iterate sidecar; rerun solve with --full-trace",
            args.trace.display()
        )));
    }
    let io = |e: std::io::Error| Failure::Usage(e.to_string());
    let report = match analysis::iterate_order(&trace, args.theta, args.p) {
        Ok(r) => r,
        Err(e @ AnalysisError::TooShort { .. }) => {
            writeln!(out, "rate: {e}").map_err(io)?;
            result_line(out, &trace, None).map_err(io)?;
            return Err(Failure::Budget(e.to_string()));
        }
        Err(e) => return Err(Failure::Usage(e.to_string())),
    };
    let orders: Vec<String> = report.q_orders.iter().map(|q| format!("{q:.4}")).collect();
    writeln!(out, "q-orders: {}", orders.join(" ")).map_err(io)?;
    writeln!(out, "tail median: {:.4}", report.q_order_tail).map_err(io)?;
    writeln!(
        out,
        "linear fit: rate={:.4e} r2={:.4}",
        report.linear_rate, report.r_squared
    )
    .map_err(io)?;
    match analysis::predicted_order(args.p, args.theta) {
        Ok(order) => writeln!(out, "predicted order: {order:.4}").map_err(io)?,
        Err(AnalysisError::ThetaOutOfRegime { theta, boundary }) if theta == boundary => {
            writeln!(out, "boundary regime: R-linear expected").map_err(io)?
        }
        Err(AnalysisError::ThetaOutOfRegime { .. }) => {
            writeln!(out, "sublinear regime expected").map_err(io)?
        }
        Err(e) => return Err(Failure::Usage(e.to_string())),
    }
    writeln!(out, "regime: {}", report.regime).map_err(io)?;
    result_line(out, &trace, Some(report.regime)).map_err(io)?;
    Ok(())
}

fn gen_data(args: GenDataArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if args.n == 0 || args.dim == 0 {
        return Err(Failure::Usage("--n and --dim must be positive".into()));
    }
    let (data, mode) = match args.kind {
        DataKind::Logistic => (
            harness::gen_logistic_data(args.n, args.dim, args.seed, args.support)?,
            LabelMode::Binary,
        ),
        DataKind::LeastSquares => (
            harness::gen_least_squares_data(args.n, args.dim, args.seed, args.noise, args.support)?,
            LabelMode::Real,
        ),
    };
    harness::write_libsvm(&data, mode, &args.out)?;
    writeln!(
        out,
        "wrote {} rows x {} columns to {}",
        data.n(),
        data.dim(),
        args.out.display()
    )
    .map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(())
}

/// Quick built-in checks; returns `(name, passed)` pairs.
pub fn selftest_checks() -> Vec<(&'static str, bool)> {
    let mut checks = Vec::new();

    let data = harness::gen_logistic_data(40, 6, 1, 3).expect("valid sizes");
    let labels = data.labels();
    let logistic = models::LogisticModel::new(data.features, labels, 1e-3).expect("valid model");
    let x = harness::gen_normal_vector(6, 2);
    let report = check_derivatives(&logistic, &x, 1e-6);
    checks.push((
        "logistic derivatives",
        report.gradient_error <= 1e-6 && report.hess_vec_error <= 1e-5,
    ));

    let z = harness::gen_normal_vector(8, 3);
    let hard = models::prox_l0(1.0, 0.1, &z);
    let ok = z.iter().zip(hard.iter()).all(|(zi, pi)| {
        // cost of keeping is tλ = 0.1, cost of zeroing is z²/2
        let zero_cost = 0.5 * zi * zi;
        if *pi == 0.0 {
            zero_cost <= 0.1
        } else {
            zero_cost >= 0.1 && pi == zi
        }
    });
    checks.push(("hard thresholding", ok));

    let spec = ExperimentSpec {
        problem: ProblemKind::QuadraticSmooth,
        problem_params: ProblemParams {
            n: 30,
            dim: 5,
            ..ProblemParams::with_seed(4)
        },
        solver: SolverKind::ProxNewton,
        config: SolverConfig {
            q: 2.0,
            epsilon: 1e-10,
            ..Default::default()
        },
        pg_config: PgConfig::default(),
        output_path: PathBuf::new(),
        full_trace: false,
    };
    let solved = harness::run_spec(&spec).map(|(t, _)| t.termination == Termination::Stationary);
    checks.push(("quadratic solve", solved.unwrap_or(false)));

    let round_trip = tempfile::tempdir().ok().and_then(|dir| {
        let (trace, _) = harness::run_spec(&spec).ok()?;
        let path = dir.path().join("t.csv");
        harness::write_trace(&trace, &path).ok()?;
        let back = harness::read_trace(&path).ok()?;
        Some(back.values() == trace.values() && back.step_norms() == trace.step_norms())
    });
    checks.push(("trace round trip", round_trip.unwrap_or(false)));
    checks
}

fn selftest(out: &mut dyn Write) -> Result<(), Failure> {
    let checks = selftest_checks();
    let io = |e: std::io::Error| Failure::Usage(e.to_string());
    for (name, ok) in &checks {
        writeln!(out, "{} {name}", if *ok { "ok  " } else { "FAIL" }).map_err(io)?;
    }
    if checks.iter().all(|(_, ok)| *ok) {
        Ok(())
    } else {
        Err(Failure::Usage("selftest failed".into()))
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve(a, out),
        Command::Verify(a) => verify(a, out),
        Command::Rate(a) => rate(a, out),
        Command::GenData(a) => gen_data(a, out),
        Command::Selftest => selftest(out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Budget(msg)) => {
            let _ = writeln!(err, "budget: {msg}");
            EXIT_BUDGET
        }
    }
}

/// Convenience for the binary: real stdout/stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(args, &mut stdout.lock(), &mut stderr.lock())
}
