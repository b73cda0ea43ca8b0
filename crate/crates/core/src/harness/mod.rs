//! Experiment orchestration: build a problem from a seeded spec, run a
//! method, verify H1/H2, estimate the rate, and persist everything.

mod data;
mod persist;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use data::{
    format_libsvm, gen_least_squares_data, gen_logistic_data, gen_normal_vector, parse_libsvm,
    read_libsvm, read_libsvm_with, write_libsvm, DataSet, LabelMode, PRNG_ALGORITHM,
};
pub use persist::{
    bin_sidecar, iterates_bin, json_sidecar, read_trace, read_trace_with_meta, trace_csv,
    write_trace, write_trace_with, TraceMeta, BIN_MAGIC, CSV_HEADER,
};

use crate::analysis::{self, AnalysisError, FrameworkReport, RateReport, SyntheticKLProblem};
use crate::linalg::{DenseVector, Matrix};
use crate::models::{self, CompositeObjective, ModelError, NoRegularizer, QuadraticModel};
use crate::solver::{self, PgConfig, SolverConfig, SolverError};
use crate::trace::Trace;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("file contains no data lines")]
    EmptyFile,
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn csv(e: csv::Error) -> Self {
        Self::Schema(e.to_string())
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| HarnessError::io(dir, e))?;
    tmp.write_all(bytes)
        .map_err(|e| HarnessError::io(path, e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| HarnessError::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| HarnessError::io(path, e.error))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    LogisticL0,
    LeastSquaresL0,
    LeastSquaresL1,
    SyntheticKl,
    QuadraticSmooth,
    /// logistic + ℓ0 on a libsvm file (`data` parameter)
    LibsvmLogistic,
    /// least squares + ℓ0 on a libsvm file with real responses
    LibsvmLeastSquares,
}

impl ProblemKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemKind::LogisticL0 => "logistic_l0",
            ProblemKind::LeastSquaresL0 => "least_squares_l0",
            ProblemKind::LeastSquaresL1 => "least_squares_l1",
            ProblemKind::SyntheticKl => "synthetic_kl",
            ProblemKind::QuadraticSmooth => "quadratic_smooth",
            ProblemKind::LibsvmLogistic => "libsvm_logistic",
            ProblemKind::LibsvmLeastSquares => "libsvm_least_squares",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    ProxNewton,
    PgBaseline,
    SynthGenerator,
}

fn default_n() -> usize {
    200
}
fn default_dim() -> usize {
    50
}
fn default_mu() -> f64 {
    1e-5
}
fn default_lambda() -> f64 {
    0.1
}
fn default_gamma() -> f64 {
    2.0
}
fn default_noise() -> f64 {
    0.01
}
fn default_support() -> usize {
    5
}
fn default_theta() -> f64 {
    0.5
}
fn default_steps() -> usize {
    60
}
fn default_one() -> f64 {
    1.0
}

/// Problem parameters. Only `seed` is mandatory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    pub seed: u64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// exponent of the synthetic function `‖x‖^γ`
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// standard deviation of additive noise in least-squares responses
    #[serde(default = "default_noise")]
    pub noise: f64,
    /// nonzeros in the generating coefficients
    #[serde(default = "default_support")]
    pub support: usize,
    /// KL exponent assumed when predicting the rate of a non-synthetic problem
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// step exponent of the synthetic generator
    #[serde(default)]
    pub p: Option<f64>,
    /// decrease constant of the synthetic generator
    #[serde(default = "default_one")]
    pub synth_a: f64,
    #[serde(default = "default_steps")]
    pub synth_steps: usize,
    /// initial iterate norm for the synthetic generator
    #[serde(default = "default_one")]
    pub x0_norm: f64,
    /// libsvm file for the file-backed problems
    #[serde(default)]
    pub data: Option<PathBuf>,
}

impl ProblemParams {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            n: default_n(),
            dim: default_dim(),
            mu: default_mu(),
            lambda: default_lambda(),
            gamma: default_gamma(),
            noise: default_noise(),
            support: default_support(),
            theta: default_theta(),
            p: None,
            synth_a: 1.0,
            synth_steps: default_steps(),
            x0_norm: 1.0,
            data: None,
        }
    }

    /// Flat key/value view, as stored in the JSON sidecar.
    pub fn as_map(&self) -> BTreeMap<String, serde_json::Value> {
        match serde_json::to_value(self) {
            Ok(serde_json::Value::Object(m)) => m.into_iter().collect(),
            _ => BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub problem: ProblemKind,
    pub problem_params: ProblemParams,
    pub solver: SolverKind,
    #[serde(default)]
    pub config: SolverConfig,
    #[serde(default)]
    pub pg_config: PgConfig,
    /// directory receiving `trace.csv`, its sidecars and `report.json`
    pub output_path: PathBuf,
    /// also store iterate vectors in `trace.bin`
    #[serde(default)]
    pub full_trace: bool,
}

impl ExperimentSpec {
    pub fn trace_path(&self) -> PathBuf {
        self.output_path.join("trace.csv")
    }

    pub fn report_path(&self) -> PathBuf {
        self.output_path.join("report.json")
    }
}

/// Everything `run_experiment` produced; the rate slot keeps the estimator's
/// error when the trace is too short.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub trace: Trace,
    pub framework: FrameworkReport,
    pub rate: Result<RateReport, AnalysisError>,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    problem: &'a str,
    seed: u64,
    framework: &'a FrameworkReport,
    rate: Option<&'a RateReport>,
    rate_error: Option<String>,
}

/// Added to the data seed to draw the starting point.
pub const START_SEED_OFFSET: u64 = 0x5747;

/// Objective and starting point for every problem kind except the synthetic one.
pub fn build_problem(
    kind: ProblemKind,
    params: &ProblemParams,
) -> Result<(CompositeObjective, DenseVector), HarnessError> {
    let ProblemParams { n, seed, .. } = *params;
    let mut dim = params.dim;
    let data_file = || {
        params.data.as_deref().ok_or_else(|| {
            HarnessError::InvalidSpec(format!("problem {} needs a data file", kind.name()))
        })
    };
    let objective = match kind {
        ProblemKind::LibsvmLogistic => {
            let d = read_libsvm(data_file()?)?;
            dim = d.dim();
            let labels = d.labels();
            models::logistic_l0_objective(d.features, labels, params.mu, params.lambda)?
        }
        ProblemKind::LibsvmLeastSquares => {
            let d = read_libsvm_with(data_file()?, LabelMode::Real, None)?;
            dim = d.dim();
            models::least_squares_l0_objective(d.features, d.targets, params.lambda)?
        }
        ProblemKind::LogisticL0 => {
            let d = gen_logistic_data(n, dim, seed, params.support)?;
            let labels = d.labels();
            models::logistic_l0_objective(d.features, labels, params.mu, params.lambda)?
        }
        ProblemKind::LeastSquaresL0 => {
            let d = gen_least_squares_data(n, dim, seed, params.noise, params.support)?;
            models::least_squares_l0_objective(d.features, d.targets, params.lambda)?
        }
        ProblemKind::LeastSquaresL1 => {
            let d = gen_least_squares_data(n, dim, seed, params.noise, params.support)?;
            models::least_squares_l1_objective(d.features, d.targets, params.lambda)?
        }
        ProblemKind::QuadraticSmooth => {
            // Q = AᵀA/n + I, c standard normal
            let d = gen_least_squares_data(n, dim, seed, 0.0, 0)?;
            let gram = d.features.gram();
            let mut q = Matrix::identity(dim);
            for i in 0..dim {
                for j in 0..dim {
                    q.set(i, j, q.get(i, j) + gram.get(i, j) / n as f64);
                }
            }
            let c = gen_normal_vector(dim, seed.wrapping_add(1));
            CompositeObjective::new(
                Arc::new(QuadraticModel::new(q, c)?),
                Arc::new(NoRegularizer { dim }),
            )?
        }
        ProblemKind::SyntheticKl => {
            return Err(HarnessError::InvalidSpec(
                "synthetic problems have no composite objective".into(),
            ))
        }
    };
    // the origin is already stationary for ℓ0 problems with a large λ, so
    // every run starts from a seeded normal point instead
    let x0 = gen_normal_vector(dim, seed.wrapping_add(START_SEED_OFFSET));
    Ok((objective, x0))
}

/// Runs the method named by the spec and returns the trace with the KL
/// exponent used for rate prediction.
pub fn run_spec(spec: &ExperimentSpec) -> Result<(Trace, f64), HarnessError> {
    let params = &spec.problem_params;
    match (spec.problem, spec.solver) {
        (ProblemKind::SyntheticKl, SolverKind::SynthGenerator) => {
            let p = params.p.unwrap_or(spec.config.q - 1.0);
            let problem = SyntheticKLProblem::new(params.gamma, p)?;
            let dir = gen_normal_vector(params.dim, params.seed);
            if dir.norm() == 0.0 {
                return Err(HarnessError::InvalidSpec(
                    "degenerate synthetic start".into(),
                ));
            }
            let x0 = dir.scale(params.x0_norm / dir.norm());
            let trace = analysis::synth_kl_run(
                &problem,
                params.synth_a,
                spec.config.b,
                &x0,
                params.synth_steps,
            )?;
            Ok((trace, problem.theta))
        }
        (ProblemKind::SyntheticKl, _) | (_, SolverKind::SynthGenerator) => {
            Err(HarnessError::InvalidSpec(
                "the synthetic generator and the synthetic problem go together".into(),
            ))
        }
        (kind, solver_kind) => {
            let (objective, x0) = build_problem(kind, params)?;
            let trace = match solver_kind {
                SolverKind::ProxNewton => solver::run(&objective, &x0, &spec.config)?,
                _ => solver::pg_baseline_run(&objective, &x0, &spec.pg_config)?,
            };
            Ok((trace, params.theta))
        }
    }
}

/// Builds, runs, verifies and persists one experiment. Output files are
/// written atomically.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome, HarnessError> {
    let (trace, theta) = run_spec(spec)?;
    let p = trace.config.framework_exponent();
    let framework = analysis::fit_constants(&trace, p)?;
    let rate = analysis::iterate_order(&trace, theta, p);

    let finite = |v: f64| v.is_finite().then_some(v);
    let meta = TraceMeta {
        config: trace.config.clone(),
        termination: trace.termination,
        problem: Some(spec.problem.name().to_string()),
        seed: Some(spec.problem_params.seed),
        fitted_a: finite(framework.a_fit),
        fitted_b: finite(framework.b_fit),
        q_order_tail: rate.as_ref().ok().map(|r| r.q_order_tail),
        regime: rate.as_ref().ok().map(|r| r.regime),
    };
    write_trace_with(&trace, &spec.trace_path(), &meta, spec.full_trace)?;
    let report = ReportFile {
        problem: spec.problem.name(),
        seed: spec.problem_params.seed,
        framework: &framework,
        rate: rate.as_ref().ok(),
        rate_error: rate.as_ref().err().map(|e| e.to_string()),
    };
    let json =
        serde_json::to_vec_pretty(&report).map_err(|e| HarnessError::Schema(e.to_string()))?;
    write_atomic(&spec.report_path(), &json)?;
    Ok(ExperimentOutcome {
        trace,
        framework,
        rate,
    })
}
