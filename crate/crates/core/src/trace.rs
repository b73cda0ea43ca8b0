//! Per-iteration records produced by the solvers and the synthetic generator.

use serde::{Deserialize, Serialize};

use crate::analysis::SyntheticKLProblem;
use crate::linalg::DenseVector;
use crate::solver::{PgConfig, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Stationary,
    MaxOuter,
    InnerFailure,
}

/// Which method produced a trace, with the settings it ran under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum RunConfig {
    ProxNewton(SolverConfig),
    PgBaseline(PgConfig),
    Synthetic {
        problem: SyntheticKLProblem,
        a: f64,
        b: f64,
    },
}

impl RunConfig {
    /// Exponent `p` of the sufficient-decrease / relative-error pair the
    /// method is expected to satisfy.
    pub fn framework_exponent(&self) -> f64 {
        match self {
            RunConfig::ProxNewton(c) => c.q - 1.0,
            RunConfig::PgBaseline(_) => 1.0,
            RunConfig::Synthetic { problem, .. } => problem.p,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    /// iterate; empty when loaded from a trace stored without iterates
    pub x: DenseVector,
    pub f_value: f64,
    /// `‖x^k − x^{k−1}‖`, zero for the first record
    pub step_norm: f64,
    /// regularization weight accepted at this step (`1/t` for the PG baseline)
    pub l_k: f64,
    /// escalation index (backtracking count for the PG baseline)
    pub j_k: usize,
    /// norm of the subgradient certificate at `x`
    pub certificate_norm: f64,
    pub prox_residual: f64,
    pub inner_iterations: usize,
    /// certificate vector, kept in memory only
    pub certificate: Option<DenseVector>,
    /// certificate of the regularized model the step came from, in memory only
    pub model_certificate: Option<DenseVector>,
}

impl IterateRecord {
    /// Record carrying only the scalar columns.
    pub fn scalar(k: usize, f_value: f64, step_norm: f64, certificate_norm: f64) -> Self {
        Self {
            k,
            x: DenseVector::default(),
            f_value,
            step_norm,
            l_k: 0.0,
            j_k: 0,
            certificate_norm,
            prox_residual: 0.0,
            inner_iterations: 0,
            certificate: None,
            model_certificate: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<IterateRecord>,
    pub config: RunConfig,
    pub termination: Termination,
}

impl Trace {
    /// Builds a trace from objective values, step norms and certificate norms
    /// for pairs `(k, k+1)`; `steps` and `certs` have one entry fewer than
    /// `values`.
    pub fn from_scalars(values: &[f64], steps: &[f64], certs: &[f64], config: RunConfig) -> Self {
        assert_eq!(steps.len() + 1, values.len());
        assert_eq!(certs.len(), steps.len());
        let records = values
            .iter()
            .enumerate()
            .map(|(k, &f)| {
                if k == 0 {
                    IterateRecord::scalar(0, f, 0.0, 0.0)
                } else {
                    IterateRecord::scalar(k, f, steps[k - 1], certs[k - 1])
                }
            })
            .collect();
        Self {
            records,
            config,
            termination: Termination::MaxOuter,
        }
    }

    pub fn has_iterates(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.x.dim() > 0)
    }

    pub fn last(&self) -> &IterateRecord {
        self.records.last().expect("trace has at least one record")
    }

    pub fn values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.f_value).collect()
    }

    pub fn step_norms(&self) -> Vec<f64> {
        self.records.iter().skip(1).map(|r| r.step_norm).collect()
    }
}
