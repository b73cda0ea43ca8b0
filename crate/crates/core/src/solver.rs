//! Outer loops: the inexact proximal Newton method with `q`-order
//! regularization, and a monotone line-search proximal gradient baseline.
//!
//! Both stop on the prox residual `‖x − prox_{t g}(x − t∇f(x))‖/t ≤ ε` at a
//! fixed scale `t = 1/(1 + ‖∇²f(x⁰)‖_est)`, for convex and nonconvex `g`
//! alike.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::DenseVector;
use crate::models::{CompositeObjective, SmoothModel};
use crate::subproblem::{self, curvature_estimate, StepPolicy, SubproblemResult, SubproblemSpec};
use crate::trace::{IterateRecord, RunConfig, Termination, Trace};

/// power-iteration steps used for every curvature estimate
pub const POWER_ITERATIONS: usize = 5;

/// Roundoff allowance in the sufficient-decrease tests, relative to `1 + |F|`.
const DECREASE_SLACK: f64 = 4.0 * f64::EPSILON;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("starting point has dimension {got}, objective has {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("starting point is outside the domain of the regularizer")]
    NotInDomain,
}

/// Settings of the proximal Newton method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// stationarity tolerance ε
    pub epsilon: f64,
    /// inexactness constant b
    pub b: f64,
    /// regularization order q ∈ [2, 3]
    pub q: f64,
    /// escalation factor τ > 1
    pub tau: f64,
    pub l_min: f64,
    pub l_max: f64,
    /// sufficient-decrease fraction δ ∈ (0, 1)
    pub delta: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// escalation budget for `L_{k,j} = τ^j L_{k,0}`
    pub max_j: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-8,
            b: 1.0,
            q: 3.0,
            tau: 2.0,
            l_min: 1e-3,
            l_max: 1e3,
            delta: 0.5,
            max_outer: 500,
            max_inner: 2000,
            max_j: 60,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: &str| Err(SolverError::InvalidConfig(msg.to_string()));
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be > 0");
        }
        if !(self.b > 0.0) {
            return bad("b must be > 0");
        }
        if !(2.0..=3.0).contains(&self.q) {
            return bad("q must lie in [2, 3]");
        }
        if !(self.tau > 1.0) {
            return bad("tau must be > 1");
        }
        if !(self.l_min > 0.0 && self.l_min <= self.l_max && self.l_max.is_finite()) {
            return bad("need 0 < l_min <= l_max < inf");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if self.max_inner == 0 {
            return bad("max_inner must be >= 1");
        }
        Ok(())
    }

    /// H1 constant `δ·L_min/q` the method guarantees.
    pub fn decrease_constant(&self) -> f64 {
        self.delta * self.l_min / self.q
    }
}

/// Settings of the proximal gradient baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgConfig {
    pub epsilon: f64,
    /// line-search constant: accept when `F(x⁺) ≤ F(x) − σ/(2t)‖x⁺ − x‖²`
    pub sigma: f64,
    pub max_outer: usize,
    pub max_backtracks: usize,
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for PgConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-8,
            sigma: 2e-4,
            max_outer: 5000,
            max_backtracks: 60,
            t_min: 1e-12,
            t_max: 1e12,
        }
    }
}

/// Barzilai–Borwein type choice of `L_{k,0}` from a step `dx` and the change
/// `dy = (∇²f(x^k) − ∇²f(x^{k−1}))dx` of Hessian action along it.
pub fn bb_weight(dx: &DenseVector, dy: &DenseVector, l_min: f64, l_max: f64) -> f64 {
    let nx = dx.norm();
    let ny = dy.norm();
    let inner = dx.dot(dy).abs();
    if nx == 0.0 || inner <= 1e-14 * nx * ny {
        return l_min;
    }
    let candidate = (ny.powi(3) / (inner * inner)).max(inner / nx.powi(3));
    if candidate.is_nan() {
        return l_min;
    }
    candidate.max(l_min).min(l_max)
}

/// `L_{k,0}` from the previous and current iterates.
pub fn bb_initialize(
    model: &dyn SmoothModel,
    prev_x: &DenseVector,
    x: &DenseVector,
    l_min: f64,
    l_max: f64,
) -> f64 {
    let dx = x - prev_x;
    let dy = &model.hess_vec(x, &dx) - &model.hess_vec(prev_x, &dx);
    bb_weight(&dx, &dy, l_min, l_max)
}

/// `‖x − prox_{t g}(x − t∇f(x))‖ / t`
pub fn stationarity_residual(objective: &CompositeObjective, x: &DenseVector, t_res: f64) -> f64 {
    let grad = objective.smooth.gradient(x);
    let p = objective.regularizer.prox(t_res, &x.axpy(-t_res, &grad));
    x.distance(&p) / t_res
}

/// Fixed residual scale used by both solvers for a run started at `x0`.
pub fn residual_scale(objective: &CompositeObjective, x0: &DenseVector) -> f64 {
    1.0 / (1.0 + curvature_estimate(objective.smooth.as_ref(), x0, POWER_ITERATIONS))
}

/// Outcome of one accepted outer step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next: DenseVector,
    pub next_value: f64,
    /// accepted weight `L_k`
    pub weight: f64,
    pub j: usize,
    pub model: SubproblemResult,
    /// `w^{k+1} ∈ ∂F(x^{k+1})`
    pub certificate: DenseVector,
    /// inner iterations summed over all tried weights
    pub inner_iterations: usize,
}

/// Assembles `w^{k+1} = w̃ + ∇f(x^{k+1}) − ∇f(x^k) − ∇²f(x^k)d − L‖d‖^{q−2}d`
/// with `d = x^{k+1} − x^k`.
#[allow(clippy::too_many_arguments)]
pub fn assemble_certificate(
    model: &dyn SmoothModel,
    x: &DenseVector,
    grad_x: &DenseVector,
    next: &DenseVector,
    grad_next: &DenseVector,
    model_certificate: &DenseVector,
    weight: f64,
    q: f64,
) -> DenseVector {
    let d = next - x;
    let norm = d.norm();
    let mut w = model_certificate + &(grad_next - grad_x);
    w = &w - &model.hess_vec(x, &d);
    if norm > 0.0 {
        w = w.axpy(-weight * norm.powf(q - 2.0), &d);
    }
    w
}

/// One outer iteration: escalates `L` from `l0` until the subproblem solution
/// passes the sufficient-decrease test. `None` when the escalation budget runs
/// out.
pub fn step(
    objective: &CompositeObjective,
    x: &DenseVector,
    f_x: f64,
    grad_x: &DenseVector,
    l0: f64,
    config: &SolverConfig,
    warm_start: Option<&DenseVector>,
) -> Option<StepOutcome> {
    let curvature = curvature_estimate(objective.smooth.as_ref(), x, POWER_ITERATIONS);
    let policy = StepPolicy::default();
    let mut inner_total = 0;
    let slack = DECREASE_SLACK * (1.0 + f_x.abs());
    for j in 0..=config.max_j {
        let weight = l0 * config.tau.powi(j as i32);
        let spec = SubproblemSpec {
            objective,
            center: x,
            grad_at_center: grad_x,
            weight,
            order: config.q,
            tolerance: config.b,
            curvature,
        };
        let result = match subproblem::solve(&spec, config.max_inner, &policy, warm_start) {
            Ok(r) => r,
            Err(subproblem::SubproblemError::InnerBudgetExhausted { max_inner }) => {
                inner_total += max_inner;
                continue;
            }
            Err(_) => continue,
        };
        inner_total += result.inner_iterations;
        let dist = result.point.distance(x);
        let next_value = objective.value(&result.point);
        let required = config.delta / config.q * weight * dist.powf(config.q);
        if next_value <= f_x - required + slack {
            let grad_next = objective.smooth.gradient(&result.point);
            let certificate = assemble_certificate(
                objective.smooth.as_ref(),
                x,
                grad_x,
                &result.point,
                &grad_next,
                &result.certificate,
                weight,
                config.q,
            );
            return Some(StepOutcome {
                next: result.point.clone(),
                next_value,
                weight,
                j,
                model: result,
                certificate,
                inner_iterations: inner_total,
            });
        }
    }
    None
}

fn check_start(objective: &CompositeObjective, x0: &DenseVector) -> Result<(), SolverError> {
    if x0.dim() != objective.dim() {
        return Err(SolverError::DimensionMismatch {
            got: x0.dim(),
            expected: objective.dim(),
        });
    }
    if !objective.regularizer.in_domain(x0) || !objective.value(x0).is_finite() {
        return Err(SolverError::NotInDomain);
    }
    Ok(())
}

/// Runs the inexact proximal Newton method from `x0`.
pub fn run(
    objective: &CompositeObjective,
    x0: &DenseVector,
    config: &SolverConfig,
) -> Result<Trace, SolverError> {
    config.validate()?;
    check_start(objective, x0)?;
    let t_res = residual_scale(objective, x0);

    let mut x = x0.clone();
    let mut f_x = objective.value(&x);
    let mut grad = objective.smooth.gradient(&x);
    let mut residual = stationarity_residual(objective, &x, t_res);
    let mut records = vec![IterateRecord {
        prox_residual: residual,
        l_k: config.l_min,
        x: x.clone(),
        ..IterateRecord::scalar(0, f_x, 0.0, 0.0)
    }];
    let mut prev: Option<DenseVector> = None;

    let mut termination = Termination::MaxOuter;
    for k in 0..config.max_outer {
        if residual <= config.epsilon {
            termination = Termination::Stationary;
            break;
        }
        let l0 = match &prev {
            Some(p) => bb_initialize(objective.smooth.as_ref(), p, &x, config.l_min, config.l_max),
            None => config.l_min,
        };
        let warm = prev.as_ref().map(|p| x.axpy(1.0, &(&x - p)));
        let Some(outcome) = step(objective, &x, f_x, &grad, l0, config, warm.as_ref()) else {
            termination = Termination::InnerFailure;
            break;
        };

        let step_norm = outcome.next.distance(&x);
        let next_grad = objective.smooth.gradient(&outcome.next);
        residual = stationarity_residual(objective, &outcome.next, t_res);
        records.push(IterateRecord {
            k: k + 1,
            x: outcome.next.clone(),
            f_value: outcome.next_value,
            step_norm,
            l_k: outcome.weight,
            j_k: outcome.j,
            certificate_norm: outcome.certificate.norm(),
            prox_residual: residual,
            inner_iterations: outcome.inner_iterations,
            certificate: Some(outcome.certificate.clone()),
            model_certificate: Some(outcome.model.certificate.clone()),
        });

        let zero_step = step_norm == 0.0;
        prev = Some(std::mem::replace(&mut x, outcome.next));
        f_x = outcome.next_value;
        grad = next_grad;
        if zero_step && outcome.certificate.norm() == 0.0 {
            // the model certified x^k itself: 0 ∈ ∂F(x^k)
            termination = Termination::Stationary;
            break;
        }
    }
    if termination == Termination::MaxOuter && residual <= config.epsilon {
        termination = Termination::Stationary;
    }
    Ok(Trace {
        records,
        config: RunConfig::ProxNewton(*config),
        termination,
    })
}

/// Monotone line-search proximal gradient method. Trial steps come from the
/// spectral (BB) ratio of gradient differences and are halved until
/// `F(x⁺) ≤ F(x) − σ/(2t)‖x⁺ − x‖²`. Records store `1/t_k` in `l_k` and the
/// backtrack count in `j_k`.
pub fn pg_baseline_run(
    objective: &CompositeObjective,
    x0: &DenseVector,
    config: &PgConfig,
) -> Result<Trace, SolverError> {
    check_start(objective, x0)?;
    if !(config.epsilon > 0.0 && config.sigma > 0.0 && config.sigma < 1.0) {
        return Err(SolverError::InvalidConfig(
            "need epsilon > 0 and sigma in (0, 1)".into(),
        ));
    }
    let t_res = residual_scale(objective, x0);
    let g = objective.regularizer.as_ref();

    let mut x = x0.clone();
    let mut f_x = objective.value(&x);
    let mut grad = objective.smooth.gradient(&x);
    let mut residual = stationarity_residual(objective, &x, t_res);
    let mut records = vec![IterateRecord {
        prox_residual: residual,
        x: x.clone(),
        ..IterateRecord::scalar(0, f_x, 0.0, 0.0)
    }];
    let mut t_trial = t_res.clamp(config.t_min, config.t_max);

    let mut termination = Termination::MaxOuter;
    for k in 0..config.max_outer {
        if residual <= config.epsilon {
            termination = Termination::Stationary;
            break;
        }
        let slack = DECREASE_SLACK * (1.0 + f_x.abs());
        let mut t = t_trial;
        let mut accepted = None;
        for backtracks in 0..=config.max_backtracks {
            let next = g.prox(t, &x.axpy(-t, &grad));
            let value = objective.value(&next);
            let moved = next.distance(&x);
            if next.is_finite() && value <= f_x - config.sigma / (2.0 * t) * moved * moved + slack {
                accepted = Some((next, value, backtracks));
                break;
            }
            t *= 0.5;
        }
        let Some((next, value, backtracks)) = accepted else {
            termination = Termination::InnerFailure;
            break;
        };

        let next_grad = objective.smooth.gradient(&next);
        let certificate = (&x - &next).scale(1.0 / t).axpy(1.0, &(&next_grad - &grad));
        let s = &next - &x;
        let y = &next_grad - &grad;
        let sy = s.dot(&y);
        t_trial = if sy > 0.0 {
            (s.dot(&s) / sy).clamp(config.t_min, config.t_max)
        } else {
            t
        };

        residual = stationarity_residual(objective, &next, t_res);
        let step_norm = s.norm();
        records.push(IterateRecord {
            k: k + 1,
            x: next.clone(),
            f_value: value,
            step_norm,
            l_k: 1.0 / t,
            j_k: backtracks,
            certificate_norm: certificate.norm(),
            prox_residual: residual,
            inner_iterations: 0,
            certificate: Some(certificate),
            model_certificate: None,
        });
        x = next;
        f_x = value;
        grad = next_grad;
        if step_norm == 0.0 {
            termination = Termination::Stationary;
            break;
        }
    }
    if termination == Termination::MaxOuter && residual <= config.epsilon {
        termination = Termination::Stationary;
    }
    Ok(Trace {
        records,
        config: RunConfig::PgBaseline(*config),
        termination,
    })
}
