//! Checks of the sufficient-decrease (H1) and relative-error (H2) conditions
//! on traces, empirical convergence orders, and a synthetic generator of
//! sequences with a known KL exponent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::DenseVector;
use crate::trace::{IterateRecord, RunConfig, Termination, Trace};

/// Relative tolerance of the H1 check, scaled by `1 + |F_k|`.
pub const H1_TOLERANCE: f64 = 1e-12;
/// Absolute tolerance of the H2 check.
pub const H2_TOLERANCE: f64 = 1e-12;
/// Tail median at or above this is called superlinear.
pub const SUPERLINEAR_CUT: f64 = 1.1;
/// Lower tail-median cut for the linear regime (upper is `SUPERLINEAR_CUT`).
pub const LINEAR_LOWER_CUT: f64 = 0.9;
pub const LINEAR_R2: f64 = 0.95;
pub const SUBLINEAR_R2: f64 = 0.8;
/// Largest number of trailing Q-order estimates entering the tail median.
pub const TAIL_LENGTH: usize = 5;
/// Errors below `ERROR_FLOOR · scale` are treated as roundoff.
pub const ERROR_FLOOR: f64 = 100.0 * f64::EPSILON;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AnalysisError {
    #[error("trace has {0} records; at least 2 are needed")]
    TooFewRecords(usize),
    #[error("only {usable} usable error entries; at least 4 are needed")]
    TooShort { usable: usize },
    #[error("theta = {theta} is not below p/(p+1) = {boundary}")]
    ThetaOutOfRegime { theta: f64, boundary: f64 },
    #[error("invalid parameter {name} = {value}: {requirement}")]
    InvalidParameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("trace carries no iterate vectors")]
    MissingIterates,
}

/// A failed pair `(k, k+1)` with the amount by which the inequality is missed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub k: usize,
    pub slack: f64,
}

fn pairs(trace: &Trace) -> impl Iterator<Item = (usize, &IterateRecord, &IterateRecord)> {
    trace
        .records
        .windows(2)
        .enumerate()
        .map(|(k, w)| (k, &w[0], &w[1]))
}

/// `F_{k+1} + a·s^{p+1} ≤ F_k + 1e-12(1 + |F_k|)` for every pair.
pub fn check_h1(trace: &Trace, a: f64, p: f64) -> (bool, Vec<Violation>) {
    let violations: Vec<Violation> = pairs(trace)
        .filter_map(|(k, cur, next)| {
            let lhs = next.f_value + a * next.step_norm.powf(p + 1.0);
            let rhs = cur.f_value + H1_TOLERANCE * (1.0 + cur.f_value.abs());
            (lhs > rhs || lhs.is_nan()).then_some(Violation {
                k,
                slack: lhs - rhs,
            })
        })
        .collect();
    (violations.is_empty(), violations)
}

/// `‖w^{k+1}‖ ≤ b·s^p + 1e-12` for every pair.
pub fn check_h2(trace: &Trace, b: f64, p: f64) -> (bool, Vec<Violation>) {
    let violations: Vec<Violation> = pairs(trace)
        .filter_map(|(k, _, next)| {
            let rhs = b * next.step_norm.powf(p) + H2_TOLERANCE;
            let lhs = next.certificate_norm;
            (lhs > rhs || lhs.is_nan()).then_some(Violation {
                k,
                slack: lhs - rhs,
            })
        })
        .collect();
    (violations.is_empty(), violations)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameworkReport {
    pub p: f64,
    /// largest `a` for which H1 holds; `+∞` when every step is zero
    pub a_fit: f64,
    /// smallest `b` for which H2 holds; `+∞` if a zero step carries a nonzero certificate
    pub b_fit: f64,
    pub h1_holds: bool,
    pub h2_holds: bool,
    pub all_steps_zero: bool,
    pub violations: Vec<Violation>,
}

impl FrameworkReport {
    /// Re-checks H1 and H2 at the supplied constants, replacing the verdicts
    /// and violation list.
    pub fn evaluate(mut self, trace: &Trace, a: f64, b: f64) -> Self {
        let (h1, mut v1) = check_h1(trace, a, self.p);
        let (h2, v2) = check_h2(trace, b, self.p);
        v1.extend(v2);
        self.h1_holds = h1;
        self.h2_holds = h2;
        self.violations = v1;
        self
    }
}

/// `a_fit = min (F_k − F_{k+1})/s^{p+1}` (clamped at 0) and
/// `b_fit = max ‖w‖/s^p`, both over nonzero steps; the verdicts are those of
/// H1/H2 at the fitted values.
pub fn fit_constants(trace: &Trace, p: f64) -> Result<FrameworkReport, AnalysisError> {
    if trace.records.len() < 2 {
        return Err(AnalysisError::TooFewRecords(trace.records.len()));
    }
    if !(p > 0.0) {
        return Err(AnalysisError::InvalidParameter {
            name: "p",
            requirement: "p > 0",
            value: p,
        });
    }
    let mut a_fit = f64::INFINITY;
    let mut b_fit: f64 = 0.0;
    let mut all_zero = true;
    for (_, cur, next) in pairs(trace) {
        let s = next.step_norm;
        if s > 0.0 {
            all_zero = false;
            a_fit = a_fit.min((cur.f_value - next.f_value) / s.powf(p + 1.0));
            b_fit = b_fit.max(next.certificate_norm / s.powf(p));
        } else if next.certificate_norm > H2_TOLERANCE {
            b_fit = f64::INFINITY;
        }
    }
    let a_fit = a_fit.max(0.0);
    let (h1, mut violations) = check_h1(trace, a_fit, p);
    let (h2, v2) = check_h2(trace, b_fit, p);
    violations.extend(v2);
    Ok(FrameworkReport {
        p,
        a_fit,
        b_fit,
        h1_holds: h1,
        h2_holds: h2,
        all_steps_zero: all_zero,
        violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Superlinear,
    Linear,
    Sublinear,
    Inconclusive,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::Superlinear => "superlinear",
            Regime::Linear => "linear",
            Regime::Sublinear => "sublinear",
            Regime::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// `log(e_{k+1}/e_k) / log(e_k/e_{k−1})` for each usable triple
    pub q_orders: Vec<f64>,
    /// median of the last `min(5, #estimates − 1)` estimates (at least one)
    pub q_order_tail: f64,
    /// `ρ = exp(slope)` of the least-squares fit of `log e_k` against `k`
    pub linear_rate: f64,
    pub slope: f64,
    pub r_squared: f64,
    pub regime: Regime,
    /// theoretical order, when θ lies in the superlinear range
    pub predicted_order: Option<f64>,
    /// number of error entries that survived filtering
    pub usable: usize,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Keeps the leading run of finite, strictly positive entries.
fn usable_prefix(errors: &[f64]) -> &[f64] {
    let end = errors
        .iter()
        .position(|e| !(e.is_finite() && *e > 0.0))
        .unwrap_or(errors.len());
    &errors[..end]
}

/// Empirical Q-order, geometric fit and regime of an error sequence.
/// Entries after the first non-positive one are ignored.
pub fn estimate_q_order(errors: &[f64]) -> Result<RateReport, AnalysisError> {
    let e = usable_prefix(errors);
    if e.len() < 4 {
        return Err(AnalysisError::TooShort { usable: e.len() });
    }
    let logs: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    // ratios first, so a common scale cancels before the logarithm
    let q_orders: Vec<f64> = e
        .windows(3)
        .filter_map(|w| {
            let den = (w[1] / w[0]).ln();
            (den != 0.0).then(|| (w[2] / w[1]).ln() / den)
        })
        .collect();
    if q_orders.is_empty() {
        return Err(AnalysisError::TooShort { usable: e.len() });
    }
    let m = TAIL_LENGTH.min(q_orders.len().saturating_sub(1)).max(1);
    let mut tail: Vec<f64> = q_orders[q_orders.len() - m..].to_vec();
    let q_order_tail = median(&mut tail).max(0.0);

    let n = logs.len() as f64;
    let mean_k = (n - 1.0) / 2.0;
    let mean_y = logs.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (k, y) in logs.iter().enumerate() {
        let dk = k as f64 - mean_k;
        let dy = y - mean_y;
        sxy += dk * dy;
        sxx += dk * dk;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    let decreasing = slope < 0.0 && e[e.len() - 1] < e[0];

    let regime = if q_order_tail >= SUPERLINEAR_CUT {
        Regime::Superlinear
    } else if slope < 0.0 && r_squared >= LINEAR_R2 && q_order_tail > LINEAR_LOWER_CUT {
        Regime::Linear
    } else if r_squared < SUBLINEAR_R2 && decreasing {
        Regime::Sublinear
    } else {
        Regime::Inconclusive
    };
    Ok(RateReport {
        q_orders,
        q_order_tail,
        linear_rate: slope.exp(),
        slope,
        r_squared,
        regime,
        predicted_order: None,
        usable: e.len(),
    })
}

/// Order `p/(θ(1+p))` of Q-superlinear convergence for `θ ∈ (0, p/(p+1))`.
pub fn predicted_order(p: f64, theta: f64) -> Result<f64, AnalysisError> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(AnalysisError::InvalidParameter {
            name: "p",
            requirement: "p > 0",
            value: p,
        });
    }
    if !(theta > 0.0) {
        return Err(AnalysisError::InvalidParameter {
            name: "theta",
            requirement: "theta > 0",
            value: theta,
        });
    }
    let boundary = p / (p + 1.0);
    if theta >= boundary {
        return Err(AnalysisError::ThetaOutOfRegime { theta, boundary });
    }
    Ok(p / (theta * (1.0 + p)))
}

/// Cuts a sequence of distances at the first entry within `ERROR_FLOOR·scale`
/// of zero.
pub fn floor_errors(errors: &[f64], scale: f64) -> Vec<f64> {
    let floor = if scale > 0.0 {
        ERROR_FLOOR * scale
    } else {
        f64::MIN_POSITIVE
    };
    errors.iter().copied().take_while(|e| *e > floor).collect()
}

/// `‖x^k − x̃‖` along the trace, floored. `x̃` is the final iterate, except
/// for synthetic traces whose limit is known to be the origin.
pub fn iterate_errors(trace: &Trace) -> Result<Vec<f64>, AnalysisError> {
    if !trace.has_iterates() {
        return Err(AnalysisError::MissingIterates);
    }
    let limit = match trace.config {
        RunConfig::Synthetic { .. } => DenseVector::zeros(trace.last().x.dim()),
        _ => trace.last().x.clone(),
    };
    let raw: Vec<f64> = trace.records.iter().map(|r| r.x.distance(&limit)).collect();
    let scale = match trace.config {
        RunConfig::Synthetic { .. } => 0.0,
        _ => limit.norm(),
    };
    Ok(floor_errors(&raw, scale))
}

/// Rate report on iterate errors, with the predicted order attached when θ
/// is in the superlinear range.
pub fn iterate_order(trace: &Trace, theta: f64, p: f64) -> Result<RateReport, AnalysisError> {
    let mut report = estimate_q_order(&iterate_errors(trace)?)?;
    report.predicted_order = predicted_order(p, theta).ok();
    Ok(report)
}

/// Rate report on objective gaps `F_k − F̃`, with `F̃` the final value.
pub fn objective_value_order(
    trace: &Trace,
    theta: f64,
    p: f64,
) -> Result<RateReport, AnalysisError> {
    let values = trace.values();
    let limit = *values.last().ok_or(AnalysisError::TooFewRecords(0))?;
    let gaps: Vec<f64> = values.iter().map(|f| f - limit).collect();
    let scale = match trace.config {
        RunConfig::Synthetic { .. } => 0.0,
        _ => limit.abs(),
    };
    let mut report = estimate_q_order(&floor_errors(&gaps, scale))?;
    report.predicted_order = predicted_order(p, theta).ok();
    Ok(report)
}

/// `Φ(x) = ‖x‖^γ`, which has KL exponent `θ = 1 − 1/γ` at the origin, paired
/// with the step exponent `p` of the sufficient-decrease condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticKLProblem {
    pub gamma: f64,
    pub theta: f64,
    pub p: f64,
}

impl SyntheticKLProblem {
    pub fn new(gamma: f64, p: f64) -> Result<Self, AnalysisError> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(AnalysisError::InvalidParameter {
                name: "gamma",
                requirement: "gamma > 1",
                value: gamma,
            });
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(AnalysisError::InvalidParameter {
                name: "p",
                requirement: "p > 0",
                value: p,
            });
        }
        Ok(Self {
            gamma,
            theta: 1.0 - 1.0 / gamma,
            p,
        })
    }

    pub fn value(&self, x: &DenseVector) -> f64 {
        x.norm().powf(self.gamma)
    }

    /// `∇Φ(x) = γ‖x‖^{γ−2} x`
    pub fn gradient(&self, x: &DenseVector) -> DenseVector {
        let r = x.norm();
        if r == 0.0 {
            return DenseVector::zeros(x.dim());
        }
        x.scale(self.gamma * r.powf(self.gamma - 2.0))
    }

    /// Minimizer over `r ∈ [0, ρ]` of `r^γ + a(ρ − r)^{p+1}`, by bisection on
    /// the derivative to relative width 1e-14.
    pub fn ray_step(&self, rho: f64, a: f64) -> f64 {
        let dh = |r: f64| {
            self.gamma * r.powf(self.gamma - 1.0) - a * (self.p + 1.0) * (rho - r).powf(self.p)
        };
        let (mut lo, mut hi) = (0.0_f64, rho);
        for _ in 0..2000 {
            if hi - lo <= 1e-14 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if dh(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Iterates below this norm end a synthetic run, keeping powers of the
/// radius clear of underflow.
const SYNTH_UNDERFLOW: f64 = 1e-60;

/// Sequence `x^{k+1} = argmin Φ(x) + a‖x − x^k‖^{p+1}` along the ray from `x^k`
/// to the origin. Certificates are `∇Φ(x^{k+1})`. `b` is recorded with the
/// configuration as the nominal H2 constant.
pub fn synth_kl_run(
    problem: &SyntheticKLProblem,
    a: f64,
    b: f64,
    x0: &DenseVector,
    n_steps: usize,
) -> Result<Trace, AnalysisError> {
    for (name, value) in [("a", a), ("b", b)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(AnalysisError::InvalidParameter {
                name,
                requirement: "must be > 0",
                value,
            });
        }
    }
    let rho0 = x0.norm();
    if rho0 == 0.0 {
        return Err(AnalysisError::InvalidParameter {
            name: "x0",
            requirement: "x0 must be nonzero",
            value: rho0,
        });
    }
    let direction = x0.scale(1.0 / rho0);
    let mut records = vec![IterateRecord {
        x: x0.clone(),
        ..IterateRecord::scalar(0, problem.value(x0), 0.0, 0.0)
    }];
    let mut rho = rho0;
    let mut termination = Termination::MaxOuter;
    for k in 1..=n_steps {
        if rho < SYNTH_UNDERFLOW {
            termination = Termination::Stationary;
            break;
        }
        let r = problem.ray_step(rho, a);
        let x = direction.scale(r);
        let certificate = problem.gradient(&x);
        records.push(IterateRecord {
            x,
            certificate_norm: problem.gamma * r.powf(problem.gamma - 1.0),
            certificate: Some(certificate),
            l_k: a,
            ..IterateRecord::scalar(k, r.powf(problem.gamma), rho - r, 0.0)
        });
        rho = r;
    }
    Ok(Trace {
        records,
        config: RunConfig::Synthetic {
            problem: *problem,
            a,
            b,
        },
        termination,
    })
}
