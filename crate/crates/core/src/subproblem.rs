//! Inexact solver for the regularized second-order model
//!
//! ```text
//! F̃(x) = ⟨∇f(c), x − c⟩ + ½⟨∇²f(c)(x − c), x − c⟩ + (L/q)‖x − c‖^q + g(x)
//! ```
//!
//! around a center `c`. The solver is a monotone line-search proximal
//! gradient method with one-step extrapolation. It returns the first iterate
//! carrying a subgradient certificate `w̃ ∈ ∂F̃(x)` with
//! `‖w̃‖ ≤ b·L·‖x − c‖^{q−1}` and `F̃(x) ≤ F̃(c)`; it never hands back an
//! uncertified point.

use thiserror::Error;

use crate::linalg::DenseVector;
use crate::models::{CompositeObjective, SmoothModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubproblemError {
    #[error("no certified point within {max_inner} inner iterations")]
    InnerBudgetExhausted { max_inner: usize },
    #[error("line search failed to decrease the model after {backtracks} halvings")]
    LineSearchFailed { backtracks: usize },
}

/// One regularized model around `center`.
#[derive(Debug, Clone, Copy)]
pub struct SubproblemSpec<'a> {
    pub objective: &'a CompositeObjective,
    pub center: &'a DenseVector,
    pub grad_at_center: &'a DenseVector,
    /// regularization weight `L`
    pub weight: f64,
    /// regularization order `q ∈ [2, 3]`
    pub order: f64,
    /// inexactness constant `b`
    pub tolerance: f64,
    /// estimate of `‖∇²f(center)‖`, used to size the first inner step
    pub curvature: f64,
}

/// Knobs for the inner line search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPolicy {
    pub backtrack_factor: f64,
    /// sufficient-decrease constant: accept when `F̃(x⁺) ≤ F̃(x) − σ/(2t)‖x⁺ − x‖²`
    pub sigma: f64,
    pub max_backtracks: usize,
    pub extrapolate: bool,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self {
            backtrack_factor: 0.5,
            sigma: 1e-4,
            max_backtracks: 60,
            extrapolate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemResult {
    pub point: DenseVector,
    /// `w̃ ∈ ∂F̃(point)`
    pub certificate: DenseVector,
    pub certificate_norm: f64,
    pub model_value: f64,
    pub inner_iterations: usize,
    /// step size of the prox step that produced `point`
    pub step_size: f64,
    /// point the final prox step was taken from
    pub base_point: DenseVector,
}

/// Estimates `‖∇²f(x)‖` with a few power-iteration steps on `hess_vec`.
pub fn curvature_estimate(model: &dyn SmoothModel, x: &DenseVector, iterations: usize) -> f64 {
    let dim = model.dim();
    if dim == 0 {
        return 0.0;
    }
    // deterministic start with no special alignment to coordinate axes
    let start: Vec<f64> = (0..dim)
        .map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64)
        .collect();
    let mut v = DenseVector::from_raw(start);
    v = v.scale(1.0 / v.norm());
    let mut estimate = 0.0;
    for _ in 0..iterations.max(1) {
        let hv = model.hess_vec(x, &v);
        estimate = hv.norm();
        if estimate == 0.0 || !estimate.is_finite() {
            return if estimate.is_finite() { 0.0 } else { f64::MAX };
        }
        v = hv.scale(1.0 / estimate);
    }
    estimate
}

fn displacement_power(spec: &SubproblemSpec<'_>, norm: f64) -> f64 {
    if norm == 0.0 {
        0.0
    } else {
        norm.powf(spec.order)
    }
}

/// Smooth part of `F̃` (everything but `g`).
fn smooth_model_value(spec: &SubproblemSpec<'_>, x: &DenseVector) -> f64 {
    let d = x - spec.center;
    let hd = spec.objective.smooth.hess_vec(spec.center, &d);
    spec.grad_at_center.dot(&d)
        + 0.5 * hd.dot(&d)
        + spec.weight / spec.order * displacement_power(spec, d.norm())
}

/// `F̃(x)`; `+∞` outside `dom g`.
pub fn model_value(spec: &SubproblemSpec<'_>, x: &DenseVector) -> f64 {
    let g = spec.objective.regularizer.value(x);
    if !g.is_finite() {
        return f64::INFINITY;
    }
    smooth_model_value(spec, x) + g
}

/// `∇f(c) + ∇²f(c)(x − c) + L‖x − c‖^{q−2}(x − c)`
pub fn model_smooth_gradient(spec: &SubproblemSpec<'_>, x: &DenseVector) -> DenseVector {
    let d = x - spec.center;
    let norm = d.norm();
    let hd = spec.objective.smooth.hess_vec(spec.center, &d);
    let mut grad = spec.grad_at_center + &hd;
    if norm > 0.0 {
        grad = grad.axpy(spec.weight * norm.powf(spec.order - 2.0), &d);
    }
    grad
}

/// Proximal gradient step from `x` with step `t`, returning the new point and
/// the certificate `w = (x − x⁺)/t + ∇s(x⁺) − ∇s(x)`, which lies in the
/// regular subdifferential of `F̃` at `x⁺` by the prox optimality condition.
pub fn pg_step(spec: &SubproblemSpec<'_>, x: &DenseVector, t: f64) -> (DenseVector, DenseVector) {
    let grad = model_smooth_gradient(spec, x);
    pg_step_with_gradient(spec, x, &grad, t)
}

fn pg_step_with_gradient(
    spec: &SubproblemSpec<'_>,
    x: &DenseVector,
    grad: &DenseVector,
    t: f64,
) -> (DenseVector, DenseVector) {
    let next = spec.objective.regularizer.prox(t, &x.axpy(-t, grad));
    let w = (x - &next)
        .scale(1.0 / t)
        .axpy(1.0, &(&model_smooth_gradient(spec, &next) - grad));
    (next, w)
}

struct Candidate {
    point: DenseVector,
    certificate: DenseVector,
    value: f64,
    base: DenseVector,
    step: f64,
}

/// Backtracked prox step from `x` (value `fx`); shrinks `t` in place.
fn backtracked_step(
    spec: &SubproblemSpec<'_>,
    x: &DenseVector,
    fx: f64,
    t: &mut f64,
    policy: &StepPolicy,
) -> Result<Candidate, SubproblemError> {
    let grad = model_smooth_gradient(spec, x);
    for _ in 0..=policy.max_backtracks {
        let (next, w) = pg_step_with_gradient(spec, x, &grad, *t);
        if next == *x {
            return Ok(Candidate {
                value: fx,
                point: next,
                certificate: w,
                base: x.clone(),
                step: *t,
            });
        }
        let value = model_value(spec, &next);
        let moved = next.distance(x);
        if next.is_finite() && value <= fx - policy.sigma / (2.0 * *t) * moved * moved {
            return Ok(Candidate {
                point: next,
                certificate: w,
                value,
                base: x.clone(),
                step: *t,
            });
        }
        *t *= policy.backtrack_factor;
    }
    Err(SubproblemError::LineSearchFailed {
        backtracks: policy.max_backtracks,
    })
}

/// Runs the inner proximal gradient loop until both inexactness criteria
/// hold. `warm_start`, when given, replaces the center as the starting point
/// provided it lies in `dom g` (after one prox application if needed) and does
/// not raise the model value above `F̃(center)`.
pub fn solve(
    spec: &SubproblemSpec<'_>,
    max_inner: usize,
    policy: &StepPolicy,
    warm_start: Option<&DenseVector>,
) -> Result<SubproblemResult, SubproblemError> {
    let center_value = model_value(spec, spec.center);

    let mut x = spec.center.clone();
    let mut fx = center_value;
    if let Some(ws) = warm_start {
        let dist = ws.distance(spec.center);
        let t = initial_step(spec, dist);
        let candidate = if spec.objective.regularizer.in_domain(ws) {
            ws.clone()
        } else {
            spec.objective.regularizer.prox(t, ws)
        };
        let value = model_value(spec, &candidate);
        if candidate.is_finite() && value <= center_value {
            x = candidate;
            fx = value;
        }
    }

    let mut t = initial_step(spec, x.distance(spec.center));
    let accept = |c: &Candidate| {
        let dist = c.point.distance(spec.center);
        let bound = spec.tolerance * spec.weight * displacement_power_q1(spec, dist);
        c.certificate.norm() <= bound && c.value <= center_value
    };

    // iteration 0: a prox step that returns the start itself certifies it
    let first = backtracked_step(spec, &x, fx, &mut t, policy)?;
    if first.point == x && accept(&first) {
        return Ok(finish(spec, first, 0));
    }

    let mut prev = x.clone();
    let mut current = first;
    for i in 1..=max_inner {
        if accept(&current) {
            return Ok(finish(spec, current, i));
        }
        if i == max_inner {
            break;
        }
        let x = current.point.clone();
        let fx = current.value;

        let mut next = None;
        if policy.extrapolate && i >= 2 {
            let beta = (i as f64 - 1.0) / (i as f64 + 2.0);
            let y = x.axpy(beta, &(&x - &prev));
            if spec.objective.regularizer.in_domain(&y) {
                let (point, certificate) = pg_step(spec, &y, t);
                let value = model_value(spec, &point);
                if point.is_finite() && value < fx {
                    next = Some(Candidate {
                        point,
                        certificate,
                        value,
                        base: y,
                        step: t,
                    });
                }
            }
        }
        let next = match next {
            Some(c) => c,
            None => backtracked_step(spec, &x, fx, &mut t, policy)?,
        };
        prev = x;
        current = next;
    }
    Err(SubproblemError::InnerBudgetExhausted { max_inner })
}

fn displacement_power_q1(spec: &SubproblemSpec<'_>, norm: f64) -> f64 {
    if norm == 0.0 {
        0.0
    } else {
        norm.powf(spec.order - 1.0)
    }
}

fn initial_step(spec: &SubproblemSpec<'_>, dist: f64) -> f64 {
    1.0 / (spec.curvature + spec.weight * dist.max(1.0).powf(spec.order - 2.0))
}

fn finish(spec: &SubproblemSpec<'_>, c: Candidate, inner_iterations: usize) -> SubproblemResult {
    // recompute the certificate from the recorded step rather than reuse it
    let grad_base = model_smooth_gradient(spec, &c.base);
    let certificate = (&c.base - &c.point)
        .scale(1.0 / c.step)
        .axpy(1.0, &(&model_smooth_gradient(spec, &c.point) - &grad_base));
    SubproblemResult {
        certificate_norm: certificate.norm(),
        certificate,
        model_value: c.value,
        inner_iterations,
        step_size: c.step,
        base_point: c.base,
        point: c.point,
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::linalg::Matrix;
    use crate::models::{NoRegularizer, QuadraticModel, ZeroModel, ZeroNorm};

    fn v(entries: &[f64]) -> DenseVector {
        DenseVector::new(entries.to_vec()).unwrap()
    }

    fn half_square() -> CompositeObjective {
        let q = QuadraticModel::new(Matrix::identity(1), v(&[0.0])).unwrap();
        CompositeObjective::new(Arc::new(q), Arc::new(NoRegularizer { dim: 1 })).unwrap()
    }

    fn spec<'a>(
        obj: &'a CompositeObjective,
        center: &'a DenseVector,
        grad: &'a DenseVector,
        weight: f64,
        order: f64,
    ) -> SubproblemSpec<'a> {
        SubproblemSpec {
            objective: obj,
            center,
            grad_at_center: grad,
            weight,
            order,
            tolerance: 1.0,
            curvature: curvature_estimate(obj.smooth.as_ref(), center, 5),
        }
    }

    #[test]
    fn model_value_examples() {
        let obj = half_square();
        let c = v(&[1.0]);
        let g = obj.smooth.gradient(&c);
        let s = spec(&obj, &c, &g, 1.0, 2.0);
        assert_eq!(model_value(&s, &c), 0.0);
        // -1 + 0.5 + 0.5
        assert!((model_value(&s, &v(&[0.0])) - 0.0).abs() < 1e-15);

        let l0 = CompositeObjective::new(
            Arc::new(ZeroModel { dim: 2 }),
            Arc::new(ZeroNorm::new(2, 0.1).unwrap()),
        )
        .unwrap();
        let c0 = v(&[0.0, 0.0]);
        let g0 = DenseVector::zeros(2);
        let s0 = spec(&l0, &c0, &g0, 3.0, 3.0);
        assert!((model_value(&s0, &v(&[1.0, 0.0])) - 1.1).abs() < 1e-15);
        assert_eq!(model_value(&s0, &c0), 0.0);
    }

    #[test]
    fn smooth_gradient_examples() {
        let obj = half_square();
        let c = v(&[1.0]);
        let g = obj.smooth.gradient(&c);
        let s = spec(&obj, &c, &g, 1.0, 2.0);
        assert_eq!(model_smooth_gradient(&s, &c), g);
        assert!((model_smooth_gradient(&s, &v(&[0.0]))[0] + 1.0).abs() < 1e-15);

        let zero = CompositeObjective::new(
            Arc::new(ZeroModel { dim: 2 }),
            Arc::new(NoRegularizer { dim: 2 }),
        )
        .unwrap();
        let c0 = v(&[0.0, 0.0]);
        let g0 = DenseVector::zeros(2);
        let s3 = spec(&zero, &c0, &g0, 1.0, 3.0);
        assert_eq!(
            model_smooth_gradient(&s3, &v(&[2.0, 0.0])).as_slice(),
            &[4.0, 0.0]
        );
        // no 0·∞ at zero displacement for either order
        let s2 = spec(&zero, &c0, &g0, 1.0, 2.0);
        assert_eq!(model_smooth_gradient(&s2, &c0).as_slice(), &[0.0, 0.0]);
        assert_eq!(model_smooth_gradient(&s3, &c0).as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn pg_step_on_unit_quadratic_lands_on_minimizer() {
        // model: (x−1) + ½(x−1)² + ½(x−1)², minimizer 0.5; curvature 2 so t = 1/2
        let obj = half_square();
        let c = v(&[1.0]);
        let g = obj.smooth.gradient(&c);
        let s = spec(&obj, &c, &g, 1.0, 2.0);
        let (next, w) = pg_step(&s, &v(&[3.0]), 0.5);
        assert!((next[0] - 0.5).abs() < 1e-15);
        let expected = (3.0 - 0.5) / 0.5
            + (model_smooth_gradient(&s, &next)[0] - model_smooth_gradient(&s, &v(&[3.0]))[0]);
        assert!((w[0] - expected).abs() < 1e-14);
        assert!(w[0].abs() < 1e-14);
    }

    #[test]
    fn pg_step_fixed_point_has_zero_certificate() {
        let obj = half_square();
        let c = v(&[1.0]);
        let g = obj.smooth.gradient(&c);
        let s = spec(&obj, &c, &g, 1.0, 2.0);
        let (next, w) = pg_step(&s, &v(&[0.5]), 0.3);
        assert_eq!(next[0], 0.5);
        assert_eq!(w[0], 0.0);
    }

    #[test]
    fn solve_finds_scalar_minimizer() {
        let obj = half_square();
        let c = v(&[1.0]);
        let g = obj.smooth.gradient(&c);
        let s = spec(&obj, &c, &g, 1.0, 2.0);
        let res = solve(&s, 100, &StepPolicy::default(), None).unwrap();
        let bound = s.tolerance * s.weight * (res.point[0] - 1.0).abs();
        assert!(res.certificate_norm <= bound);
        assert!(res.model_value <= model_value(&s, &c));
        // with g ≡ 0 the certificate is the model gradient 2(x − 0.5)
        assert!((res.certificate[0] - 2.0 * (res.point[0] - 0.5)).abs() < 1e-14);
    }

    #[test]
    fn stationary_center_returns_immediately() {
        let obj = half_square();
        let c = v(&[0.0]);
        let g = obj.smooth.gradient(&c);
        let s = spec(&obj, &c, &g, 1.0, 3.0);
        let res = solve(&s, 10, &StepPolicy::default(), None).unwrap();
        assert_eq!(res.point, c);
        assert_eq!(res.inner_iterations, 0);
        assert_eq!(res.certificate_norm, 0.0);
    }

    #[test]
    fn l0_model_at_origin_is_certified() {
        let obj = CompositeObjective::new(
            Arc::new(ZeroModel { dim: 2 }),
            Arc::new(ZeroNorm::new(2, 0.1).unwrap()),
        )
        .unwrap();
        let c = v(&[0.0, 0.0]);
        let g = DenseVector::zeros(2);
        let s = spec(&obj, &c, &g, 3.0, 3.0);
        let res = solve(&s, 10, &StepPolicy::default(), Some(&v(&[0.3, -0.2]))).unwrap();
        assert_eq!(res.certificate_norm, 0.0);
        assert!(res.model_value <= 0.0);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        // tight tolerance and a one-step budget on a problem needing more
        let q = QuadraticModel::new(
            Matrix::from_rows(&[vec![10.0, 0.0], vec![0.0, 0.1]]).unwrap(),
            v(&[1.0, 1.0]),
        )
        .unwrap();
        let obj = CompositeObjective::new(Arc::new(q), Arc::new(NoRegularizer { dim: 2 })).unwrap();
        let c = v(&[0.0, 0.0]);
        let g = obj.smooth.gradient(&c);
        let mut s = spec(&obj, &c, &g, 1e-3, 3.0);
        s.tolerance = 1e-6;
        assert_eq!(
            solve(&s, 1, &StepPolicy::default(), None),
            Err(SubproblemError::InnerBudgetExhausted { max_inner: 1 })
        );
    }

    #[test]
    fn curvature_estimate_tracks_top_eigenvalue() {
        let q = QuadraticModel::new(
            Matrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 2.0]]).unwrap(),
            v(&[0.0, 0.0]),
        )
        .unwrap();
        let est = curvature_estimate(&q, &v(&[0.0, 0.0]), 5);
        let top = 3.0 + 2.0_f64.sqrt();
        assert!(est <= top + 1e-12 && est > 0.95 * top, "{est}");
    }
}
