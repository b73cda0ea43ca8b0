//! Smooth models `f`, proximable regularizers `g`, and their composite `F = f + g`.
//!
//! Every evaluator here is pure: no caching, no interior mutability. Solvers
//! and the trace verifier may call them from several threads at once.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use thiserror::Error;

use crate::linalg::{DenseVector, Matrix};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: {what} has {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("label {value} at row {row} is not +1 or -1")]
    InvalidLabel { row: usize, value: f64 },
    #[error("parameter {name} must be {requirement}, got {value}")]
    InvalidParameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
}

/// Twice differentiable part of the objective.
pub trait SmoothModel: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DenseVector) -> f64;
    fn gradient(&self, x: &DenseVector) -> DenseVector;
    /// `∇²f(x) v`
    fn hess_vec(&self, x: &DenseVector, v: &DenseVector) -> DenseVector;
    /// Explicit Hessian, when cheap enough to form.
    fn full_hessian(&self, _x: &DenseVector) -> Option<Matrix> {
        None
    }
}

/// Lower-bounded regularizer with a computable scaled proximal map.
pub trait ProxRegularizer: Send + Sync {
    fn dim(&self) -> usize;
    /// `g(x)`, `+∞` outside the domain.
    fn value(&self, x: &DenseVector) -> f64;
    /// A minimizer of `u ↦ ½‖u − z‖² + t·g(u)`.
    fn prox(&self, t: f64, z: &DenseVector) -> DenseVector;
    fn in_domain(&self, x: &DenseVector) -> bool {
        self.value(x).is_finite()
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name,
            requirement: "finite and > 0",
            value,
        })
    }
}

// ---------------------------------------------------------------------------
// proximal maps

/// Hard thresholding: keeps `z_i` when `|z_i| > √(2tλ)`, otherwise returns 0.
/// At the tie `|z_i| = √(2tλ)` both candidates are minimizers and 0 is chosen.
pub fn prox_l0(t: f64, lambda: f64, z: &DenseVector) -> DenseVector {
    let threshold = (2.0 * t * lambda).sqrt();
    z.map(|zi| if zi.abs() > threshold { zi } else { 0.0 })
}

/// Soft thresholding: `sign(z_i)·max(|z_i| − tλ, 0)`.
pub fn prox_l1(t: f64, lambda: f64, z: &DenseVector) -> DenseVector {
    let shrink = t * lambda;
    z.map(|zi| zi.signum() * (zi.abs() - shrink).max(0.0))
}

// ---------------------------------------------------------------------------
// regularizers

/// `λ‖x‖₀`
#[derive(Debug, Clone)]
pub struct ZeroNorm {
    pub dim: usize,
    pub lambda: f64,
}

impl ZeroNorm {
    pub fn new(dim: usize, lambda: f64) -> Result<Self, ModelError> {
        check_positive("lambda", lambda)?;
        Ok(Self { dim, lambda })
    }
}

impl ProxRegularizer for ZeroNorm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &DenseVector) -> f64 {
        self.lambda * x.count_nonzero() as f64
    }
    fn prox(&self, t: f64, z: &DenseVector) -> DenseVector {
        prox_l0(t, self.lambda, z)
    }
    fn in_domain(&self, _x: &DenseVector) -> bool {
        true
    }
}

/// `λ‖x‖₁`
#[derive(Debug, Clone)]
pub struct L1Norm {
    pub dim: usize,
    pub lambda: f64,
}

impl L1Norm {
    pub fn new(dim: usize, lambda: f64) -> Result<Self, ModelError> {
        check_positive("lambda", lambda)?;
        Ok(Self { dim, lambda })
    }
}

impl ProxRegularizer for L1Norm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &DenseVector) -> f64 {
        self.lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    }
    fn prox(&self, t: f64, z: &DenseVector) -> DenseVector {
        prox_l1(t, self.lambda, z)
    }
    fn in_domain(&self, _x: &DenseVector) -> bool {
        true
    }
}

/// `g ≡ 0`
#[derive(Debug, Clone)]
pub struct NoRegularizer {
    pub dim: usize,
}

impl ProxRegularizer for NoRegularizer {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &DenseVector) -> f64 {
        0.0
    }
    fn prox(&self, _t: f64, z: &DenseVector) -> DenseVector {
        z.clone()
    }
    fn in_domain(&self, _x: &DenseVector) -> bool {
        true
    }
}

/// Indicator of the box `[lower, upper]^dim`; either bound may be infinite.
#[derive(Debug, Clone)]
pub struct BoxIndicator {
    pub dim: usize,
    pub lower: f64,
    pub upper: f64,
}

impl BoxIndicator {
    pub fn new(dim: usize, lower: f64, upper: f64) -> Result<Self, ModelError> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(ModelError::InvalidParameter {
                name: "upper",
                requirement: "at least lower",
                value: upper,
            });
        }
        Ok(Self { dim, lower, upper })
    }

    pub fn nonnegative(dim: usize) -> Self {
        Self {
            dim,
            lower: 0.0,
            upper: f64::INFINITY,
        }
    }
}

impl ProxRegularizer for BoxIndicator {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &DenseVector) -> f64 {
        if self.in_domain(x) {
            0.0
        } else {
            f64::INFINITY
        }
    }
    fn prox(&self, _t: f64, z: &DenseVector) -> DenseVector {
        z.map(|v| v.clamp(self.lower, self.upper))
    }
    fn in_domain(&self, x: &DenseVector) -> bool {
        x.iter().all(|v| *v >= self.lower && *v <= self.upper)
    }
}

// ---------------------------------------------------------------------------
// smooth models

/// Numerically stable `log(1 + exp(-m))`.
fn log1p_exp_neg(m: f64) -> f64 {
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

/// `1 / (1 + exp(m))`, i.e. the logistic sigmoid at `-m`.
fn sigmoid_neg(m: f64) -> f64 {
    if m > 0.0 {
        let e = (-m).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + m.exp())
    }
}

/// `(1/n) Σ log(1 + exp(−b_i⟨a_i, x⟩)) + (μ/2)‖x‖²`
#[derive(Debug, Clone)]
pub struct LogisticModel {
    features: Matrix,
    labels: Vec<f64>,
    mu: f64,
}

impl LogisticModel {
    pub fn new(features: Matrix, labels: Vec<f64>, mu: f64) -> Result<Self, ModelError> {
        if labels.len() != features.rows() {
            return Err(ModelError::DimensionMismatch {
                what: "labels",
                got: labels.len(),
                expected: features.rows(),
            });
        }
        if let Some((row, &value)) = labels
            .iter()
            .enumerate()
            .find(|(_, b)| **b != 1.0 && **b != -1.0)
        {
            return Err(ModelError::InvalidLabel { row, value });
        }
        check_positive("mu", mu)?;
        Ok(Self {
            features,
            labels,
            mu,
        })
    }

    fn margins(&self, x: &DenseVector) -> Vec<f64> {
        let ax = self.features.mul_vec(x);
        ax.iter().zip(&self.labels).map(|(v, b)| b * v).collect()
    }

    fn n(&self) -> f64 {
        self.features.rows() as f64
    }
}

impl SmoothModel for LogisticModel {
    fn dim(&self) -> usize {
        self.features.cols()
    }

    fn value(&self, x: &DenseVector) -> f64 {
        let loss: f64 = self.margins(x).into_iter().map(log1p_exp_neg).sum();
        loss / self.n() + 0.5 * self.mu * x.dot(x)
    }

    fn gradient(&self, x: &DenseVector) -> DenseVector {
        let n = self.n();
        let coeffs: Vec<f64> = self
            .margins(x)
            .into_iter()
            .zip(&self.labels)
            .map(|(m, b)| -b * sigmoid_neg(m) / n)
            .collect();
        self.features
            .tr_mul_vec(&DenseVector::from_raw(coeffs))
            .axpy(self.mu, x)
    }

    fn hess_vec(&self, x: &DenseVector, v: &DenseVector) -> DenseVector {
        let n = self.n();
        let av = self.features.mul_vec(v);
        let coeffs: Vec<f64> = self
            .margins(x)
            .into_iter()
            .zip(av.iter())
            .map(|(m, avi)| {
                let s = sigmoid_neg(m);
                s * (1.0 - s) * avi / n
            })
            .collect();
        self.features
            .tr_mul_vec(&DenseVector::from_raw(coeffs))
            .axpy(self.mu, v)
    }

    fn full_hessian(&self, x: &DenseVector) -> Option<Matrix> {
        let d = self.dim();
        let n = self.n();
        let mut h = Matrix::zeros(d, d);
        for (i, m) in self.margins(x).into_iter().enumerate() {
            let s = sigmoid_neg(m);
            let w = s * (1.0 - s) / n;
            let row = self.features.row(i);
            for r in 0..d {
                for c in 0..d {
                    h.set(r, c, h.get(r, c) + w * row[r] * row[c]);
                }
            }
        }
        for r in 0..d {
            h.set(r, r, h.get(r, r) + self.mu);
        }
        Some(h)
    }
}

/// `½‖Ax − y‖²`
#[derive(Debug, Clone)]
pub struct LeastSquaresModel {
    design: Matrix,
    target: DenseVector,
}

impl LeastSquaresModel {
    pub fn new(design: Matrix, target: DenseVector) -> Result<Self, ModelError> {
        if target.dim() != design.rows() {
            return Err(ModelError::DimensionMismatch {
                what: "targets",
                got: target.dim(),
                expected: design.rows(),
            });
        }
        Ok(Self { design, target })
    }

    fn residual(&self, x: &DenseVector) -> DenseVector {
        &self.design.mul_vec(x) - &self.target
    }
}

impl SmoothModel for LeastSquaresModel {
    fn dim(&self) -> usize {
        self.design.cols()
    }
    fn value(&self, x: &DenseVector) -> f64 {
        let r = self.residual(x);
        0.5 * r.dot(&r)
    }
    fn gradient(&self, x: &DenseVector) -> DenseVector {
        self.design.tr_mul_vec(&self.residual(x))
    }
    fn hess_vec(&self, _x: &DenseVector, v: &DenseVector) -> DenseVector {
        self.design.tr_mul_vec(&self.design.mul_vec(v))
    }
    fn full_hessian(&self, _x: &DenseVector) -> Option<Matrix> {
        Some(self.design.gram())
    }
}

/// `½xᵀQx − cᵀx` with symmetric `Q`.
#[derive(Debug, Clone)]
pub struct QuadraticModel {
    q: Matrix,
    c: DenseVector,
}

impl QuadraticModel {
    pub fn new(q: Matrix, c: DenseVector) -> Result<Self, ModelError> {
        if q.rows() != q.cols() {
            return Err(ModelError::DimensionMismatch {
                what: "Q columns",
                got: q.cols(),
                expected: q.rows(),
            });
        }
        if c.dim() != q.rows() {
            return Err(ModelError::DimensionMismatch {
                what: "linear term",
                got: c.dim(),
                expected: q.rows(),
            });
        }
        for i in 0..q.rows() {
            for j in 0..i {
                let (a, b) = (q.get(i, j), q.get(j, i));
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(ModelError::InvalidParameter {
                        name: "Q",
                        requirement: "symmetric",
                        value: a - b,
                    });
                }
            }
        }
        Ok(Self { q, c })
    }
}

impl SmoothModel for QuadraticModel {
    fn dim(&self) -> usize {
        self.c.dim()
    }
    fn value(&self, x: &DenseVector) -> f64 {
        0.5 * self.q.mul_vec(x).dot(x) - self.c.dot(x)
    }
    fn gradient(&self, x: &DenseVector) -> DenseVector {
        &self.q.mul_vec(x) - &self.c
    }
    fn hess_vec(&self, _x: &DenseVector, v: &DenseVector) -> DenseVector {
        self.q.mul_vec(v)
    }
    fn full_hessian(&self, _x: &DenseVector) -> Option<Matrix> {
        Some(self.q.clone())
    }
}

/// `f ≡ 0`
#[derive(Debug, Clone)]
pub struct ZeroModel {
    pub dim: usize,
}

impl SmoothModel for ZeroModel {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &DenseVector) -> f64 {
        0.0
    }
    fn gradient(&self, _x: &DenseVector) -> DenseVector {
        DenseVector::zeros(self.dim)
    }
    fn hess_vec(&self, _x: &DenseVector, _v: &DenseVector) -> DenseVector {
        DenseVector::zeros(self.dim)
    }
    fn full_hessian(&self, _x: &DenseVector) -> Option<Matrix> {
        Some(Matrix::zeros(self.dim, self.dim))
    }
}

// ---------------------------------------------------------------------------
// composite

/// `F = f + g`. Cheap to clone; both parts are shared.
#[derive(Clone)]
pub struct CompositeObjective {
    pub smooth: Arc<dyn SmoothModel>,
    pub regularizer: Arc<dyn ProxRegularizer>,
}

impl std::fmt::Debug for CompositeObjective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompositeObjective")
            .field("dim", &self.dim())
            .finish()
    }
}

impl CompositeObjective {
    pub fn new(
        smooth: Arc<dyn SmoothModel>,
        regularizer: Arc<dyn ProxRegularizer>,
    ) -> Result<Self, ModelError> {
        if smooth.dim() != regularizer.dim() {
            return Err(ModelError::DimensionMismatch {
                what: "regularizer",
                got: regularizer.dim(),
                expected: smooth.dim(),
            });
        }
        Ok(Self {
            smooth,
            regularizer,
        })
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn value(&self, x: &DenseVector) -> f64 {
        let g = self.regularizer.value(x);
        if g.is_finite() {
            self.smooth.value(x) + g
        } else {
            f64::INFINITY
        }
    }
}

/// Zero-norm regularized logistic regression.
pub fn logistic_l0_objective(
    features: Matrix,
    labels: Vec<f64>,
    mu: f64,
    lambda: f64,
) -> Result<CompositeObjective, ModelError> {
    let dim = features.cols();
    let smooth = LogisticModel::new(features, labels, mu)?;
    CompositeObjective::new(Arc::new(smooth), Arc::new(ZeroNorm::new(dim, lambda)?))
}

/// Zero-norm regularized least squares.
pub fn least_squares_l0_objective(
    design: Matrix,
    target: DenseVector,
    lambda: f64,
) -> Result<CompositeObjective, ModelError> {
    let dim = design.cols();
    let smooth = LeastSquaresModel::new(design, target)?;
    CompositeObjective::new(Arc::new(smooth), Arc::new(ZeroNorm::new(dim, lambda)?))
}

/// ℓ1-regularized least squares (lasso).
pub fn least_squares_l1_objective(
    design: Matrix,
    target: DenseVector,
    lambda: f64,
) -> Result<CompositeObjective, ModelError> {
    let dim = design.cols();
    let smooth = LeastSquaresModel::new(design, target)?;
    CompositeObjective::new(Arc::new(smooth), Arc::new(L1Norm::new(dim, lambda)?))
}

// ---------------------------------------------------------------------------
// derivative checks

/// Worst relative errors found by [`check_derivatives`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeReport {
    /// analytic gradient vs central differences of the value
    pub gradient_error: f64,
    /// analytic Hessian-vector product vs central differences of the gradient
    pub hess_vec_error: f64,
}

const CHECK_DIRECTIONS: usize = 5;

fn relative_error(approx: &DenseVector, exact: &DenseVector) -> f64 {
    (approx - exact).norm_inf() / exact.norm_inf().max(1.0)
}

/// Compares `gradient` and `hess_vec` against central finite differences with
/// step `h`. Hessian products are probed along a fixed set of pseudo-random
/// unit directions, so the report is reproducible.
pub fn check_derivatives(model: &dyn SmoothModel, x: &DenseVector, h: f64) -> DerivativeReport {
    let dim = model.dim();
    let grad = model.gradient(x);

    let mut fd_grad = DenseVector::zeros(dim);
    let mut probe = x.clone();
    for i in 0..dim {
        let xi = x[i];
        probe[i] = xi + h;
        let up = model.value(&probe);
        probe[i] = xi - h;
        let down = model.value(&probe);
        probe[i] = xi;
        fd_grad[i] = (up - down) / (2.0 * h);
    }
    let gradient_error = relative_error(&fd_grad, &grad);

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(0x5eed);
    let mut hess_vec_error: f64 = 0.0;
    for _ in 0..CHECK_DIRECTIONS {
        let raw: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dir = DenseVector::from_raw(raw);
        let norm = dir.norm();
        if norm == 0.0 {
            continue;
        }
        let dir = dir.scale(1.0 / norm);
        let fd = (&model.gradient(&x.axpy(h, &dir)) - &model.gradient(&x.axpy(-h, &dir)))
            .scale(1.0 / (2.0 * h));
        hess_vec_error = hess_vec_error.max(relative_error(&fd, &model.hess_vec(x, &dir)));
    }

    DerivativeReport {
        gradient_error,
        hess_vec_error,
    }
}
