// Solves one cubic-regularized model subproblem inexactly and shows the
// subgradient certificate that comes back with it.

use klprox::harness::{build_problem, ProblemKind, ProblemParams};
use klprox::subproblem::{self, curvature_estimate, SubproblemSpec};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let params = ProblemParams {
        n: 60,
        dim: 12,
        ..ProblemParams::with_seed(3)
    };
    let (objective, x0) = build_problem(ProblemKind::LeastSquaresL0, &params)?;
    let grad = objective.smooth.gradient(&x0);
    let spec = SubproblemSpec {
        objective: &objective,
        center: &x0,
        grad_at_center: &grad,
        weight: 1.0,
        order: 3.0,
        tolerance: 1.0,
        curvature: curvature_estimate(objective.smooth.as_ref(), &x0, 5),
    };
    let result = subproblem::solve(&spec, 5000, &Default::default(), None)?;
    let d = result.point.distance(&x0);
    println!("inner iterations: {}", result.inner_iterations);
    println!(
        "‖d‖ = {d:.4e}, support size {}",
        result.point.count_nonzero()
    );
    println!(
        "‖w̃‖ = {:.3e} <= b·L·‖d‖² = {:.3e}",
        result.certificate_norm,
        spec.tolerance * spec.weight * d * d
    );
    println!(
        "model value {:.6} <= value at center {:.6}",
        result.model_value,
        subproblem::model_value(&spec, &x0)
    );
    assert!(result.certificate_norm <= spec.tolerance * spec.weight * d * d + 1e-12);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("cubic_subproblem example failed");
}
