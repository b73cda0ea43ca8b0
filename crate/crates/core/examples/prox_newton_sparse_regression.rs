// Runs the inexact proximal Newton method (cubic regularization, q = 3) on
// ℓ0-regularized least squares and logistic regression, then checks the
// decrease and relative-error conditions along each trace.

use klprox::analysis::{check_h1, fit_constants};
use klprox::harness::{build_problem, ProblemKind, ProblemParams};
use klprox::solver::{run, SolverConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let config = SolverConfig::default();
    let problems = [
        (
            ProblemKind::LeastSquaresL0,
            ProblemParams {
                n: 100,
                dim: 20,
                ..ProblemParams::with_seed(11)
            },
        ),
        (ProblemKind::LogisticL0, ProblemParams::with_seed(11)),
    ];
    for (kind, params) in problems {
        let (objective, x0) = build_problem(kind, &params)?;
        let trace = run(&objective, &x0, &config)?;
        let last = trace.last();
        println!(
            "{}: {:?} after {} steps, F = {:.10}, residual {:.2e}, support {}",
            kind.name(),
            trace.termination,
            trace.records.len() - 1,
            last.f_value,
            last.prox_residual,
            last.x.count_nonzero()
        );
        let p = config.q - 1.0;
        let (h1, _) = check_h1(&trace, config.decrease_constant(), p);
        let fit = fit_constants(&trace, p)?;
        println!(
            "  H1 at a = δ·L_min/q: {h1}; fitted a = {:.3e}, b = {:.3e}",
            fit.a_fit, fit.b_fit
        );
        for r in trace.records.iter().skip(1).take(6) {
            println!(
                "  k={:>3} F={:.8} step={:.2e} L={:.2e} j={} inner={}",
                r.k, r.f_value, r.step_norm, r.l_k, r.j_k, r.inner_iterations
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("prox_newton_sparse_regression example failed");
}
