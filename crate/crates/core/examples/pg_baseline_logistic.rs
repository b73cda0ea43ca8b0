// Monotone line-search proximal gradient on ℓ0-regularized logistic
// regression with μ = 1e-5 and λ = 0.1, followed by the rate estimator on
// the iterate errors.

use klprox::analysis::{fit_constants, iterate_order};
use klprox::harness::{build_problem, ProblemKind, ProblemParams};
use klprox::solver::{pg_baseline_run, PgConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let params = ProblemParams {
        n: 200,
        dim: 50,
        mu: 1e-5,
        lambda: 0.1,
        ..ProblemParams::with_seed(42)
    };
    let (objective, x0) = build_problem(ProblemKind::LogisticL0, &params)?;
    let trace = pg_baseline_run(&objective, &x0, &PgConfig::default())?;
    println!(
        "{:?} after {} steps, F = {:.10}",
        trace.termination,
        trace.records.len() - 1,
        trace.last().f_value
    );

    let fit = fit_constants(&trace, 1.0)?;
    println!(
        "p = 1: a_fit = {:.3e}, b_fit = {:.3e}",
        fit.a_fit, fit.b_fit
    );

    let rate = iterate_order(&trace, 0.5, 1.0)?;
    let tail: Vec<String> = rate
        .q_orders
        .iter()
        .rev()
        .take(5)
        .rev()
        .map(|q| format!("{q:.3}"))
        .collect();
    println!("last Q-order estimates: {}", tail.join(" "));
    println!(
        "tail median {:.3}, regime {}",
        rate.q_order_tail, rate.regime
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("pg_baseline_logistic example failed");
}
