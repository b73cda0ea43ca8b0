// Sequences with a known KL exponent: Φ(x) = ‖x‖^γ minimized along the ray
// to the origin with a step penalty a‖x − x^k‖^{p+1}. Prints the predicted
// and observed convergence regimes.

use klprox::analysis::{
    fit_constants, iterate_order, predicted_order, synth_kl_run, SyntheticKLProblem,
};
use klprox::linalg::DenseVector;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cases = [(2.0, 2.0, 60), (2.0, 1.0, 60), (4.0, 1.0, 400)];
    for (gamma, p, steps) in cases {
        let problem = SyntheticKLProblem::new(gamma, p)?;
        let x0 = DenseVector::new(vec![0.6, 0.8])?;
        let trace = synth_kl_run(&problem, 1.0, 1.0, &x0, steps)?;
        let fit = fit_constants(&trace, p)?;
        let rate = iterate_order(&trace, problem.theta, p)?;
        let predicted = match predicted_order(p, problem.theta) {
            Ok(order) => format!("order {order:.3}"),
            Err(_) if problem.theta == p / (p + 1.0) => "R-linear".to_string(),
            Err(_) => "sublinear".to_string(),
        };
        println!(
            "γ={gamma} p={p} θ={:.3}: predicted {predicted}; observed tail {:.3}, r²={:.3}, {} (b_fit {:.2})",
            problem.theta, rate.q_order_tail, rate.r_squared, rate.regime, fit.b_fit
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("synthetic_kl_rates example failed");
}
