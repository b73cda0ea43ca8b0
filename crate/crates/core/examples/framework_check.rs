// Checks the H1/H2 conditions on a hand-made trace and shows how fitted
// constants and violations are reported.

use klprox::analysis::{check_h1, check_h2, fit_constants, SyntheticKLProblem};
use klprox::trace::{RunConfig, Trace};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let config = RunConfig::Synthetic {
        problem: SyntheticKLProblem::new(2.0, 1.0)?,
        a: 1.0,
        b: 1.0,
    };
    let trace = Trace::from_scalars(&[3.0, 2.0, 1.5], &[1.0, 0.5], &[1.0, 0.1], config);

    for a in [1.0, 2.0] {
        let (ok, violations) = check_h1(&trace, a, 1.0);
        println!("H1 with a = {a}: {ok} {violations:?}");
    }
    let (ok, _) = check_h2(&trace, 1.0, 1.0);
    println!("H2 with b = 1: {ok}");

    let report = fit_constants(&trace, 1.0)?;
    println!("fitted a = {}, b = {}", report.a_fit, report.b_fit);
    assert!(report.h1_holds && report.h2_holds);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("framework_check example failed");
}
