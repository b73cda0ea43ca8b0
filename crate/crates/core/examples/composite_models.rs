// Builds the model zoo, checks analytic derivatives against finite
// differences, and applies the ℓ0 and ℓ1 proximal maps.
//
// ```text
// cargo run --example composite_models
// ```

use klprox::harness::{gen_least_squares_data, gen_logistic_data, gen_normal_vector};
use klprox::linalg::DenseVector;
use klprox::models::{
    check_derivatives, least_squares_l0_objective, logistic_l0_objective, prox_l0, prox_l1,
    LeastSquaresModel, LogisticModel,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let data = gen_logistic_data(200, 10, 7, 3)?;
    let logistic = LogisticModel::new(data.features.clone(), data.labels(), 1e-5)?;
    let x = gen_normal_vector(10, 1);
    let report = check_derivatives(&logistic, &x, 1e-6);
    println!(
        "logistic: gradient rel. error {:.2e}, hess-vec rel. error {:.2e}",
        report.gradient_error, report.hess_vec_error
    );
    assert!(report.gradient_error <= 1e-6 && report.hess_vec_error <= 1e-5);

    let ls = gen_least_squares_data(50, 10, 7, 0.1, 3)?;
    let model = LeastSquaresModel::new(ls.features.clone(), ls.targets.clone())?;
    let report = check_derivatives(&model, &x, 1e-6);
    println!(
        "least squares: gradient rel. error {:.2e}",
        report.gradient_error
    );

    let objective = logistic_l0_objective(data.features.clone(), data.labels(), 1e-5, 0.1)?;
    println!("logistic + 0.1·‖x‖₀ at x: F = {:.6}", objective.value(&x));
    let objective = least_squares_l0_objective(ls.features, ls.targets, 0.1)?;
    println!(
        "least squares + 0.1·‖x‖₀ at 0: F = {:.6}",
        objective.value(&DenseVector::zeros(10))
    );

    // hard threshold at √(2tλ) = √0.2 ≈ 0.447, soft threshold at tλ = 0.2
    let z = DenseVector::new(vec![0.5, 0.3, -0.1])?;
    println!(
        "prox_l0(1, 0.1, z) = {:?}",
        prox_l0(1.0, 0.1, &z).as_slice()
    );
    println!(
        "prox_l1(1, 0.2, z) = {:?}",
        prox_l1(1.0, 0.2, &z).as_slice()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("composite_models example failed");
}
