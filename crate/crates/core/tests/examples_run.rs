//! Every example must keep running.

mod composite_models {
    #![allow(dead_code)]
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/composite_models.rs"
    ));
}

#[test]
fn composite_models_runs() {
    composite_models::run_example().expect("composite_models example should run");
}

mod cubic_subproblem {
    #![allow(dead_code)]
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/cubic_subproblem.rs"
    ));
}

#[test]
fn cubic_subproblem_runs() {
    cubic_subproblem::run_example().expect("cubic_subproblem example should run");
}

mod prox_newton_sparse_regression {
    #![allow(dead_code)]
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/prox_newton_sparse_regression.rs"
    ));
}

#[test]
fn prox_newton_sparse_regression_runs() {
    prox_newton_sparse_regression::run_example()
        .expect("prox_newton_sparse_regression example should run");
}

mod pg_baseline_logistic {
    #![allow(dead_code)]
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/pg_baseline_logistic.rs"
    ));
}

#[test]
fn pg_baseline_logistic_runs() {
    pg_baseline_logistic::run_example().expect("pg_baseline_logistic example should run");
}

mod framework_check {
    #![allow(dead_code)]
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/framework_check.rs"
    ));
}

#[test]
fn framework_check_runs() {
    framework_check::run_example().expect("framework_check example should run");
}

mod synthetic_kl_rates {
    #![allow(dead_code)]
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/synthetic_kl_rates.rs"
    ));
}

#[test]
fn synthetic_kl_rates_runs() {
    synthetic_kl_rates::run_example().expect("synthetic_kl_rates example should run");
}

mod experiment_persistence {
    #![allow(dead_code)]
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/experiment_persistence.rs"
    ));
}

#[test]
fn experiment_persistence_runs() {
    experiment_persistence::run_example().expect("experiment_persistence example should run");
}

mod cli_workflow {
    #![allow(dead_code)]
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/cli_workflow.rs"
    ));
}

#[test]
fn cli_workflow_runs() {
    cli_workflow::run_example().expect("cli_workflow example should run");
}
