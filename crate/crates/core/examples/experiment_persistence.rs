// Runs a seeded experiment end to end, then reads the persisted trace back
// and round-trips a generated data set through libsvm format.

use klprox::harness::{
    gen_logistic_data, read_libsvm, read_trace_with_meta, run_experiment, write_libsvm,
    ExperimentSpec, LabelMode, ProblemKind, ProblemParams, SolverKind,
};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let spec = ExperimentSpec {
        problem: ProblemKind::LeastSquaresL0,
        problem_params: ProblemParams {
            n: 100,
            dim: 20,
            ..ProblemParams::with_seed(5)
        },
        solver: SolverKind::ProxNewton,
        config: Default::default(),
        pg_config: Default::default(),
        output_path: dir.path().join("run"),
        full_trace: true,
    };
    let outcome = run_experiment(&spec)?;
    println!(
        "{:?}, a_fit = {:.3e}",
        outcome.trace.termination, outcome.framework.a_fit
    );

    let (trace, meta) = read_trace_with_meta(&spec.trace_path())?;
    assert_eq!(trace.values(), outcome.trace.values());
    println!(
        "reloaded {} records with iterates: {}",
        trace.records.len(),
        trace.has_iterates()
    );
    println!("sidecar: problem {:?}, seed {:?}", meta.problem, meta.seed);

    let data = gen_logistic_data(20, 4, 9, 2)?;
    let path = dir.path().join("data.svm");
    write_libsvm(&data, LabelMode::Binary, &path)?;
    let back = read_libsvm(&path)?;
    println!(
        "libsvm round trip: {} rows, {} columns",
        back.n(),
        back.dim()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("experiment_persistence example failed");
}
