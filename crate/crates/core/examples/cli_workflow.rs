// Drives the command-line interface in process: generate data, solve,
// verify, and estimate the rate of a synthetic trace.

use klprox::cli;

fn call(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(
        std::iter::once("klprox").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8_lossy(&out).into_owned() + &String::from_utf8_lossy(&err),
    )
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();

    let (code, text) = call(&[
        "gen-data",
        "--kind",
        "logistic",
        "--n",
        "200",
        "--dim",
        "20",
        "--seed",
        "3",
        "--out",
        &p("d.svm"),
    ]);
    print!("gen-data -> {code}\n{text}");

    let (code, text) = call(&[
        "solve",
        "--problem",
        "libsvm-logistic",
        "--data",
        &p("d.svm"),
        "--out",
        &p("solve"),
    ]);
    print!("solve -> {code}\n{text}");

    let trace = p("solve/trace.csv");
    let (code, text) = call(&[
        "verify",
        "--trace",
        &trace,
        "--p",
        "2",
        "--a",
        "1.6666666666666667e-4",
    ]);
    print!("verify -> {code}\n{text}");

    let (code, text) = call(&[
        "solve",
        "--problem",
        "synthetic",
        "--gamma",
        "2",
        "--p",
        "1",
        "--full-trace",
        "--out",
        &p("synth"),
    ]);
    print!("solve synthetic -> {code}\n{text}");
    let (code, text) = call(&[
        "rate",
        "--trace",
        &p("synth/trace.csv"),
        "--theta",
        "0.5",
        "--p",
        "1",
    ]);
    print!("rate -> {code}\n{text}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("cli_workflow example failed");
}
