use std::path::Path;
use std::process::Command;

use klprox::cli::{run, EXIT_BUDGET, EXIT_OK, EXIT_USAGE};

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(
        std::iter::once("klprox").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_quadratic_reports_result_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q");
    let (code, stdout, _) = call(&[
        "solve",
        "--problem",
        "quadratic",
        "--dim",
        "8",
        "--n",
        "20",
        "--seed",
        "1",
        "--out",
        path(&out),
    ]);
    assert_eq!(code, EXIT_OK);
    let line = stdout.lines().find(|l| l.starts_with("RESULT ")).unwrap();
    assert!(line.contains("F=") && line.contains("residual=") && line.contains("iters="));
    assert!(out.join("trace.csv").exists());
    assert!(out.join("trace.json").exists());
    assert!(out.join("report.json").exists());
}

#[test]
fn exhausted_budget_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let (code, _, _) = call(&[
        "solve",
        "--problem",
        "logistic-l0",
        "--solver",
        "pg",
        "--max-outer",
        "2",
        "--seed",
        "3",
        "--out",
        path(&out),
    ]);
    assert_eq!(code, EXIT_BUDGET);
}

#[test]
fn invalid_parameters_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    for bad in [["--q", "4"], ["--tau", "1"], ["--delta", "1.5"]] {
        let (code, _, err) = call(&["solve", bad[0], bad[1], "--out", path(&out)]);
        assert_eq!(code, EXIT_USAGE, "{bad:?}");
        assert!(!err.is_empty());
    }
    let (code, _, _) = call(&["solve", "--no-such-flag"]);
    assert_eq!(code, EXIT_USAGE);
    let (code, _, _) = call(&["verify", "--trace", "/nonexistent/trace.csv", "--p", "1"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("c");
    std::fs::write(
        &cfg,
        format!(
            "problem = \"quadratic\"\ndim = 6\nn = 12\nq = 4.0\nout = \"{}\"\n",
            path(&out)
        ),
    )
    .unwrap();
    let (code, _, _) = call(&["solve", "--config", path(&cfg)]);
    assert_eq!(code, EXIT_USAGE);
    let (code, _, _) = call(&["solve", "--config", path(&cfg), "--q", "2.5"]);
    assert_eq!(code, EXIT_OK);

    std::fs::write(&cfg, "unknown-key = 1\n").unwrap();
    let (code, _, _) = call(&["solve", "--config", path(&cfg)]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn verify_and_rate_on_a_solved_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let (code, _, _) = call(&[
        "solve",
        "--problem",
        "logistic-l0",
        "--seed",
        "42",
        "--full-trace",
        "--out",
        path(&out),
    ]);
    assert_eq!(code, EXIT_OK);
    let trace = out.join("trace.csv");

    let (code, stdout, _) = call(&["verify", "--trace", path(&trace), "--p", "2"]);
    assert_eq!(code, EXIT_OK, "{stdout}");
    assert!(stdout.contains("H1") && stdout.contains("H2"));

    // an absurd decrease constant must be rejected with violations listed
    let (code, stdout, _) = call(&["verify", "--trace", path(&trace), "--p", "2", "--a", "1e9"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(stdout.contains("H1 violation at k="));

    let (code, stdout, _) = call(&[
        "rate",
        "--trace",
        path(&trace),
        "--theta",
        "0.5",
        "--p",
        "2",
    ]);
    assert_eq!(code, EXIT_OK, "{stdout}");
    assert!(stdout.contains("predicted order: 1.3333"));
    assert!(stdout.contains("tail median:"));
    assert!(stdout.contains("regime:"));

    let (_, stdout, _) = call(&[
        "rate",
        "--trace",
        path(&trace),
        "--theta",
        "0.75",
        "--p",
        "2",
    ]);
    assert!(stdout.contains("sublinear regime expected"));
}

#[test]
fn rate_boundary_on_synthetic_generator() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let (code, _, _) = call(&[
        "solve",
        "--problem",
        "synthetic",
        "--gamma",
        "2",
        "--p",
        "1",
        "--full-trace",
        "--out",
        path(&out),
    ]);
    assert_eq!(code, EXIT_OK);
    let (code, stdout, _) = call(&[
        "rate",
        "--trace",
        path(&out.join("trace.csv")),
        "--theta",
        "0.5",
        "--p",
        "1",
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(stdout.contains("boundary regime: R-linear expected"));
    assert!(stdout.contains("regime: linear"));
}

#[test]
fn gen_data_writes_libsvm_that_solve_reads() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.svm");
    let (code, _, _) = call(&[
        "gen-data",
        "--kind",
        "logistic",
        "--n",
        "30",
        "--dim",
        "6",
        "--seed",
        "2",
        "--out",
        path(&data),
    ]);
    assert_eq!(code, EXIT_OK);
    let text = std::fs::read_to_string(&data).unwrap();
    assert_eq!(text.lines().count(), 30);
    assert!(text
        .lines()
        .all(|l| l.starts_with("+1 ") || l.starts_with("-1 ")));

    let out = dir.path().join("o");
    let (code, _, _) = call(&[
        "solve",
        "--problem",
        "libsvm-logistic",
        "--data",
        path(&data),
        "--out",
        path(&out),
    ]);
    assert_eq!(code, EXIT_OK);

    let (code, _, _) = call(&[
        "gen-data",
        "--kind",
        "logistic",
        "--n",
        "0",
        "--dim",
        "6",
        "--out",
        path(&data),
    ]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn selftest_passes() {
    let (code, stdout, _) = call(&["selftest"]);
    assert_eq!(code, EXIT_OK);
    assert!(!stdout.contains("FAIL"));
}

#[test]
fn binary_is_a_thin_wrapper() {
    let status = Command::new(env!("CARGO_BIN_EXE_klprox"))
        .arg("selftest")
        .output()
        .unwrap();
    assert!(status.status.success());
    let help = Command::new(env!("CARGO_BIN_EXE_klprox"))
        .arg("--help")
        .output()
        .unwrap();
    assert_eq!(help.status.code(), Some(0));
    let text = String::from_utf8_lossy(&help.stdout);
    for sub in ["solve", "verify", "rate", "gen-data", "selftest"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn rate_on_a_short_trace_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("short");
    let (code, _, _) = call(&[
        "solve",
        "--problem",
        "least-squares-l0",
        "--n",
        "100",
        "--dim",
        "20",
        "--full-trace",
        "--out",
        path(&out),
    ]);
    assert_eq!(code, EXIT_OK);
    let (code, stdout, _) = call(&[
        "rate",
        "--trace",
        path(&out.join("trace.csv")),
        "--theta",
        "0.5",
        "--p",
        "2",
    ]);
    assert_eq!(code, EXIT_BUDGET, "{stdout}");
}
