//! End-to-end tests of the `sqcurv` binary: exit codes, determinism of the
//! JSON report, and the single-point command.

use std::path::PathBuf;
use std::process::{Command, Output};

use sqcurv::report::VerificationReport;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sqcurv"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn temp_path(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sqcurv-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn verify_passes_with_exit_zero_and_identical_bytes_across_runs() {
    let out_a = temp_path("model-a.json");
    let out_b = temp_path("model-b.json");
    let args = |out: &PathBuf| {
        vec![
            "verify".to_string(),
            "--family".into(),
            "square-scalar".into(),
            "--dim".into(),
            "3".into(),
            "--mu".into(),
            "1".into(),
            "--k".into(),
            "0.3".into(),
            "--a".into(),
            "0.1,0.2,0.05".into(),
            "--samples".into(),
            "16".into(),
            "--seed".into(),
            "7".into(),
            "--radius".into(),
            "0.4".into(),
            "--format".into(),
            "json".into(),
            "--out".into(),
            out.display().to_string(),
        ]
    };
    let run_a = bin().args(args(&out_a)).output().unwrap();
    assert!(run_a.status.success(), "{}", String::from_utf8_lossy(&run_a.stderr));
    let run_b = bin().args(args(&out_b)).output().unwrap();
    assert!(run_b.status.success());

    let bytes_a = std::fs::read(&out_a).unwrap();
    let bytes_b = std::fs::read(&out_b).unwrap();
    assert_eq!(bytes_a, bytes_b, "same config+seed must give identical bytes");

    let report = VerificationReport::from_json(std::str::from_utf8(&bytes_a).unwrap()).unwrap();
    assert_eq!(report.schema, 1);
    assert!(report.summary.pass);
    assert_eq!(report.samples.len(), 16);
    assert_eq!(report.summary.tau_exponent.as_deref(), Some("sigma3"));
    let reparsed = VerificationReport::from_json(&report.to_json().unwrap()).unwrap();
    assert_eq!(reparsed, report);
}

#[test]
fn verify_prints_a_text_table_with_all_rows() {
    let out = run(&[
        "verify",
        "--family",
        "euclidean-parallel",
        "--dim",
        "3",
        "--samples",
        "8",
        "--seed",
        "1",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for row in [
        "y1",
        "y2",
        "y3",
        "qq",
        "weyl",
        "douglas",
        "scalar-flag",
        "proj-flat",
        "spray-match",
        "k-consistency",
        "deform-constcurv",
        "deform-conformal",
        "delta-const",
        "bounds",
        "tau-exponent",
    ] {
        assert!(text.contains(row), "missing row {row} in:\n{text}");
    }
    assert!(text.contains("result: PASS"));
}

#[test]
fn failing_family_exits_one_and_tolerance_overrides_apply() {
    let config = temp_path("generic.toml");
    std::fs::write(
        &config,
        r#"
family = "custom"
dim = 2
samples = 10
seed = 4

[custom]
phi = [{ c = 0.3, exps = [1, 0] }]
b = [
  [{ c = 0.1, exps = [0, 0] }, { c = 0.2, exps = [0, 2] }],
  [{ c = 0.05, exps = [1, 0] }],
]
"#,
    )
    .unwrap();
    let out = run(&["verify", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "generic pair must fail the checks");
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("result: FAIL"));

    // Loosening every failing row to an absurd tolerance flips the verdict.
    let loose = run(&[
        "verify",
        "--config",
        config.to_str().unwrap(),
        "--tol",
        "y1=10,y2=10,y3=10,qq=10,weyl=10,douglas=10,scalar-flag=10,proj-flat=10,\
         k-consistency=10,deform-constcurv=10,deform-conformal=10,spray-match=10",
    ]);
    assert_eq!(loose.status.code(), Some(0), "{}", String::from_utf8_lossy(&loose.stderr));
}

#[test]
fn config_errors_exit_two() {
    let out = run(&["verify", "--family", "space-form", "--dim", "3"]);
    assert_eq!(out.status.code(), Some(2), "missing --mu must be a config error");
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("requires --mu"), "stderr: {err}");

    let out = run(&["verify", "--family", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn curvature_prints_values_and_residuals() {
    let out = run(&[
        "curvature",
        "--family",
        "square-scalar",
        "--dim",
        "3",
        "--mu",
        "1",
        "--k",
        "0.3",
        "--a",
        "0.1,0.2,0.05",
        "--point",
        "0.15,-0.1,0.12",
        "--direction",
        "0.5,0.4,-0.35",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("F = "));
    assert!(text.contains("K_hat"));
    assert!(text.contains("K_formula"));
    assert!(text.contains("spray-match"));

    // Inadmissible direction: the guarded cone boundary is a hard error.
    let bad = run(&[
        "curvature",
        "--family",
        "square-constant",
        "--dim",
        "2",
        "--a",
        "0.2,0",
        "--point",
        "0.99,0",
        "--direction",
        "1,0",
    ]);
    assert_eq!(bad.status.code(), Some(2));
}
