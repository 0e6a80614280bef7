use std::path::Path;
use std::process::{Command, Output};

fn sodefield(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sodefield")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const DEGENERATE: &str = r#"
[metadata]
name = "x-dx"

[chart]
coordinates = ["x", "y"]
lower = [-1.0, -1.0]
upper = [1.0, 1.0]

[field]
components = ["x", "0"]

[frame]
fields = [["0", "1"]]
"#;

#[test]
fn check_passes_on_the_scrambled_oscillator() {
    let o = sodefield(&["check", "--corpus", "oscillator-scrambled"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("regularity: pass"));
    assert!(out.contains("W involutive: pass"));
}

#[test]
fn regularity_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "m.toml", DEGENERATE);
    let o = sodefield(&["check", &path]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8(o.stdout).unwrap().contains("regularity: fail"));
}

#[test]
fn malformed_expression_exits_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "m.toml", &DEGENERATE.replace("[\"x\", \"0\"]", "[\"x\", \"(y\"]"));
    let o = sodefield(&["check", &path]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("field.components[1] at 1:"), "{err}");
}

#[test]
fn missing_inputs_exit_two() {
    assert_eq!(code(&sodefield(&["classify", "/nonexistent/m.toml"])), 2);
    assert_eq!(code(&sodefield(&["classify", "--corpus", "nonexistent"])), 2);
    assert_eq!(code(&sodefield(&["classify"])), 2);
}

#[test]
fn classify_names_case_and_parameters() {
    let o = sodefield(&["classify", "--corpus", "routh-abelian"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout).unwrap().contains("Case1 (second-order field, 1 parameters)"));
    let o = sodefield(&["classify", "--corpus", "timedep-scrambled"]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("Case2"));
}

#[test]
fn straighten_writes_json_and_honours_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = sodefield(&[
        "straighten",
        "--corpus",
        "oscillator-scrambled",
        "--grid",
        "6",
        "--tol",
        "1e-6",
        "--json",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["straighten"]["residuals"]["grid"]["points_per_axis"], 6);
    assert_eq!(v["manifest"]["options"]["tolerance"], 1e-6);
    assert!(v["straighten"]["residuals"]["structural_max"].as_f64().unwrap() < 1e-6);
}

#[test]
fn straighten_outside_the_cross_section_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = sodefield(&["corpus", "oscillator-scrambled"]).stdout;
    let text = String::from_utf8(text)
        .unwrap()
        .replace("lower = [-1.0, -1.0]", "lower = [-0.3, 0.5]")
        .replace("upper = [1.0, 1.0]", "upper = [0.3, 1.0]");
    let path = write(dir.path(), "m.toml", &text);
    let o = sodefield(&["straighten", &path]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8(o.stdout).unwrap().contains("cross-section not found"));
}

#[test]
fn corpus_listing() {
    let o = sodefield(&["corpus"]);
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(out.lines().count(), 6);
    assert!(out.lines().any(|l| l == "routh-abelian"));
}
