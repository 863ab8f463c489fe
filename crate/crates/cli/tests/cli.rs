use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sturm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sturm")).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

// the error line must be a single `error kind=... message="..."`
fn assert_kind(o: &Output, kind: &str) {
    let e = stderr(o);
    let line = e.lines().next().unwrap_or_default();
    assert!(line.starts_with(&format!("error kind={kind} message=\"")), "{e}");
}

fn model(dir: &Path, name: &str) -> PathBuf {
    let o = sturm(dir, &["model", name, "-o", &format!("{name}.json"), "--n-x", "129"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    dir.join(format!("{name}.json"))
}

#[test]
fn malformed_file_is_input_error() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("bad.json"), "{ not json").unwrap();
    let o = sturm(d.path(), &["forward", "bad.json", "-o", "s.json"]);
    assert_eq!(code(&o), 2);
    assert_kind(&o, "ParseError");
}

#[test]
fn bad_config_values_are_input_errors() {
    let d = tempfile::tempdir().unwrap();
    model(d.path(), "zero-p0");
    let o = sturm(d.path(), &["forward", "zero-p0.json", "-o", "s.json", "--n-max", "0"]);
    assert_eq!(code(&o), 2);
    assert_kind(&o, "InvalidInput");

    std::fs::write(d.path().join("c.toml"), "[contour]\nm_q = 2\n").unwrap();
    let o = sturm(d.path(), &["--config", "c.toml", "forward", "zero-p0.json", "-o", "s.json"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));

    std::fs::write(d.path().join("u.toml"), "[contour]\nbogus = 1\n").unwrap();
    let o = sturm(d.path(), &["--config", "u.toml", "forward", "zero-p0.json", "-o", "s.json"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn flags_override_config() {
    let d = tempfile::tempdir().unwrap();
    model(d.path(), "zero-p0");
    std::fs::write(d.path().join("c.toml"), "[spectrum]\nn_max = 0\n").unwrap();
    let o = sturm(d.path(), &["--config", "c.toml", "forward", "zero-p0.json", "-o", "s.json", "--n-max", "4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn io_failures_exit_3() {
    let d = tempfile::tempdir().unwrap();
    model(d.path(), "zero-p0");
    let o = sturm(d.path(), &["forward", "zero-p0.json", "-o", "missing_dir/s.json"]);
    assert_eq!(code(&o), 3);
    assert_kind(&o, "IoError");
    let o = sturm(d.path(), &["forward", "nope.json", "-o", "s.json"]);
    assert_eq!(code(&o), 3);
    let o = sturm(d.path(), &["--config", "nope.toml", "forward", "zero-p0.json", "-o", "s.json"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn usage_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let o = sturm(d.path(), &["frobnicate"]);
    assert_eq!(code(&o), 2);
    assert_kind(&o, "UsageError");
    assert_eq!(code(&sturm(d.path(), &["--help"])), 0);
    let o = sturm(d.path(), &["model", "no-such-model", "-o", "x.json"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn forward_then_identity_inversion() {
    let d = tempfile::tempdir().unwrap();
    model(d.path(), "zero-p0");
    let o = sturm(d.path(), &["forward", "zero-p0.json", "-o", "s.json", "--n-max", "6"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout);
    // lambda_3 = 4 for the zero model
    assert!(table.lines().any(|l| l.trim_start().starts_with("3 ") && l.contains("3.99999999999")), "{table}");

    let o = sturm(d.path(), &["invert", "zero-p0.json", "s.json", "-o", "r.json", "--diagnostics", "d.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = std::fs::read_to_string(d.path().join("r.json")).unwrap();
    assert!(r.contains("sturm-reconstruction/1"));
    let csv = std::fs::read_to_string(d.path().join("d.csv")).unwrap();
    assert!(csv.starts_with("x,condition_estimate,sigma_re"));
    assert_eq!(csv.lines().count(), 130);
}

#[test]
fn sweep_rejects_empty_scales() {
    let d = tempfile::tempdir().unwrap();
    model(d.path(), "zero-p0");
    let o = sturm(d.path(), &["sweep", "zero-p0.json", "--family", "shift-eigenvalue:1", "--scales", "-o", "w.csv"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let o = sturm(d.path(), &["sweep", "zero-p0.json", "--family", "wobble:1", "--scales", "0.1", "-o", "w.csv"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn cauchy_extract_of_zero_model() {
    let d = tempfile::tempdir().unwrap();
    model(d.path(), "zero-p0");
    let o = sturm(d.path(), &["cauchy", "extract", "zero-p0.json", "-o", "c.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("fit residual"), "{out}");
    let c = std::fs::read_to_string(d.path().join("c.json")).unwrap();
    assert!(c.contains("sturm-cauchy/1"));
}

#[test]
fn under_resolved_cauchy_fit_exits_4() {
    let d = tempfile::tempdir().unwrap();
    model(d.path(), "smooth-p1");
    let o = sturm(d.path(), &["cauchy", "extract", "smooth-p1.json", "-o", "c.json", "--k-f", "2"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert_kind(&o, "FitResidualTooLarge");
}

#[test]
fn sweep_output_is_deterministic_across_worker_counts() {
    let d = tempfile::tempdir().unwrap();
    model(d.path(), "smooth-p0");
    let mut outs = Vec::new();
    for w in ["1", "3"] {
        let name = format!("w{w}.csv");
        let o = sturm(
            d.path(),
            &["sweep", "smooth-p0.json", "--family", "scale-weight:2", "--scales", "1e-2,5e-3", "-o", &name, "--workers", w],
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        outs.push(std::fs::read(d.path().join(&name)).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
    let text = String::from_utf8(outs.remove(0)).unwrap();
    assert!(text.starts_with("t,delta,sigma_err,c_err,d_err,verify_residual,status"));
    assert_eq!(text.lines().count(), 3);
}
