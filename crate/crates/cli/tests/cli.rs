use std::path::PathBuf;
use std::process::{Command, Output};

fn mann(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mann")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mann-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn halpern_series_in_exact_mode() {
    let out = mann(&["bounds", "--scheme", "halpern", "--beta", "n/(n+2)", "--N", "5", "--exact"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,R,inv_R,R_exact,certificate"));
    assert!(text.lines().any(|l| l.starts_with("1,") && l.contains(",7/9,")), "{text}");
}

#[test]
fn exact_ms_optimum() {
    let out = mann(&["optimize", "--mode", "ms", "--N", "2", "--exact"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.starts_with("2,") && l.contains(",17/28,")), "{text}");
}

#[test]
fn certified_series_is_labelled() {
    let out = mann(&["bounds", "--scheme", "halpern", "--beta", "optimal", "--N", "6", "--certify"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",witness-verified")), "{text}");
    let plain = stdout(&mann(&["bounds", "--scheme", "km", "--alpha", "0.5", "--N", "3"]));
    assert!(plain.lines().skip(1).all(|l| l.ends_with(",uncertified")), "{plain}");
}

#[test]
fn parse_errors_name_the_line() {
    let dir = scratch("parse");
    let file = dir.join("bad.txt");
    std::fs::write(&file, "1\n0.5 0.5\n0.5 x 0.5\n").unwrap();
    let out = mann(&["bounds", "--array", file.to_str().unwrap(), "--N", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(mann(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(mann(&["bounds", "--scheme", "halpern", "--beta", "2", "--N", "3"]).status.code(), Some(1));
    assert_eq!(mann(&["--help"]).status.code(), Some(0));
}

#[test]
fn output_files_are_deterministic() {
    let runs: Vec<Vec<u8>> = (0..2)
        .map(|k| {
            let dir = scratch(&format!("det{k}"));
            let out = mann(&["optimize", "--mode", "s", "--N", "5", "--restarts", "4", "--out", dir.to_str().unwrap()]);
            assert!(out.status.success());
            for f in ["residuals.csv", "coefficients.csv", "run.json"] {
                assert!(dir.join(f).exists(), "{f} missing");
            }
            std::fs::read(dir.join("coefficients.csv")).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn lower_bound_reproduction_is_verified() {
    let out = mann(&["reproduce", "lower-bounds", "--N", "6"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",verified")), "{text}");
}
