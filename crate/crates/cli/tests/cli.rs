use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lcnorm(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcnorm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines
        .next()
        .unwrap()
        .split(',')
        .position(|h| h == name)
        .unwrap();
    lines
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn unknown_example_is_a_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_lcnorm"))
        .args(["example", "p3-nothing"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn example_writes_reports_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["example", "p3-trivial-s1", "--eps-grid", "0.5,1"];
    let out = lcnorm(&args, dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS R(0) = pi^3/2"));
    let read = |f: &str| fs::read_to_string(dir.path().join(f)).unwrap();
    let profile = read("p3-trivial-s1-profile.csv");
    let identity = read("p3-trivial-s1-identity.csv");
    assert!(profile.starts_with("epsilon,value,error,sigma,b,section\n"));
    assert!(identity.starts_with("epsilon,lhs,rhs,defect,tolerance\n"));
    assert!(read("p3-trivial-s1-profile.svg").contains(r#"width="800" height="500""#));

    let again = tempfile::tempdir().unwrap();
    assert!(lcnorm(&args, again.path()).status.success());
    assert_eq!(
        profile,
        fs::read_to_string(again.path().join("p3-trivial-s1-profile.csv")).unwrap()
    );
    assert_eq!(
        identity,
        fs::read_to_string(again.path().join("p3-trivial-s1-identity.csv")).unwrap()
    );
}

#[test]
fn sweep_is_nonincreasing() {
    let dir = tempfile::tempdir().unwrap();
    let out = lcnorm(
        &[
            "sweep",
            "--model",
            "p3-trivial-s1",
            "--eps-grid",
            "0.1:2:6",
            "--log-x",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = column(
        &fs::read_to_string(dir.path().join("sweep-f.csv")).unwrap(),
        "value",
    );
    assert_eq!(v.len(), 6);
    assert!(v.windows(2).all(|w| w[1] <= w[0]), "{v:?}");
    assert!(dir.path().join("sweep-f.svg").exists());
}

#[test]
fn gram_of_example_two_is_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let out = lcnorm(&["gram", "--model", "p3-o1", "--sigma", "2"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("gram.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "G0,f0,f1,f2,f3");
    assert_eq!(lines[5], "G1,f0,f1,f2,f3");
    let g1: Vec<Vec<f64>> = lines[6..10]
        .iter()
        .map(|l| l.split(',').skip(1).map(|x| x.parse().unwrap()).collect())
        .collect();
    let min_diag = (0..4).map(|i| g1[i][i]).fold(f64::INFINITY, f64::min);
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                assert!(g1[i][j].abs() < 1e-6 * min_diag);
            }
        }
    }
}

#[test]
fn cmin_on_example_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = lcnorm(
        &["cmin", "--model", "p3-trivial-s2", "--b-range", "0.5,20"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("cmin.csv")).unwrap();
    let b = column(&csv, "b_star");
    assert!(b[0] <= 1.0);
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = lcnorm(
        &["check", "--model", "p3-trivial-s1", "--eps-grid", "0.5,1"],
        dir.path(),
    );
    assert!(
        ok.status.success(),
        "{}",
        String::from_utf8_lossy(&ok.stdout)
    );
    assert!(!String::from_utf8_lossy(&ok.stdout).contains("FAIL"));

    // f is not integrable against |psi|^-1 near the codimension-two centre
    let bad = lcnorm(
        &["check", "--model", "p3-trivial-s2", "--sigma", "1"],
        dir.path(),
    );
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL"));
}

#[test]
fn bad_configuration_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["sweep", "--model", "p3-trivial-s1", "--tol", "0.5"][..],
        &["sweep", "--model", "p3-trivial-s1", "--eps-grid", ","][..],
        &["sweep", "--model", "/no/such/model.toml"][..],
        &["sweep"][..],
    ] {
        let out = lcnorm(args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}
