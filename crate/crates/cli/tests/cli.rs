use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn pnpstab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pnpstab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// W = E/2, B = I: ρ_P = |1 − t| and ρ_R = max(1, t)/(1 + t).
fn averaging_pair(dir: &Path) -> (String, String) {
    let w = write(dir, "w.txt", "# averaging\n2 2\n0.5 0.5\n0.5 0.5\n");
    let b = write(dir, "b.txt", "2 2\n1 0\n0 1\n");
    (w.display().to_string(), b.display().to_string())
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&pnpstab(&["profile", "--bogus"])), 2);
    assert_eq!(code(&pnpstab(&["nonsense"])), 2);
    assert_eq!(code(&pnpstab(&[])), 2);
    assert_eq!(code(&pnpstab(&["--help"])), 0);
}

#[test]
fn missing_or_invalid_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.csv");
    let out = out.to_str().unwrap();
    let r = pnpstab(&[
        "profile",
        "--w",
        "/nonexistent",
        "--b",
        "/nonexistent",
        "--tmin",
        "0",
        "--tmax",
        "1",
        "--steps",
        "5",
        "--out",
        out,
    ]);
    assert_eq!(code(&r), 2);

    let w = write(dir.path(), "w.txt", "2 2\n0.5 0.6\n0.5 0.5\n");
    let b = write(dir.path(), "b.txt", "2 2\n1 0\n0 1\n");
    let r = pnpstab(&[
        "profile",
        "--w",
        w.to_str().unwrap(),
        "--b",
        b.to_str().unwrap(),
        "--tmin",
        "0",
        "--tmax",
        "1",
        "--steps",
        "5",
        "--out",
        out,
    ]);
    assert_eq!(code(&r), 2);
    assert!(String::from_utf8_lossy(&r.stderr).contains("stochastic"));
}

#[test]
fn profile_csv_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let (w, b) = averaging_pair(dir.path());
    let out = dir.path().join("sub/profile.csv");
    let r = pnpstab(&[
        "profile",
        "--w",
        &w,
        "--b",
        &b,
        "--tmin",
        "0",
        "--tmax",
        "3",
        "--steps",
        "31",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,rho_P,rho_R"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 31);
    for row in rows {
        let t = row[0];
        assert!((row[1] - (1.0 - t).abs()).abs() < 1e-10, "t = {t}");
        assert!((row[2] - t.max(1.0) / (1.0 + t)).abs() < 1e-10, "t = {t}");
    }
}

#[test]
fn threshold_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let (w, b) = averaging_pair(dir.path());
    let out = dir.path().join("t.json");
    let r = pnpstab(&[
        "threshold",
        "--w",
        &w,
        "--b",
        &b,
        "--which",
        "p",
        "--scan-max",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0);
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["classification"], "stable_then_unstable");
    assert!((v["T_star"].as_f64().unwrap() - 2.0).abs() < 1e-5);

    // B = −I: ρ_P = 1 + t immediately.
    let neg = write(dir.path(), "neg.txt", "2 2\n-1 0\n0 -1\n");
    let r = pnpstab(&[
        "threshold",
        "--w",
        &w,
        "--b",
        neg.to_str().unwrap(),
        "--which",
        "P",
        "--scan-max",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0);
    let v: Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(v["classification"], "unstable_from_start");
    assert!(v["T_star"].is_null());
}

#[test]
fn check_writes_trials_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("check.jsonl");
    let r = pnpstab(&[
        "check",
        "--suite",
        "alpha_beta",
        "--trials",
        "6",
        "--n",
        "4",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0);
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 7);
    let summary = &lines[6]["summary"];
    assert_eq!(summary["trials"], 6);
    assert_eq!(summary["violations"], 0);
    assert_eq!(summary["pass"], true);
}

#[test]
fn fuzz_output_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let r = pnpstab(&[
            "fuzz",
            "--trials",
            "12",
            "--generator",
            "general_psd",
            "--seed",
            "11",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&r), 0);
        fs::read_to_string(out).unwrap()
    };
    let a = run("a.jsonl");
    assert_eq!(a, run("b.jsonl"));
    assert_eq!(a.lines().count(), 13);
}

#[test]
fn pnp_run_converges() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let r = pnpstab(&[
        "pnp",
        "--kind",
        "deblur",
        "--n",
        "8",
        "--t",
        "1",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0);
    let v: Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(v["converged"], true);
    assert!(v["rho_P"].as_f64().unwrap() < 1.0);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("k,error_norm,loss\n"));
}

#[test]
fn repro_single_example() {
    let dir = tempfile::tempdir().unwrap();
    let r = pnpstab(&[
        "repro",
        "--example",
        "remark_1_3_P",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 0);
    assert!(String::from_utf8_lossy(&r.stdout).starts_with("PASS remark_1_3_P"));
    let report: Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("remark_1_3_P_report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["overall_pass"], true);

    let r = pnpstab(&[
        "repro",
        "--example",
        "no_such",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&r), 2);
}
