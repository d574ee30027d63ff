//! End-to-end runs of the `backflow` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/li7.cfg")
}

fn backflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_backflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(sub: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = scenario();
    let mut args = vec![
        sub,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    backflow(&args)
}

#[test]
fn simulate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run_in("simulate", d.path(), &[]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["profile.csv", "report.txt", "flux.svg", "density.svg"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
    let csv = std::fs::read_to_string(a.path().join("profile.csv")).unwrap();
    assert!(csv.starts_with("x_m,rho_per_m,J_per_s,rho_crit_per_m,eta,regime\n"));
    let report = std::fs::read_to_string(a.path().join("report.txt")).unwrap();
    assert!(report.contains("min rho / rho_max = 0.0768"), "{report}");
}

#[test]
fn unsplit_packet_reports_no_backflow() {
    let d = tempfile::tempdir().unwrap();
    let o = run_in("simulate", d.path(), &["--set", "a2=0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(d.path().join("report.txt")).unwrap();
    assert!(report.contains("no backflow windows"), "{report}");
    assert!(
        report.contains("classical negative flow (packet velocity < 0)"),
        "{report}"
    );
}

#[test]
fn design_sweep_contains_scenario_alpha() {
    let d = tempfile::tempdir().unwrap();
    let o = run_in("design", d.path(), &["--alpha-steps", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.path().join("design_sweep.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(4).map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 6);
    let at3 = rows
        .iter()
        .find(|r| (r[0] - 3.0).abs() < 1e-12)
        .expect("alpha = 3 row");
    assert!((at3[1] - 0.4927).abs() < 1e-3, "{at3:?}");
    // weak lattices need more amplitude
    assert!(rows.windows(2).all(|w| w[1][1] < w[0][1]));
}

#[test]
fn imaging_sweep_crosses_threshold() {
    let d = tempfile::tempdir().unwrap();
    let o = run_in("imaging", d.path(), &["--sigma-steps", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.path().join("detectability.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    let col = lines[0]
        .split(',')
        .position(|h| h == "detectable")
        .expect("detectable column");
    let flag = |l: &str| l.split(',').nth(col).unwrap().to_string();
    assert_eq!(flag(lines[1]), "true");
    assert_eq!(flag(lines[3]), "false");
    let report = std::fs::read_to_string(d.path().join("imaging_report.txt")).unwrap();
    assert!(
        report.contains("critical resolution (closed form) = 3.6"),
        "{report}"
    );
}

#[test]
fn quick_oracle_run_writes_snapshots_and_checkpoint() {
    let d = tempfile::tempdir().unwrap();
    let o = run_in(
        "oracle-run",
        d.path(),
        &["--quick", "--times", "0.001,0.002"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "snapshot_release.csv",
        "snapshot_pre_pulse.csv",
        "snapshot_post_pulse.csv",
        "snapshot_00.csv",
        "snapshot_01.csv",
        "checkpoint.bin",
        "oracle_report.txt",
    ] {
        assert!(d.path().join(f).is_file(), "missing {f}");
    }
}

#[test]
fn quick_validate_passes() {
    let o = backflow(&["validate", "--quick"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{text}");
    assert!(text.contains("all 8 checks passed"), "{text}");
}

#[test]
fn oversized_step_fails_validation() {
    let o = backflow(&["validate", "--quick", "--dt-scale", "100"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn bad_inputs_exit_with_two() {
    let d = tempfile::tempdir().unwrap();
    let missing = backflow(&[
        "simulate",
        "--config",
        "/nonexistent.cfg",
        "--out",
        d.path().to_str().unwrap(),
    ]);
    assert_eq!(missing.status.code(), Some(2));

    let bad = run_in("simulate", d.path(), &["--set", "alpha=-1"]);
    assert_eq!(
        bad.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&bad.stderr)
    );

    let unknown = run_in("simulate", d.path(), &["--set", "colour=blue"]);
    assert_eq!(unknown.status.code(), Some(2));

    assert_eq!(backflow(&["no-such-command"]).status.code(), Some(2));
}
