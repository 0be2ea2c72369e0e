//! Black-box tests of the installed binary: exit codes, diagnostics, and
//! the shape of what lands on stdout and in the output directory.

use std::collections::HashSet;
use std::process::Command;

use halflight_core::report::{ReportRow, VerificationReport};

fn halflight() -> Command {
    Command::new(env!("CARGO_BIN_EXE_halflight"))
}

fn bundled(name: &str) -> String {
    format!("{}/configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn malformed_expression_reports_the_byte_offset() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("broken.json");
    let body = serde_json::json!({
        "ambient": { "dim": 5, "signature": [-1, 1, 1, 1, 1] },
        "params": ["p1", "p2", "p3"],
        "immersion": ["p1", "sin(", "p1", "p2", "p3"],
        "domain": [
            { "lo": -1.0, "hi": 1.0 },
            { "lo": -1.0, "hi": 1.0 },
            { "lo": -1.0, "hi": 1.0 }
        ]
    });
    std::fs::write(&config, serde_json::to_vec_pretty(&body).unwrap()).unwrap();
    let out = halflight()
        .args(["verify", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("byte"),
        "diagnostic must locate the parse failure by byte offset: {stderr}"
    );
    assert!(
        stderr.contains("/immersion/1"),
        "diagnostic must name the offending component: {stderr}"
    );
}

#[test]
fn missing_config_file_is_an_environment_error() {
    let out = halflight()
        .args(["verify", "--config", "/nonexistent/nowhere.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("nowhere.json"), "stderr: {stderr}");
}

#[test]
fn zero_tolerance_scale_is_rejected() {
    let out = halflight()
        .args([
            "verify",
            "--config",
            &bundled("geodesic_fixture.json"),
            "--tol-scale",
            "0",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn geodesic_fixture_passes_with_every_residual_exactly_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = halflight()
        .args(["verify", "--config", &bundled("geodesic_fixture.json"), "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("overall PASS"), "stdout: {stdout}");
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let report = VerificationReport::from_csv(&csv).unwrap();
    assert!(!report.rows.is_empty());
    for row in &report.rows {
        assert_eq!(
            row.residual, 0.0,
            "{} at {:?} must vanish exactly on the geodesic fixture",
            row.check_id, row.point
        );
    }
}

#[test]
fn bundled_cylinder_config_passes_a_broad_check_set() {
    let dir = tempfile::tempdir().unwrap();
    let out = halflight()
        .args(["verify", "--config", &bundled("example1.json"), "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let report = VerificationReport::from_json(&json).unwrap();
    let ids: HashSet<&str> = report.rows.iter().map(|r| r.check_id.as_str()).collect();
    assert!(
        ids.len() >= 8,
        "expected a broad spread of checks, saw {:?}",
        ids
    );
    assert!(report.summary.overall_pass);
}

#[test]
fn recurrence_prints_exact_and_decimal_columns() {
    let out = halflight()
        .args(["recurrence", "--n", "6", "--c", "1/2", "--V", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 8, "header plus one line per order: {stdout}");
    assert_eq!(lines[0], "r,exact,decimal");
    assert!(lines[1].starts_with("0,2,"), "I_0 is the volume seed: {}", lines[1]);
    assert!(lines[2].starts_with("1,0,"), "odd entries vanish: {}", lines[2]);
    assert!(lines[3].starts_with("2,3,"), "I_2 = c l V: {}", lines[3]);
    assert!(lines[7].starts_with("6,1/4,"), "top entry: {}", lines[7]);
}

#[test]
fn rejecting_an_odd_leaf_dimension() {
    let out = halflight()
        .args(["recurrence", "--n", "5", "--c", "1", "--V", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

fn write_report(path: &std::path::Path, check_id: &str, residual: f64) {
    let report = VerificationReport::new(vec![ReportRow::new(
        check_id,
        "crafted fixture row",
        &[0.5, 0.5],
        residual,
        1e-6,
    )])
    .unwrap();
    std::fs::write(path, report.to_json()).unwrap();
}

#[test]
fn merging_disjoint_reports_prints_the_combined_table() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    write_report(&a, "alpha/check", 0.0);
    write_report(&b, "beta/check", 1e-9);
    let out = halflight()
        .args(["report"])
        .arg(&a)
        .arg(&b)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("alpha/check") && stdout.contains("beta/check"));
    let merged = std::fs::read_to_string(dir.path().join("merged.csv")).unwrap();
    assert_eq!(merged, stdout, "written table must match the printed one");
    assert!(dir.path().join("merged.json").exists());
}

#[test]
fn merging_a_report_with_itself_is_a_duplicate_error() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    write_report(&a, "alpha/check", 0.0);
    let out = halflight().args(["report"]).arg(&a).arg(&a).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("duplicate"),
        "the clash must be named: {stderr}"
    );
}

#[test]
fn failing_checks_exit_one_and_name_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    write_report(&a, "alpha/check", 0.5);
    let out = halflight().args(["report"]).arg(&a).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("alpha/check"));
}

#[test]
fn analyze_writes_frame_data_for_each_sample_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = halflight()
        .args(["analyze", "--config", &bundled("cone.json"), "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("analysis.json")).unwrap();
    let entries: serde_json::Value = serde_json::from_str(&text).unwrap();
    let list = entries.as_array().expect("analysis is a list of points");
    assert!(!list.is_empty());
    for entry in list {
        assert!(entry.get("radical").is_some());
        assert!(entry.get("screen_transversal").is_some());
        let worst = entry["frame_gram_worst"].as_f64().unwrap();
        assert!(worst <= 1e-10, "frame relations must close: {worst:.3e}");
    }
}
