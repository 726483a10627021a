use std::fs;
use std::path::Path;
use std::process::Command;

use acgap::cli::{read_series_csv, InstanceFile};
use serde_json::Value;

fn acgap(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_acgap")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn error_kind(stderr: &str) -> String {
    let v: Value = serde_json::from_str(stderr.trim()).unwrap();
    v["error"]["kind"].as_str().unwrap().to_string()
}

#[test]
fn help_and_version_exit_cleanly() {
    let (code, out, _) = acgap(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("scan") && out.contains("verify") && out.contains("fixtures"));
    let (code, out, _) = acgap(&["--version"]);
    assert_eq!(code, 0);
    assert!(out.contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn fixtures_print_both_toys_by_default() {
    let (code, out, _) = acgap(&["fixtures"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["toy1"]["n"], 6);
    assert_eq!(v["toy2"]["k"], 3);
    assert_eq!(v["toy1"]["alpha"], 0.5);
    assert_eq!(v["toy1"]["mixer"], "swap_chain");
}

#[test]
fn instance_file_drives_scan() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = acgap(&["fixtures", "toy1", "--alpha", "0.2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let path = dir.path().join("toy1.json");
    let doc: InstanceFile = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc.alpha, 0.2);

    let out = dir.path().join("scan");
    let (code, stdout, stderr) =
        acgap(&["scan", "--instance", path.to_str().unwrap(), "--grid", "101", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    let summary: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(summary[0]["alpha"], 0.2);
    let alpha_dir = out.join("alpha_0.2");
    for name in ["energies.csv", "gap.csv", "overlaps_a.csv", "overlaps_b.csv", "overlaps_g.csv", "report.json"] {
        assert!(alpha_dir.join(name).is_file(), "{name}");
    }
    let (header, rows) = read_series_csv(&alpha_dir.join("energies.csv")).unwrap();
    assert_eq!(header, ["s", "E_0", "E_1", "E_2", "E_3", "E_4", "E_5"]);
    assert_eq!(rows.len(), 101);
    let (header, gaps) = read_series_csv(&alpha_dir.join("gap.csv")).unwrap();
    assert_eq!(header, ["s", "delta"]);
    for (e, g) in rows.iter().zip(&gaps) {
        assert_eq!(e[0], g[0]);
        assert!((e[2] - e[1] - g[1]).abs() < 1e-12);
    }
    let text = fs::read_to_string(alpha_dir.join("gap.csv")).unwrap();
    assert!(!text.contains('\r'));
    let report: Value = serde_json::from_str(&fs::read_to_string(alpha_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["version"], env!("CARGO_PKG_VERSION"));
    assert!(report["report"]["s_star"].as_f64().unwrap() > 0.7);
}

#[test]
fn degenerate_ground_level_degrades_to_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, stderr) = acgap(&["scan", "--fixture", "toy1", "--alpha", "2/3", "--grid", "101", "--out", out]);
    assert_eq!(code, 0, "{stderr}");
    let alpha_dir = Path::new(out).join(format!("alpha_{}", 2.0f64 / 3.0));
    assert!(!alpha_dir.join("overlaps_g.csv").exists());
    assert!(alpha_dir.join("overlaps_a.csv").exists());
    let report: Value = serde_json::from_str(&fs::read_to_string(alpha_dir.join("report.json")).unwrap()).unwrap();
    assert!(report["report"].is_null());
    assert!(!report["warnings"].as_array().unwrap().is_empty());

    let (code, stdout, _) = acgap(&["verify", "--fixture", "toy1", "--alpha", "2/3"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert!(v["counts"]["skipped"].as_u64().unwrap() > 0);
    assert_eq!(v["counts"]["fail"], 0);
}

#[test]
fn verify_passes_on_toy_fixtures() {
    for fixture in ["toy1", "toy2"] {
        let (code, stdout, stderr) = acgap(&["verify", "--fixture", fixture, "--alpha", "0,0.5"]);
        assert_eq!(code, 0, "{fixture}: {stdout}{stderr}");
        let v: Value = serde_json::from_str(&stdout).unwrap();
        assert_eq!(v["passed"], true);
        assert!(v["counts"]["pass"].as_u64().unwrap() >= 16);
    }
}

#[test]
fn verify_checks_can_be_selected() {
    let (code, stdout, _) = acgap(&["verify", "--fixture", "random", "--seed", "3", "--checks", "oracle,gap-ratio"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    let checks: Vec<&str> = v["results"].as_array().unwrap().iter().map(|r| r["check"].as_str().unwrap()).collect();
    assert_eq!(checks, ["oracle", "gap_ratio"]);
}

#[test]
fn errors_are_reported_as_json() {
    let (code, _, stderr) = acgap(&["scan"]);
    assert_eq!((code, error_kind(&stderr).as_str()), (2, "usage"));
    let (code, _, stderr) = acgap(&["verify", "--instance", "/nonexistent/instance.json"]);
    assert_eq!((code, error_kind(&stderr).as_str()), (2, "io"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"n": 4, "k": 2, "alpha": 0.5, "weights": [1, 1, 1], "edges": [[1, 2]]}"#).unwrap();
    let (code, _, stderr) = acgap(&["verify", "--instance", bad.to_str().unwrap()]);
    assert_eq!((code, error_kind(&stderr).as_str()), (2, "invalid_instance"));
    fs::write(&bad, r#"{"n": 4, "k": 2, "alpha": 0.5, "weights": [1, 1, 1, 1], "edges": [[1, 5]]}"#).unwrap();
    let (code, _, stderr) = acgap(&["verify", "--instance", bad.to_str().unwrap()]);
    assert_eq!((code, error_kind(&stderr).as_str()), (2, "invalid_instance"));
    let (code, _, _) = acgap(&["scan", "--fixture", "toy1", "--alpha", "-1"]);
    assert_eq!(code, 2);
}

#[test]
fn scans_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let (code, _, _) = acgap(&[
            "scan",
            "--fixture",
            "random",
            "--seed",
            "5",
            "--alpha",
            "0,0.5",
            "--grid",
            "101",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    for alpha in ["alpha_0", "alpha_0.5"] {
        for name in ["energies.csv", "gap.csv", "overlaps_a.csv", "overlaps_b.csv", "overlaps_g.csv"] {
            let x = fs::read(a.path().join(alpha).join(name)).unwrap();
            let y = fs::read(b.path().join(alpha).join(name)).unwrap();
            assert!(x == y, "{alpha}/{name}");
        }
        let report = |dir: &Path| {
            let mut v: Value =
                serde_json::from_str(&fs::read_to_string(dir.join(alpha).join("report.json")).unwrap()).unwrap();
            v["config"]["out"] = Value::Null;
            v
        };
        assert_eq!(report(a.path()), report(b.path()));
    }
}
