use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn postdenit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_postdenit"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

const SHORT: &str = r#"{
  "control": { "mode": "classical+mfc" },
  "run": { "duration": 0.5, "warmup": 0.25 }
}"#;

#[test]
fn simulate_writes_series_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.json"), SHORT).unwrap();
    let out = postdenit(&["simulate", "s.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let series = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert!(series.starts_with("t_d,Q_m3d,NO3_in,NO2_in,NO2_out,NO3_out,"));
    assert_eq!(series.lines().count(), 1 + 145);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("s.summary.json")).unwrap()).unwrap();
    assert!(summary["summary"]["no2_out"]["mean"].is_number());
    assert!(summary["provenance"]["spec_hash"].is_string());
}

#[test]
fn gen_influent_header() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.json"), SHORT).unwrap();
    let out = postdenit(&["gen-influent", "s.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("t_d,Q_m3d,NO3_gNm3,NO2_gNm3,SS_gCODm3"));
    assert_eq!(text.lines().count(), 1 + 145);
}

#[test]
fn recorded_influent_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.json"), SHORT).unwrap();
    let out = postdenit(&["gen-influent", "s.json", "--out", "inf.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let recorded = r#"{ "influent": { "csv": "inf.csv" }, "run": { "duration": 0.5, "warmup": 0.25 } }"#;
    fs::write(dir.path().join("r.json"), recorded).unwrap();
    let out = postdenit(&["simulate", "r.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn compare_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("b.json"), SHORT).unwrap();
    fs::write(dir.path().join("a.json"), SHORT.replace("classical+mfc", "classical")).unwrap();
    let out = postdenit(&["compare", "a.json", "b.json", "--out", "ab"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("ab.report.json")).unwrap()).unwrap();
    assert!(report["no2_range_ratio"].is_number());
    assert!(dir.path().join("ab.csv").exists());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("missing.json", None),
        ("bad.json", Some("{ not json")),
        ("mode.json", Some(r#"{ "control": { "mode": "pid" } }"#)),
        ("warmup.json", Some(r#"{ "run": { "duration": 1.0, "warmup": 2.0 } }"#)),
        ("dt.json", Some(r#"{ "run": { "dt": 0.0007 } }"#)),
        ("alpha.json", Some(r#"{ "control": { "mfc": { "alpha": 0.0 } } }"#)),
    ];
    for (name, body) in cases {
        if let Some(body) = body {
            fs::write(dir.path().join(name), body).unwrap();
        }
        let out = postdenit(&["simulate", name], dir.path());
        assert_eq!(out.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn mismatched_seeds_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.json"), SHORT).unwrap();
    fs::write(
        dir.path().join("b.json"),
        r#"{ "run": { "duration": 0.5, "warmup": 0.25, "seed": 9 } }"#,
    )
    .unwrap();
    let out = postdenit(&["compare", "a.json", "b.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn blow_up_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // a 5-minute explicit step on this stiff plant diverges
    let body = r#"{ "run": { "duration": 0.5, "warmup": 0.25, "dt": 0.003472222222222222 } }"#;
    fs::write(dir.path().join("s.json"), body).unwrap();
    let out = postdenit(&["simulate", "s.json"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
