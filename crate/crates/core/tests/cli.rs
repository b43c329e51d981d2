use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn freesurf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freesurf")).args(args).output().expect("binary runs")
}

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .display()
        .to_string()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn missing_scenario_exits_one() {
    let o = freesurf(&["run", "/nonexistent/scenario.json"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/scenario.json"));
}

#[test]
fn unknown_scenario_key_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario("zero.json")).unwrap().replace("\"snapshot_every\"", "\"snapshot_evry\": 1, \"snapshot_every\"");
    let path = tmp.path().join("bad.json");
    fs::write(&path, text).unwrap();
    let o = freesurf(&["run", p(&path), "--output", p(&tmp.path().join("out"))]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("snapshot_evry"));
}

#[test]
fn oracle_list_prints_inventory() {
    let o = freesurf(&["oracle", "--list"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8_lossy(&o.stdout);
    assert_eq!(out.lines().count(), 8);
    assert!(out.starts_with("dtn_l1"));
}

#[test]
fn zero_run_report_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("zero");
    let o = freesurf(&["run", &scenario("zero.json"), "--output", p(&dir)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read(dir.join("diagnostics.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&csv).lines().count(), 12);
    assert!(dir.join("mesh_0.off").exists() && dir.join("mesh_10.off").exists());
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["termination"], "completed");
    assert_eq!(summary["breakdown_integral"], 0.0);

    let again = freesurf(&["run", &scenario("zero.json"), "--output", p(&dir)]);
    assert_eq!(code(&again), 1);
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));

    let r = freesurf(&["report", p(&dir)]);
    assert_eq!(code(&r), 0);
    assert!(String::from_utf8_lossy(&r.stdout).contains("monitor fired: none"));
    let series = fs::read_to_string(dir.join("series.csv")).unwrap();
    assert_eq!(series.lines().count(), 1 + 19 * 11);
    assert_eq!(fs::read(dir.join("diagnostics.csv")).unwrap(), csv);

    let lines: Vec<String> = String::from_utf8_lossy(&csv).lines().map(String::from).collect();
    let mut corrupt = lines.clone();
    corrupt[4] = corrupt[4].replacen(',', ",x", 1);
    fs::write(dir.join("diagnostics.csv"), corrupt.join("\n")).unwrap();
    let bad = freesurf(&["report", p(&dir)]);
    assert_eq!(code(&bad), 1);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 5"), "{}", String::from_utf8_lossy(&bad.stderr));
}

#[test]
fn forced_rotation_run_reports_taylor_event() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("rot");
    fs::create_dir_all(&dir).unwrap();
    let o = freesurf(&["run", &scenario("rotation.json"), "--output", p(&dir), "--force"]);
    assert_eq!(code(&o), 2);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["termination"], "taylor_sign");
    let r = freesurf(&["report", p(&dir)]);
    assert_eq!(code(&r), 0);
    let text = String::from_utf8_lossy(&r.stdout).to_string();
    assert!(text.contains("monitor fired: taylor_sign"), "{text}");
    let margin: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("taylor margin: "))
        .and_then(|l| l.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((margin + 2.0 / 3.0).abs() < 0.05 * 2.0 / 3.0, "{margin}");
}

#[test]
fn report_on_missing_directory_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = freesurf(&["report", p(&tmp.path().join("absent"))]);
    assert_eq!(code(&o), 1);
}

#[test]
fn unknown_corpus_is_rejected() {
    let o = freesurf(&["verify", "--corpus", "torus"]);
    assert_ne!(code(&o), 0);
}
