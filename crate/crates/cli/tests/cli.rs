use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_distortion-lab"));
    c.env_remove("DISTORTION_LAB_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let o = run(args);
    assert!(o.status.success(), "{}", stderr(&o));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn analyze_golden_values() {
    let o = run(&["analyze", "2", "4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("\"H\": 4,"), "{text}");
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(f(&v["distortion"]["H"]), 4.0);
    assert!((f(&v["window"]["t_plus"]) - 1.19219).abs() < 1e-4);
    assert!((f(&v["window"]["t_minus"]) + 2.04584).abs() < 1e-4);
    assert!((f(&v["h_lam"]) - 3.97539).abs() < 1e-4);
    assert!((f(&v["taylor"]["quadratic"]) + 1.0 / 90.0).abs() < 1e-10);
    assert!(f(&v["jump_ratio"]) > 1.0);
}

#[test]
fn analyze_output_schema_is_stable() {
    let v = json(&["analyze", "2", "4"]);
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    for k in [
        "a",
        "b",
        "distortion",
        "optimal_direction",
        "taylor",
        "window",
        "h_lam",
        "jump_ratio",
    ] {
        assert!(keys.contains(&k), "missing {k} in {keys:?}");
    }
    for k in ["t_minus", "t_plus", "h_minus", "h_plus", "p_coeffs", "g1", "j1", "delta"] {
        assert!(v["window"].get(k).is_some(), "missing window.{k}");
    }
    for k in ["u", "v", "b0", "q_min"] {
        assert!(v["optimal_direction"].get(k).is_some(), "missing optimal_direction.{k}");
    }
}

#[test]
fn analyze_is_byte_identical_across_runs() {
    assert_eq!(run(&["analyze", "2", "4"]).stdout, run(&["analyze", "2", "4"]).stdout);
}

#[test]
fn analyze_rejects_swapped_arguments() {
    let o = run(&["analyze", "4", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("requires 1 < a < b"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn analyze_csv_has_header_and_one_row() {
    let o = run(&["analyze", "2", "4", "--format", "csv"]);
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header[..3], ["a", "b", "H"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][2], "4");
}

#[test]
fn floats_use_seventeen_significant_digits() {
    let v = stdout(&run(&["analyze", "2", "4"]));
    assert!(v.contains("\"q_min\": -0.011111111111111112"), "{v}");
}

#[test]
fn sweep_single_point_matches_analyze() {
    let o = run(&["sweep", "csq", "2", "2", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(
        header,
        ["c", "a", "b", "t_minus", "t_plus", "h_minus", "h_plus", "h_lam", "jump_ratio", "gi_bound", "error"]
    );
    assert_eq!(rows.len(), 1);
    let a = json(&["analyze", "2", "4"]);
    let row: Vec<f64> = rows[0][..10].iter().map(|s| s.parse().unwrap()).collect();
    assert_eq!(row[0..3], [2.0, 2.0, 4.0]);
    assert_eq!(row[3], f(&a["window"]["t_minus"]));
    assert_eq!(row[4], f(&a["window"]["t_plus"]));
    assert_eq!(row[5], f(&a["window"]["h_minus"]));
    assert_eq!(row[6], f(&a["window"]["h_plus"]));
    assert_eq!(row[7], f(&a["h_lam"]));
    assert_eq!(row[8], f(&a["jump_ratio"]));
    assert_eq!(rows[0][10], "");
}

#[test]
fn sweep_reaches_sqrt_two() {
    let o = run(&["sweep", "csq", "10", "10000", "20"]);
    let (_, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 20);
    let c_last: f64 = rows[19][0].parse().unwrap();
    assert!((c_last - 1e4).abs() < 1e-9);
    let jump: f64 = rows[19][8].parse().unwrap();
    assert!((jump / 2f64.sqrt() - 1.0).abs() < 0.02, "{jump}");
}

#[test]
fn sweep_reports_failed_rows_and_continues() {
    let o = run(&["sweep", "csq", "0.5", "2", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let (_, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 3);
    for row in &rows[..2] {
        assert!(row[10].contains("requires 1 < a < b"), "{row:?}");
        assert!(row[3..10].iter().all(String::is_empty));
    }
    assert!(rows[2][10].is_empty());
    assert!(!rows[2][7].is_empty());
}

#[test]
fn sweep_json_carries_errors_inline() {
    let v = json(&["sweep", "csq", "0.5", "2", "3", "--format", "json"]);
    let rows = v.as_array().unwrap();
    assert!(rows[0]["error"].is_string());
    assert!(rows[2]["error"].is_null());
    assert!(rows[2]["h_lam"].is_number());
}

#[test]
fn sweep_rejects_unknown_family() {
    let o = run(&["sweep", "cube", "2", "3", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown family"));
}

#[test]
fn thread_limit_does_not_change_output() {
    let args = ["sweep", "cpow:1.5", "2", "50", "16"];
    let default = run(&args).stdout;
    let single = bin().args(args).env("DISTORTION_LAB_THREADS", "1").output().unwrap();
    assert!(single.status.success());
    assert_eq!(single.stdout, default);
}

#[test]
fn invalid_thread_limit_is_a_usage_error() {
    let o = bin()
        .args(["analyze", "2", "4"])
        .env("DISTORTION_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("DISTORTION_LAB_THREADS"));
}

#[test]
fn laminate_respects_deviation_bound_and_two_distortions() {
    let v = json(&["laminate", "2", "4", "100", "1000"]);
    assert!(f(&v["max_deviation"]) <= 0.01);
    let (hm, hp) = (f(&v["h_minus"]), f(&v["h_plus"]));
    let samples = v["samples"].as_array().unwrap();
    assert_eq!(samples.len(), 1000);
    for s in samples {
        let h = f(&s["jacobian_distortion"]);
        assert!((h - hm).abs() <= 1e-9 || (h - hp).abs() <= 1e-9, "{h}");
        assert!(h < 4.0);
    }
}

#[test]
fn laminate_is_reproducible_under_fixed_seed() {
    let a = run(&["laminate", "2", "4", "1", "10", "--seed", "11"]).stdout;
    let b = run(&["laminate", "2", "4", "1", "10", "--seed", "11"]).stdout;
    let c = run(&["laminate", "2", "4", "1", "10", "--seed", "12"]).stdout;
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn laminate_rejects_zero_index() {
    let o = run(&["laminate", "2", "4", "0", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nu >= 1"));
}

#[test]
fn verify_passes_on_coarse_grid() {
    let o = run(&["verify", "--grid-n", "64"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("12 of 12 groups passed"), "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn verify_json_reports_every_group() {
    let v = json(&["verify", "--grid-n", "64", "--format", "json"]);
    let groups = v["groups"].as_array().unwrap();
    assert_eq!(groups.len(), 12);
    for g in groups {
        assert_eq!(g["passed"], Value::Bool(true), "{g}");
        assert!(g["checks"].as_u64().unwrap() > 0);
    }
    let grid = groups.iter().find(|g| g["name"] == "qmin_vs_grid").unwrap();
    assert!(f(&grid["tolerance"]) > 2e-4);
}

#[test]
fn negative_tolerance_is_a_config_error() {
    let o = run(&["verify", "--sym-tol", "-1e-12"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("config error"));
}

#[test]
fn config_file_is_validated() {
    let dir = std::env::temp_dir().join(format!("distortion-lab-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.json");
    std::fs::write(&path, r#"{"fd_tol": -1.0}"#).unwrap();
    let o = run(&["verify", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("fd_tol"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("distortion-lab-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("a.json");
    let o = run(&["analyze", "2", "4", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), run(&["analyze", "2", "4"]).stdout);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn explain_lists_tolerances() {
    let o = run(&["--explain", "--grid-n", "128"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for k in ["sym_tol", "sing_tol", "fd_tol", "grid_n", "qmin_vs_grid", "17 significant digits"] {
        assert!(text.contains(k), "missing {k}");
    }
    assert!(text.contains("0.0032"), "{text}");
}

#[test]
fn probe_finds_nothing_below_window() {
    let v = json(&["probe", "2", "4", "--trials", "1000"]);
    assert_eq!(v["trials"], 1000);
    assert_eq!(v["beats_h_lam"], Value::Bool(false));
}
