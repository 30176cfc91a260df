use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ifm-lab"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env_remove("IFM_LAB_OUT")
        .output()
        .expect("spawn ifm-lab")
}

fn ok(args: &[&str], out: &Path) -> Output {
    let o = lab(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path).unwrap().records().map(Result::unwrap).collect()
}

fn header(path: &Path) -> Vec<String> {
    csv::Reader::from_path(path).unwrap().headers().unwrap().iter().map(String::from).collect()
}

#[test]
fn ev_sweep_writes_csv_plot_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["ev-sweep", "--r", "0.2,0.5,0.8", "--shots", "50000", "-m", "4"], dir.path());
    let csv = dir.path().join("ev_sweep.csv");
    assert_eq!(
        header(&csv),
        ["scheme", "r", "eta_hat", "std_error", "shots", "m", "seed", "flagged", "eta_theory", "eta_band_low", "eta_band_high"]
    );
    let rows = rows(&csv);
    assert_eq!(rows.len(), 3);
    for row in &rows {
        let r: f64 = row[1].parse().unwrap();
        let eta: f64 = row[2].parse().unwrap();
        let se: f64 = row[3].parse().unwrap();
        assert!((eta - r / (r + 1.0)).abs() < 5.0 * se);
    }
    assert!(dir.path().join("ev_sweep.svg").exists());
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("ev-sweep.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "ev-sweep");
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["config"]["shots"], 50000);
    assert_eq!(manifest["outputs"], serde_json::json!(["ev_sweep.csv", "ev_sweep.svg"]));
}

#[test]
fn replay_reproduces_csv_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    ok(&["multi-object", "--n-max", "3", "--shots", "20000", "-m", "3", "--mesh-sigma", "0.01"], &first);
    let manifest = first.join("multi-object.manifest.json");
    ok(&["replay", manifest.to_str().unwrap()], &second);
    assert_eq!(
        fs::read(first.join("multi_object.csv")).unwrap(),
        fs::read(second.join("multi_object.csv")).unwrap()
    );
}

#[test]
fn config_file_replaces_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("zeno.json");
    fs::write(&cfg, r#"{"n_min": 2, "n_max": 5}"#).unwrap();
    ok(&["zeno", "--n-max", "100", "--config", cfg.to_str().unwrap()], dir.path());
    let rows = rows(&dir.path().join("zeno.csv"));
    let ns: Vec<&str> = rows.iter().map(|r| &r[0]).collect();
    assert_eq!(ns, ["2", "3", "4", "5"]);
    let eta2: f64 = rows[0][2].parse().unwrap();
    assert!((eta2 - 0.25).abs() < 1e-12);
}

#[test]
fn bad_config_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"trials": 10, "unknown": true}"#).unwrap();
    let o = lab(&["noise-robustness", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));

    assert_eq!(lab(&["ev-sweep", "--r", "1.5"], dir.path()).status.code(), Some(2));
    assert_eq!(lab(&["multi-object", "--max-objects", "9"], dir.path()).status.code(), Some(2));
    assert_eq!(lab(&["tree", "-k", "5"], dir.path()).status.code(), Some(2));
    assert_eq!(lab(&["baseline", "--schemes", "loop-3"], dir.path()).status.code(), Some(2));
}

#[test]
fn unreachable_prefix_tolerance_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&["optimal-r", "--n-max", "3", "--prefix-tolerance", "1e-9"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(dir.path().join("optimal-r.manifest.json").exists());
}

#[test]
fn tree_reports_layout() {
    let dir = tempfile::tempdir().unwrap();
    let o = ok(&["tree", "-k", "4"], dir.path());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["signal_modes"], 16);
    assert_eq!(v["total_modes"], 31);
    assert_eq!(v["depth"], 8);
    assert_eq!(v["nodes"].as_array().unwrap().len(), 15);
    assert_eq!(v["chain_multiset"], serde_json::json!({"1": 3, "2": 2, "3": 1, "4": 1}));
    assert_eq!(v["partition_multiset"], serde_json::json!({"1": 4, "2": 2, "3": 1, "4": 1}));
    let file: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("tree.json")).unwrap()).unwrap();
    assert_eq!(file, v);
}

#[test]
fn robustness_and_optimizer_tables() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["noise-robustness", "--modes", "2,4", "--targets", "0.9", "--trials", "3000", "--bins", "20"], dir.path());
    let hist = rows(&dir.path().join("robustness_histogram.csv"));
    assert_eq!(hist.len(), 2 * 20);
    let total: u64 = hist.iter().filter(|r| &r[0] == "2").map(|r| r[6].parse::<u64>().unwrap()).sum();
    assert_eq!(total, 3000);
    assert_eq!(rows(&dir.path().join("robustness_std.csv")).len(), 2);

    ok(&["optimal-r", "--n-max", "3"], dir.path());
    let opt = rows(&dir.path().join("optimal_r.csv"));
    assert_eq!(opt.len(), 1 + 2 + 3);
    assert_eq!(&opt[0][3], "true");
    assert!(dir.path().join("prefix_property.csv").exists());
}

#[test]
fn baseline_exact_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["baseline", "--schemes", "ev,cascade-2", "--mesh-sigma", "0", "--shots", "0"], dir.path());
    let rows = rows(&dir.path().join("baseline.csv"));
    assert_eq!(rows.len(), 2);
    let p_ifm: f64 = rows[0][2].parse().unwrap();
    let p_absent: f64 = rows[0][3].parse().unwrap();
    assert!((p_ifm - 0.25).abs() < 1e-12);
    assert!(p_absent < 1e-12);
}
