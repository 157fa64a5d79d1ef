use std::process::{Command, Output};

fn oligomer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oligomer")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Data rows (non-comment lines after the column row) split on commas.
fn rows(out: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    let text = stdout(out);
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let data = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, data)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

fn note(out: &Output, key: &str) -> serde_json::Value {
    let prefix = format!("# {key}=");
    let line = stdout(out).lines().find(|l| l.starts_with(&prefix)).unwrap().to_string();
    serde_json::from_str(&line[prefix.len()..]).unwrap()
}

#[test]
fn ring_spectrum_has_one_state_per_sector() {
    let out = oligomer(&["spectrum", "--geometry", "ring", "--nd", "6", "--a", "0.1", "--excitations", "1"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("# schema=1\n"));
    let (header, data) = rows(&out);
    assert_eq!(data.len(), 6);
    let mut m: Vec<i32> = data.iter().map(|r| r[column(&header, "m")].parse().unwrap()).collect();
    m.sort();
    assert_eq!(m, vec![-2, -1, 0, 1, 2, 3]);
}

#[test]
fn double_ring_double_spectrum_counts() {
    let args = ["spectrum", "--geometry", "double-ring", "--nd", "6", "--a", "0.16", "--b-over-a", "2.2", "--excitations", "2"];
    let out = oligomer(&args);
    assert!(out.status.success());
    let (header, data) = rows(&out);
    assert_eq!(data.len(), 66);
    assert_eq!(data.iter().filter(|r| r[column(&header, "m")] == "3").count(), 10);
}

#[test]
fn ring_center_has_long_lived_symmetric_sector_state() {
    let out = oligomer(&["spectrum", "--geometry", "ring-center", "--nd", "6", "--a", "0.16", "--excitations", "1", "--m", "0"]);
    let (header, data) = rows(&out);
    let long_lived = data
        .iter()
        .filter(|r| r[column(&header, "lifetime_enhancement")].parse::<f64>().unwrap() >= 200.0)
        .count();
    assert_eq!(long_lived, 1);
}

#[test]
fn sweeps_are_byte_identical() {
    let args = ["sweep", "--geometry", "double-ring", "--a-min", "0.1", "--a-max", "0.2", "--a-steps", "7", "--b-min", "1.8", "--b-max", "2.6", "--b-steps", "5", "--target", "two-mode-model"];
    let first = oligomer(&args);
    let second = oligomer(&args);
    let mut seq_args = args.to_vec();
    seq_args.push("--sequential");
    let sequential = oligomer(&seq_args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    // the effective config does not record the execution mode
    assert_eq!(first.stdout, sequential.stdout);
}

fn sector_lifetimes(out: &Output, tag: Option<&str>) -> Vec<(f64, f64)> {
    let (header, data) = rows(out);
    let (a, life, t) = (column(&header, "a"), column(&header, "lifetime_enhancement"), column(&header, "tag"));
    data.iter()
        .filter(|r| tag.is_none_or(|tag| r[t] == tag))
        .map(|r| (r[a].parse().unwrap(), r[life].parse().unwrap()))
        .collect()
}

#[test]
fn ring_m3_lifetime_is_monotone() {
    let out = oligomer(&["sweep", "--geometry", "ring", "--nd", "6", "--a-min", "0.02", "--a-max", "0.25", "--a-steps", "47", "--m", "3"]);
    assert!(out.status.success());
    let series = sector_lifetimes(&out, None);
    assert_eq!(series.len(), 47);
    assert!(series.windows(2).all(|w| w[1].1 < w[0].1));
}

#[test]
fn ring_center_antisymmetric_lifetime_peaks_once() {
    let out = oligomer(&["sweep", "--geometry", "ring-center", "--nd", "6", "--a-min", "0.05", "--a-max", "0.25", "--a-steps", "101", "--m", "0"]);
    let series = sector_lifetimes(&out, Some("-"));
    assert_eq!(series.len(), 101);
    let peaks: Vec<usize> = (1..series.len() - 1)
        .filter(|&i| series[i].1 > series[i - 1].1 && series[i].1 > series[i + 1].1)
        .collect();
    assert_eq!(peaks.len(), 1);
    assert!((series[peaks[0]].0 - 0.16).abs() <= 0.01);
}

#[test]
fn partial_and_total_sweep_failures() {
    // b/a ≤ 1 cannot be built; those points are flagged
    let partial = oligomer(&["sweep", "--geometry", "double-ring", "--a-min", "0.1", "--a-max", "0.2", "--a-steps", "2", "--b-min", "0.5", "--b-max", "2.0", "--b-steps", "4", "--target", "two-mode-model"]);
    assert_eq!(partial.status.code(), Some(4));
    let (header, data) = rows(&partial);
    let errors = data.iter().filter(|r| !r[column(&header, "error")].is_empty()).count();
    assert_eq!(errors, 4);
    let total = oligomer(&["sweep", "--geometry", "double-ring", "--a-min", "0.1", "--a-max", "0.2", "--a-steps", "2", "--b-min", "0.5", "--b-max", "0.9", "--b-steps", "2", "--target", "two-mode-model"]);
    assert_eq!(total.status.code(), Some(3));
}

#[test]
fn optimize_on_a_single_point() {
    let out = oligomer(&["optimize", "--a-min", "0.16", "--a-max", "0.16", "--a-steps", "1", "--b-min", "2.2", "--b-max", "2.2", "--b-steps", "1"]);
    assert!(out.status.success());
    assert_eq!(note(&out, "best_point"), serde_json::json!([0.16, 2.2]));
    assert!(note(&out, "best_lifetime_enhancement").as_f64().unwrap() >= 100.0);
}

#[test]
fn count_row_for_single_hexagon() {
    let out = oligomer(&["count", "--nd", "6", "--nr", "1", "--self-test"]);
    assert!(out.status.success());
    assert_eq!(note(&out, "row"), serde_json::json!({ "even": 3, "odd": 2 }));
}

#[test]
fn g2_self_test_checks_periodicity() {
    let out = oligomer(&["g2", "--geometry", "double-ring", "--a", "0.16", "--b-over-a", "2.2", "--config", "coincident", "--self-test", "--theta-nodes", "30", "--phi-nodes", "48"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("self-test azimuthal periodicity: PASS"));
}

#[test]
fn single_emitter_pattern_is_sin_squared() {
    let out = oligomer(&["pattern", "--geometry", "single", "--theta-nodes", "17", "--phi-nodes", "4", "--self-test"]);
    assert!(out.status.success());
    let (header, data) = rows(&out);
    let (t, v) = (column(&header, "theta"), column(&header, "normalized"));
    for r in &data {
        let theta: f64 = r[t].parse().unwrap();
        let value: f64 = r[v].parse().unwrap();
        assert!((value - theta.sin().powi(2)).abs() < 1e-12);
    }
    assert!((note(&out, "power_ratio").as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["spectrum", "--geometry", "hexagon", "--a", "0.1"],
        vec!["spectrum", "--geometry", "ring"],
        vec!["spectrum", "--geometry", "ring", "--a", "0.1", "--excitations", "3"],
        vec!["spectrum", "--geometry", "ring", "--a", "-0.1"],
        vec!["sweep", "--geometry", "ring", "--a-min", "0.2", "--a-max", "0.1", "--a-steps", "3"],
        vec!["optimize", "--nd", "5"],
    ] {
        assert_eq!(oligomer(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, r#"{"geometry": "ring", "nd": 5, "a": 0.1, "excitations": 1}"#).unwrap();
    let out = oligomer(&["spectrum", "--config", path.to_str().unwrap(), "--a", "0.2", "--out", "json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["config"]["geometry"]["a"], 0.2);
    assert_eq!(doc["config"]["geometry"]["n_d"], 5);
    assert_eq!(doc["data"].as_array().unwrap().len(), 5);

    std::fs::write(&path, r#"{"geometry": "ring", "spacing": 0.1}"#).unwrap();
    assert_eq!(oligomer(&["spectrum", "--config", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scs.csv");
    let args = ["scs", "--geometry", "ring-center", "--a", "0.16", "--detuning-steps", "21", "--theta-nodes", "16", "--phi-nodes", "16"];
    let direct = oligomer(&args);
    let mut to_file = args.to_vec();
    to_file.extend(["--output", path.to_str().unwrap()]);
    assert!(oligomer(&to_file).status.success());
    assert_eq!(std::fs::read(&path).unwrap(), direct.stdout);
}
