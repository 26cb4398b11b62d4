use std::path::Path;
use std::process::{Command, Output};

fn qsync(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsync")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// `(header, rows)` of a CSV table, skipping `#` lines.
fn table(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

fn meta<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once(" = "))
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v)
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn nonmarkov_coherence_stays_near_one_half() {
    let text = stdout(&qsync(&["evolve", "--preset", "nonmarkov", "--samples", "500"]));
    let (header, rows) = table(&text);
    let k = column(&header, "abs_rho10");
    assert_eq!(rows.len(), 501);
    assert!(rows.iter().all(|r| (0.45..=0.5 + 1e-12).contains(&r[k])));
    assert_eq!(meta(&text, "lambda"), Some("0.01"));
    assert_eq!(meta(&text, "omega0"), Some("10"));
    assert!(meta(&text, "version").is_some());
    assert!(meta(&text, "rel_tol").is_some());
}

#[test]
fn qfunc_of_plus_peaks_at_zero_phase() {
    let text = stdout(&qsync(&["qfunc", "--preset", "nonmarkov", "--t-end", "1", "--t-eval", "0"]));
    let (header, rows) = table(&text);
    assert_eq!(header, ["theta", "phi", "q", "time"]);
    assert_eq!(rows.len(), 181 * 360);
    let best = rows.iter().max_by(|a, b| a[2].total_cmp(&b[2])).unwrap();
    assert_eq!(best[1], 0.0);
    assert!((best[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
}

#[test]
fn single_cell_sweep_matches_evolve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e.conf", "preset = markov\nmax_step_scale = 0.2\nsamples = 1\n");
    let evolved = stdout(&qsync(&["evolve", "--config", &cfg, "--t-end", "20", "--delta", "0.5", "--epsilon", "0.7"]));
    let (h, rows) = table(&evolved);
    let expected = rows.last().unwrap()[column(&h, "s_max")];
    let swept = stdout(&qsync(&[
        "sweep", "--preset", "markov", "--t-end", "20", "--grid", "delta:0.5:0.5:1,epsilon:0.7:0.7:1",
    ]));
    let (h, rows) = table(&swept);
    assert_eq!(h, ["axis1", "axis2", "s_max"]);
    assert_eq!(rows, vec![vec![0.5, 0.7, expected]]);
}

#[test]
fn failed_sweep_cells_are_nan_with_a_diagnostic() {
    let out = qsync(&["sweep", "--t-end", "1", "--grid", "delta:0:1:2,epsilon:0:1:2"]);
    let text = stdout(&out);
    let (_, rows) = table(&text.replace("nan", "NaN"));
    assert!(rows[0][2].is_nan());
    assert!(rows[1..].iter().all(|r| r[2].is_finite()));
    assert!(text.lines().any(|l| l.starts_with("# error = ") && l.contains("dressed basis undefined")));
}

#[test]
fn flag_overrides_file_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.conf", "delta = 1\nt_end = 1\n");
    let text = stdout(&qsync(&["evolve", "--config", &cfg, "--delta", "0", "--samples", "2"]));
    assert_eq!(meta(&text, "delta"), Some("0"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.conf", "gamma = -1\n");
    let out = qsync(&["evolve", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));

    let unknown = write(dir.path(), "unknown.conf", "# header\nfrobnicate = 3\n");
    let out = qsync(&["evolve", "--config", &unknown]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let out = qsync(&["evolve", "--t-end", "1", "--out", "/nonexistent/dir/x.csv"]);
    assert_eq!(out.status.code(), Some(4));

    let out = qsync(&["evolve", "--config", "/nonexistent/file.conf"]);
    assert_eq!(out.status.code(), Some(4));

    let out = qsync(&["evolve", "--t-end", "1", "--rel-tol", "1e-30"]);
    assert_eq!(out.status.code(), Some(2));

}

#[test]
fn json_output_carries_metadata() {
    let text = stdout(&qsync(&["evolve", "--t-end", "2", "--samples", "4", "--format", "json"]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["metadata"]["omega0"], serde_json::json!(10.0));
    assert_eq!(v["metadata"]["basis"], serde_json::json!("dressed"));
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
    assert_eq!(v["columns"][5], serde_json::json!("abs_rho10"));
}

#[test]
fn trajectory_output_and_classification() {
    let text = stdout(&qsync(&["trajectory", "--preset", "markov", "--t-end", "60"]));
    let (header, rows) = table(&text);
    assert_eq!(header, ["t", "mx", "my", "mz", "mxp", "myp", "mzp"]);
    for r in &rows {
        assert!((r[3] - r[6]).abs() < 1e-15);
        let (a, b) = (r[1].hypot(r[2]), r[4].hypot(r[5]));
        assert!((a - b).abs() < 1e-12);
    }
    assert!(meta(&text, "verdict").is_some());
    assert!(meta(&text, "lab_period").is_some());
}

#[test]
fn metadata_header_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let first = stdout(&qsync(&["evolve", "--preset", "nonmarkov", "--t-end", "3", "--samples", "3", "--basis", "bare"]));
    let header: String = first
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .take_while(|l| !l.starts_with("omega_laser"))
        .filter(|l| !l.starts_with("version"))
        .map(|l| format!("{l}\n"))
        .collect();
    let cfg = write(dir.path(), "rerun.conf", &header);
    let second = stdout(&qsync(&["evolve", "--config", &cfg]));
    assert_eq!(first, second);
}
