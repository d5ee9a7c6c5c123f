use std::io::Write;
use std::process::{Command, Output, Stdio};

fn typeb(args: &[&str]) -> Output {
    typeb_with_input(args, "")
}

fn typeb_with_input(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_typeb"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(input.as_bytes())
        .unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid json")
}

#[test]
fn enumerate_small_sizes() {
    let one = typeb(&["enumerate", "--n", "1"]);
    assert!(one.status.success());
    assert_eq!(stdout(&one), "S\nW;1\n");
    assert!(String::from_utf8_lossy(&one.stderr).contains("2 tableaux"));

    assert_eq!(stdout(&typeb(&["enumerate", "--n", "2"])).lines().count(), 8);
    assert_eq!(stdout(&typeb(&["enumerate", "--n", "0"])), "\n");
}

#[test]
fn enumerate_respects_the_cap() {
    assert_eq!(typeb(&["enumerate", "--n", "9"]).status.code(), Some(3));
    assert_eq!(
        typeb(&["enumerate", "--n", "3", "--max-size", "2"]).status.code(),
        Some(3)
    );
}

#[test]
fn enumerate_to_file_then_stats() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b2.txt");
    let path = path.to_str().unwrap();
    assert!(typeb(&["enumerate", "--n", "2", "--out", path]).status.success());

    let o = typeb(&["stats", path, "--format", "json"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["count"], 8);
    let rows = v["means"]
        .as_array()
        .unwrap()
        .iter()
        .find(|m| m["statistic"] == "rows")
        .unwrap();
    assert_eq!(rows["mean"], "3/4");
}

#[test]
fn stats_csv_has_footer_and_six_step_values() {
    let o = typeb_with_input(&["stats"], "WSSWWS;1;0010;110\n");
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("line,tableau,n,rows"));
    let record = lines.next().unwrap();
    assert_eq!(record, "1,WSSWWS;1;0010;110,6,3,3,3,2,1,1,1,2,1 - - 3 1 -");
    assert!(text.contains("# mean unrestricted = 3/1"));
}

#[test]
fn stats_empty_input_is_header_only() {
    let o = typeb_with_input(&["stats"], "");
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1);
}

#[test]
fn stats_reports_line_of_parse_error() {
    let o = typeb_with_input(&["stats"], "S\nWX\n");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn verify_tables() {
    let o = typeb(&["verify", "--n-max", "4", "--which", "rows", "--format", "json"]);
    assert!(o.status.success());
    let rows = json(&o);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r["matches"] == true));

    let o = typeb(&["verify", "--n-max", "2", "--which", "ww", "--format", "json"]);
    let v = json(&o);
    assert_eq!(v[0]["closed_form"], "3/8");
    assert_eq!(v[0]["brute"], "3/8");

    let o = typeb(&["verify", "--n-max", "0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 1);

    assert_eq!(typeb(&["verify", "--n-max", "9"]).status.code(), Some(3));
    assert_eq!(typeb(&["verify", "--which", "nope"]).status.code(), Some(2));
}

#[test]
fn default_verify_passes_and_flags_variants() {
    let o = typeb(&["verify", "--format", "json"]);
    assert!(o.status.success());
    let v = json(&o);
    let rows = v.as_array().unwrap();
    let shifted: Vec<_> = rows
        .iter()
        .filter(|r| r["statistic"] == "p_south_shifted")
        .collect();
    assert_eq!(shifted.len(), 21);
    assert!(shifted.iter().all(|r| r["matches"] == false && r["ok"] == true));
    assert!(rows.iter().all(|r| r["ok"] == true));
}

#[test]
fn sample_is_deterministic_and_close() {
    let args = [
        "sample", "--n", "2", "--samples", "1000", "--seed", "7", "--stat", "rows", "--format",
        "json",
    ];
    let a = typeb(&args);
    let b = typeb(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    let mean = v[0]["mean"].as_f64().unwrap();
    assert!((mean - 0.75).abs() < 0.05, "{mean}");
}

#[test]
fn sample_output_ignores_thread_count() {
    let base = ["sample", "--n", "8", "--samples", "4000", "--seed", "3"];
    let one = typeb(&[&base[..], &["--threads", "1"]].concat());
    let four = typeb(&[&base[..], &["--threads", "4"]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn sample_emit_writes_valid_tableaux() {
    let o = typeb(&["sample", "--n", "4", "--samples", "20", "--emit", "--seed", "5"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 20);
    let v = typeb_with_input(&["validate"], &text);
    assert!(v.status.success());
}

#[test]
fn pasep_map_swws() {
    let o = typeb(&["pasep-map", "SWWS", "--format", "json"]);
    let v = json(&o);
    assert_eq!(v[0]["state"], "•∘∘••∘∘•");
    assert_eq!(v[0]["filled_pairs"], 1);
    assert_eq!(v[0]["empty_pairs"], 2);
}

#[test]
fn pasep_stationary_single_site() {
    let o = typeb(&[
        "pasep-stationary",
        "--sites",
        "1",
        "--alpha",
        "2",
        "--beta",
        "1",
        "--format",
        "json",
    ]);
    assert!(o.status.success());
    let v = json(&o);
    let p = v["probabilities"]["1"].as_f64().unwrap();
    assert!((p - 2.0 / 3.0).abs() < 1e-10);
    assert_eq!(
        typeb(&["pasep-stationary", "--sites", "2", "--alpha", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(typeb(&["pasep-stationary", "--sites", "13"]).status.code(), Some(3));
}

#[test]
fn pasep_simulate_checks_horizon() {
    let o = typeb(&["pasep-simulate", "--sites", "2", "--horizon", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = typeb(&["pasep-simulate", "--sites", "2", "--horizon", "100", "--seed", "1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn validate_exit_codes() {
    let ok = typeb_with_input(&["validate"], "WW;1;01\n");
    assert!(ok.status.success());
    let bad = typeb_with_input(&["validate"], "WW;1;00\n");
    assert_eq!(bad.status.code(), Some(1));
    let grid = typeb_with_input(&["validate", "--grid", "--format", "json"], "1/00/101/01/00/.\n");
    assert!(grid.status.success());
    assert_eq!(json(&grid)[0]["canonical"], "WSSWWS;1;0010;110");
    let unshifted = typeb_with_input(&["validate", "--grid"], "1101/1101/001/0/1\n");
    assert_eq!(unshifted.status.code(), Some(1));
}

#[test]
fn formulas_table() {
    let o = typeb(&["formulas", "--n", "4", "--format", "json"]);
    let v = json(&o);
    let rows = v.as_array().unwrap();
    let ww = rows.iter().find(|r| r["statistic"] == "ww").unwrap();
    assert_eq!(ww["numerator"], "17");
    assert_eq!(ww["denominator"], "12");
}
