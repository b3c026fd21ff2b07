use std::collections::HashMap;
use std::fs;
use std::process::{Command, Output};

use leo_sg::outage::outage_exact;
use leo_sg::{SeriesControl, SystemConfig};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_leo-sg"));
    c.env_remove("LEO_MC_SEED");
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

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
    stdout(&o)
}

/// Parses CSV output into rows of column -> value.
fn rows(csv_text: &str) -> Vec<HashMap<String, String>> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = r.headers().unwrap().clone();
    r.records().map(|rec| headers.iter().map(String::from).zip(rec.unwrap().iter().map(String::from)).collect()).collect()
}

fn num(row: &HashMap<String, String>, col: &str) -> f64 {
    row[col].parse().unwrap()
}

fn golden() -> Vec<(String, String)> {
    let text = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/headers.txt")).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (k, v) = l.split_once('|').unwrap();
            (k.trim().to_string(), v.trim().to_string())
        })
        .collect()
}

/// Cheap invocation for each golden entry.
fn invocation(name: &str) -> Vec<&'static str> {
    match name {
        "geometry" => vec!["geometry"],
        "case-probs" => vec!["case-probs"],
        "dist" => vec!["dist", "--points", "5"],
        "outage" => vec!["outage", "--R", "1"],
        "throughput" => vec!["throughput", "--R", "1"],
        "optimize" => vec!["optimize", "--model", "approx", "--delta-r", "0.05", "--delta-theta", "5deg"],
        "simulate geometry" => vec!["simulate", "geometry", "--trials", "1000"],
        "simulate case-probs" => vec!["simulate", "case-probs", "--trials", "1000"],
        "simulate dist" => vec!["simulate", "dist", "--trials", "1000", "--points", "5"],
        "simulate outage" => vec!["simulate", "outage", "--R", "1", "--trials", "1000"],
        "simulate throughput" => vec!["simulate", "throughput", "--R", "1", "--trials", "1000"],
        "sweep" => vec!["sweep", "--var", "R", "--lo", "0.5", "--hi", "1.5", "--step", "0.5", "--outputs", "p_vis,p_out,T"],
        "figure fig2" => vec!["figure", "fig2", "--values", "1,10", "--trials", "1000"],
        "figure fig3" => vec!["figure", "fig3", "--values", "600,1000"],
        "figure fig5" => vec!["figure", "fig5", "--values", "10", "--trials", "1000"],
        "figure fig6" => vec!["figure", "fig6", "--values", "1", "--trials", "1000"],
        "figure fig7" => vec!["figure", "fig7", "--values", "1", "--trials", "1000"],
        "figure fig8" => vec!["figure", "fig8", "--values", "1,10"],
        "figure fig9" => vec!["figure", "fig9", "--values", "0,10"],
        "figure fig10" => vec!["figure", "fig10", "--values", "10"],
        "figure fig11" => vec!["figure", "fig11", "--values", "50,100", "--delta-r", "0.05", "--delta-theta", "5deg"],
        other => panic!("no invocation for {other}"),
    }
}

#[test]
fn csv_headers_match_golden_file() {
    for (name, header) in golden() {
        let out = ok(&invocation(&name));
        assert_eq!(out.lines().next().unwrap(), header, "{name}");
        assert!(out.lines().count() >= 2, "{name} emitted no rows");
    }
}

#[test]
fn outage_example_matches_library() {
    let out = ok(&["outage", "--preset", "handheld-table1", "--fading", "ils", "--S", "100", "--a", "600km", "--R", "1", "--model", "exact"]);
    let r = rows(&out);
    assert_eq!(r.len(), 1);
    let mut cfg = SystemConfig::handheld_table1();
    cfg.set("fading", "ils").unwrap();
    let lib = outage_exact(&cfg, 1.0, &SeriesControl::default()).unwrap();
    assert_eq!(num(&r[0], "p_out"), lib.p_out);
    assert_eq!(num(&r[0], "p_out_ml"), lib.p_out_ml);
    assert_eq!(num(&r[0], "p_out_sl"), lib.p_out_sl);
    assert_eq!(r[0]["n_used"], lib.n_used.to_string());
}

#[test]
fn optimize_both_reports_two_methods() {
    let out = ok(&["optimize", "--preset", "vsat-table1", "--eta", "0.9", "--eps", "0.1", "--method", "both", "--model", "approx"]);
    let r = rows(&out);
    let methods: Vec<&str> = r.iter().map(|x| x["method"].as_str()).collect();
    assert_eq!(methods, ["iterative", "exhaustive"]);
    let (it, ex) = (num(&r[0], "T"), num(&r[1], "T"));
    assert!(it >= 0.99 * ex, "{it} vs {ex}");
}

#[test]
fn fig5_example_columns_and_values() {
    let out = ok(&["figure", "fig5", "--values", "7.7", "--trials", "20000"]);
    let r = rows(&out);
    assert_eq!(r.len(), 3);
    let at600 = r.iter().find(|x| num(x, "a_km") == 600.0).unwrap();
    assert!((num(at600, "p_vis_exact") - 0.9).abs() < 0.015);
    assert!((num(at600, "p_vis_mc") - num(at600, "p_vis_exact")).abs() < 5.0 * num(at600, "mc_stderr"));
}

#[test]
fn validation_errors_exit_one() {
    let cases: &[&[&str]] = &[
        &["outage", "--R", "1", "--a", "600"],
        &["outage", "--R", "1", "--theta-min", "10"],
        &["outage", "--R", "1", "--set", "no.such_key=1"],
        &["outage", "--R", "1", "--S", "0"],
        &["outage", "--R", "-1"],
        &["outage"],
        &["bogus"],
        &["sweep", "--var", "R", "--lo", "2", "--hi", "1", "--step", "0.5"],
        &["figure", "fig12"],
    ];
    for args in cases {
        let o = run(args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn numerical_errors_exit_two_with_name() {
    let o = run(&["outage", "--R", "1", "--path", "closed-form", "--S", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("CancellationOverflow"));
    let o = run(&["optimize", "--S", "50", "--model", "approx"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("InfeasibleVisibility"));
}

#[test]
fn config_file_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.conf");
    fs::write(&p, "# comment\nconstellation.S = 0\n").unwrap();
    let o = run(&["case-probs", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("constellation.S"));
    fs::write(&p, "preset = vsat-table1\n\nthis line is broken\n").unwrap();
    let o = run(&["case-probs", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn config_file_equals_flags() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("scenario.conf");
    fs::write(&p, "preset = handheld-table1  # S-band\nconstellation.S = 40\nconstellation.a = 900 km\nfading = ils\n").unwrap();
    let from_file = ok(&["outage", "--R", "1.5", "--config", p.to_str().unwrap()]);
    let from_flags = ok(&["outage", "--R", "1.5", "--preset", "handheld-table1", "--S", "40", "--a", "900km", "--fading", "ils"]);
    assert_eq!(from_file, from_flags);
}

#[test]
fn json_output_round_trips_as_config() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("out.json");
    let base = ["--preset", "handheld-table1", "--S", "37", "--a", "800km", "--fading", "as", "--theta-min", "12.5deg", "--model", "approx"];
    let mut args = vec!["case-probs", "--format", "json", "--out", p.to_str().unwrap()];
    args.extend(base);
    assert_eq!(ok(&args), "");
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 1);
    assert!(doc["config"].is_object());
    let mut direct = vec!["outage", "--R", "1"];
    direct.extend(base);
    let via_json = ok(&["outage", "--R", "1", "--config", p.to_str().unwrap()]);
    assert_eq!(via_json, ok(&direct));
}

#[test]
fn decibel_and_linear_inputs_agree() {
    let g = 10f64.powf(-0.3).to_string();
    let a = rows(&ok(&["outage", "--R", "0.5", "--rain-g", "-3dB"]));
    let b = rows(&ok(&["outage", "--R", "0.5", "--rain-g", &g]));
    assert!((num(&a[0], "p_out") - num(&b[0], "p_out")).abs() <= 1e-12);
    let lin = 10f64.powf(3.85).to_string();
    let a = rows(&ok(&["throughput", "--R", "1", "--set", "antennas.g_t_ml=38.5dBi"]));
    let b = rows(&ok(&["throughput", "--R", "1", "--set", &format!("antennas.g_t_ml={lin}")]));
    assert!((num(&a[0], "T") - num(&b[0], "T")).abs() <= 1e-12);
}

#[test]
fn seed_flag_overrides_environment() {
    let args = ["simulate", "outage", "--R", "1", "--trials", "5000"];
    let plain = ok(&args);
    let env_a = bin().args(args).env("LEO_MC_SEED", "7").output().unwrap();
    let env_b = bin().args(args).env("LEO_MC_SEED", "7").output().unwrap();
    assert_eq!(env_a.stdout, env_b.stdout);
    assert_ne!(stdout(&env_a), plain);
    let mut with_flag = args.to_vec();
    with_flag.extend(["--seed", "7"]);
    let flag_only = ok(&with_flag);
    assert_eq!(flag_only, stdout(&env_a));
    let both = bin().args(&with_flag).env("LEO_MC_SEED", "99").output().unwrap();
    assert_eq!(stdout(&both), flag_only);
    let bad = bin().args(args).env("LEO_MC_SEED", "seven").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn output_file_and_stdout_agree() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.csv");
    let direct = ok(&["geometry", "--a", "1200km"]);
    ok(&["geometry", "--a", "1200km", "--out", p.to_str().unwrap()]);
    assert_eq!(fs::read_to_string(&p).unwrap(), direct);
}

#[test]
fn sweep_rows_follow_values() {
    let out = ok(&["sweep", "--var", "S", "--lo", "10", "--hi", "50", "--count", "5", "--outputs", "p_vis,p_ml"]);
    let r = rows(&out);
    let s: Vec<f64> = r.iter().map(|x| num(x, "S")).collect();
    assert_eq!(s, [10.0, 20.0, 30.0, 40.0, 50.0]);
    let vis: Vec<f64> = r.iter().map(|x| num(x, "p_vis")).collect();
    assert!(vis.windows(2).all(|w| w[1] > w[0]));
    let out = ok(&["sweep", "--var", "N", "--lo", "0", "--hi", "4", "--step", "1", "--model", "approx"]);
    assert_eq!(rows(&out).len(), 5);
}

#[test]
fn fig11_marks_infeasible_sizes() {
    let out = ok(&invocation("figure fig11"));
    let r = rows(&out);
    let small: Vec<_> = r.iter().filter(|x| x["S"] == "50").collect();
    assert_eq!(small.len(), 8);
    assert!(small.iter().all(|x| x["status"] != "ok" && x["T"] == "0.0"));
    assert!(small.iter().filter(|x| x["method"] == "iterative").all(|x| x["status"] == "InfeasibleVisibility"));
    assert!(r.iter().filter(|x| x["S"] == "100" && x["method"] == "iterative").all(|x| x["status"] == "ok"));
}

#[test]
fn help_exits_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["figure", "--help"]).status.code(), Some(0));
}
