use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scenesim::metrics::MetricReport;
use scenesim::pipeline::{read_stats, Manifest};
use scenesim::scaling::{write_points, ScalingPoint, ScalingReport, ScalingTrend};
use scenesim::scenario::Trajectory;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scenesim")).args(args).output().expect("spawn scenesim")
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name).to_string_lossy().into_owned()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn sorted_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn gen_corpus_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = bin(&["gen-corpus", "--count", "10", "--seed", "7", "--out", &s(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (fa, fb) = (sorted_files(&a), sorted_files(&b));
    assert_eq!(fa.len(), 10);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(bin(&["gen-corpus", "--count", "3"]).status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(bin(&["generate", "--out", "x", "--expert", "oracle"]).status.code(), Some(2));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}

#[test]
fn eval_matches_golden_report() {
    let o = bin(&["eval", "--scenario", &data("benign_scenario.json"), "--trajectory", &data("logged_plan.json")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let got: MetricReport = serde_json::from_slice(&o.stdout).unwrap();
    let golden: MetricReport = serde_json::from_str(&std::fs::read_to_string(data("logged_plan_report.json")).unwrap()).unwrap();
    assert_eq!(got, golden);
    assert_eq!(got.submetrics.penalty_product(), 1.0);
    assert!(got.epdms > 0.95);
}

#[test]
fn eval_collision_scores_zero() {
    for mode in ["reactive", "non-reactive"] {
        let o = bin(&["eval", "--scenario", &data("benign_scenario.json"), "--trajectory", &data("collision_plan.json"), "--mode", mode]);
        assert!(o.status.success());
        let r: MetricReport = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(r.submetrics.nc, 0.0, "{mode}");
        assert_eq!(r.epdms, 0.0);
    }
}

#[test]
fn eval_rejects_dt_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let mut t: Trajectory = serde_json::from_str(&std::fs::read_to_string(data("logged_plan.json")).unwrap()).unwrap();
    t.dt = 0.2;
    let p = dir.path().join("t.json");
    std::fs::write(&p, serde_json::to_string(&t).unwrap()).unwrap();
    let o = bin(&["eval", "--scenario", &data("benign_scenario.json"), "--trajectory", &s(&p)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: dt mismatch"));
}

#[test]
fn fit_scaling_reports_and_compares() {
    let dir = tempfile::tempdir().unwrap();
    let ns = [1.0, 5.0, 20.0, 80.0, 400.0, 2000.0];
    let sat: Vec<ScalingPoint> = ns.iter().map(|&n: &f64| ScalingPoint { n, s: -0.5 * n.ln().powi(2) + 3.0 * n.ln() + 10.0 }).collect();
    let lin: Vec<ScalingPoint> = ns.iter().map(|&n: &f64| ScalingPoint { n, s: 0.7 * n.ln() + 1.0 }).collect();
    let (ps, pl) = (dir.path().join("sat.csv"), dir.path().join("lin.csv"));
    write_points(&sat, &ps).unwrap();
    write_points(&lin, &pl).unwrap();

    let out1 = dir.path().join("one");
    let o = bin(&["fit-scaling", "--points", &s(&ps), "--out", &s(&out1)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: ScalingReport = serde_json::from_str(&std::fs::read_to_string(out1.join("report.json")).unwrap()).unwrap();
    assert_eq!(rep.runs.len(), 1);
    let f = &rep.runs[0].fit;
    assert!((f.a + 0.5).abs() < 1e-9 && (f.b - 3.0).abs() < 1e-9 && (f.c - 10.0).abs() < 1e-9);
    assert!(out1.join("curve_sat.csv").exists());

    let out2 = dir.path().join("two");
    let o = bin(&["fit-scaling", "--points", &format!("planner={}", s(&ps)), "--points", &format!("recovery={}", s(&pl)), "--out", &s(&out2)]);
    assert!(o.status.success());
    let rep: ScalingReport = serde_json::from_str(&std::fs::read_to_string(out2.join("report.json")).unwrap()).unwrap();
    let trends: Vec<_> = rep.runs.iter().map(|r| (r.label.as_str(), r.trend)).collect();
    assert_eq!(trends, [("planner", ScalingTrend::Saturating), ("recovery", ScalingTrend::NonSaturating)]);
}

#[test]
fn fit_scaling_names_bad_row() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    std::fs::write(&p, "n,s\n1,0.5\n10,0.6\n0,0.7\n100,0.8\n").unwrap();
    let o = bin(&["fit-scaling", "--points", &s(&p), "--out", &s(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 3"));
}

#[test]
fn generate_nonreactive_rounds_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let vocab = dir.path().join("vocab.json");
    let out = dir.path().join("out");
    assert!(bin(&["gen-corpus", "--count", "5", "--seed", "2", "--out", &s(&corpus)]).status.success());
    assert!(bin(&["build-vocab", "--k", "256", "--samples", "4096", "--out", &s(&vocab)]).status.success());
    let o = bin(&[
        "generate", "--corpus", &s(&corpus), "--vocab", &s(&vocab), "--rounds", "3", "--non-reactive", "--expert", "recovery", "--out", &s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_stats(out.join("stats.csv")).unwrap().len(), 3);
    let m: Manifest = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.mode, scenesim::reactive::RolloutMode::Nonreactive);
    assert_eq!(m.rounds, 3);
    assert_eq!(m.config_hash.len(), 64);

    // verification needs the config the export was made with
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"mode": "nonreactive", "rounds": 3, "expert": "recovery"}"#).unwrap();
    let o = bin(&["stats", "--dir", &s(&out), "--verify", "--corpus", &s(&corpus), "--config", &s(&cfg)]);
    assert!(o.status.success(), "{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["violations"].as_array().unwrap().len(), 0);
    assert_eq!(summary["rounds"], 3);
}

#[test]
fn bad_config_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"roundz": 3}"#).unwrap();
    let o = bin(&["generate", "--config", &s(&cfg), "--out", &s(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema error"));
}
