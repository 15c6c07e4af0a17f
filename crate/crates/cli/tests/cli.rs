use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn modgeo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modgeo")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn summary(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn without_timestamp(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn thm1_ambiguous_class_within_tolerance() {
    let o = modgeo(&["verify", "thm1", "--k", "2", "--gamma-disc", "5", "--sigma-trace", "6"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&o);
    assert_eq!(s["failed"], 0);
    assert!(s["max_residual"].as_f64().unwrap() < 1e-5);
    for r in s["reports"].as_array().unwrap() {
        assert!(r["lhs"].is_number() && r["rhs"].is_number() && r["resources"]["height"].is_number());
    }
}

#[test]
fn thm2_central_value() {
    let o = modgeo(&["verify", "thm2", "--k", "3", "--disc", "5", "--dc", "0/1"]);
    assert_eq!(code(&o), 0);
    let r = &summary(&o)["reports"][0];
    assert!((r["rhs"].as_f64().unwrap() + 4.0).abs() < 1e-9);
    assert!(r["residual"].as_f64().unwrap() < 1e-4);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&modgeo(&["verify", "thm2", "--k", "3", "--disc", "5", "--dc", "2/4"])), 64);
    assert_eq!(code(&modgeo(&["verify", "thm2", "--k", "4", "--disc", "5"])), 64);
    assert_eq!(code(&modgeo(&["verify", "thm1", "--sigma-matrix", "2,1,1,2"])), 64);
    assert_eq!(code(&modgeo(&["verify", "thm1", "--gamma-disc", "16"])), 64);
    assert_eq!(code(&modgeo(&["verify", "thm1", "--tol", "0"])), 64);
    assert_eq!(code(&modgeo(&["verify", "nonsense"])), 64);
    assert_eq!(code(&modgeo(&["verify", "katok", "--bogus"])), 64);
    assert_eq!(code(&modgeo(&["--help"])), 0);
}

#[test]
fn truncation_cap_of_one_exits_2() {
    let o = modgeo(&["verify", "thm1", "--k", "3", "--gamma-disc", "5", "--sigma-trace", "6", "--height", "1", "--max-doublings", "1"]);
    assert_eq!(code(&o), 2);
    let s = summary(&o);
    assert_eq!(s["failed"], s["instances"]);
    assert!(s["reports"][0]["error"].as_str().unwrap().contains("did not converge"));
}

#[test]
fn residual_above_tolerance_exits_1() {
    let o = modgeo(&["verify", "katok", "--k", "3", "--gamma-disc", "12", "--sigma-trace", "6", "--tol", "1e-300"]);
    assert_eq!(code(&o), 1);
    assert!(summary(&o)["exceeded"].as_u64().unwrap() > 0);
}

#[test]
fn reports_are_reproducible_across_runs_and_job_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["verify", "katok", "--k", "3,4", "--gamma-disc", "5,12", "--sigma-trace", "6"];
    let run = |dir: &Path, jobs: &str| {
        let mut v: Vec<&str> = args.to_vec();
        v.extend(["--jobs", jobs, "--out", dir.to_str().unwrap()]);
        assert_eq!(code(&modgeo(&v)), 0);
    };
    run(a.path(), "1");
    run(b.path(), "4");
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 2);
    for n in &names {
        let (pa, pb) = (a.path().join(n), b.path().join(n));
        if n == "summary.json" {
            assert_eq!(without_timestamp(&pa), without_timestamp(&pb));
        } else {
            assert_eq!(fs::read(&pa).unwrap(), fs::read(&pb).unwrap(), "{n:?}");
        }
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# katok grid\nk = 4\ngamma-disc = 12\nsigma_trace = 6\ntol = 1e-3\n").unwrap();
    let o = modgeo(&["verify", "katok", "--config", cfg.to_str().unwrap(), "--k", "3"]);
    assert_eq!(code(&o), 0);
    let s = summary(&o);
    assert_eq!(s["tol"], 1e-3);
    for r in s["reports"].as_array().unwrap() {
        assert_eq!(r["k"], 3);
        assert_eq!(r["gamma"]["disc"], 12);
    }
    fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(code(&modgeo(&["verify", "katok", "--config", cfg.to_str().unwrap()])), 64);
}

#[test]
fn histogram_accounting() {
    let dir = tempfile::tempdir().unwrap();
    let o = modgeo(&["histogram", "--gamma-disc", "13,21,29,60", "--bins", "8", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let mut cos = csv::Reader::from_path(dir.path().join("cos.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = cos.records().map(|r| r.unwrap()).collect();
    for r in &rows {
        let c: f64 = r[4].parse().unwrap();
        assert!((-1.0..=1.0).contains(&c));
    }
    let mut ks = csv::Reader::from_path(dir.path().join("ks.csv")).unwrap();
    let total: usize = ks.records().map(|r| r.unwrap()[3].parse::<usize>().unwrap()).sum();
    assert_eq!(total, rows.len());
    let mut bins = csv::Reader::from_path(dir.path().join("bins.csv")).unwrap();
    let binned: usize = bins.records().map(|r| r.unwrap()[3].parse::<usize>().unwrap()).sum();
    assert_eq!(binned, rows.len());
}

#[test]
fn coefficient_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = modgeo(&["coeffs", "--k", "3", "--gamma-disc", "5", "--n-max", "3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let mut r = csv::Reader::from_path(dir.path().join("coeffs-000.csv")).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["n", "re", "im"]);
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[2][0], "3");

    let o = modgeo(&["coeffs", "--k", "3", "--gamma-disc", "5", "--n-max", "3", "--source", "closed"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 4);
}

#[test]
fn log_level_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_modgeo"))
        .args(["verify", "katok", "--k", "3", "--sigma-trace", "6"])
        .env("MODGEO_LOG", "info")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("INFO"));
}
