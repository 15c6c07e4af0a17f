//! `modgeo`: verification suites, Fourier coefficient tables and the angle
//! histogram, with JSON and CSV output.
//!
//! Exit status: 0 when every residual is within tolerance, 1 when some
//! residual exceeds it, 2 when a computation fails, 64 on invalid input.

mod config;
mod histogram;
mod run;

use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::{json, Value};

use config::{build, Cli, Command, ExperimentConfig, Kind, UsageError};
use run::{exit_code, form_json, matrix_json, summary, Instance};

const USAGE: u8 = 64;

enum Failure {
    Usage(String),
    Io(String),
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MODGEO_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(USAGE),
            };
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(USAGE)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Verify { suite, opts } => {
            let cfg = build(Kind::Verify(suite), opts)?;
            verify(&format!("verify {}", suite.name()), suite.name(), &cfg)
        }
        Command::Coeffs { opts } => coeffs(&build(Kind::Coeffs, opts)?),
        Command::Histogram { opts } => histogram(&build(Kind::Histogram, opts)?),
    }
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn write_json(path: &Path, v: &Value) -> Result<(), Failure> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Failure::Io(e.to_string()))?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn print_json(v: &Value) -> Result<(), Failure> {
    let s = serde_json::to_string_pretty(v).map_err(|e| Failure::Io(e.to_string()))?;
    writeln!(io::stdout().lock(), "{s}")?;
    Ok(())
}

/// Writes one file per instance plus `summary.json`, and prints the summary.
fn finish(command: &str, stem: &str, cfg: &ExperimentConfig, instances: &[Instance]) -> Result<u8, Failure> {
    let mut files = Vec::new();
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir)?;
        for (i, inst) in instances.iter().enumerate() {
            let name = format!("{stem}-{i:03}.json");
            write_json(&dir.join(&name), &inst.report)?;
            files.push(name);
        }
    }
    let mut s = summary(command, cfg, instances, &files);
    s["timestamp"] = json!(timestamp());
    if let Some(dir) = &cfg.out {
        write_json(&dir.join("summary.json"), &s)?;
    }
    print_json(&s)?;
    Ok(exit_code(instances))
}

fn verify(command: &str, stem: &str, cfg: &ExperimentConfig) -> Result<u8, Failure> {
    let instances = run::run(cfg);
    for i in &instances {
        if let Some(e) = i.report.get("error") {
            log::warn!("{} instance failed: {e}", i.report["suite"]);
        }
    }
    finish(command, stem, cfg, &instances)
}

fn coeffs(cfg: &ExperimentConfig) -> Result<u8, Failure> {
    let instances = run::run(cfg);
    match &cfg.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            for (i, inst) in instances.iter().enumerate() {
                let mut w = csv::Writer::from_path(dir.join(format!("coeffs-{i:03}.csv")))?;
                w.write_record(["n", "re", "im"])?;
                for (n, a) in &inst.table {
                    w.write_record([n.to_string(), a.re.to_string(), a.im.to_string()])?;
                }
                w.flush()?;
            }
            let mut files = Vec::new();
            for i in 0..instances.len() {
                files.push(format!("coeffs-{i:03}.csv"));
            }
            let mut s = summary("coeffs", cfg, &instances, &files);
            s["timestamp"] = json!(timestamp());
            write_json(&dir.join("summary.json"), &s)?;
        }
        None => {
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            w.write_record(["k", "A", "B", "C", "n", "re", "im"])?;
            for inst in &instances {
                let k = inst.report["k"].to_string();
                let f = &inst.report["gamma"]["form"];
                for (n, a) in &inst.table {
                    w.write_record([
                        k.clone(),
                        f[0].to_string(),
                        f[1].to_string(),
                        f[2].to_string(),
                        n.to_string(),
                        a.re.to_string(),
                        a.im.to_string(),
                    ])?;
                }
            }
            w.flush()?;
        }
    }
    for i in instances.iter().filter(|i| i.report.get("error").is_some()) {
        eprintln!("error: {}", i.report["error"]);
    }
    Ok(exit_code(&instances))
}

fn histogram(cfg: &ExperimentConfig) -> Result<u8, Failure> {
    let [gamma] = cfg.gamma_matrices.as_slice() else {
        return Err(Failure::Usage("histogram takes exactly one --gamma-matrix".into()));
    };
    let ladder = match histogram::histogram(gamma, &cfg.discs, cfg.bins, cfg.jobs) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(2);
        }
    };
    let table = |w: &mut dyn Write| -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["disc", "classes", "skipped", "intersections", "ks_distance"])?;
        for l in &ladder {
            w.write_record([
                l.disc.to_string(),
                l.classes.to_string(),
                l.skipped.to_string(),
                l.crossings.len().to_string(),
                l.ks_distance.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    };
    let Some(dir) = &cfg.out else {
        table(&mut io::stdout().lock())?;
        return Ok(0);
    };
    fs::create_dir_all(dir)?;
    table(&mut fs::File::create(dir.join("ks.csv"))?)?;

    let mut w = csv::Writer::from_path(dir.join("cos.csv"))?;
    w.write_record(["disc", "A", "B", "C", "cos_angle", "sign"])?;
    for l in &ladder {
        for c in &l.crossings {
            let f = form_json(&c.form);
            w.write_record([
                l.disc.to_string(),
                f[0].to_string(),
                f[1].to_string(),
                f[2].to_string(),
                c.cos_angle.to_string(),
                c.sign.to_string(),
            ])?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("bins.csv"))?;
    w.write_record(["disc", "lo", "hi", "count", "expected"])?;
    for l in &ladder {
        let n = l.crossings.len() as f64;
        for (i, c) in l.counts.iter().enumerate() {
            let lo = -1.0 + 2.0 * i as f64 / cfg.bins as f64;
            let hi = -1.0 + 2.0 * (i + 1) as f64 / cfg.bins as f64;
            w.write_record([l.disc.to_string(), lo.to_string(), hi.to_string(), c.to_string(), (n / cfg.bins as f64).to_string()])?;
        }
    }
    w.flush()?;

    write_json(
        &dir.join("summary.json"),
        &json!({
            "command": "histogram",
            "gamma": matrix_json(gamma),
            "bins": cfg.bins,
            "ladder": ladder.iter().map(|l| json!({
                "disc": l.disc,
                "classes": l.classes,
                "skipped": l.skipped,
                "intersections": l.crossings.len(),
                "ks_distance": l.ks_distance,
            })).collect::<Vec<_>>(),
            "files": ["cos.csv", "bins.csv", "ks.csv"],
            "timestamp": timestamp(),
        }),
    )?;
    Ok(0)
}
