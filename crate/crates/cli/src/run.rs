//! Instance grids, the worker pool, and the per-instance JSON reports.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use modgeo::cycles::{katok_report, homogenized_report, CycleIntegralReport};
use modgeo::lfun::{fourier_coefficients, central_value_sides, LValueOptions};
use modgeo::periods::{verify_class_formula, verify_discriminant_formula, PeriodCheckOptions, PeriodFormula, PeriodReport};
use modgeo::{Error, Flavor, GroupElement, QForm, SeriesEvaluator, SeriesHandle, C64};
use num_bigint::BigInt;
use serde_json::{json, Value};

use crate::config::{ClassSpec, ExperimentConfig, Kind, Suite};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Exceeded,
    Failed,
    /// The instance does not apply, e.g. `σ` in the class of `γ`.
    Skipped,
}

impl Status {
    fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Exceeded => "exceeded",
            Status::Failed => "failed",
            Status::Skipped => "skipped",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub status: Status,
    pub residual: Option<f64>,
    pub report: Value,
    /// CSV rows for `coeffs`.
    pub table: Vec<(usize, C64)>,
}

impl Instance {
    fn new(mut report: Value, status: Status, residual: Option<f64>) -> Self {
        report["status"] = json!(status.name());
        Instance { status, residual, report, table: Vec::new() }
    }

    fn failed(mut report: Value, e: &Error) -> Self {
        report["error"] = json!(e.to_string());
        Instance::new(report, Status::Failed, None)
    }

    fn judged(report: Value, residual: f64, tol: f64) -> Self {
        let status = if residual <= tol { Status::Ok } else { Status::Exceeded };
        Instance::new(report, status, Some(residual))
    }
}

pub fn form_json(q: &QForm) -> Value {
    match q.to_i64() {
        Some(v) => json!(v),
        None => json!([q.a().to_string(), q.b().to_string(), q.c().to_string()]),
    }
}

pub fn matrix_json(g: &GroupElement) -> Value {
    let e = g.entries();
    match e.iter().map(|x| i64::try_from(x).ok()).collect::<Option<Vec<_>>>() {
        Some(v) => json!(v),
        None => json!(e.iter().map(|x| x.to_string()).collect::<Vec<_>>()),
    }
}

fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

fn class_json(c: &ClassSpec) -> Value {
    json!({ "disc": c.disc, "form": form_json(c.cls.seed()) })
}

/// Runs `n` tasks on `jobs` threads and returns the results in task order.
pub fn pool<T: Send>(n: usize, jobs: usize, task: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, n.max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let r = task(i);
                slots.lock().expect("no worker panicked")[i] = Some(r);
            });
        }
    });
    slots.into_inner().expect("no worker panicked").into_iter().map(|r| r.expect("every task ran")).collect()
}

enum Group<'a> {
    Class { k: usize, class: &'a ClassSpec },
    Discriminant { k: usize, d: i64 },
}

fn groups(cfg: &ExperimentConfig) -> Vec<Group<'_>> {
    let mut out = Vec::new();
    for &k in &cfg.ks {
        for class in &cfg.classes {
            out.push(Group::Class { k, class });
        }
        if cfg.kind == Kind::Verify(Suite::Periods) && k % 2 == 1 {
            for &d in &cfg.discs {
                out.push(Group::Discriminant { k, d });
            }
        }
    }
    out
}

pub fn run(cfg: &ExperimentConfig) -> Vec<Instance> {
    let gs = groups(cfg);
    pool(gs.len(), cfg.jobs, |i| {
        let t = Instant::now();
        let out = match gs[i] {
            Group::Class { k, class } => run_class(cfg, k, class),
            Group::Discriminant { k, d } => vec![run_discriminant(cfg, k, d)],
        };
        log::info!("group {i}: {} instances in {:.2}s", out.len(), t.elapsed().as_secs_f64());
        out
    })
    .into_iter()
    .flatten()
    .collect()
}

fn evaluator(cfg: &ExperimentConfig, k: usize, class: &ClassSpec, flavor: Flavor) -> modgeo::Result<SeriesEvaluator> {
    SeriesEvaluator::new(&SeriesHandle::new(k, class.cls.clone(), cfg.policy(k), flavor)?)
}

fn cycle_json(suite: &str, k: usize, class: &ClassSpec, sigma: &GroupElement, tol: f64) -> Value {
    json!({ "suite": suite, "k": k, "gamma": class_json(class), "sigma": matrix_json(sigma), "tol": tol })
}

fn cycle_instance(mut base: Value, r: modgeo::Result<CycleIntegralReport>, tol: f64) -> Instance {
    match r {
        Ok(r) => {
            base["lhs"] = json!(r.lhs);
            base["rhs"] = json!(r.rhs);
            base["residual"] = json!(r.residual);
            base["resources"] = json!({ "height": r.heights_used, "homogenization_terms": r.n_used });
            Instance::judged(base, r.residual, tol)
        }
        Err(Error::EquivalentClasses) => {
            base["note"] = json!("σ lies in the class of γ");
            Instance::new(base, Status::Skipped, None)
        }
        Err(e) => Instance::failed(base, &e),
    }
}

fn run_class(cfg: &ExperimentConfig, k: usize, class: &ClassSpec) -> Vec<Instance> {
    match cfg.kind {
        Kind::Verify(suite @ (Suite::Thm1 | Suite::Katok)) => {
            let flavor = if suite == Suite::Thm1 { Flavor::Parson } else { Flavor::Katok };
            let ev = evaluator(cfg, k, class, flavor);
            cfg.sigmas
                .iter()
                .map(|sigma| {
                    let base = cycle_json(suite.name(), k, class, sigma, cfg.tol);
                    let ev = match &ev {
                        Ok(ev) => ev,
                        Err(e) => return Instance::failed(base, e),
                    };
                    let r = if suite == Suite::Thm1 { homogenized_report(ev, sigma, None, 1e-9) } else { katok_report(ev, sigma, None) };
                    cycle_instance(base, r, cfg.tol)
                })
                .collect()
        }
        Kind::Verify(Suite::Thm2) => {
            let ev = evaluator(cfg, k, class, Flavor::Parson);
            cfg.cusps
                .iter()
                .map(|&(d, c)| {
                    let mut base = json!({ "suite": "thm2", "k": k, "gamma": class_json(class), "dc": [d, c], "tol": cfg.tol });
                    let ev = match &ev {
                        Ok(ev) => ev,
                        Err(e) => return Instance::failed(base, e),
                    };
                    match central_value_sides(ev, &BigInt::from(d), &BigInt::from(c), &LValueOptions::default()) {
                        Ok(r) => {
                            base["l_value"] = complex_json(r.l_value);
                            base["lhs"] = json!(r.lhs);
                            base["rhs"] = json!(r.rhs);
                            base["residual"] = json!(r.residual);
                            base["resources"] = json!({ "height": r.heights_used, "intersections": r.intersections });
                            Instance::judged(base, r.residual, cfg.tol)
                        }
                        Err(e) => Instance::failed(base, &e),
                    }
                })
                .collect()
        }
        Kind::Verify(Suite::Periods) => {
            let base = json!({ "suite": "periods", "k": k, "gamma": class_json(class), "tol": cfg.tol });
            let r = SeriesHandle::new(k, class.cls.clone(), cfg.policy(k), Flavor::Parson)
                .and_then(|h| verify_class_formula(&h, &PeriodCheckOptions::default()));
            vec![period_instance(base, r, cfg.tol)]
        }
        Kind::Coeffs => {
            let mut base = json!({ "k": k, "gamma": class_json(class), "n_max": cfg.n_max });
            let table = evaluator(cfg, k, class, Flavor::Parson).and_then(|ev| {
                let coeffs = match cfg.source {
                    crate::config::CoeffSource::Dft => {
                        base["source"] = json!("dft");
                        base["y"] = json!(cfg.y);
                        fourier_coefficients(&ev, cfg.n_max, cfg.y, None)?.coeffs
                    }
                    crate::config::CoeffSource::Closed => {
                        base["source"] = json!("closed");
                        ev.coeffs.iter().take(cfg.n_max).copied().collect()
                    }
                };
                base["resources"] = json!({ "height": ev.height_used });
                Ok(coeffs)
            });
            match table {
                Ok(c) => {
                    let mut inst = Instance::new(base, Status::Ok, None);
                    inst.table = c.into_iter().enumerate().map(|(i, a)| (i + 1, a)).collect();
                    vec![inst]
                }
                Err(e) => vec![Instance::failed(base, &e)],
            }
        }
        Kind::Histogram => unreachable!("histograms are not run per class"),
    }
}

fn run_discriminant(cfg: &ExperimentConfig, k: usize, d: i64) -> Instance {
    let base = json!({ "suite": "periods", "k": k, "disc": d, "tol": cfg.tol });
    let r = modgeo::qforms::class_representatives(&BigInt::from(d))
        .and_then(|cls| SeriesHandle::new(k, cls[0].clone(), cfg.policy(k), Flavor::Parson))
        .and_then(|h| verify_discriminant_formula(k, d, &h, &PeriodCheckOptions::default()));
    period_instance(base, r, cfg.tol)
}

fn period_instance(mut base: Value, r: modgeo::Result<PeriodReport>, tol: f64) -> Instance {
    let r = match r {
        Ok(r) => r,
        Err(e) => return Instance::failed(base, &e),
    };
    base["formula"] = json!(match r.formula {
        PeriodFormula::Class => "class",
        PeriodFormula::Discriminant => "discriminant",
    });
    base["D"] = json!(r.d);
    base["lhs"] = json!(r.lhs.iter().map(|z| complex_json(*z)).collect::<Vec<_>>());
    base["rhs"] = json!(r.rhs);
    base["ratios"] = json!(r.ratios.iter().map(|z| complex_json(*z)).collect::<Vec<_>>());
    base["max_ratio_deviation"] = json!(r.max_ratio_deviation);
    base["both_vanish"] = json!(r.both_vanish);
    base["reversed_deviation"] = json!(r.reversed_deviation);
    if let Some(p) = r.paired_deviation {
        base["paired_deviation"] = json!(p);
    }
    base["recognized_periods"] =
        json!(r.recognized_periods.iter().map(|p| json!({ "n": p.n, "p": p.p, "q": p.q })).collect::<Vec<_>>());
    base["unrecognized_periods"] =
        json!(r.unrecognized_periods.iter().map(|(n, v)| json!({ "n": n, "value": v })).collect::<Vec<_>>());
    base["symmetry_residuals"] = json!(r.symmetry_residuals);
    let residual = if r.both_vanish { 0.0 } else { r.max_ratio_deviation };
    base["residual"] = json!(residual);
    Instance::judged(base, residual, tol)
}

/// 0 when every residual is within tolerance, 2 on any computation failure,
/// 1 otherwise.
pub fn exit_code(instances: &[Instance]) -> u8 {
    if instances.iter().any(|i| i.status == Status::Failed) {
        2
    } else if instances.iter().any(|i| i.status == Status::Exceeded) {
        1
    } else {
        0
    }
}

pub fn summary(command: &str, cfg: &ExperimentConfig, instances: &[Instance], files: &[String]) -> Value {
    let count = |s: Status| instances.iter().filter(|i| i.status == s).count();
    let max_residual = instances.iter().filter_map(|i| i.residual).fold(0.0, f64::max);
    json!({
        "command": command,
        "tol": cfg.tol,
        "instances": instances.len(),
        "ok": count(Status::Ok),
        "exceeded": count(Status::Exceeded),
        "failed": count(Status::Failed),
        "skipped": count(Status::Skipped),
        "max_residual": max_residual,
        "files": files,
        "reports": instances.iter().map(|i| i.report.clone()).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pool_keeps_order() {
        let v = pool(37, 4, |i| i * i);
        assert_eq!(v, (0..37).map(|i| i * i).collect::<Vec<_>>());
        assert!(pool(0, 3, |i| i).is_empty());
    }

    #[test]
    fn exit_codes() {
        let ok = Instance::new(json!({}), Status::Ok, Some(0.0));
        let bad = Instance::new(json!({}), Status::Exceeded, Some(1.0));
        let fail = Instance::new(json!({}), Status::Failed, None);
        let skip = Instance::new(json!({}), Status::Skipped, None);
        assert_eq!(exit_code(&[ok.clone(), skip.clone()]), 0);
        assert_eq!(exit_code(&[ok.clone(), bad.clone()]), 1);
        assert_eq!(exit_code(&[bad, fail, ok]), 2);
    }
}
