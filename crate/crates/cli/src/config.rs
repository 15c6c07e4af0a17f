//! Command line flags, the flat `key = value` config file, and the merged
//! experiment configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use modgeo::qforms::{class_representatives, form_from_matrix, primitive_classes_of_trace, reduction_cycle};
use modgeo::{FormClass, GroupElement, TruncationPolicy};
use num_bigint::BigInt;

#[derive(Parser, Debug)]
#[command(name = "modgeo", version, about = "Cycle integrals of hyperbolic Poincaré series on SL2(Z)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute both sides of an identity and compare them.
    Verify {
        suite: Suite,
        #[command(flatten)]
        opts: Opts,
    },
    /// Fourier coefficients a(n) as CSV.
    Coeffs {
        #[command(flatten)]
        opts: Opts,
    },
    /// Intersection angles of a fixed closed geodesic with every class of
    /// each discriminant.
    Histogram {
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    /// Homogenized cycle integral of the modular integral.
    Thm1,
    /// Central L-value against the vertical geodesic.
    Thm2,
    /// Cycle integral of the cusp form.
    Katok,
    /// Period polynomial formulas.
    Periods,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Thm1 => "thm1",
            Suite::Thm2 => "thm2",
            Suite::Katok => "katok",
            Suite::Periods => "periods",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoeffSource {
    /// Contour DFT of the evaluated series.
    Dft,
    /// Closed T-orbit coefficients used by the evaluator.
    Closed,
}

#[derive(Args, Debug, Default, Clone)]
pub struct Opts {
    /// Flat `key = value` file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Weight parameters (weight 2k).
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    /// Discriminants; every class of each is used.
    #[arg(long = "gamma-disc", visible_alias = "disc", value_delimiter = ',')]
    pub gamma_disc: Vec<i64>,
    /// Hyperbolic matrix `a,b,c,d` whose class is used. Repeatable.
    #[arg(long = "gamma-matrix")]
    pub gamma_matrix: Vec<String>,
    /// Matrix `a,b,c,d` of the second geodesic. Repeatable.
    #[arg(long = "sigma-matrix")]
    pub sigma_matrix: Vec<String>,
    /// Every primitive hyperbolic class of each trace.
    #[arg(long = "sigma-trace", value_delimiter = ',')]
    pub sigma_trace: Vec<u64>,
    /// Cusps `d/c` with gcd(d, c) = 1.
    #[arg(long, value_delimiter = ',')]
    pub dc: Vec<String>,
    /// Residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Stopping tolerance of the series truncation.
    #[arg(long = "series-tol")]
    pub series_tol: Option<f64>,
    /// Starting truncation height.
    #[arg(long)]
    pub height: Option<u64>,
    #[arg(long = "max-doublings")]
    pub max_doublings: Option<u32>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of Fourier coefficients.
    #[arg(long = "n-max")]
    pub n_max: Option<usize>,
    /// Height of the DFT contour.
    #[arg(long)]
    pub y: Option<f64>,
    #[arg(long, value_enum)]
    pub source: Option<CoeffSource>,
    /// Histogram bins on [−1, 1].
    #[arg(long)]
    pub bins: Option<usize>,
}

/// Invalid input; exits with status 64.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, UsageError> {
    Err(UsageError(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Verify(Suite),
    Coeffs,
    Histogram,
}

/// A class together with its discriminant.
#[derive(Clone, Debug)]
pub struct ClassSpec {
    pub cls: FormClass,
    pub disc: i64,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub ks: Vec<usize>,
    pub classes: Vec<ClassSpec>,
    pub discs: Vec<i64>,
    pub gamma_matrices: Vec<GroupElement>,
    pub sigmas: Vec<GroupElement>,
    pub cusps: Vec<(i64, i64)>,
    pub tol: f64,
    pub series_tol: Option<f64>,
    pub height: Option<u64>,
    pub max_doublings: Option<u32>,
    pub jobs: usize,
    pub out: Option<PathBuf>,
    pub n_max: usize,
    pub y: f64,
    pub source: CoeffSource,
    pub bins: usize,
}

impl ExperimentConfig {
    /// Truncation policy for weight parameter `k`; `k = 2` converges slowly
    /// and gets a looser stopping rule unless overridden.
    pub fn policy(&self, k: usize) -> TruncationPolicy {
        let mut p = TruncationPolicy::default();
        if k == 2 {
            p.tol = 1e-5;
            p.max_doublings = 6;
        }
        if let Some(t) = self.series_tol {
            p.tol = t;
        }
        if let Some(h) = self.height {
            p.height = h;
        }
        if let Some(m) = self.max_doublings {
            p.max_doublings = m;
        }
        p
    }
}

pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return usage(format!("config line {}: expected `key = value`", i + 1));
        };
        map.insert(key.trim().replace('_', "-"), value.trim().to_string());
    }
    Ok(map)
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, UsageError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| UsageError(format!("{key}: cannot parse `{s}`"))))
        .collect()
}

fn one<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, UsageError> {
    value.trim().parse().map_err(|_| UsageError(format!("{key}: cannot parse `{value}`")))
}

/// Fills every option the flags left unset from the config file.
fn merge(mut o: Opts, file: &BTreeMap<String, String>) -> Result<Opts, UsageError> {
    for (key, value) in file {
        match key.as_str() {
            "k" if o.k.is_empty() => o.k = list(key, value)?,
            "gamma-disc" | "disc" if o.gamma_disc.is_empty() => o.gamma_disc = list(key, value)?,
            "gamma-matrix" if o.gamma_matrix.is_empty() => o.gamma_matrix = value.split(';').map(|s| s.trim().to_string()).collect(),
            "sigma-matrix" if o.sigma_matrix.is_empty() => o.sigma_matrix = value.split(';').map(|s| s.trim().to_string()).collect(),
            "sigma-trace" if o.sigma_trace.is_empty() => o.sigma_trace = list(key, value)?,
            "dc" if o.dc.is_empty() => o.dc = list(key, value)?,
            "tol" if o.tol.is_none() => o.tol = Some(one(key, value)?),
            "series-tol" if o.series_tol.is_none() => o.series_tol = Some(one(key, value)?),
            "height" if o.height.is_none() => o.height = Some(one(key, value)?),
            "max-doublings" if o.max_doublings.is_none() => o.max_doublings = Some(one(key, value)?),
            "jobs" if o.jobs.is_none() => o.jobs = Some(one(key, value)?),
            "out" if o.out.is_none() => o.out = Some(PathBuf::from(value)),
            "n-max" if o.n_max.is_none() => o.n_max = Some(one(key, value)?),
            "y" if o.y.is_none() => o.y = Some(one(key, value)?),
            "bins" if o.bins.is_none() => o.bins = Some(one(key, value)?),
            "source" if o.source.is_none() => {
                o.source = Some(CoeffSource::from_str(value, true).map_err(|e| UsageError(format!("source: {e}")))?)
            }
            "k" | "gamma-disc" | "disc" | "gamma-matrix" | "sigma-matrix" | "sigma-trace" | "dc" | "tol" | "series-tol"
            | "height" | "max-doublings" | "jobs" | "out" | "n-max" | "y" | "bins" | "source" => {}
            _ => return usage(format!("config: unknown key `{key}`")),
        }
    }
    Ok(o)
}

pub fn parse_matrix(s: &str) -> Result<GroupElement, UsageError> {
    let v: Vec<i64> = list("matrix", s)?;
    if v.len() != 4 {
        return usage(format!("matrix `{s}`: expected a,b,c,d"));
    }
    GroupElement::from_i64(v[0], v[1], v[2], v[3]).map_err(|e| UsageError(format!("matrix `{s}`: {e}")))
}

pub fn parse_cusp(s: &str) -> Result<(i64, i64), UsageError> {
    let Some((d, c)) = s.split_once('/') else {
        return usage(format!("cusp `{s}`: expected d/c"));
    };
    let d: i64 = one("dc", d)?;
    let c: i64 = one("dc", c)?;
    if c <= 0 {
        return usage(format!("cusp `{s}`: c must be positive"));
    }
    if num_integer::gcd(d, c) != 1 {
        return usage(format!("cusp `{s}`: gcd(d, c) must be 1"));
    }
    Ok((d, c))
}

fn hyperbolic(s: &str) -> Result<GroupElement, UsageError> {
    let g = parse_matrix(s)?;
    if !g.is_hyperbolic() {
        return usage(format!("matrix `{s}` is not hyperbolic"));
    }
    Ok(g)
}

fn classes_of(d: i64) -> Result<Vec<ClassSpec>, UsageError> {
    let cls = class_representatives(&BigInt::from(d)).map_err(|e| UsageError(format!("discriminant {d}: {e}")))?;
    Ok(cls.into_iter().map(|cls| ClassSpec { cls, disc: d }).collect())
}

fn class_of_matrix(g: &GroupElement) -> Result<ClassSpec, UsageError> {
    let q = form_from_matrix(g).map_err(|e| UsageError(e.to_string()))?;
    let cls = reduction_cycle(&q);
    Ok(ClassSpec { disc: cls.disc_i64(), cls })
}

pub fn build(kind: Kind, opts: Opts) -> Result<ExperimentConfig, UsageError> {
    let file = match &opts.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| UsageError(format!("config {}: {e}", p.display())))?;
            parse_config_file(&text)?
        }
        None => BTreeMap::new(),
    };
    let o = merge(opts, &file)?;

    let ks = if o.k.is_empty() { vec![3] } else { o.k.clone() };
    if let Some(&k) = ks.iter().find(|&&k| k < 2) {
        return usage(format!("k = {k}: must be at least 2"));
    }
    let gamma_matrices = o.gamma_matrix.iter().map(|s| hyperbolic(s)).collect::<Result<Vec<_>, _>>()?;

    let (classes, discs) = if kind == Kind::Histogram {
        let discs = if o.gamma_disc.is_empty() { vec![5, 13, 29, 61, 109, 205, 401] } else { o.gamma_disc.clone() };
        for &d in &discs {
            classes_of(d)?;
        }
        (Vec::new(), discs)
    } else {
        let mut classes = Vec::new();
        let discs = if o.gamma_disc.is_empty() && gamma_matrices.is_empty() { vec![5] } else { o.gamma_disc.clone() };
        for &d in &discs {
            classes.extend(classes_of(d)?);
        }
        for g in &gamma_matrices {
            classes.push(class_of_matrix(g)?);
        }
        (classes, discs)
    };
    let gamma_matrices = if kind == Kind::Histogram && gamma_matrices.is_empty() {
        vec![GroupElement::from_i64(2, 1, 1, 1).expect("det 1")]
    } else {
        gamma_matrices
    };

    let mut sigmas = o.sigma_matrix.iter().map(|s| hyperbolic(s)).collect::<Result<Vec<_>, _>>()?;
    let traces = if o.sigma_trace.is_empty() && sigmas.is_empty() { vec![6] } else { o.sigma_trace.clone() };
    for &t in &traces {
        sigmas.extend(primitive_classes_of_trace(t).map_err(|e| UsageError(format!("trace {t}: {e}")))?);
    }
    let cusps = if o.dc.is_empty() { vec![(0, 1)] } else { o.dc.iter().map(|s| parse_cusp(s)).collect::<Result<_, _>>()? };

    let tol = o.tol.unwrap_or(match kind {
        Kind::Verify(Suite::Thm1) | Kind::Verify(Suite::Thm2) => 1e-4,
        Kind::Verify(Suite::Katok) => 1e-5,
        _ => 1e-6,
    });
    for (name, v) in [("tol", Some(tol)), ("series-tol", o.series_tol), ("y", o.y)] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return usage(format!("{name} = {v}: must be positive"));
            }
        }
    }
    if o.height == Some(0) || o.max_doublings == Some(0) || o.jobs == Some(0) || o.n_max == Some(0) || o.bins == Some(0) {
        return usage("height, max-doublings, jobs, n-max and bins must be positive");
    }
    if kind != Kind::Histogram && classes.is_empty() {
        return usage("no classes selected");
    }
    if kind == Kind::Verify(Suite::Thm2) {
        if let Some(k) = ks.iter().find(|&&k| k % 2 == 0) {
            return usage(format!("k = {k}: the central value identity needs odd k"));
        }
    }
    if matches!(kind, Kind::Verify(Suite::Thm1) | Kind::Verify(Suite::Katok)) && sigmas.is_empty() {
        return usage("no σ selected");
    }

    Ok(ExperimentConfig {
        kind,
        ks,
        classes,
        discs,
        gamma_matrices,
        sigmas,
        cusps,
        tol,
        series_tol: o.series_tol,
        height: o.height,
        max_doublings: o.max_doublings,
        jobs: o.jobs.unwrap_or(1),
        out: o.out,
        n_max: o.n_max.unwrap_or(4),
        y: o.y.unwrap_or(1.0),
        source: o.source.unwrap_or(CoeffSource::Dft),
        bins: o.bins.unwrap_or(20),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_lines() {
        let m = parse_config_file("# comment\nk = 2,3\nsigma_trace=6\n\n  tol = 1e-3 # trailing\n").unwrap();
        assert_eq!(m["k"], "2,3");
        assert_eq!(m["sigma-trace"], "6");
        assert_eq!(m["tol"], "1e-3");
        assert!(parse_config_file("nonsense").is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let file = parse_config_file("k = 4\ntol = 0.5\nheight = 100").unwrap();
        let o = merge(Opts { k: vec![3], ..Opts::default() }, &file).unwrap();
        assert_eq!(o.k, vec![3]);
        assert_eq!(o.tol, Some(0.5));
        assert_eq!(o.height, Some(100));
        assert!(merge(Opts::default(), &parse_config_file("colour = red").unwrap()).is_err());
    }

    #[test]
    fn cusps() {
        assert_eq!(parse_cusp("0/1").unwrap(), (0, 1));
        assert_eq!(parse_cusp("-1/3").unwrap(), (-1, 3));
        assert!(parse_cusp("2/4").is_err());
        assert!(parse_cusp("1/0").is_err());
        assert!(parse_cusp("1").is_err());
    }

    #[test]
    fn matrices() {
        assert!(parse_matrix("2,1,1,1").is_ok());
        assert!(parse_matrix("2,1,1,2").is_err());
        assert!(parse_matrix("1,2,3").is_err());
        assert!(hyperbolic("1,1,0,1").is_err());
    }

    #[test]
    fn defaults_and_validation() {
        let c = build(Kind::Verify(Suite::Thm1), Opts::default()).unwrap();
        assert_eq!(c.ks, vec![3]);
        assert_eq!(c.classes.len(), 1);
        assert_eq!(c.tol, 1e-4);
        assert!(!c.sigmas.is_empty());
        assert_eq!(c.policy(2).max_doublings, 6);
        let bad = Opts { tol: Some(-1.0), ..Opts::default() };
        assert!(build(Kind::Verify(Suite::Thm1), bad).is_err());
        let bad = Opts { gamma_disc: vec![9], ..Opts::default() };
        assert!(build(Kind::Verify(Suite::Thm1), bad).is_err());
    }
}
