//! Periods of the modular integral, period polynomials with their parity
//! split, the arithmetic zeta values entering the period formulas, and the
//! proportionality checks for those formulas.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::poincare::{Cocycle, SeriesEvaluator, SeriesHandle};
use crate::qforms::{class_representatives, fundamental_automorph, FormClass, GroupElement, QForm};
use crate::specialfn::{binomial, hurwitz_zeta, integrate_to_infinity, riemann_zeta, upper_gamma_int, QuadOptions};
use crate::C64;

const TWO_PI: f64 = 2.0 * core::f64::consts::PI;
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `∫_s^∞ F(it) t^m dt` from the Fourier expansion.
fn fourier_tail(ev: &SeriesEvaluator, m: usize, s: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (i, a) in ev.coeffs.iter().enumerate() {
        let x = TWO_PI * (i + 1) as f64;
        acc += a * (upper_gamma_int(m + 1, x * s) / libm::pow(x, m as f64 + 1.0));
    }
    acc
}

/// `p_n = ∫_0^∞ F(it) t^n dt`, split at `t = split`.
///
/// The piece below the split is moved to `[1/split, ∞)` with
/// `F(i/u) = (iu)^{2k} (F(iu) + r(S, iu))`.
pub fn period(ev: &SeriesEvaluator, n: usize, split: f64) -> Result<C64> {
    let k = ev.k();
    if n > 2 * k - 2 || !(split > 0.0) {
        return Err(Error::InvalidArgument(format!("period index {n} for k = {k}, split {split}")));
    }
    let r = Cocycle::new(&ev.handle, &GroupElement::s())?;
    let m = 2 * k - 2 - n;
    let upper = fourier_tail(ev, n, split);
    let mut lower = fourier_tail(ev, m, 1.0 / split);
    if !r.forms.is_empty() {
        let err: RefCell<Option<Error>> = RefCell::new(None);
        let f = |u: f64| match r.eval(C64::new(0.0, u)) {
            Ok(v) => v * libm::pow(u, m as f64),
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                C64::new(f64::NAN, f64::NAN)
            }
        };
        let q = integrate_to_infinity(&f, 1.0 / split, &QuadOptions { abs_tol: 1e-13, rel_tol: 1e-13, max_evals: 400_000 });
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        lower += q?.value;
    }
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    Ok(upper + lower * sign)
}

/// `p_0, …, p_{2k−2}`.
pub fn periods(ev: &SeriesEvaluator) -> Result<Vec<C64>> {
    (0..=2 * ev.k() - 2).map(|n| period(ev, n, 1.0)).collect()
}

/// `p(x) = Σ_n i^{1−n} C(2k−2, n) p_n x^{2k−2−n} = i p⁺(x) + p⁻(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodPolynomial {
    pub k: usize,
    pub periods: Vec<C64>,
    /// Coefficient of `x^j` at index `j`.
    pub coefficients: Vec<C64>,
    pub plus: Vec<C64>,
    pub minus: Vec<C64>,
}

impl PeriodPolynomial {
    pub fn from_periods(k: usize, periods: Vec<C64>) -> Result<Self> {
        let w = 2 * k - 2;
        if periods.len() != w + 1 {
            return Err(Error::InvalidArgument(format!("expected {} periods, got {}", w + 1, periods.len())));
        }
        let mut coefficients = vec![C64::new(0.0, 0.0); w + 1];
        let mut plus = coefficients.clone();
        let mut minus = coefficients.clone();
        for (n, p) in periods.iter().enumerate() {
            let b = binomial(w, n);
            coefficients[w - n] = I.powi(1 - n as i32) * b * p;
            let sgn = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if n % 2 == 0 {
                plus[w - n] = p * (sgn * b);
            } else if n < w {
                minus[w - n] = p * (sgn * b);
            }
        }
        Ok(PeriodPolynomial { k, periods, coefficients, plus, minus })
    }

    pub fn eval(&self, x: f64) -> C64 {
        horner(&self.coefficients, x)
    }

    /// `i p⁺ + p⁻`, which reproduces `coefficients`.
    pub fn recombined(&self) -> Vec<C64> {
        self.plus.iter().zip(&self.minus).map(|(p, m)| I * p + m).collect()
    }
}

fn horner(c: &[C64], x: f64) -> C64 {
    c.iter().rev().fold(C64::new(0.0, 0.0), |acc, a| acc * x + a)
}

/// The class paired with its image under conjugation by `diag(−1, 1)`.
pub fn symmetrize(cls: &FormClass) -> (FormClass, FormClass) {
    (cls.clone(), cls.mirror())
}

/// Kronecker symbol `(d/n)` for `n ≥ 1`.
pub fn kronecker(d: i64, n: u64) -> i32 {
    let mut n = n;
    let mut result = 1;
    while n % 2 == 0 {
        n /= 2;
        result *= match d.rem_euclid(8) {
            1 | 7 => 1,
            3 | 5 => -1,
            _ => 0,
        };
    }
    // Jacobi symbol (d/n) for odd n
    let mut a = d.rem_euclid(n as i64) as u64;
    let mut m = n;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if m % 8 == 3 || m % 8 == 5 {
                result = -result;
            }
        }
        core::mem::swap(&mut a, &mut m);
        if a % 4 == 3 && m % 4 == 3 {
            result = -result;
        }
        a %= m;
    }
    if m == 1 {
        result
    } else {
        0
    }
}

/// `L_D(s) = Σ (D/n) n^{−s} = D^{−s} Σ_{r=1}^{D} (D/r) ζ(s, r/D)`.
pub fn dirichlet_l(d: i64, s: f64) -> Result<f64> {
    if d <= 1 || s <= 1.0 {
        return Err(Error::InvalidArgument(format!("L_D(s) needs D > 1 and s > 1, got {d}, {s}")));
    }
    let df = d as f64;
    let mut acc = 0.0;
    for r in 1..=d {
        let chi = kronecker(d, r as u64);
        if chi != 0 {
            acc += chi as f64 * hurwitz_zeta(s, r as f64 / df)?;
        }
    }
    Ok(acc * libm::pow(df, -s))
}

/// `ζ_Q(s) = Σ Q(m, n)^{−s}` over the lattice points with `Q > 0` modulo the
/// automorphs of `Q`.
///
/// Points are taken from the wedge between a positive vector `v0` and its
/// image under the fundamental automorph, up to `Q ≤ bound`; the rest is
/// replaced by its asymptotic count `bound·ln ε/√D`.
pub fn form_zeta(q: &QForm, s: f64, bound: f64) -> Result<f64> {
    if s <= 1.0 {
        return Err(Error::InvalidArgument(format!("ζ_Q(s) needs s > 1, got {s}")));
    }
    let g = fundamental_automorph(q);
    let [a, b, c] = q.to_i64().ok_or_else(|| Error::InvalidArgument(format!("{q} too large")))?;
    let v0 = positive_vector(a, b, c);
    let gi = |x: &BigInt| x.to_i64().expect("small automorph");
    let (ga, gb, gc, gd) = (gi(g.a()), gi(g.b()), gi(g.c()), gi(g.d()));
    let v1 = (ga * v0.0 + gb * v0.1, gc * v0.0 + gd * v0.1);
    let det = |u: (i64, i64), v: (i64, i64)| (u.0 as i128) * (v.1 as i128) - (u.1 as i128) * (v.0 as i128);
    let orient = det(v0, v1).signum();
    let qv = |v: (i64, i64)| (a as i128) * (v.0 as i128).pow(2) + (b as i128) * (v.0 as i128) * (v.1 as i128) + (c as i128) * (v.1 as i128).pow(2);
    // the wedge {Q ≤ bound} lies in a box given by the extreme points of the
    // hyperbola arc between the two rays
    let q0 = qv(v0) as f64;
    let q1 = qv(v1) as f64;
    let mut extent: f64 = 0.0;
    let (p0, p1) = ((v0.0 as f64 / libm::sqrt(q0), v0.1 as f64 / libm::sqrt(q0)), (v1.0 as f64 / libm::sqrt(q1), v1.1 as f64 / libm::sqrt(q1)));
    for j in 0..=512 {
        let t = j as f64 / 512.0;
        let (x, y) = (p0.0 * (1.0 - t) + p1.0 * t, p0.1 * (1.0 - t) + p1.1 * t);
        let qq = a as f64 * x * x + b as f64 * x * y + c as f64 * y * y;
        if qq > 0.0 {
            extent = extent.max(x.abs().max(y.abs()) / libm::sqrt(qq));
        }
    }
    let r = libm::ceil(1.05 * extent * libm::sqrt(bound)) as i64 + 1;
    let mut sum = 0.0;
    for x in -r..=r {
        for y in -r..=r {
            let v = (x, y);
            if orient * det(v0, v).signum() < 0 || orient * det(v, v1).signum() <= 0 {
                continue;
            }
            let val = qv(v);
            if val > 0 && (val as f64) <= bound {
                sum += libm::pow(val as f64, -s);
            }
        }
    }
    let dd = (b * b - 4 * a * c) as f64;
    let t = crate::qforms::to_f64(&g.trace());
    let eps = (t + libm::sqrt(t * t - 4.0)) / 2.0;
    Ok(sum + libm::log(eps) / libm::sqrt(dd) * libm::pow(bound, 1.0 - s) / (s - 1.0))
}

fn positive_vector(a: i64, b: i64, c: i64) -> (i64, i64) {
    if a > 0 {
        return (1, 0);
    }
    if c > 0 {
        return (0, 1);
    }
    for n in 1.. {
        for m in -n..=n {
            for v in [(m, n), (n, m)] {
                if a * v.0 * v.0 + b * v.0 * v.1 + c * v.1 * v.1 > 0 {
                    return v;
                }
            }
        }
    }
    unreachable!()
}

#[derive(Clone, Debug, PartialEq)]
pub enum ZetaKind {
    Riemann,
    FormZeta(QForm),
    DirichletL(i64),
}

pub fn arithmetic_zeta(kind: &ZetaKind, s: u32) -> Result<f64> {
    let sf = s as f64;
    match kind {
        ZetaKind::Riemann if s >= 2 => riemann_zeta(sf),
        ZetaKind::FormZeta(q) if s >= 2 => form_zeta(q, sf, 2e5),
        ZetaKind::DirichletL(d) if s >= 2 => dirichlet_l(*d, sf),
        _ => Err(Error::InvalidArgument(format!("s = {s} out of range for {kind:?}"))),
    }
}

/// Best rational `p/q` with `q ≤ max_den` from the continued fraction of `x`,
/// if it lies within `tol` of `x`.
pub fn recognize_rational(x: f64, max_den: i64, tol: f64) -> Option<(i64, i64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut y = x;
    for _ in 0..64 {
        let a = libm::floor(y);
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let (h2, k2) = (ai * h1 + h0, ai * k1 + k0);
        if k2 > max_den as i128 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if (h1 as f64 / k1 as f64 - x).abs() <= tol {
            return Some((h1 as i64, k1 as i64));
        }
        let frac = y - a;
        if frac == 0.0 {
            break;
        }
        y = 1.0 / frac;
    }
    None
}

/// Which period formula a report refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PeriodFormula {
    /// Symmetrised periods of one class against its forms with `a < 0 < c`
    /// and `ζ_Q(k)`.
    Class,
    /// Even periods of the sum over all classes of a discriminant against
    /// `ζ(k) L_D(k)`.
    Discriminant,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecognizedPeriod {
    pub n: usize,
    pub value: f64,
    pub p: i64,
    pub q: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodReport {
    pub k: usize,
    pub d: i64,
    pub formula: PeriodFormula,
    pub lhs: Vec<C64>,
    pub rhs: Vec<f64>,
    /// `lhs_j / rhs_j` over the coefficients where either side is non-zero.
    pub ratios: Vec<C64>,
    pub max_ratio_deviation: f64,
    /// Both polynomials vanish identically; the ratio test is then empty.
    pub both_vanish: bool,
    /// Deviation against the right side with its coefficients in reverse
    /// order.
    pub reversed_deviation: f64,
    /// Class formula only: deviation against the mean of the right sides of
    /// the classes of `Q` and `−Q`. For odd `k` the left side is the same
    /// for both.
    pub paired_deviation: Option<f64>,
    pub recognized_periods: Vec<RecognizedPeriod>,
    pub unrecognized_periods: Vec<(usize, f64)>,
    pub symmetry_residuals: Vec<f64>,
}

/// Forms `(a, b, c)` of discriminant `d` with `a < 0 < c` and `|a|, c ≤ bound`.
/// Since `b² = d − 4|a|c`, every such form has `|a| c ≤ d/4`, so any
/// `bound ≥ d/4` gives the full list.
pub fn negative_a_forms(d: i64, bound: i64) -> Vec<QForm> {
    let mut out = Vec::new();
    for na in 1..=bound {
        for c in 1..=bound {
            let b2 = d - 4 * na * c;
            if b2 < 0 {
                break;
            }
            let b = libm::sqrt(b2 as f64) as i64;
            if b * b != b2 {
                continue;
            }
            let bs: &[i64] = if b == 0 { &[0] } else { &[b, -b] };
            for &bb in bs {
                if let Ok(q) = QForm::from_i64(-na, bb, c) {
                    out.push(q);
                }
            }
        }
    }
    out
}

/// Coefficients of `Σ (a x² + sign·b x + c)^{k−1}` over the forms with
/// `a < 0 < c` of the given classes.
fn negative_a_sum(classes: &[FormClass], k: usize, sign: i64) -> Vec<f64> {
    let d = classes[0].disc_i64();
    let mut out = vec![0.0; 2 * k - 1];
    for q in negative_a_forms(d, (d / 4).max(1)) {
        if !classes.iter().any(|cl| cl.contains(&q)) {
            continue;
        }
        let [a, b, c] = q.to_i64().expect("small form");
        // (c + sign·b x + a x²)^{k−1} by repeated multiplication
        let base = [c as f64, (sign * b) as f64, a as f64];
        let mut p = vec![1.0];
        for _ in 1..k {
            let mut nx = vec![0.0; p.len() + 2];
            for (i, x) in p.iter().enumerate() {
                for (j, y) in base.iter().enumerate() {
                    nx[i + j] += x * y;
                }
            }
            p = nx;
        }
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    out
}

/// `rhs_scale` is the size of the terms that cancel in `rhs`; the right side
/// counts as zero once it drops below `1e-7` of it.
fn compare(lhs: &[C64], rhs: &[f64], rhs_scale: f64) -> (Vec<C64>, f64, bool) {
    let ls = lhs.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let rs = rhs.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let lzero = ls < 1e-9;
    let rzero = rs < 1e-7 * rhs_scale.max(1.0);
    if lzero && rzero {
        return (Vec::new(), 0.0, true);
    }
    if lzero || rzero {
        return (Vec::new(), f64::INFINITY, false);
    }
    let mut ratios = Vec::new();
    let mut dev: f64 = 0.0;
    let jmax = (0..rhs.len()).max_by(|&i, &j| rhs[i].abs().total_cmp(&rhs[j].abs())).unwrap_or(0);
    let r0 = lhs[jmax] / rhs[jmax];
    for (l, r) in lhs.iter().zip(rhs) {
        let lsmall = l.norm() < 1e-9 * ls;
        let rsmall = r.abs() < 1e-9 * rs;
        if lsmall && rsmall {
            continue;
        }
        if lsmall != rsmall {
            // one side vanishes where the other does not; compare through the
            // common ratio instead
            dev = dev.max((l - r0 * *r).norm() / (r0.norm() * rs));
            continue;
        }
        let q = l / *r;
        ratios.push(q);
        dev = dev.max((q - r0).norm() / r0.norm());
    }
    (ratios, dev, false)
}

fn recognize_all(values: &[(usize, f64)], max_den: i64, tol: f64) -> (Vec<RecognizedPeriod>, Vec<(usize, f64)>) {
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for &(n, v) in values {
        match recognize_rational(v, max_den, tol * v.abs().max(1.0)) {
            Some((p, q)) => ok.push(RecognizedPeriod { n, value: v, p, q }),
            None => bad.push((n, v)),
        }
    }
    (ok, bad)
}

/// Options for the period formula checks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodCheckOptions {
    pub max_den: i64,
    pub rational_tol: f64,
    pub zeta_bound: f64,
}

impl Default for PeriodCheckOptions {
    fn default() -> Self {
        PeriodCheckOptions { max_den: 1_000_000, rational_tol: 1e-7, zeta_bound: 2e5 }
    }
}

/// `p⁺(F⁺) + p⁻(F⁻)` against
/// `−2 Σ_{a<0<c} (ax² − bx + c)^{k−1} − 2D^{k−1/2} ζ_Q(k) / (C(2k−2,k−1)(2k−1)ζ(2k)) (x^{2k−2} − 1)`.
pub fn verify_class_formula(handle: &SeriesHandle, opts: &PeriodCheckOptions) -> Result<PeriodReport> {
    let k = handle.k;
    let (c1, c2) = symmetrize(&handle.cls);
    let e1 = SeriesEvaluator::new(handle)?;
    let e2 = SeriesEvaluator::new(&SeriesHandle { cls: c2.clone(), ..handle.clone() })?;
    let p1 = periods(&e1)?;
    let p2 = periods(&e2)?;
    let plus: Vec<C64> = p1.iter().zip(&p2).map(|(a, b)| a + b).collect();
    let minus: Vec<C64> = p1.iter().zip(&p2).map(|(a, b)| (a - b) * I).collect();
    let pp = PeriodPolynomial::from_periods(k, plus.clone())?;
    let pm = PeriodPolynomial::from_periods(k, minus.clone())?;
    let lhs: Vec<C64> = pp.plus.iter().zip(&pm.minus).map(|(a, b)| a + b).collect();

    let d = handle.cls.disc_i64();
    let (rhs, scale) = class_rhs(&c1, k, opts)?;
    let (neg, neg_scale) = class_rhs(&c1.negate(), k, opts)?;
    let paired: Vec<f64> = rhs.iter().zip(&neg).map(|(a, b)| (a + b) / 2.0).collect();
    let paired_dev = compare(&lhs, &paired, scale.max(neg_scale)).1;
    let reversed_dev = compare(&lhs, &reversed(&rhs), scale).1;
    let (ratios, dev, both) = compare(&lhs, &rhs, scale);
    let mut cand = Vec::new();
    for n in 1..2 * k - 2 {
        let v = if n % 2 == 0 { plus[n] } else { minus[n] };
        cand.push((n, v.re));
    }
    let (rec, unrec) = recognize_all(&cand, opts.max_den, opts.rational_tol);
    let sym = (0..=2 * k - 2).filter(|n| n % 2 == 0).map(|n| (plus[2 * k - 2 - n] - plus[n]).norm()).collect();
    Ok(PeriodReport {
        k,
        d,
        formula: PeriodFormula::Class,
        lhs,
        rhs,
        ratios,
        max_ratio_deviation: dev,
        both_vanish: both,
        reversed_deviation: reversed_dev,
        paired_deviation: Some(paired_dev),
        recognized_periods: rec,
        unrecognized_periods: unrec,
        symmetry_residuals: sym,
    })
}

fn reversed(v: &[f64]) -> Vec<f64> {
    v.iter().rev().copied().collect()
}

/// Right side of the class formula and the size of its cancelling terms.
fn class_rhs(cls: &FormClass, k: usize, opts: &PeriodCheckOptions) -> Result<(Vec<f64>, f64)> {
    let dd = cls.disc_f64();
    let mut rhs: Vec<f64> = negative_a_sum(core::slice::from_ref(cls), k, -1).iter().map(|v| -2.0 * v).collect();
    let zq = form_zeta(cls.seed(), k as f64, opts.zeta_bound)?;
    let cst = 2.0 * libm::pow(dd, k as f64 - 0.5) * zq
        / (binomial(2 * k - 2, k - 1) * (2 * k - 1) as f64 * riemann_zeta(2.0 * k as f64)?);
    let scale = rhs.iter().fold(cst.abs(), |m, v| m.max(v.abs()));
    rhs[2 * k - 2] -= cst;
    rhs[0] += cst;
    Ok((rhs, scale))
}

/// `p⁺(F_{k,D})` against
/// `−Σ_{a<0<c} (ax² + bx + c)^{k−1} − D^{k−1/2} ζ(k) L_D(k) / (C(2k−2,k−1)(2k−1)ζ(2k)) (x^{2k−2} − 1)`
/// for odd `k`.
pub fn verify_discriminant_formula(k: usize, d: i64, template: &SeriesHandle, opts: &PeriodCheckOptions) -> Result<PeriodReport> {
    if k % 2 == 0 {
        return Err(Error::InvalidArgument(format!("k = {k} must be odd")));
    }
    let classes = class_representatives(&BigInt::from(d))?;
    let mut total = vec![C64::new(0.0, 0.0); 2 * k - 1];
    for cls in &classes {
        let h = SeriesHandle { k, cls: cls.clone(), ..template.clone() };
        let ev = SeriesEvaluator::new(&h)?;
        for (t, p) in total.iter_mut().zip(periods(&ev)?) {
            *t += p;
        }
    }
    let pp = PeriodPolynomial::from_periods(k, total.clone())?;
    let lhs = pp.plus.clone();
    let dd = d as f64;
    let mut rhs: Vec<f64> = negative_a_sum(&classes, k, 1).iter().map(|v| -v).collect();
    let cst = libm::pow(dd, k as f64 - 0.5) * riemann_zeta(k as f64)? * dirichlet_l(d, k as f64)?
        / (binomial(2 * k - 2, k - 1) * (2 * k - 1) as f64 * riemann_zeta(2.0 * k as f64)?);
    let scale = rhs.iter().fold(cst.abs(), |m, v| m.max(v.abs()));
    rhs[2 * k - 2] -= cst;
    rhs[0] += cst;
    let reversed_dev = compare(&lhs, &reversed(&rhs), scale).1;
    let (ratios, dev, both) = compare(&lhs, &rhs, scale);
    let cand: Vec<(usize, f64)> = (1..2 * k - 2).filter(|n| n % 2 == 0).map(|n| (n, total[n].re)).collect();
    let (rec, unrec) = recognize_all(&cand, opts.max_den, opts.rational_tol);
    let sym = (0..=2 * k - 2).filter(|n| n % 2 == 0).map(|n| (total[2 * k - 2 - n] - total[n]).norm()).collect();
    Ok(PeriodReport {
        k,
        d,
        formula: PeriodFormula::Discriminant,
        lhs,
        rhs,
        ratios,
        max_ratio_deviation: dev,
        both_vanish: both,
        reversed_deviation: reversed_dev,
        paired_deviation: None,
        recognized_periods: rec,
        unrecognized_periods: unrec,
        symmetry_residuals: sym,
    })
}

/// Whether every entry of `v` is zero.
pub fn is_zero_poly(v: &[C64]) -> bool {
    v.iter().all(|x| x.is_zero())
}
#[cfg(test)]
mod tests {
    use super::*;
    use crate::poincare::{Flavor, TruncationPolicy};
    use crate::qforms::reduction_cycle;
    use crate::specialfn::integrate_real;

    fn evaluator(f: (i64, i64, i64), k: usize) -> SeriesEvaluator {
        let cls = reduction_cycle(&QForm::from_i64(f.0, f.1, f.2).unwrap());
        let tol = if k == 2 { 1e-5 } else { 1e-8 };
        let h = SeriesHandle::new(k, cls, TruncationPolicy { height: 200, tol, max_doublings: 6 }, Flavor::Parson).unwrap();
        SeriesEvaluator::new(&h).unwrap()
    }

    #[test]
    fn split_point_independent() {
        let ev = evaluator((1, 1, -1), 3);
        for n in 0..=4 {
            let a = period(&ev, n, 1.0).unwrap();
            let b = period(&ev, n, 2.0).unwrap();
            assert!((a - b).norm() < 2e-8, "n = {n}: {a} vs {b}");
        }
        assert!(period(&ev, 5, 1.0).is_err());
    }

    #[test]
    fn polynomial_matches_direct_quadrature() {
        let ev = evaluator((1, 2, -2), 2);
        let pp = PeriodPolynomial::from_periods(2, periods(&ev).unwrap()).unwrap();
        let x = 2.0;
        let f = |t: f64| ev.eval(C64::new(0.0, t)).unwrap() * (C64::new(x, -t)).powu(2) * I;
        let opts = QuadOptions { abs_tol: 1e-11, rel_tol: 1e-11, max_evals: 400_000 };
        let direct = integrate_real(&f, 1e-3, 1.0, &opts).unwrap().value
            + integrate_to_infinity(&f, 1.0, &opts).unwrap().value;
        // F(it) stays bounded as t → 0, so the piece below 1e-3 is tiny
        let head = f(1e-3) * 1e-3;
        let got = pp.eval(x);
        assert!((got - direct).norm() < 1e-6 + head.norm() * 2.0, "{got} vs {direct}");
        assert!(got.norm() > 1.0);
    }

    #[test]
    fn parity_split_recombines() {
        let ps: Vec<C64> = (0..7).map(|n| C64::new(1.0 + n as f64, 0.5 - n as f64 * 0.3)).collect();
        let pp = PeriodPolynomial::from_periods(4, ps).unwrap();
        for (a, b) in pp.recombined().iter().zip(&pp.coefficients) {
            assert!((a - b).norm() < 1e-10);
        }
        assert!(PeriodPolynomial::from_periods(4, vec![C64::new(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn mirror_pairs() {
        let cls = reduction_cycle(&QForm::from_i64(1, 1, -1).unwrap());
        let (a, b) = symmetrize(&cls);
        assert!(a.contains(&QForm::from_i64(1, 1, -1).unwrap()));
        assert!(b.contains(&QForm::from_i64(1, -1, -1).unwrap()));
        assert_eq!(b.mirror(), a);
        assert_eq!(b.disc_i64(), 5);
    }

    #[test]
    fn kronecker_values() {
        let five: Vec<i32> = (1..=10).map(|n| kronecker(5, n)).collect();
        assert_eq!(five, [1, -1, -1, 1, 0, 1, -1, -1, 1, 0]);
        let eight: Vec<i32> = (1..=8).map(|n| kronecker(8, n)).collect();
        assert_eq!(eight, [1, 0, -1, 0, -1, 0, 1, 0]);
        assert_eq!(kronecker(12, 5), -1);
        assert_eq!(kronecker(12, 11), 1);
        assert_eq!(kronecker(13, 3), 1);
    }

    #[test]
    fn zeta_values() {
        let z4 = arithmetic_zeta(&ZetaKind::Riemann, 4).unwrap();
        assert!((z4 - libm::pow(core::f64::consts::PI, 4.0) / 90.0).abs() < 1e-12);
        let direct: f64 = (1..1_000_000u64).map(|n| kronecker(5, n) as f64 / (n as f64 * n as f64)).sum();
        assert!((dirichlet_l(5, 2.0).unwrap() - direct).abs() < 1e-10);
        assert!(arithmetic_zeta(&ZetaKind::Riemann, 1).is_err());
        assert!(dirichlet_l(5, 1.0).is_err());
    }

    #[test]
    fn form_zeta_stable_and_factorizes() {
        let q = QForm::from_i64(1, 1, -1).unwrap();
        let a = form_zeta(&q, 3.0, 5e4).unwrap();
        let b = form_zeta(&q, 3.0, 2e5).unwrap();
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        // one class of discriminant 5
        let zl = riemann_zeta(3.0).unwrap() * dirichlet_l(5, 3.0).unwrap();
        assert!((b - zl).abs() < 1e-8, "{b} vs {zl}");
        let c = form_zeta(&QForm::from_i64(-1, 1, 1).unwrap(), 3.0, 2e5).unwrap();
        assert!((c - b).abs() < 1e-8);
    }

    #[test]
    fn rational_recognition() {
        assert_eq!(recognize_rational(0.3333333333, 1_000_000, 1e-7), Some((1, 3)));
        assert_eq!(recognize_rational(-2.5, 10, 1e-12), Some((-5, 2)));
        assert_eq!(recognize_rational(core::f64::consts::PI, 100, 1e-9), None);
        let (p, q) = recognize_rational(0.142857142857, 1000, 1e-9).unwrap();
        assert!((p as f64 / q as f64 - 0.142857142857).abs() < 1e-9);
    }

    #[test]
    fn negative_a_enumeration_complete() {
        for d in [5i64, 8, 12, 13, 17, 21] {
            let a = negative_a_forms(d, d / 4);
            let b = negative_a_forms(d, d / 2);
            assert_eq!(a, b);
            assert!(a.iter().all(|q| q.disc() == BigInt::from(d)));
        }
        assert_eq!(negative_a_forms(5, 1).len(), 2);
    }

    #[test]
    fn class_formula_d5() {
        let opts = PeriodCheckOptions::default();
        let ev = evaluator((1, 1, -1), 3);
        let r = verify_class_formula(&ev.handle, &opts).unwrap();
        assert!(r.max_ratio_deviation < 1e-6, "{r:?}");
        assert!(r.unrecognized_periods.is_empty());
        let p2 = r.recognized_periods.iter().find(|p| p.n == 2).unwrap();
        assert_eq!((p2.p, p2.q), (8, 1));

        let ev = evaluator((1, 1, -1), 2);
        let r = verify_class_formula(&ev.handle, &opts).unwrap();
        assert!(r.both_vanish);
    }

    #[test]
    fn class_formula_without_negation_symmetry() {
        let opts = PeriodCheckOptions::default();
        let r = verify_class_formula(&evaluator((1, 2, -2), 3).handle, &opts).unwrap();
        assert!(r.max_ratio_deviation > 1e-2);
        assert!(r.paired_deviation.unwrap() < 1e-8, "{r:?}");
        let r = verify_class_formula(&evaluator((1, 2, -2), 2).handle, &opts).unwrap();
        assert!(r.max_ratio_deviation > 1e-2);
        assert!(r.reversed_deviation < 1e-5, "{r:?}");
    }

    #[test]
    fn discriminant_formula_d8() {
        let ev = evaluator((1, 2, -1), 3);
        let r = verify_discriminant_formula(3, 8, &ev.handle, &PeriodCheckOptions::default()).unwrap();
        assert!(r.max_ratio_deviation < 1e-6, "{r:?}");
        assert!(r.reversed_deviation > 1e-2);
        assert!(verify_discriminant_formula(2, 8, &ev.handle, &PeriodCheckOptions::default()).is_err());
    }
}
