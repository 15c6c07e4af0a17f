//! The hyperbolic Poincaré series of weight `2k` attached to a class of forms:
//! Katok's cusp form `f_{k,γ}` (no sign factor) and Parson's modular integral
//! `F_{k,γ}` (sign factor `sign(A)`), together with the rational cocycle
//! `r_{k,γ}(σ, z) = (F|_{2k}σ)(z) − F(z)`.
//!
//! The orbit sum is grouped into orbits of `T = (1, 1; 0, 1)`. Each such orbit
//! sums in closed form, giving the Fourier coefficients directly, so only the
//! bound `|A| ≤ H` on the `T`-reduced representatives is truncated.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::geodesics::{crossing_sign, enumerate_vertical_intersections};
use crate::qforms::{enumerate_orbit_bounded, enumerate_t_reduced_range, form_from_matrix, FormClass, GroupElement, QForm};
use crate::specialfn::{binomial, factorial};
use crate::C64;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    Katok,
    Parson,
}

/// Truncation controls shared by every series and integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationPolicy {
    pub height: u64,
    pub tol: f64,
    pub max_doublings: u32,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy { height: 500, tol: 1e-6, max_doublings: 4 }
    }
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.height < 1 || !(self.tol > 0.0) || self.max_doublings < 1 {
            return Err(Error::InvalidArgument(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesHandle {
    pub k: usize,
    pub cls: FormClass,
    pub policy: TruncationPolicy,
    pub flavor: Flavor,
}

impl SeriesHandle {
    pub fn new(k: usize, cls: FormClass, policy: TruncationPolicy, flavor: Flavor) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!("weight parameter k = {k} must be at least 2")));
        }
        policy.validate()?;
        Ok(SeriesHandle { k, cls, policy, flavor })
    }

    /// `D^{k − 1/2}/π`.
    pub fn prefactor(&self) -> f64 {
        libm::pow(self.cls.disc_f64(), self.k as f64 - 0.5) / PI
    }
}

/// Fourier coefficients `φ(m)`, `m = 1..=n`, of `Σ_n Q(z + n, 1)^{−k}`.
pub fn t_orbit_coefficients(q: &QForm, k: usize, n: usize) -> Vec<C64> {
    let [a, b, _] = q.to_f64();
    let d = crate::qforms::to_f64(&q.disc());
    let sd = libm::sqrt(d);
    let c = -b / (2.0 * a);
    let r = sd / (2.0 * a.abs());
    let w = (-b + sd) / (2.0 * a);
    let wp = (-b - sd) / (2.0 * a);
    let delta = w - wp;
    let ak = libm::pow(a, -(k as f64));
    let kf = k as f64;
    let mut out = vec![C64::zero(); n];
    // partial fraction weights of (u − w)^{−k}(u − w')^{−k}
    let alpha: Vec<f64> = (1..=k)
        .map(|j| {
            let s = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
            s * binomial(2 * k - j - 1, k - j) * libm::pow(delta, j as f64 - 2.0 * kf)
        })
        .collect();
    let beta: Vec<f64> = (1..=k)
        .map(|j| {
            let s = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
            s * binomial(2 * k - j - 1, k - j) * libm::pow(-delta, j as f64 - 2.0 * kf)
        })
        .collect();
    for m in 1..=n {
        let mf = m as f64;
        let x = TWO_PI * mf * r;
        if x <= 4.0 {
            // expansion about the centre of the circle
            let x2 = x * x;
            let mut s = 0.0;
            let mut pw = 1.0;
            for j in 0..200 {
                let t = binomial(k + j - 1, j) * pw / factorial(2 * k + 2 * j - 1);
                let t = if j % 2 == 0 { t } else { -t };
                s += t;
                if j > 2 && t.abs() < 1e-18 * s.abs() {
                    break;
                }
                pw *= x2;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let mag = sign * libm::pow(TWO_PI, 2.0 * kf) * libm::pow(mf, 2.0 * kf - 1.0) * ak * s;
            out[m - 1] = C64::from_polar(1.0, -TWO_PI * mf * c) * mag;
        } else {
            let ew = C64::from_polar(1.0, -TWO_PI * mf * w);
            let ewp = C64::from_polar(1.0, -TWO_PI * mf * wp);
            let mut tot = C64::zero();
            let mut l = C64::new(1.0, 0.0);
            for j in 1..=k {
                // (−2πi)^j m^{j−1}/(j−1)!
                l = if j == 1 { C64::new(0.0, -TWO_PI) } else { l * C64::new(0.0, -TWO_PI) * mf / (j - 1) as f64 };
                tot += l * (ew * alpha[j - 1] + ewp * beta[j - 1]);
            }
            out[m - 1] = tot * ak;
        }
    }
    out
}

/// Coefficients contributed by the `T`-reduced forms with `lo ≤ |A| ≤ hi`,
/// before the overall factor `−D^{k−1/2}/π`.
/// Coefficient contribution of the forms with `lo ≤ |A| ≤ hi`, and how many
/// forms there were.
fn coefficient_block(h: &SeriesHandle, lo: u64, hi: u64, n: usize) -> (Vec<C64>, usize) {
    let mut acc = vec![C64::zero(); n];
    let mut count = 0;
    for q in enumerate_t_reduced_range(&h.cls, lo, hi) {
        count += 1;
        let s = match h.flavor {
            Flavor::Katok => 1.0,
            Flavor::Parson => q.sign() as f64,
        };
        for (a, v) in acc.iter_mut().zip(t_orbit_coefficients(&q, h.k, n)) {
            *a += v * s;
        }
    }
    (acc, count)
}

/// Evaluates `f_{k,γ}` or `F_{k,γ}` anywhere in the upper half plane.
#[derive(Clone, Debug)]
pub struct SeriesEvaluator {
    pub handle: SeriesHandle,
    /// `a(m)` for `m = 1..=coeffs.len()`.
    pub coeffs: Vec<C64>,
    pub height_used: u64,
    /// Last observed doubling change, weighted as in the stopping rule.
    pub achieved_tol: f64,
    s_cocycle: Cocycle,
}

const Y_FD: f64 = 0.8660254037844386;

fn weighted_max(v: &[C64], y: f64) -> f64 {
    v.iter().enumerate().map(|(i, a)| a.norm() * libm::exp(-TWO_PI * (i + 1) as f64 * y)).fold(0.0, f64::max)
}

impl SeriesEvaluator {
    /// Builds the Fourier table by doubling the height until the change on
    /// the fundamental domain falls below the policy tolerance.
    pub fn new(h: &SeriesHandle) -> Result<Self> {
        Self::with_terms(h, 60)
    }

    pub fn with_terms(h: &SeriesHandle, n: usize) -> Result<Self> {
        h.policy.validate()?;
        let pre = -h.prefactor();
        let mut height = h.policy.height;
        let mut raw = coefficient_block(h, 1, height, n).0;
        let mut last = f64::INFINITY;
        for _ in 0..h.policy.max_doublings {
            let (extra, count) = coefficient_block(h, height + 1, 2 * height, n);
            height *= 2;
            let delta: Vec<C64> = extra.iter().map(|e| e * pre).collect();
            for (r, e) in raw.iter_mut().zip(&extra) {
                *r += e;
            }
            let coeffs: Vec<C64> = raw.iter().map(|r| r * pre).collect();
            last = weighted_max(&delta, Y_FD);
            // an empty block says nothing about the tail
            if count > 0 && last <= h.policy.tol * weighted_max(&coeffs, Y_FD).max(1.0) {
                return Ok(SeriesEvaluator {
                    s_cocycle: Cocycle::new(h, &GroupElement::s())?,
                    handle: h.clone(),
                    coeffs,
                    height_used: height,
                    achieved_tol: last,
                });
            }
        }
        Err(Error::NonConvergence { what: "series truncation", reached: format!("height {height}, change {last:e}") })
    }

    /// Same as [`SeriesEvaluator::new`] but accepts the last table even when
    /// the stopping rule was not met.
    pub fn new_best_effort(h: &SeriesHandle) -> Result<Self> {
        match Self::new(h) {
            Ok(e) => Ok(e),
            Err(Error::NonConvergence { .. }) => {
                let mut p = h.policy;
                p.tol = f64::INFINITY;
                p.height = h.policy.height << (h.policy.max_doublings - 1);
                p.max_doublings = 1;
                let mut e = Self::new(&SeriesHandle { policy: p, ..h.clone() })?;
                e.handle.policy = h.policy;
                Ok(e)
            }
            Err(e) => Err(e),
        }
    }

    pub fn k(&self) -> usize {
        self.handle.k
    }

    pub fn flavor(&self) -> Flavor {
        self.handle.flavor
    }

    pub fn cls(&self) -> &FormClass {
        &self.handle.cls
    }

    /// `Σ a(m) e^{2πimz}`; accurate when `Im z` is not small.
    pub fn fourier_sum(&self, z: C64) -> C64 {
        let q = C64::from_polar(libm::exp(-TWO_PI * z.im), TWO_PI * z.re);
        let mut acc = C64::zero();
        let mut qm = C64::new(1.0, 0.0);
        for a in &self.coeffs {
            qm *= q;
            acc += a * qm;
        }
        acc
    }

    /// Value at `z` with `Im z > 0`, through reduction to the standard
    /// fundamental domain: `F(z) = z^{−2k} F(−1/z) − r(S, z)` and `F(z + 1) = F(z)`.
    pub fn eval(&self, z: C64) -> Result<C64> {
        if !(z.im > 0.0) {
            return Err(Error::Domain(format!("Im z must be positive, got {z}")));
        }
        let k2 = 2 * self.handle.k as i32;
        let mut z = z;
        let mut mult = C64::new(1.0, 0.0);
        let mut add = C64::zero();
        for _ in 0..10_000 {
            z.re -= libm::floor(z.re + 0.5);
            if z.norm_sqr() >= 1.0 - 1e-12 {
                return Ok(mult * self.fourier_sum(z) + add);
            }
            if self.handle.flavor == Flavor::Parson {
                add -= mult * self.s_cocycle.eval(z)?;
            }
            mult *= z.powi(-k2);
            z = -z.inv();
        }
        Err(Error::NonConvergence { what: "fundamental domain reduction", reached: format!("{z}") })
    }

    /// `(F|_{2k}g)(z) = (cz + d)^{−2k} F(gz)`.
    pub fn eval_slash(&self, g: &GroupElement, z: C64) -> Result<C64> {
        let j = g.j(z);
        Ok(j.powi(-(2 * self.handle.k as i32)) * self.eval(g.act(z))?)
    }
}

/// Direct orbit sum over `max(|A|, |C|) ≤ height`, times `−D^{k−1/2}/π`.
/// Slow; used as an independent check.
pub fn direct_orbit_sum(h: &SeriesHandle, z: C64, height: u64) -> C64 {
    let mut s = C64::zero();
    for q in enumerate_orbit_bounded(&h.cls, height) {
        let v = q.eval_c64(z).powi(-(h.k as i32));
        s += match h.flavor {
            Flavor::Katok => v,
            Flavor::Parson => v * q.sign() as f64,
        };
    }
    s * -h.prefactor()
}

/// Value of the series with the achieved truncation height.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesValue {
    pub value: C64,
    pub height_used: u64,
}

/// Truncated series at `z`, doubling the height until two successive values
/// differ by less than the tolerance.
pub fn eval_series(h: &SeriesHandle, z: C64) -> Result<SeriesValue> {
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!("Im z must be positive, got {z}")));
    }
    // enough Fourier terms to reach e^{−40} at this height
    let n = ((40.0 / (TWO_PI * z.im)) as usize).max(40);
    if n > 20_000 {
        return Err(Error::NonConvergence { what: "series evaluation", reached: format!("Im z = {}", z.im) });
    }
    let pre = -h.prefactor();
    let q = C64::from_polar(libm::exp(-TWO_PI * z.im), TWO_PI * z.re);
    let sum = |c: &[C64]| {
        let mut acc = C64::zero();
        let mut qm = C64::new(1.0, 0.0);
        for a in c {
            qm *= q;
            acc += a * qm;
        }
        acc * pre
    };
    let mut height = h.policy.height;
    let mut raw = coefficient_block(h, 1, height, n).0;
    let mut prev = sum(&raw);
    for _ in 0..h.policy.max_doublings {
        let (extra, count) = coefficient_block(h, height + 1, 2 * height, n);
        height *= 2;
        for (r, e) in raw.iter_mut().zip(&extra) {
            *r += e;
        }
        let cur = sum(&raw);
        if count > 0 && (cur - prev).norm() <= h.policy.tol * cur.norm().max(1.0) {
            return Ok(SeriesValue { value: cur, height_used: height });
        }
        prev = cur;
    }
    Err(Error::NonConvergence { what: "series evaluation", reached: format!("height {height}") })
}

/// The rational function `r_{k,γ}(σ, ·)`: a finite sum over the forms of the
/// class whose geodesic separates `σ⁻¹·i∞` from `i∞`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cocycle {
    pub k: usize,
    pub prefactor: f64,
    pub forms: Vec<QForm>,
    coeffs: Vec<[f64; 3]>,
}

impl Cocycle {
    pub fn new(h: &SeriesHandle, sigma: &GroupElement) -> Result<Cocycle> {
        let pre = 2.0 * h.prefactor();
        let mut c = sigma.c().clone();
        let mut d = sigma.d().clone();
        if c.is_negative() {
            c = -c;
            d = -d;
        }
        let forms = if c.is_zero() || h.flavor == Flavor::Katok {
            Vec::new()
        } else {
            enumerate_vertical_intersections(&h.cls, &d, &c)?.into_iter().map(|x| x.witness_form).collect()
        };
        let coeffs = forms.iter().map(|q: &QForm| q.to_f64()).collect();
        Ok(Cocycle { k: h.k, prefactor: pre, forms, coeffs })
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        let mut s = C64::zero();
        for [a, b, c] in &self.coeffs {
            let v = (z * *a + *b) * z + *c;
            if v.norm() == 0.0 {
                return Err(Error::Pole(format!("{z}")));
            }
            s += v.powi(-(self.k as i32)) * a.signum();
        }
        Ok(s * self.prefactor)
    }

    /// Real points where the function has poles.
    pub fn poles(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for q in &self.forms {
            let (a, b) = crate::geodesics::roots(q);
            v.push(a);
            v.push(b);
        }
        v
    }
}

/// `r_{k,γ}(σ, z)`.
pub fn eval_cocycle(h: &SeriesHandle, sigma: &GroupElement, z: C64) -> Result<C64> {
    Cocycle::new(h, sigma)?.eval(z)
}

/// Whether `sign(Q_γ∘σ^{−n}(1, 0))` settles on `sign(Q_γ(w'_σ, 1))` before
/// `n_max`.
pub fn sign_limit_check(cls: &FormClass, sigma: &GroupElement, n_max: u32) -> Result<bool> {
    let sigma = sigma.normalized()?;
    let qs = form_from_matrix(&sigma)?;
    let q = cls.seed();
    let target = -crossing_sign(q, &qs);
    let inv = sigma.inverse();
    let mut g = GroupElement::identity();
    let mut settled_at = None;
    for n in 1..=n_max {
        g = &g * &inv;
        let v: BigInt = q.eval(g.a(), g.c());
        let s = if v.is_positive() { 1 } else if v.is_negative() { -1 } else { 0 };
        if s == target {
            settled_at.get_or_insert(n);
        } else {
            settled_at = None;
        }
    }
    Ok(matches!(settled_at, Some(n) if n + 2 <= n_max))
}
