//! Fourier coefficients, twisted L-values of the modular integral at integer
//! points, the central value identity, and the `(2k − 1)`-fold primitive of
//! the cocycle.

use alloc::format;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::f64::consts::PI;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};

use crate::error::{Error, Result};
use crate::geodesics::enumerate_vertical_intersections;
use crate::poincare::{Cocycle, Flavor, SeriesEvaluator};
use crate::qforms::{FormClass, GroupElement};
use crate::specialfn::{binomial, factorial, gauss_2f1, integrate_real, legendre_p, upper_gamma_int, QuadOptions};
use crate::C64;

const TWO_PI: f64 = 2.0 * PI;
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `a(n)` for `1 ≤ n ≤ coeffs.len()`, read off numerically from the series.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierTable {
    pub k: usize,
    pub cls: FormClass,
    pub coeffs: Vec<C64>,
    pub height_used: u64,
    pub y: f64,
}

impl FourierTable {
    pub fn get(&self, n: usize) -> Option<C64> {
        n.checked_sub(1).and_then(|i| self.coeffs.get(i)).copied()
    }
}

/// `e^{2πny} (1/M) Σ_j F(x_j + iy) e^{−2πinx_j}` on `M` equispaced points.
pub fn dft_coefficient(ev: &SeriesEvaluator, n: i64, y: f64, points: usize) -> Result<C64> {
    let mut s = C64::new(0.0, 0.0);
    for j in 0..points {
        let x = j as f64 / points as f64;
        s += ev.eval(C64::new(x, y))? * C64::from_polar(1.0, -TWO_PI * n as f64 * x);
    }
    Ok(s * (libm::exp(TWO_PI * n as f64 * y) / points as f64))
}

/// Coefficients `a(1..=n_max)` by a discrete Fourier transform on the line
/// `Im z = y`, with `4·n_max` sample points or more.
///
/// Rounding errors in the samples are amplified by `e^{2πny}`, so in double
/// precision only the first few coefficients come out accurately; the
/// closed-form table in [`SeriesEvaluator::coeffs`] has no such limit.
pub fn fourier_coefficients(ev: &SeriesEvaluator, n_max: usize, y: f64, points: Option<usize>) -> Result<FourierTable> {
    if n_max < 1 || !(y >= 0.8) {
        return Err(Error::InvalidArgument(format!("need n_max ≥ 1 and y ≥ 0.8, got {n_max}, {y}")));
    }
    let m = points.unwrap_or(8 * n_max).max(4 * n_max);
    let samples: Vec<C64> = (0..m).map(|j| ev.eval(C64::new(j as f64 / m as f64, y))).collect::<Result<_>>()?;
    let coeffs = (1..=n_max)
        .map(|n| {
            let mut s = C64::new(0.0, 0.0);
            for (j, v) in samples.iter().enumerate() {
                s += v * C64::from_polar(1.0, -TWO_PI * (n * j) as f64 / m as f64);
            }
            s * (libm::exp(TWO_PI * n as f64 * y) / m as f64)
        })
        .collect();
    Ok(FourierTable { k: ev.k(), cls: ev.cls().clone(), coeffs, height_used: ev.height_used, y })
}

fn check_cusp(d: &BigInt, c: &BigInt) -> Result<()> {
    if !c.is_positive() || !d.gcd(c).is_one() {
        return Err(Error::InvalidArgument(format!("cusp {d}/{c} needs c > 0 and gcd(c, d) = 1")));
    }
    Ok(())
}

/// Split point and quadrature tolerance for L-values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LValueOptions {
    /// The vertical line is split at `Im z = y0`.
    pub y0: f64,
    pub abs_tol: f64,
}

impl Default for LValueOptions {
    fn default() -> Self {
        LValueOptions { y0: 0.4, abs_tol: 1e-10 }
    }
}

/// `L(s, −d/c) = Σ a(n) e^{−2πind/c} n^{−s}` at a positive integer `s`,
/// through `∫_{−d/c}^{i∞} F(z) (z + d/c)^{s−1} dz = i^s Γ(s) (2π)^{−s} L(s, −d/c)`.
///
/// Above `y0` the integral is summed termwise from the Fourier expansion,
/// below it the series is integrated numerically.
pub fn l_value(ev: &SeriesEvaluator, s: usize, d: &BigInt, c: &BigInt, opts: &LValueOptions) -> Result<C64> {
    check_cusp(d, c)?;
    if s < 1 {
        return Err(Error::InvalidArgument("s must be a positive integer".into()));
    }
    let x0 = -crate::qforms::to_f64(d) / crate::qforms::to_f64(c);
    let y0 = opts.y0;
    let mut upper = C64::new(0.0, 0.0);
    for (i, a) in ev.coeffs.iter().enumerate() {
        let n = (i + 1) as f64;
        let term = a * C64::from_polar(1.0, TWO_PI * n * x0) * (upper_gamma_int(s, TWO_PI * n * y0) / libm::pow(TWO_PI * n, s as f64));
        upper += term;
    }
    let err: RefCell<Option<Error>> = RefCell::new(None);
    let f = |t: f64| match ev.eval(C64::new(x0, t)) {
        Ok(v) => v * libm::pow(t, s as f64 - 1.0),
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            C64::new(f64::NAN, f64::NAN)
        }
    };
    let q = QuadOptions { abs_tol: opts.abs_tol, rel_tol: 1e-12, max_evals: 400_000 };
    let lower = integrate_real(&f, 0.0, y0, &q);
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    let lower = lower.map_err(|e| match e {
        Error::NonConvergence { reached, .. } => Error::NonConvergence { what: "L-value quadrature near the cusp", reached },
        e => e,
    })?;
    Ok((upper + lower.value) * (libm::pow(TWO_PI, s as f64) / factorial(s - 1)))
}

/// `L(k, −d/c)`.
pub fn l_value_central(ev: &SeriesEvaluator, d: &BigInt, c: &BigInt, opts: &LValueOptions) -> Result<C64> {
    l_value(ev, ev.k(), d, c, opts)
}

/// Both sides of the central value identity.
#[derive(Clone, Debug, PartialEq)]
pub struct CentralValueReport {
    pub k: usize,
    pub l_value: C64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub intersections: usize,
    pub heights_used: u64,
}

/// `(−1)^{(k−1)/2} (k−1)!/(2π)^k Re L(k, −d/c)` against
/// `D^{(k−1)/2} Σ_p P_{k−1}(cos θ_p)` over the crossings with the vertical
/// geodesic at `−d/c`.
pub fn central_value_sides(ev: &SeriesEvaluator, d: &BigInt, c: &BigInt, opts: &LValueOptions) -> Result<CentralValueReport> {
    let k = ev.k();
    if k % 2 == 0 || k < 3 {
        return Err(Error::InvalidArgument(format!("k = {k} must be odd and at least 3")));
    }
    if ev.flavor() != Flavor::Parson {
        return Err(Error::InvalidArgument("central value identity needs the Parson flavour".into()));
    }
    let l = l_value_central(ev, d, c, opts)?;
    let sign = if (k - 1) / 2 % 2 == 0 { 1.0 } else { -1.0 };
    let lhs = sign * factorial(k - 1) / libm::pow(TWO_PI, k as f64) * l.re;
    let rhs = vertical_geometric_side(k, ev.cls(), d, c)?;
    let n = enumerate_vertical_intersections(ev.cls(), d, c)?.len();
    Ok(CentralValueReport { k, l_value: l, lhs, rhs, residual: (lhs - rhs).abs(), intersections: n, heights_used: ev.height_used })
}

/// `D^{(k−1)/2} Σ_p P_{k−1}(cos θ_p)` over the crossings with the vertical
/// geodesic at `−d/c`.
pub fn vertical_geometric_side(k: usize, cls: &FormClass, d: &BigInt, c: &BigInt) -> Result<f64> {
    check_cusp(d, c)?;
    let s: f64 = enumerate_vertical_intersections(cls, d, c)?.iter().map(|p| legendre_p(k - 1, p.cos_angle)).sum();
    Ok(libm::pow(cls.disc_f64(), (k as f64 - 1.0) / 2.0) * s)
}

/// Weighting of the hypergeometric sum in the primitive cocycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrimitiveNormalization {
    /// Weight `2 / (|A| A^{k−1})` per form, no binomial factor.
    Derived,
    /// Weight `1 / |A|` and the extra factor `1 / C(2k−2, k−1)`.
    WithBinomial,
}

/// `R(σ, z)`: a rational-hypergeometric sum over the forms crossing the
/// vertical at `−d/c` plus a polynomial in `cz + d` with L-value coefficients.
#[derive(Clone, Debug)]
pub struct PrimitiveCocycle {
    pub k: usize,
    pub sigma: GroupElement,
    pub normalization: PrimitiveNormalization,
    /// `(w, w', weight)` per crossing form.
    terms: Vec<(f64, f64, f64)>,
    prefactor: C64,
    /// Coefficients of `(cz + d)^n`.
    poly: Vec<C64>,
    c: f64,
    d: f64,
}

impl PrimitiveCocycle {
    pub fn new(
        ev: &SeriesEvaluator,
        sigma: &GroupElement,
        normalization: PrimitiveNormalization,
        opts: &LValueOptions,
    ) -> Result<Self> {
        let k = ev.k();
        if !sigma.c().is_positive() {
            return Err(Error::InvalidArgument(format!("{sigma} needs c > 0")));
        }
        let dd = ev.cls().disc_f64();
        let r = Cocycle::new(&ev.handle, sigma)?;
        let mut terms = Vec::new();
        for q in &r.forms {
            let [a, b, c] = q.to_f64();
            let sd = libm::sqrt(b * b - 4.0 * a * c);
            let weight = match normalization {
                PrimitiveNormalization::Derived => 2.0 / (a.abs() * libm::pow(a, k as f64 - 1.0)),
                PrimitiveNormalization::WithBinomial => 1.0 / a.abs(),
            };
            terms.push(((-b + sd) / (2.0 * a), (-b - sd) / (2.0 * a), weight));
        }
        let m2 = (-2.0 * PI * I).powi(2 * k as i32 - 1);
        let mut prefactor = m2 * (libm::pow(dd, k as f64 - 0.5) / (PI * factorial(2 * k - 1)));
        if normalization == PrimitiveNormalization::WithBinomial {
            prefactor /= binomial(2 * k - 2, k - 1);
        }
        let c = crate::qforms::to_f64(sigma.c());
        let d = crate::qforms::to_f64(sigma.d());
        let minus_a = -sigma.a().clone();
        let outer = m2 / factorial(2 * k - 2) * I / libm::pow(c, 2.0 * k as f64 - 1.0);
        let mut poly = Vec::with_capacity(2 * k - 1);
        for n in 0..=2 * k - 2 {
            let l = if ev.flavor() == Flavor::Katok {
                C64::new(0.0, 0.0)
            } else {
                l_value(ev, n + 1, &minus_a, sigma.c(), opts)?
            };
            let coeff = I.powi(n as i32) * (binomial(2 * k - 2, n) * libm::pow(c / TWO_PI, n as f64 + 1.0) * factorial(n));
            poly.push(outer * coeff * l);
        }
        Ok(PrimitiveCocycle { k, sigma: sigma.clone(), normalization, terms, prefactor, poly, c, d })
    }

    /// The hypergeometric sum alone.
    pub fn singular_part(&self, z: C64) -> Result<C64> {
        let mut s = C64::new(0.0, 0.0);
        for &(w, wp, weight) in &self.terms {
            let b = z - wp;
            if b.norm() == 0.0 {
                return Err(Error::Pole(format!("{z}")));
            }
            let x = C64::new(1.0, 0.0) - (z - w) / b;
            s += gauss_2f1(self.k as f64, 1.0, 2.0 * self.k as f64, x)? * weight / b;
        }
        Ok(s * self.prefactor)
    }

    pub fn polynomial_part(&self, z: C64) -> C64 {
        let u = z * self.c + self.d;
        self.poly.iter().rev().fold(C64::new(0.0, 0.0), |acc, p| acc * u + p)
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        Ok(self.singular_part(z)? + self.polynomial_part(z))
    }

    /// The points `w'` of the crossing forms, where the singular part has its
    /// branch points.
    pub fn poles(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.1).collect()
    }
}
