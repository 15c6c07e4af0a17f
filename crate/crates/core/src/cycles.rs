//! Cycle integrals of the Poincaré series against `Q_σ(z, 1)^{k−1}` and the
//! matching sums over intersection angles.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geodesics::{crosses, enumerate_closed_intersections, intersection_data};
use crate::poincare::{Cocycle, Flavor, SeriesEvaluator};
use crate::qforms::{form_from_matrix, FormClass, GroupElement, QForm};
use crate::specialfn::{
    contour_quadrature, gamma, gauss_2f1, integrate_to_infinity, legendre_p, PathPiece, QuadOptions,
};
use crate::C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Both sides of a cycle integral identity.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleIntegralReport {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub n_used: usize,
    pub heights_used: u64,
}

impl CycleIntegralReport {
    fn new(k: usize, lhs: f64, rhs: f64, n_used: usize, heights_used: u64) -> Self {
        CycleIntegralReport { k, lhs, rhs, residual: (lhs - rhs).abs(), n_used, heights_used }
    }
}

/// Power of `μ_p` in the geometric side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignExponent {
    /// `μ^{k−1}`, for the modular integral.
    KMinusOne,
    /// `μ^k`, for the cusp form.
    K,
}

/// Path from `z0` to `σ·z0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CyclePath {
    Arc,
    Segment,
}

/// Data of `σ` used by every cycle integral: the normalised matrix, its form,
/// and the circle of its geodesic.
#[derive(Clone, Debug)]
struct SigmaData {
    sigma: GroupElement,
    /// Conjugator from the normal form back to the input.
    conj: GroupElement,
    form: QForm,
    center: f64,
    radius: f64,
    coeffs: [f64; 3],
}

impl SigmaData {
    fn new(sigma: &GroupElement) -> Result<Self> {
        if !sigma.is_primitive_hyperbolic() {
            return Err(Error::NotHyperbolic(format!("{sigma} is not primitive hyperbolic")));
        }
        let (sigma, conj) = sigma.normal_form()?;
        let form = form_from_matrix(&sigma)?;
        let [a, b, c] = form.to_f64();
        let d = b * b - 4.0 * a * c;
        Ok(SigmaData { center: -b / (2.0 * a), radius: libm::sqrt(d) / (2.0 * a.abs()), coeffs: [a, b, c], sigma, conj, form })
    }

    /// Base point on the normalised geodesic: `h⁻¹·z0`, or the apex.
    fn base(&self, z0: Option<C64>) -> C64 {
        match z0 {
            Some(z) => self.conj.inverse().act(z),
            None => self.apex(),
        }
    }

    fn apex(&self) -> C64 {
        C64::new(self.center, self.radius)
    }

    fn q(&self, z: C64) -> C64 {
        let [a, b, c] = self.coeffs;
        (z * a + b) * z + c
    }

    fn path(&self, from: C64, to: C64, kind: CyclePath) -> PathPiece {
        match kind {
            CyclePath::Arc => PathPiece::arc_between(self.center, from, to),
            CyclePath::Segment => PathPiece::Segment { from, to },
        }
    }
}

fn check_pair(cls: &FormClass, s: &SigmaData) -> Result<()> {
    if cls.contains(&s.form) || cls.contains(&s.form.neg()) {
        return Err(Error::EquivalentClasses);
    }
    Ok(())
}

/// Runs a quadrature whose integrand may fail, reporting the first failure.
fn guarded_contour<F: Fn(C64) -> Result<C64>>(f: F, path: &[PathPiece], opts: &QuadOptions) -> Result<C64> {
    let err: RefCell<Option<Error>> = RefCell::new(None);
    let g = |z: C64| match f(z) {
        Ok(v) => v,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            C64::new(f64::NAN, f64::NAN)
        }
    };
    let r = contour_quadrature(&g, path, opts);
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(r?.value)
}

fn guarded_to_infinity<F: Fn(f64) -> Result<C64>>(f: F, a: f64, opts: &QuadOptions) -> Result<C64> {
    let err: RefCell<Option<Error>> = RefCell::new(None);
    let g = |t: f64| match f(t) {
        Ok(v) => v,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            C64::new(f64::NAN, f64::NAN)
        }
    };
    let r = integrate_to_infinity(&g, a, opts);
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(r?.value)
}

fn quad_opts(tol: f64) -> QuadOptions {
    QuadOptions { abs_tol: tol, rel_tol: 1e-12, max_evals: 2_000_000 }
}

/// `∫_{z0}^{σ·z0} F(z) Q_σ(z, 1)^{k−1} dz` for one period.
pub fn single_period(ev: &SeriesEvaluator, sigma: &GroupElement, z0: Option<C64>, path: CyclePath) -> Result<C64> {
    let s = SigmaData::new(sigma)?;
    check_pair(ev.cls(), &s)?;
    let z0 = s.base(z0);
    let km1 = ev.k() as i32 - 1;
    let p = s.path(z0, s.sigma.act(z0), path);
    let tol = 1e-3 * ev.handle.policy.tol;
    guarded_contour(|z| Ok(ev.eval(z)? * s.q(z).powi(km1)), &[p], &quad_opts(tol))
}

/// Limit value of the homogenized integral with the number of corrections.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Homogenized {
    pub value: C64,
    pub n_used: usize,
}

/// `lim_n ∫_{σⁿ·z0}^{σ^{n+1}·z0} F(z) Q_σ(z, 1)^{k−1} dz`.
///
/// Successive periods differ by `∫ r(σ, z) Q_σ(z, 1)^{k−1} dz` over the next
/// piece of the geodesic, so the limit is the first period plus those
/// corrections; the loop stops once two of them in a row fall below `tol`.
pub fn homogenized_cycle_integral(
    ev: &SeriesEvaluator,
    sigma: &GroupElement,
    z0: Option<C64>,
    tol: f64,
) -> Result<Homogenized> {
    let s = SigmaData::new(sigma)?;
    check_pair(ev.cls(), &s)?;
    let z0 = s.base(z0);
    let km1 = ev.k() as i32 - 1;
    let mut value = single_period(ev, &s.sigma, Some(z0), CyclePath::Arc)?;
    if ev.flavor() == Flavor::Katok {
        return Ok(Homogenized { value, n_used: 1 });
    }
    let r = Cocycle::new(&ev.handle, &s.sigma)?;
    let opts = quad_opts(1e-3 * tol);
    let mut z = z0;
    let mut small = 0;
    for n in 1..=400 {
        let next = s.sigma.act(z);
        let d = guarded_contour(|u| Ok(r.eval(u)? * s.q(u).powi(km1)), &[s.path(z, next, CyclePath::Arc)], &opts)?;
        value += d;
        z = next;
        if d.norm() < tol * value.norm().max(1.0) {
            small += 1;
            if small == 2 {
                return Ok(Homogenized { value, n_used: n });
            }
        } else {
            small = 0;
        }
    }
    Err(Error::NonConvergence { what: "homogenized cycle integral", reached: format!("400 steps, value {value}") })
}

/// `∫_{z0}^{σ·z0} f(z) Q_σ(z, 1)^{k−1} dz` for the cusp form.
pub fn katok_cycle_integral(
    ev: &SeriesEvaluator,
    sigma: &GroupElement,
    z0: Option<C64>,
    path: CyclePath,
) -> Result<C64> {
    if ev.flavor() != Flavor::Katok {
        return Err(Error::InvalidArgument("cycle integral of the cusp form needs the Katok flavour".into()));
    }
    single_period(ev, sigma, z0, path)
}

/// `(D_γ D_σ)^{(k−1)/2} Σ_p μ_p^e P_{k−1}(cos θ_p)` over the crossings of the
/// closed geodesics.
pub fn geometric_side(k: usize, gamma_cls: &FormClass, sigma: &GroupElement, mode: SignExponent) -> Result<f64> {
    let s = SigmaData::new(sigma)?;
    let dg = gamma_cls.disc_f64();
    let ds = crate::qforms::to_f64(&s.form.disc());
    let e = match mode {
        SignExponent::KMinusOne => k - 1,
        SignExponent::K => k,
    };
    let sum: f64 = enumerate_closed_intersections(gamma_cls, &s.sigma)?
        .iter()
        .map(|p| {
            let mu = if p.sign < 0 && e % 2 == 1 { -1.0 } else { 1.0 };
            mu * legendre_p(k - 1, p.cos_angle)
        })
        .sum();
    Ok(libm::pow(dg * ds, (k as f64 - 1.0) / 2.0) * sum)
}

/// Both sides of the homogenized identity for the modular integral.
pub fn homogenized_report(ev: &SeriesEvaluator, sigma: &GroupElement, z0: Option<C64>, tol: f64) -> Result<CycleIntegralReport> {
    if ev.flavor() != Flavor::Parson {
        return Err(Error::InvalidArgument("homogenized identity needs the Parson flavour".into()));
    }
    let h = homogenized_cycle_integral(ev, sigma, z0, tol)?;
    let rhs = geometric_side(ev.k(), ev.cls(), sigma, SignExponent::KMinusOne)?;
    Ok(CycleIntegralReport::new(ev.k(), h.value.im, rhs, h.n_used, ev.height_used))
}

/// Both sides of the cycle integral identity for the cusp form.
pub fn katok_report(ev: &SeriesEvaluator, sigma: &GroupElement, z0: Option<C64>) -> Result<CycleIntegralReport> {
    let lhs = katok_cycle_integral(ev, sigma, z0, CyclePath::Arc)?;
    let rhs = geometric_side(ev.k(), ev.cls(), sigma, SignExponent::K)?;
    Ok(CycleIntegralReport::new(ev.k(), lhs.im, rhs, 1, ev.height_used))
}

/// Closed form of `∮ Q(z, 1)^{−k} Q_σ(z, 1)^{k−1} dz` around the full circle
/// of `Q_σ`, traversed counterclockwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleContour {
    pub value: C64,
    pub crossed: bool,
}

pub fn circle_contour_closed_form(k: usize, q: &QForm, q_sigma: &QForm) -> Result<CircleContour> {
    if !crosses(q, q_sigma)? {
        return Ok(CircleContour { value: C64::new(0.0, 0.0), crossed: false });
    }
    let p = intersection_data(q, q_sigma)?;
    let dg = crate::qforms::to_f64(&q.disc());
    let ds = crate::qforms::to_f64(&q_sigma.disc());
    let mu = if p.sign < 0 && k % 2 == 1 { -1.0 } else { 1.0 };
    let mag = 2.0 * PI * libm::pow(dg, -(k as f64) / 2.0) * libm::pow(ds, (k as f64 - 1.0) / 2.0);
    Ok(CircleContour { value: I * (mag * mu * legendre_p(k - 1, p.cos_angle)), crossed: true })
}

/// The same contour integral by quadrature.
pub fn circle_contour_quadrature(k: usize, q: &QForm, q_sigma: &QForm, opts: &QuadOptions) -> Result<C64> {
    let [a, b, c] = q.to_f64();
    let [sa, sb, sc] = q_sigma.to_f64();
    let ds = sb * sb - 4.0 * sa * sc;
    let center = C64::new(-sb / (2.0 * sa), 0.0);
    let radius = libm::sqrt(ds) / (2.0 * sa.abs());
    let f = |z: C64| {
        let v = (z * a + b) * z + c;
        let w = (z * sa + sb) * z + sc;
        v.powi(-(k as i32)) * w.powi(k as i32 - 1)
    };
    let path = [PathPiece::Arc { center, radius, theta0: -PI, theta1: PI }];
    Ok(contour_quadrature(&f, &path, opts)?.value)
}

/// Exponent of `(z0 − w')` in the hypergeometric ray integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RayExponent {
    /// `n − 2k + 1`, from the Euler integral.
    Derived,
    /// `n − 2k − 1`.
    Alternative,
}

/// `∫_{z0}^{i∞} (z − z0)^n (z − w)^{−k} (z − w')^{−k} dz` for `0 ≤ n ≤ 2k − 2`
/// and real `w`, `w'`, in closed form through `₂F₁`.
pub fn ray_integral_closed_form(k: usize, n: usize, z0: C64, w: f64, wp: f64, exponent: RayExponent) -> Result<C64> {
    if n + 2 > 2 * k || !(z0.im > 0.0) {
        return Err(Error::InvalidArgument(format!("n = {n}, k = {k}, z0 = {z0}")));
    }
    let kf = k as f64;
    let nf = n as f64;
    let b = z0 - wp;
    let x = C64::new(1.0, 0.0) - (z0 - w) / b;
    let f = gauss_2f1(kf, 2.0 * kf - nf - 1.0, 2.0 * kf, x)?;
    let e = match exponent {
        RayExponent::Derived => n as i32 + 1 - 2 * k as i32,
        RayExponent::Alternative => n as i32 - 1 - 2 * k as i32,
    };
    Ok(b.powi(e) * f * (gamma(2.0 * kf - nf - 1.0) * gamma(nf + 1.0) / gamma(2.0 * kf)))
}

/// The same ray integral by quadrature along the vertical through `z0`.
pub fn ray_integral_quadrature(k: usize, n: usize, z0: C64, w: f64, wp: f64, opts: &QuadOptions) -> Result<C64> {
    let f = |t: f64| {
        let z = C64::new(z0.re, t);
        (z - z0).powi(n as i32) * (z - w).powi(-(k as i32)) * (z - wp).powi(-(k as i32)) * I
    };
    Ok(integrate_to_infinity(&f, z0.im, opts)?.value)
}

/// Taylor coefficients of `Q(z0 + u, 1)^{k−1}` in `u`.
fn taylor_power(q: [f64; 3], z0: C64, k: usize) -> Vec<C64> {
    let [a, b, c] = q;
    let base = [(z0 * a + b) * z0 + c, z0 * (2.0 * a) + b, C64::new(a, 0.0)];
    let mut p = vec![C64::new(1.0, 0.0)];
    for _ in 1..k {
        let mut next = vec![C64::new(0.0, 0.0); p.len() + 2];
        for (i, x) in p.iter().enumerate() {
            for (j, y) in base.iter().enumerate() {
                next[i + j] += x * y;
            }
        }
        p = next;
    }
    p
}

/// `∫_{z0}^{σ·z0} F(z) Q_σ(z, 1)^{k−1} dz` as
/// `∫_{i∞}^{σ·i∞} F Q_σ^{k−1} dz − ∫_{z0}^{i∞} r(σ, z) Q_σ(z, 1)^{k−1} dz`,
/// with the second term summed in closed form through `₂F₁`.
///
/// The first integral runs up the vertical through `σ·i∞ = a/c` and, after
/// the substitution `z ↦ σz`, up the vertical through `−d/c`.
pub fn explicit_cycle_representation(
    ev: &SeriesEvaluator,
    sigma: &GroupElement,
    z0: Option<C64>,
    exponent: RayExponent,
) -> Result<C64> {
    let s = SigmaData::new(sigma)?;
    check_pair(ev.cls(), &s)?;
    let z0 = s.base(z0);
    let k = ev.k();
    let km1 = k as i32 - 1;
    let (a, c, d) = (
        crate::qforms::to_f64(s.sigma.a()),
        crate::qforms::to_f64(s.sigma.c()),
        crate::qforms::to_f64(s.sigma.d()),
    );
    let r = Cocycle::new(&ev.handle, &s.sigma)?;
    let opts = quad_opts(1e-3 * ev.handle.policy.tol);
    let t0 = 1.0 / c;
    let upper = guarded_to_infinity(
        |t| {
            let z = C64::new(a / c, t);
            Ok(ev.eval(z)? * s.q(z).powi(km1))
        },
        t0,
        &opts,
    )?;
    let lower = guarded_to_infinity(
        |t| {
            let u = C64::new(-d / c, t);
            Ok((ev.eval(u)? + r.eval(u)?) * s.q(u).powi(km1))
        },
        1.0 / (c * c * t0),
        &opts,
    )?;
    let cusp_part = I * (lower - upper);

    let taylor = taylor_power(s.coeffs, z0, k);
    let mut corr = C64::new(0.0, 0.0);
    for q in &r.forms {
        let [qa, qb, qc] = q.to_f64();
        let sd = libm::sqrt(qb * qb - 4.0 * qa * qc);
        let (w, wp) = ((-qb + sd) / (2.0 * qa), (-qb - sd) / (2.0 * qa));
        let mut inner = C64::new(0.0, 0.0);
        for (n, t) in taylor.iter().enumerate() {
            inner += t * ray_integral_closed_form(k, n, z0, w, wp, exponent)?;
        }
        corr += inner * (qa.signum() * libm::pow(qa, -(k as f64)));
    }
    Ok(cusp_part - corr * r.prefactor)
}
