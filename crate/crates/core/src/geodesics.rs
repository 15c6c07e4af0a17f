//! Geodesic semicircles attached to forms, their crossings, intersection
//! angles and signs, and enumeration of crossings on the modular surface.
//!
//! The geodesic of `Q = (A, B, C)` runs from `w' = (−B − √D)/(2A)` to
//! `w = (−B + √D)/(2A)`, so it is traversed clockwise when `A > 0`.
//! All crossing predicates are decided in exact integer arithmetic.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::PI;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::qforms::{form_from_matrix, to_f64, FormClass, GroupElement, QForm};
use crate::C64;

/// Real quadratic number `(p + q√d)/r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Surd {
    pub p: BigInt,
    pub q: BigInt,
    pub r: BigInt,
    pub d: BigInt,
}

impl Surd {
    pub fn to_f64(&self) -> f64 {
        let s = libm::sqrt(to_f64(&self.d));
        (to_f64(&self.p) + to_f64(&self.q) * s) / to_f64(&self.r)
    }
}

/// Sign of `x + y√d` for `d > 0` not a square.
pub fn sign_surd(x: &BigInt, y: &BigInt, d: &BigInt) -> i32 {
    let sx = sgn(x);
    let sy = sgn(y);
    if sx == 0 {
        return sy;
    }
    if sy == 0 || sx == sy {
        return sx;
    }
    let lhs = x * x;
    let rhs = y * y * d;
    match lhs.cmp(&rhs) {
        Ordering::Greater => sx,
        Ordering::Less => sy,
        Ordering::Equal => 0,
    }
}

fn sgn(x: &BigInt) -> i32 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

/// Endpoints `(w', w)` of the geodesic of `Q` in its orientation order,
/// `w' = (−B − √D)/(2A)`, `w = (−B + √D)/(2A)`.
pub fn oriented_roots(q: &QForm) -> (Surd, Surd) {
    let d = q.disc();
    let r = BigInt::from(2) * q.a();
    let p = -q.b().clone();
    (
        Surd { p: p.clone(), q: -BigInt::one(), r: r.clone(), d: d.clone() },
        Surd { p, q: BigInt::one(), r, d },
    )
}

/// Roots of `Q(x, 1)` as floats, `w_low < w_high`.
pub fn roots(q: &QForm) -> (f64, f64) {
    let [a, b, c] = q.to_f64();
    let s = libm::sqrt(to_f64(&q.disc()));
    let t = -0.5 * (b + if b >= 0.0 { s } else { -s });
    let (r1, r2) = (t / a, c / t);
    if r1 < r2 {
        (r1, r2)
    } else {
        (r2, r1)
    }
}

/// Centre and squared radius of the semicircle of `Q`, exactly.
fn circle(q: &QForm) -> (BigRational, BigRational) {
    let two_a = BigInt::from(2) * q.a();
    let cen = BigRational::new(-q.b().clone(), two_a.clone());
    let r2 = BigRational::new(q.disc(), &two_a * &two_a);
    (cen, r2)
}

fn rat_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `(A1C2 − A2C1)² − (A1B2 − A2B1)(B1C2 − B2C1)`: the resultant of the two
/// forms, negative exactly when their roots interlace.
fn resultant(q1: &QForm, q2: &QForm) -> BigInt {
    let (a1, b1, c1) = (q1.a(), q1.b(), q1.c());
    let (a2, b2, c2) = (q2.a(), q2.b(), q2.c());
    let x = a1 * c2 - a2 * c1;
    &x * &x - (a1 * b2 - a2 * b1) * (b1 * c2 - b2 * c1)
}

/// Whether exactly one root of `q2` lies strictly between the roots of `q1`.
pub fn crosses(q1: &QForm, q2: &QForm) -> Result<bool> {
    let r = resultant(q1, q2);
    if r.is_zero() {
        return Err(Error::SameAxis);
    }
    Ok(r.is_negative())
}

/// Whether the geodesic of `Q` meets the vertical line over `−d/c`.
pub fn crosses_vertical(q: &QForm, d: &BigInt, c: &BigInt) -> bool {
    // c²·Q(−d/c, 1) = A d² − B d c + C c²
    let v = q.a() * d * d - q.b() * d * c + q.c() * c * c;
    (q.a() * v).is_negative()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    LeftToRight,
    RightToLeft,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GeodesicKind {
    Semicircle { w_low: f64, w_high: f64 },
    Vertical { x: BigRational },
}

#[derive(Clone, Debug, PartialEq)]
pub enum GeodesicSource {
    Form(QForm),
    Cusp { d: BigInt, c: BigInt },
}

/// Oriented geodesic of the upper half plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Geodesic {
    pub kind: GeodesicKind,
    pub orientation: Orientation,
    pub source: GeodesicSource,
}

impl Geodesic {
    pub fn from_form(q: &QForm) -> Geodesic {
        let (w_low, w_high) = roots(q);
        let orientation = if q.a().is_positive() { Orientation::LeftToRight } else { Orientation::RightToLeft };
        Geodesic { kind: GeodesicKind::Semicircle { w_low, w_high }, orientation, source: GeodesicSource::Form(q.clone()) }
    }

    /// `S_{−d/c}`, the vertical line over `−d/c`, traversed downwards.
    pub fn vertical(d: &BigInt, c: &BigInt) -> Result<Geodesic> {
        check_cusp(d, c)?;
        Ok(Geodesic {
            kind: GeodesicKind::Vertical { x: BigRational::new(-d.clone(), c.clone()) },
            orientation: Orientation::RightToLeft,
            source: GeodesicSource::Cusp { d: d.clone(), c: c.clone() },
        })
    }

    /// Unit tangent at a point of the geodesic, in its orientation.
    pub fn tangent(&self, p: C64) -> C64 {
        match (&self.kind, &self.source) {
            (GeodesicKind::Vertical { .. }, _) => C64::new(0.0, -1.0),
            (GeodesicKind::Semicircle { w_low, w_high }, _) => {
                let cen = 0.5 * (w_low + w_high);
                let t = C64::new(0.0, -1.0) * (p - cen);
                let t = t / t.norm();
                match self.orientation {
                    Orientation::LeftToRight => t,
                    Orientation::RightToLeft => -t,
                }
            }
        }
    }
}

fn check_cusp(d: &BigInt, c: &BigInt) -> Result<()> {
    if !c.is_positive() || !d.gcd(c).is_one() {
        return Err(Error::InvalidArgument(format!("cusp {d}/{c} needs c > 0 and gcd(c, d) = 1")));
    }
    Ok(())
}

/// A crossing of two geodesics.
#[derive(Clone, Debug, PartialEq)]
pub struct Intersection {
    pub point: C64,
    pub cos_angle: f64,
    pub angle: f64,
    pub sign: i32,
    pub witness_form: QForm,
}

/// Angle in `[0, π)` turning the line through `t1` counterclockwise onto
/// the line through `t2`.
fn ccw_line_angle(t1: C64, t2: C64) -> f64 {
    let cross = t1.re * t2.im - t1.im * t2.re;
    let dot = t1.re * t2.re + t1.im * t2.im;
    let a = libm::atan2(cross, dot);
    if a < 0.0 {
        a + PI
    } else if a >= PI {
        a - PI
    } else {
        a
    }
}

fn crossing_point(q1: &QForm, q2: &QForm) -> (BigRational, f64) {
    let (c1, r1) = circle(q1);
    let (c2, r2) = circle(q2);
    let two = BigRational::from_integer(BigInt::from(2));
    let x = (&r1 - &r2 + &c2 * &c2 - &c1 * &c1) / (two * (&c2 - &c1));
    let dx = &x - &c1;
    let y2 = rat_f64(&(r1 - &dx * &dx));
    (x, libm::sqrt(y2.max(0.0)))
}

/// Intersection of the geodesics of `q_gamma` and `q_sigma`.
///
/// The angle turns the tangent of the first geodesic counterclockwise onto
/// the tangent of the second, both traversed clockwise; the sign is
/// `−sign(Q_γ(w'_σ, 1))`.
pub fn intersection_data(q_gamma: &QForm, q_sigma: &QForm) -> Result<Intersection> {
    if !crosses(q_gamma, q_sigma)? {
        return Err(Error::NotCrossing);
    }
    let (x, y) = crossing_point(q_gamma, q_sigma);
    let p = C64::new(rat_f64(&x), y);
    let clockwise = |q: &QForm| {
        let (c, _) = circle(q);
        let t = C64::new(0.0, -1.0) * (p - rat_f64(&c));
        t / t.norm()
    };
    let angle = ccw_line_angle(clockwise(q_gamma), clockwise(q_sigma));
    Ok(Intersection {
        point: p,
        cos_angle: libm::cos(angle),
        angle,
        sign: crossing_sign(q_gamma, q_sigma),
        witness_form: q_gamma.clone(),
    })
}

/// `−sign(Q1(w'_2, 1))` with `w'_2 = (−B2 − √D2)/(2A2)`, exactly.
pub fn crossing_sign(q1: &QForm, q2: &QForm) -> i32 {
    let (a1, b1, c1) = (q1.a(), q1.b(), q1.c());
    let (a2, b2) = (q2.a(), q2.b());
    let d2 = q2.disc();
    // (2A2)²·Q1(w') = X + Y√D2
    let x = a1 * (b2 * b2 + &d2) - BigInt::from(2) * a2 * b1 * b2 + BigInt::from(4) * a2 * a2 * c1;
    let y = BigInt::from(2) * (a1 * b2 - a2 * b1);
    -sign_surd(&x, &y, &d2)
}

/// Intersection of the geodesic of `q` with the vertical line over `−d/c`.
///
/// The vertical line is traversed downwards; then `cos θ = (Bc − 2Ad)/(c√D)`.
/// The sign is `−sign(A)`, the sign of `Q` at the starting point `i∞`.
pub fn vertical_intersection_data(q: &QForm, d: &BigInt, c: &BigInt) -> Result<Intersection> {
    check_cusp(d, c)?;
    if !crosses_vertical(q, d, c) {
        return Err(Error::NotCrossing);
    }
    let x0 = BigRational::new(-d.clone(), c.clone());
    let (cen, r2) = circle(q);
    let dx = &x0 - &cen;
    let y = libm::sqrt(rat_f64(&(r2 - &dx * &dx)).max(0.0));
    let p = C64::new(rat_f64(&x0), y);
    let t = Geodesic::from_form(q).tangent(p);
    let v = C64::new(0.0, -1.0);
    let cos_angle = (t.re * v.re + t.im * v.im).clamp(-1.0, 1.0);
    Ok(Intersection { point: p, cos_angle, angle: libm::acos(cos_angle), sign: -q.sign(), witness_form: q.clone() })
}

fn sort_points(v: &mut [Intersection]) {
    v.sort_by(|a, b| {
        a.point.re.partial_cmp(&b.point.re).unwrap_or(Ordering::Equal).then(a.point.im.partial_cmp(&b.point.im).unwrap_or(Ordering::Equal))
    });
}

/// Integer range covering the real interval `[lo, hi]` with a safety margin.
fn int_range(lo: f64, hi: f64) -> (i64, i64) {
    (libm::floor(lo) as i64 - 2, libm::ceil(hi) as i64 + 2)
}

/// Forms of the class with the given `A` and `B` in `[b_lo, b_hi]` (padded).
fn forms_with_a(cls: &FormClass, a: i64, b_lo: f64, b_hi: f64) -> Vec<QForm> {
    let d = cls.disc_i64() as i128;
    let (lo, hi) = int_range(b_lo, b_hi);
    let m = 4 * a as i128;
    let mut out = Vec::new();
    for b in lo..=hi {
        let b = b as i128;
        let n = b * b - d;
        if n.rem_euclid(m) != 0 {
            continue;
        }
        let q = QForm::raw((a as i128).into(), b.into(), (n / m).into());
        if cls.contains(&q) {
            out.push(q);
        }
    }
    out
}

/// Height of the point `z0` of `S_σ` above `x0`, and the abscissa and height
/// of `σ·z0`.
fn segment_from(sigma: &GroupElement, x0: &BigRational) -> (f64, BigRational, f64) {
    let qs = form_from_matrix(sigma).expect("hyperbolic");
    let (cen, r2) = circle(&qs);
    let dx = x0 - &cen;
    let y2 = &r2 - &dx * &dx;
    let (a, b, c, d) = (
        BigRational::from_integer(sigma.a().clone()),
        BigRational::from_integer(sigma.b().clone()),
        BigRational::from_integer(sigma.c().clone()),
        BigRational::from_integer(sigma.d().clone()),
    );
    let cxd = &c * x0 + &d;
    let den = &cxd * &cxd + &c * &c * &y2;
    let xs = ((&a * x0 + &b) * &cxd + &a * &c * &y2) / &den;
    let y0 = libm::sqrt(rat_f64(&y2).max(0.0));
    let ys = y0 / rat_f64(&den);
    (y0, xs, ys)
}

/// Crossings of the closed geodesics `[S_γ]` and `[S_σ]` on the modular
/// surface: one per form of the class whose geodesic meets the half-open
/// segment of `S_σ` from its apex `z*` to `σ·z*`.
pub fn enumerate_closed_intersections(gamma_cls: &FormClass, sigma: &GroupElement) -> Result<Vec<Intersection>> {
    enumerate_closed_intersections_with(gamma_cls, sigma, None, 1)
}

/// As [`enumerate_closed_intersections`], with the segment starting above
/// `x0` (which must lie strictly inside the base of `S_σ`) and the search
/// bound on `|A|` multiplied by `bound_scale`.
pub fn enumerate_closed_intersections_with(
    gamma_cls: &FormClass,
    sigma: &GroupElement,
    x0: Option<&BigRational>,
    bound_scale: u32,
) -> Result<Vec<Intersection>> {
    let sigma = sigma.normalized()?;
    let qs = form_from_matrix(&sigma)?;
    if gamma_cls.contains(&qs) || gamma_cls.contains(&qs.neg()) {
        return Err(Error::EquivalentClasses);
    }
    let (cen, r2) = circle(&qs);
    let start = match x0 {
        Some(x) => {
            let dx = x - &cen;
            if &dx * &dx >= r2 {
                return Err(Error::InvalidArgument(format!("base point {x} not inside the geodesic's base")));
            }
            x.clone()
        }
        None => cen,
    };
    let (y0, x_end, y_end) = segment_from(&sigma, &start);
    let (x_lo, x_hi) = if start < x_end { (start.clone(), x_end.clone()) } else { (x_end.clone(), start.clone()) };
    let y_min = y0.min(y_end);
    let dg = gamma_cls.disc_f64();
    let amax = ((libm::sqrt(dg) / (2.0 * y_min)) as i64 + 1) * bound_scale.max(1) as i64;
    let pad = if bound_scale > 1 { bound_scale as f64 } else { 0.0 };
    let (xl, xh) = (rat_f64(&x_lo), rat_f64(&x_hi));
    let mut out = Vec::new();
    for a in (1..=amax).flat_map(|a| [a, -a]) {
        let rq = libm::sqrt(dg) / (2.0 * a.abs() as f64);
        // centre −B/(2A) ∈ [x_lo − r, x_hi + r]
        let (e1, e2) = (-2.0 * a as f64 * (xl - rq - pad), -2.0 * a as f64 * (xh + rq + pad));
        for q in forms_with_a(gamma_cls, a, e1.min(e2), e1.max(e2)) {
            match crosses(&q, &qs) {
                Ok(true) => {}
                Ok(false) => continue,
                Err(_) => return Err(Error::EquivalentClasses),
            }
            let (xp, _) = crossing_point(&q, &qs);
            // half-open in the direction of travel: start included, end excluded
            let inside = if start < x_end { xp >= start && xp < x_end } else { xp <= start && xp > x_end };
            if inside {
                out.push(intersection_data(&q, &qs)?);
            }
        }
    }
    sort_points(&mut out);
    Ok(out)
}

/// Every form of the class whose geodesic crosses the vertical line over
/// `−d/c`, with its intersection data.
pub fn enumerate_vertical_intersections(cls: &FormClass, d: &BigInt, c: &BigInt) -> Result<Vec<Intersection>> {
    enumerate_vertical_intersections_with(cls, d, c, 1)
}

/// As [`enumerate_vertical_intersections`] with the bound on `|A|` and the
/// `B` window multiplied by `bound_scale`.
pub fn enumerate_vertical_intersections_with(cls: &FormClass, d: &BigInt, c: &BigInt, bound_scale: u32) -> Result<Vec<Intersection>> {
    check_cusp(d, c)?;
    let scale = bound_scale.max(1) as i64;
    let df = cls.disc_f64();
    let cf = to_f64(c);
    let x = to_f64(d) / cf;
    // |Q(−d/c, 1)| ≥ 1/c² and ≤ D/(4|A|)
    let amax = (cls.discriminant() * c * c / BigInt::from(4)).to_i64().ok_or_else(|| Error::Domain("bound overflow".to_string()))? * scale;
    let sd = libm::sqrt(df) * scale as f64;
    let mut out = Vec::new();
    for a in (1..=amax).flat_map(|a| [a, -a]) {
        // |B − 2A·d/c| < √D
        let centre = 2.0 * a as f64 * x;
        for q in forms_with_a(cls, a, centre - sd, centre + sd) {
            if crosses_vertical(&q, d, c) {
                out.push(vertical_intersection_data(&q, d, c)?);
            }
        }
    }
    sort_points(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qforms::reduction_cycle;

    fn q(a: i64, b: i64, c: i64) -> QForm {
        QForm::from_i64(a, b, c).unwrap()
    }
    fn bi(x: i64) -> BigInt {
        BigInt::from(x)
    }

    #[test]
    fn root_examples() {
        let (l, h) = roots(&q(1, 1, -1));
        assert!((l + 1.618033988749895).abs() < 1e-14 && (h - 0.6180339887498949).abs() < 1e-14);
        let (l, h) = roots(&q(2, 4, -2));
        let s2 = core::f64::consts::SQRT_2;
        assert!((l + 1.0 + s2).abs() < 1e-14 && (h + 1.0 - s2).abs() < 1e-14);
        assert_eq!(roots(&q(-1, -1, 1)), roots(&q(1, 1, -1)));
        let (wp, w) = oriented_roots(&q(1, 1, -1));
        assert!(wp.to_f64() < w.to_f64());
        let (wp, w) = oriented_roots(&q(-1, 1, 1));
        assert!(wp.to_f64() > w.to_f64());
    }

    #[test]
    fn crossing_examples() {
        assert!(crosses(&q(1, 1, -1), &q(2, 4, -2)).unwrap());
        // roots 5.38.., 8.38.. after shifting by 7
        let shifted = q(1, 1, -1).act(&GroupElement::t().pow(-7));
        assert!(!crosses(&q(1, 1, -1), &shifted).unwrap());
        assert!(crosses(&q(1, 1, -1), &q(-1, -1, 1)).is_err());
        assert!(crosses_vertical(&q(1, 1, -1), &bi(0), &bi(1)));
        assert!(!crosses_vertical(&q(1, 1, -1), &bi(-1), &bi(1)));
        assert!(crosses_vertical(&q(2, 4, -2), &bi(1), &bi(1)));
    }

    #[test]
    fn intersection_examples() {
        let x = intersection_data(&q(1, 1, -1), &q(2, 4, -2)).unwrap();
        assert_eq!(x.sign, -1);
        let (a, b, c) = (2.0, 4.0, -2.0);
        let p = x.point;
        assert!((a * p.re * p.re + b * p.re + c + a * p.im * p.im).abs() < 1e-12);
        let v = vertical_intersection_data(&q(1, 1, -1), &bi(0), &bi(1)).unwrap();
        assert!((v.cos_angle - 1.0 / libm::sqrt(5.0)).abs() < 1e-14);
        assert!(intersection_data(&q(1, 1, -1), &q(1, 1, -1).act(&GroupElement::t().pow(-7))).is_err());
    }

    #[test]
    fn vertical_formula_on_grid() {
        let cls = reduction_cycle(&q(1, 2, -2));
        for (d, c) in [(0, 1), (1, 2), (-1, 3), (2, 5), (7, 4)] {
            for x in enumerate_vertical_intersections(&cls, &bi(d), &bi(c)).unwrap() {
                let [a, b, _] = x.witness_form.to_f64();
                let want = (b * c as f64 - 2.0 * a * d as f64) / (c as f64 * libm::sqrt(12.0));
                assert!((x.cos_angle - want).abs() < 1e-10);
            }
        }
    }

    fn brute_vertical(cls: &FormClass, d: i64, c: i64) -> Vec<QForm> {
        let mut v: Vec<QForm> = crate::qforms::enumerate_orbit_bounded(cls, 400)
            .into_iter()
            .filter(|f| crosses_vertical(f, &bi(d), &bi(c)))
            .collect();
        v.sort();
        v
    }

    #[test]
    fn vertical_enumeration_complete() {
        for seed in [q(1, -1, -1), q(1, 2, -2), q(-1, 2, 2), q(1, 2, -1)] {
            let cls = reduction_cycle(&seed);
            for (d, c) in [(0, 1), (1, 1), (1, 2), (1, 3), (-2, 3)] {
                let mut got: Vec<QForm> =
                    enumerate_vertical_intersections(&cls, &bi(d), &bi(c)).unwrap().into_iter().map(|x| x.witness_form).collect();
                got.sort();
                assert_eq!(got, brute_vertical(&cls, d, c), "{seed} at {d}/{c}");
            }
        }
        assert!(enumerate_vertical_intersections(&reduction_cycle(&q(1, 1, -1)), &bi(2), &bi(4)).is_err());
    }

    #[test]
    fn vertical_translation() {
        let cls = reduction_cycle(&q(1, 2, -2));
        let n0 = enumerate_vertical_intersections(&cls, &bi(0), &bi(1)).unwrap().len();
        let n1 = enumerate_vertical_intersections(&cls, &bi(-1), &bi(1)).unwrap().len();
        assert_eq!(n0, n1);
    }

    #[test]
    fn closed_sign_formula_matches_float() {
        let cls = reduction_cycle(&q(1, 2, -2));
        let sigma = GroupElement::from_i64(2, 5, 1, 3).unwrap();
        let qs = form_from_matrix(&sigma).unwrap();
        let xs = enumerate_closed_intersections(&cls, &sigma).unwrap();
        assert!(!xs.is_empty());
        let [a2, b2, c2] = qs.to_f64();
        let wp = (-b2 - libm::sqrt(b2 * b2 - 4.0 * a2 * c2)) / (2.0 * a2);
        for x in xs {
            let v = x.witness_form.eval_c64(C64::new(wp, 0.0)).re;
            assert_eq!(x.sign, -(v.signum() as i32));
        }
    }

    #[test]
    fn equivalent_classes_rejected() {
        let cls = reduction_cycle(&q(1, -1, -1));
        let sigma = GroupElement::from_i64(2, 1, 1, 1).unwrap();
        assert_eq!(enumerate_closed_intersections(&cls, &sigma), Err(Error::EquivalentClasses));
        assert_eq!(enumerate_closed_intersections(&cls, &sigma.pow(2)), Err(Error::EquivalentClasses));
    }
}
