//! Binary quadratic forms `Ax² + Bxy + Cy²` of positive non-square
//! discriminant and the right action of SL2(Z) on them.
//!
//! Conventions: `(Q∘g)(x, y) = Q(ax + by, cx + dy)` for `g = (a, b; c, d)`,
//! so `(Q∘g)∘h = Q∘(gh)`. The form attached to `γ` is `Q_γ = (c, d − a, −b)`
//! and satisfies `Q_γ∘g = Q_{g⁻¹γg}`.

use alloc::collections::BTreeSet;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Mul;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::C64;

/// Element of SL2(Z).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    a: BigInt,
    b: BigInt,
    c: BigInt,
    d: BigInt,
}

impl GroupElement {
    pub fn new(a: BigInt, b: BigInt, c: BigInt, d: BigInt) -> Result<Self> {
        let det = &a * &d - &b * &c;
        if !det.is_one() {
            return Err(Error::Determinant(det.to_string()));
        }
        Ok(GroupElement { a, b, c, d })
    }

    pub fn from_i64(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    fn raw(a: BigInt, b: BigInt, c: BigInt, d: BigInt) -> Self {
        debug_assert!((&a * &d - &b * &c).is_one());
        GroupElement { a, b, c, d }
    }

    pub fn identity() -> Self {
        Self::raw(One::one(), Zero::zero(), Zero::zero(), One::one())
    }

    /// `T = (1, 1; 0, 1)`.
    pub fn t() -> Self {
        Self::raw(One::one(), One::one(), Zero::zero(), One::one())
    }

    /// `S = (0, −1; 1, 0)`.
    pub fn s() -> Self {
        Self::raw(Zero::zero(), -BigInt::one(), One::one(), Zero::zero())
    }

    /// `U = (1, 0; 1, 1)`.
    pub fn u() -> Self {
        Self::raw(One::one(), Zero::zero(), One::one(), One::one())
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }
    pub fn b(&self) -> &BigInt {
        &self.b
    }
    pub fn c(&self) -> &BigInt {
        &self.c
    }
    pub fn d(&self) -> &BigInt {
        &self.d
    }

    pub fn entries(&self) -> [BigInt; 4] {
        [self.a.clone(), self.b.clone(), self.c.clone(), self.d.clone()]
    }

    pub fn trace(&self) -> BigInt {
        &self.a + &self.d
    }

    pub fn inverse(&self) -> Self {
        Self::raw(self.d.clone(), -&self.b, -&self.c, self.a.clone())
    }

    pub fn neg(&self) -> Self {
        Self::raw(-&self.a, -&self.b, -&self.c, -&self.d)
    }

    /// `self^n`, negative exponents allowed.
    pub fn pow(&self, n: i64) -> Self {
        let mut base = if n < 0 { self.inverse() } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Self::identity();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.trace().abs() > BigInt::from(2)
    }

    /// True when the element is hyperbolic and not `±h^m` with `m ≥ 2`.
    pub fn is_primitive_hyperbolic(&self) -> bool {
        if !self.is_hyperbolic() {
            return false;
        }
        let g = if self.trace().is_negative() { self.neg() } else { self.clone() };
        let q = match form_from_matrix(&g) {
            Ok(q) => q,
            Err(_) => return false,
        };
        let eps = fundamental_automorph(&q);
        g == eps || g == eps.inverse()
    }

    /// Normal form used for orientations: positive trace and positive
    /// lower-left entry, reached by `g ↦ −g` and conjugation within the class.
    pub fn normalized(&self) -> Result<Self> {
        Ok(self.normal_form()?.0)
    }

    /// `(h⁻¹·(±self)·h, h)` with positive trace and positive lower-left
    /// entry. `h` maps the geodesic of the result onto that of `self`.
    pub fn normal_form(&self) -> Result<(Self, Self)> {
        if !self.is_hyperbolic() {
            return Err(Error::NotHyperbolic(self.trace().to_string()));
        }
        let g = if self.trace().is_negative() { self.neg() } else { self.clone() };
        if g.c.is_positive() {
            return Ok((g, Self::identity()));
        }
        // a primitive vector (x, y) with Q_g(x, y) > 0 becomes the first column of h
        let q = form_from_matrix(&g)?;
        for n in 1i64.. {
            for x in -n..=n {
                for (x, y) in [(x, n), (n, x), (x, -n), (-n, x)] {
                    let (xb, yb) = (BigInt::from(x), BigInt::from(y));
                    if !xb.gcd(&yb).is_one() || !q.eval(&xb, &yb).is_positive() {
                        continue;
                    }
                    let e = xb.extended_gcd(&yb);
                    let (u, v) = if e.gcd.is_one() { (e.x, e.y) } else { (-e.x, -e.y) };
                    // x·u + y·v = 1, so (x, −v; y, u) has determinant 1
                    let h = Self::raw(xb, -v, yb, u);
                    let out = &(&h.inverse() * &g) * &h;
                    return Ok((out, h));
                }
            }
        }
        unreachable!()
    }

    /// Möbius action on the upper half plane.
    pub fn act(&self, z: C64) -> C64 {
        let [a, b, c, d] = self.to_f64();
        (z * a + b) / (z * c + d)
    }

    pub fn to_f64(&self) -> [f64; 4] {
        [to_f64(&self.a), to_f64(&self.b), to_f64(&self.c), to_f64(&self.d)]
    }

    /// `j(g, z) = cz + d`.
    pub fn j(&self, z: C64) -> C64 {
        z * to_f64(&self.c) + to_f64(&self.d)
    }
}

impl Mul for &GroupElement {
    type Output = GroupElement;
    fn mul(self, o: &GroupElement) -> GroupElement {
        GroupElement::raw(
            &self.a * &o.a + &self.b * &o.c,
            &self.a * &o.b + &self.b * &o.d,
            &self.c * &o.a + &self.d * &o.c,
            &self.c * &o.b + &self.d * &o.d,
        )
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}; {}, {})", self.a, self.b, self.c, self.d)
    }
}

/// Integral binary quadratic form with positive non-square discriminant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QForm {
    a: BigInt,
    b: BigInt,
    c: BigInt,
}

impl QForm {
    pub fn new(a: BigInt, b: BigInt, c: BigInt) -> Result<Self> {
        let q = QForm { a, b, c };
        check_disc(&q.disc())?;
        Ok(q)
    }

    pub fn from_i64(a: i64, b: i64, c: i64) -> Result<Self> {
        Self::new(a.into(), b.into(), c.into())
    }

    /// Caller guarantees the discriminant is admissible.
    pub(crate) fn raw(a: BigInt, b: BigInt, c: BigInt) -> Self {
        QForm { a, b, c }
    }

    #[cfg(test)]
    pub(crate) fn raw_i64(a: i64, b: i64, c: i64) -> Self {
        QForm { a: a.into(), b: b.into(), c: c.into() }
    }

    pub fn a(&self) -> &BigInt {
        &self.a
    }
    pub fn b(&self) -> &BigInt {
        &self.b
    }
    pub fn c(&self) -> &BigInt {
        &self.c
    }

    pub fn disc(&self) -> BigInt {
        &self.b * &self.b - BigInt::from(4) * &self.a * &self.c
    }

    pub fn content(&self) -> BigInt {
        self.a.gcd(&self.b).gcd(&self.c)
    }

    pub fn neg(&self) -> Self {
        QForm::raw(-&self.a, -&self.b, -&self.c)
    }

    /// `(A, −B, C)`: the form of `γ' = εγε` with `ε = diag(−1, 1)`.
    pub fn mirror(&self) -> Self {
        QForm::raw(self.a.clone(), -&self.b, self.c.clone())
    }

    /// Sign of the form, `sign(A)`.
    pub fn sign(&self) -> i32 {
        if self.a.is_negative() {
            -1
        } else {
            1
        }
    }

    pub fn act(&self, g: &GroupElement) -> Self {
        let (a, b, c) = (&self.a, &self.b, &self.c);
        let (p, q, r, s) = (&g.a, &g.b, &g.c, &g.d);
        QForm::raw(
            a * p * p + b * p * r + c * r * r,
            BigInt::from(2) * a * p * q + b * (p * s + q * r) + BigInt::from(2) * c * r * s,
            a * q * q + b * q * s + c * s * s,
        )
    }

    pub fn eval(&self, x: &BigInt, y: &BigInt) -> BigInt {
        &self.a * x * x + &self.b * x * y + &self.c * y * y
    }

    /// `Q(z, 1)`.
    pub fn eval_c64(&self, z: C64) -> C64 {
        let [a, b, c] = self.to_f64();
        (z * a + b) * z + c
    }

    pub fn to_f64(&self) -> [f64; 3] {
        [to_f64(&self.a), to_f64(&self.b), to_f64(&self.c)]
    }

    pub fn to_i64(&self) -> Option<[i64; 3]> {
        Some([self.a.to_i64()?, self.b.to_i64()?, self.c.to_i64()?])
    }

    /// `0 < B < √D` and `√D − B < 2|A| < √D + B`.
    pub fn is_reduced(&self) -> bool {
        let s = self.disc().sqrt();
        let two_a = BigInt::from(2) * self.a.abs();
        self.b.is_positive() && self.b <= s && &two_a + &self.b > s && &two_a - &self.b <= s
    }

    /// One step of the reduction operator. Returns `(Q∘M, M)` with
    /// `M = (0, −1; 1, t)`.
    pub fn rho(&self) -> (QForm, GroupElement) {
        let d = self.disc();
        let s = d.sqrt();
        let c_abs = self.c.abs();
        let two_c = BigInt::from(2) * &c_abs;
        // B' ≡ −B (mod 2|C|) in the normalising window
        let lo = if &c_abs * &c_abs < d { &s - &two_c } else { -&c_abs };
        let r = (-&self.b - &lo).mod_floor(&two_c);
        let mut bp = &lo + &r;
        if bp == lo {
            bp += &two_c;
        }
        let t = (&bp + &self.b) / (BigInt::from(2) * &self.c);
        let cp = (&bp * &bp - &d) / (BigInt::from(4) * &self.c);
        let m = GroupElement::raw(Zero::zero(), -BigInt::one(), One::one(), t);
        (QForm::raw(self.c.clone(), bp, cp), m)
    }

    /// Reduced form equivalent to `self` together with `g` such that
    /// `self∘g` is that form.
    pub fn reduce(&self) -> (QForm, GroupElement) {
        let mut q = self.clone();
        let mut g = GroupElement::identity();
        while !q.is_reduced() {
            let (q2, m) = q.rho();
            q = q2;
            g = &g * &m;
        }
        (q, g)
    }
}

impl fmt::Display for QForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

pub(crate) fn to_f64(x: &BigInt) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn is_square(n: &BigInt) -> bool {
    if n.is_negative() {
        return false;
    }
    let r = n.sqrt();
    &r * &r == *n
}

fn check_disc(d: &BigInt) -> Result<()> {
    if !d.is_positive() || is_square(d) {
        return Err(Error::Discriminant(d.to_string()));
    }
    Ok(())
}

/// `Q_γ = (c, d − a, −b)`.
pub fn form_from_matrix(g: &GroupElement) -> Result<QForm> {
    if !g.is_hyperbolic() {
        return Err(Error::NotHyperbolic(g.trace().to_string()));
    }
    Ok(QForm::raw(g.c.clone(), &g.d - &g.a, -&g.b))
}

/// Fundamental solution `(t, u)`, `t, u > 0`, of `t² − Du² = 4`.
pub fn pell_fundamental(d: &BigInt) -> Result<(BigInt, BigInt)> {
    check_disc(d)?;
    if !(d.mod_floor(&BigInt::from(4)) <= BigInt::one()) {
        return Err(Error::Discriminant(d.to_string()));
    }
    let b: BigInt = d.mod_floor(&BigInt::from(2));
    let principal = QForm::raw(One::one(), b.clone(), (&b * &b - d) / BigInt::from(4));
    let eps = cycle_automorph(&principal);
    // eps = ((t − bu)/2, −Cu; u, (t + bu)/2) up to sign
    let t = eps.trace().abs();
    let u = eps.c.abs();
    Ok((t, u))
}

/// Product of the reduction steps around the cycle of a reduced form: a
/// generator of its proper automorphism group.
fn cycle_automorph(q: &QForm) -> GroupElement {
    let (r, g) = q.reduce();
    let mut p = GroupElement::identity();
    let mut cur = r.clone();
    loop {
        let (nx, m) = cur.rho();
        p = &p * &m;
        cur = nx;
        if cur == r {
            break;
        }
    }
    &(&g * &p) * &g.inverse()
}

/// Positive-trace generator of the stabiliser of `Q` whose lower-left
/// entry has the sign of `A`.
pub(crate) fn fundamental_automorph(q: &QForm) -> GroupElement {
    let f = q.content();
    let q0 = QForm::raw(&q.a / &f, &q.b / &f, &q.c / &f);
    let (t, u) = pell_fundamental(&q0.disc()).expect("admissible discriminant");
    automorph_from_solution(&q0, &t, &u)
}

fn automorph_from_solution(q: &QForm, t: &BigInt, u: &BigInt) -> GroupElement {
    let two = BigInt::from(2);
    GroupElement::raw(
        (t - &q.b * u) / &two,
        -&q.c * u,
        &q.a * u,
        (t + &q.b * u) / &two,
    )
}

/// Automorph `((t − Bu)/2, −Cu; Au, (t + Bu)/2)` built from the fundamental
/// solution of `t² − Du² = 4` for the discriminant of `Q` itself.
pub fn matrix_from_form(q: &QForm) -> Result<GroupElement> {
    let d = q.disc();
    check_disc(&d)?;
    let (t, u) = pell_fundamental(&d)?;
    Ok(automorph_from_solution(q, &t, &u))
}

pub fn apply_sl2(q: &QForm, g: &GroupElement) -> QForm {
    q.act(g)
}

/// One SL2(Z)-class of forms, stored through its cycle of reduced forms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormClass {
    discriminant: BigInt,
    representatives: Vec<QForm>,
    members: BTreeSet<QForm>,
    seed: QForm,
}

impl FormClass {
    pub fn discriminant(&self) -> &BigInt {
        &self.discriminant
    }

    /// Reduced cycle, rotated to start at its smallest element.
    pub fn representatives(&self) -> &[QForm] {
        &self.representatives
    }

    pub fn seed(&self) -> &QForm {
        &self.seed
    }

    pub fn contains(&self, q: &QForm) -> bool {
        if q.disc() != self.discriminant {
            return false;
        }
        let (r, _) = q.reduce();
        self.members.contains(&r)
    }

    /// Class of `(A, −B, C)`.
    pub fn mirror(&self) -> FormClass {
        reduction_cycle(&self.seed.mirror())
    }

    /// Class of `−Q`.
    pub fn negate(&self) -> FormClass {
        reduction_cycle(&self.seed.neg())
    }

    pub fn disc_f64(&self) -> f64 {
        to_f64(&self.discriminant)
    }

    pub fn disc_i64(&self) -> i64 {
        self.discriminant.to_i64().expect("discriminant fits in i64")
    }
}

pub fn reduction_cycle(q: &QForm) -> FormClass {
    let (r, _) = q.reduce();
    let mut cyc = Vec::new();
    let mut cur = r.clone();
    loop {
        cyc.push(cur.clone());
        cur = cur.rho().0;
        if cur == r {
            break;
        }
    }
    let imin = (0..cyc.len()).min_by(|&i, &j| cyc[i].cmp(&cyc[j])).unwrap_or(0);
    cyc.rotate_left(imin);
    let members = cyc.iter().cloned().collect();
    FormClass { discriminant: q.disc(), representatives: cyc, members, seed: q.clone() }
}

pub fn is_equivalent(q1: &QForm, q2: &QForm) -> bool {
    if q1.disc() != q2.disc() {
        return false;
    }
    reduction_cycle(q1).contains(q2)
}

/// All classes of forms (primitive or not) of discriminant `D`, ordered by
/// their smallest reduced form.
pub fn class_representatives(d: &BigInt) -> Result<Vec<FormClass>> {
    check_disc(d)?;
    if d.mod_floor(&BigInt::from(4)) > BigInt::one() {
        return Err(Error::Discriminant(d.to_string()));
    }
    let s = d.sqrt();
    let four = BigInt::from(4);
    let mut reduced = BTreeSet::new();
    let mut b: BigInt = if d.is_odd() { One::one() } else { BigInt::from(2) };
    while b <= s {
        let n = &b * &b - d;
        // 2|A| + B > s and 2|A| − B ≤ s
        let mut a: BigInt = (&s - &b) / 2 + 1;
        if a < One::one() {
            a = One::one();
        }
        while BigInt::from(2) * &a - &b <= s {
            if BigInt::from(2) * &a + &b > s && n.is_multiple_of(&(&four * &a)) {
                let c = &n / (&four * &a);
                reduced.insert(QForm::raw(a.clone(), b.clone(), c.clone()));
                reduced.insert(QForm::raw(-&a, b.clone(), -c));
            }
            a += 1;
        }
        b += 2;
    }
    let mut out: Vec<FormClass> = Vec::new();
    while let Some(q) = reduced.iter().next().cloned() {
        let cls = reduction_cycle(&q);
        for r in &cls.representatives {
            reduced.remove(r);
        }
        out.push(cls);
    }
    Ok(out)
}

/// Every form of the class with `max(|A|, |C|) ≤ height`, sorted.
pub fn enumerate_orbit_bounded(cls: &FormClass, height: u64) -> Vec<QForm> {
    let d = cls.disc_i64() as i128;
    let h = height as i128;
    let mut out = Vec::new();
    for a in 1..=h {
        // |C| ≤ H  ⇒  B² ≤ 4|A|H + D
        let bmax = isqrt_i128(4 * a * h + d);
        let m = 4 * a;
        for b in -bmax..=bmax {
            let n = b * b - d;
            if n.rem_euclid(m) != 0 {
                continue;
            }
            let c = n / m;
            if c.abs() > h {
                continue;
            }
            for (aa, cc) in [(a, c), (-a, -c)] {
                let q = QForm::raw(aa.into(), b.into(), cc.into());
                if cls.contains(&q) {
                    out.push(q);
                }
            }
        }
    }
    out.sort();
    out
}

/// Forms of the class with `|A| ≤ height` and `−|A| < B ≤ |A|`: one
/// representative of every orbit of `⟨T⟩` with `|A| ≤ height`.
pub fn enumerate_t_reduced(cls: &FormClass, height: u64) -> Vec<QForm> {
    enumerate_t_reduced_range(cls, 1, height)
}

/// As [`enumerate_t_reduced`], restricted to `a_from ≤ |A| ≤ a_to`.
pub fn enumerate_t_reduced_range(cls: &FormClass, a_from: u64, a_to: u64) -> Vec<QForm> {
    let d = cls.disc_i64() as i128;
    let mut out = Vec::new();
    for a in (a_from.max(1) as i128)..=(a_to as i128) {
        let m = 4 * a;
        for b in (-a + 1)..=a {
            let n = b * b - d;
            if n.rem_euclid(m) != 0 {
                continue;
            }
            let c = n / m;
            for (aa, cc) in [(a, c), (-a, -c)] {
                let q = QForm::raw(aa.into(), b.into(), cc.into());
                if cls.contains(&q) {
                    out.push(q);
                }
            }
        }
    }
    out
}

pub(crate) fn isqrt_i128(n: i128) -> i128 {
    if n <= 0 {
        return 0;
    }
    let mut r = libm::sqrt(n as f64) as i128;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Conjugacy classes of primitive hyperbolic elements of trace `t > 2`,
/// in normal form (positive lower-left entry).
pub fn primitive_classes_of_trace(t: u64) -> Result<Vec<GroupElement>> {
    if t <= 2 {
        return Err(Error::NotHyperbolic(t.to_string()));
    }
    let n = BigInt::from(t) * BigInt::from(t) - BigInt::from(4);
    let tb = BigInt::from(t);
    let mut out = Vec::new();
    let mut f = BigInt::one();
    while &f * &f <= n {
        if n.is_multiple_of(&(&f * &f)) {
            let d0 = &n / (&f * &f);
            let ok = d0.mod_floor(&BigInt::from(4)) <= BigInt::one() && check_disc(&d0).is_ok();
            if ok && pell_fundamental(&d0)? == (tb.clone(), f.clone()) {
                for cls in class_representatives(&d0)? {
                    let q0 = &cls.representatives[0];
                    if !q0.content().is_one() {
                        continue;
                    }
                    // positive A gives positive lower-left entry
                    let q0 = if q0.a.is_negative() {
                        cls.representatives.iter().find(|q| q.a.is_positive()).unwrap_or(q0)
                    } else {
                        q0
                    };
                    out.push(automorph_from_solution(q0, &tb, &f));
                }
            }
        }
        f += 1;
    }
    Ok(out)
}
