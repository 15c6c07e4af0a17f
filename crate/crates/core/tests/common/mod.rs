//! Strategies and property checks shared by the property suite and the
//! acceptance runner.
#![allow(dead_code)]

use std::f64::consts::PI;

use modgeo::geodesics::{
    crosses, enumerate_closed_intersections, enumerate_closed_intersections_with, enumerate_vertical_intersections,
    enumerate_vertical_intersections_with, intersection_data,
};
use modgeo::qforms::{apply_sl2, form_from_matrix, primitive_classes_of_trace, reduction_cycle};
use modgeo::{GroupElement, Intersection, QForm};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

pub type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn is_square(n: i64) -> bool {
    n >= 0 && {
        let r = (n as f64).sqrt() as i64;
        (r - 1..=r + 1).any(|s| s >= 0 && s * s == n)
    }
}

pub fn form() -> impl Strategy<Value = QForm> {
    (-6i64..=6, -9i64..=9, -6i64..=6)
        .prop_filter("positive non-square discriminant", |(a, b, c)| {
            let d = b * b - 4 * a * c;
            d > 0 && !is_square(d)
        })
        .prop_map(|(a, b, c)| QForm::from_i64(a, b, c).unwrap())
}

/// Words in `T^n` and `S`.
pub fn element() -> impl Strategy<Value = GroupElement> {
    prop::collection::vec((-3i64..=3, any::<bool>()), 0..6).prop_map(|w| {
        let mut g = GroupElement::identity();
        for (n, s) in w {
            g = &g * &GroupElement::t().pow(n);
            if s {
                g = &g * &GroupElement::s();
            }
        }
        g
    })
}

/// Two forms whose geodesics cross.
pub fn crossing_pair() -> impl Strategy<Value = (QForm, QForm)> {
    (form(), form()).prop_filter("geodesics cross", |(a, b)| crosses(a, b) == Ok(true))
}

/// `(seed form, σ)` with non-equivalent classes.
pub fn closed_instance() -> impl Strategy<Value = (QForm, GroupElement)> {
    let seeds = vec![(1i64, 1i64, -1i64), (1, 2, -1), (1, 2, -2), (-1, 2, 2), (1, 3, -1), (1, 4, -1), (2, 3, -1), (1, 5, -1)];
    (prop::sample::select(seeds), 3u64..=9, any::<prop::sample::Index>()).prop_filter_map("equivalent classes", |(f, t, i)| {
        let q = QForm::from_i64(f.0, f.1, f.2).unwrap();
        let sigmas = primitive_classes_of_trace(t).ok()?;
        let sigma = sigmas[i.index(sigmas.len())].clone();
        let cls = reduction_cycle(&q);
        enumerate_closed_intersections(&cls, &sigma).ok()?;
        Some((q, sigma))
    })
}

pub fn cusp() -> impl Strategy<Value = (i64, i64)> {
    (1i64..=5, -6i64..=6).prop_filter("coprime", |(c, d)| num_integer::gcd(*c, *d) == 1)
}

fn multiset(v: &[Intersection]) -> Vec<(f64, i32)> {
    v.iter().map(|p| (p.cos_angle, p.sign)).collect()
}

fn same_multiset(a: &[Intersection], b: &[Intersection]) -> bool {
    let (a, mut b) = (multiset(a), multiset(b));
    a.len() == b.len()
        && a.iter().all(|x| match b.iter().position(|y| (x.0 - y.0).abs() < 1e-9 && x.1 == y.1) {
            Some(i) => {
                b.swap_remove(i);
                true
            }
            None => false,
        })
}

pub fn discriminant_invariant(q: &QForm, g: &GroupElement) -> Check {
    let moved = apply_sl2(q, g);
    ensure(moved.disc() == q.disc(), || format!("{q}∘{g} = {moved}"))
}

pub fn right_action_law(q: &QForm, g: &GroupElement, h: &GroupElement) -> Check {
    let a = apply_sl2(&apply_sl2(q, g), h);
    let b = apply_sl2(q, &(g * h));
    ensure(a == b, || format!("{a} vs {b}"))
}

pub fn conjugation_matches_action(gamma: &GroupElement, g: &GroupElement) -> Check {
    let conj = &(g * gamma) * &g.inverse();
    let a = form_from_matrix(&conj).map_err(|e| e.to_string())?;
    let b = apply_sl2(&form_from_matrix(gamma).map_err(|e| e.to_string())?, &g.inverse());
    ensure(a == b, || format!("{a} vs {b}"))
}

pub fn angle_reverses(q1: &QForm, q2: &QForm) -> Check {
    let a = intersection_data(q1, q2).map_err(|e| e.to_string())?;
    let b = intersection_data(q2, q1).map_err(|e| e.to_string())?;
    ensure((a.angle + b.angle - PI).abs() < 1e-10, || format!("{q1} {q2}: {} + {}", a.angle, b.angle))
}

pub fn sign_antisymmetric(q1: &QForm, q2: &QForm) -> Check {
    let a = intersection_data(q1, q2).map_err(|e| e.to_string())?;
    let b = intersection_data(q2, q1).map_err(|e| e.to_string())?;
    let c = intersection_data(&q1.neg(), q2).map_err(|e| e.to_string())?;
    ensure(a.sign == -b.sign && a.sign == -c.sign, || format!("{q1} {q2}: {} {} {}", a.sign, b.sign, c.sign))
}

/// `num ∈ [1, 99]` picks the base point across the base of `S_σ`.
pub fn base_point_independent(q: &QForm, sigma: &GroupElement, num: i64) -> Check {
    let cls = reduction_cycle(q);
    let s = sigma.normalized().map_err(|e| e.to_string())?;
    let qs = form_from_matrix(&s).map_err(|e| e.to_string())?;
    let [a, b, c] = qs.to_f64();
    let centre = -BigRational::from_integer(qs.b().clone()) / BigRational::from_integer(BigInt::from(2) * qs.a());
    let radius = (b * b - 4.0 * a * c).sqrt() / (2.0 * a.abs()) * 0.95;
    let off = BigRational::new(BigInt::from(((num as f64 / 50.0 - 1.0) * radius * 1e6) as i64), BigInt::from(1_000_000));
    let x0 = centre + off;
    let base = enumerate_closed_intersections(&cls, sigma).map_err(|e| e.to_string())?;
    let moved = enumerate_closed_intersections_with(&cls, sigma, Some(&x0), 1).map_err(|e| e.to_string())?;
    ensure(same_multiset(&base, &moved), || format!("{q} {sigma} from {x0}: {:?} vs {:?}", multiset(&base), multiset(&moved)))
}

pub fn conjugacy_invariant(q: &QForm, sigma: &GroupElement, g: &GroupElement) -> Check {
    let cls = reduction_cycle(q);
    let conj = &(g * sigma) * &g.inverse();
    let a = enumerate_closed_intersections(&cls, sigma).map_err(|e| e.to_string())?;
    let b = enumerate_closed_intersections(&cls, &conj).map_err(|e| e.to_string())?;
    ensure(same_multiset(&a, &b), || format!("{q} {sigma} by {g}: {:?} vs {:?}", multiset(&a), multiset(&b)))
}

pub fn closed_enumeration_complete(q: &QForm, sigma: &GroupElement) -> Check {
    let cls = reduction_cycle(q);
    let a = enumerate_closed_intersections(&cls, sigma).map_err(|e| e.to_string())?;
    let b = enumerate_closed_intersections_with(&cls, sigma, None, 2).map_err(|e| e.to_string())?;
    ensure(a == b, || format!("{q} {sigma}: {} vs {}", a.len(), b.len()))
}

pub fn vertical_enumeration_complete(q: &QForm, d: i64, c: i64) -> Check {
    let cls = reduction_cycle(q);
    let (d, c) = (BigInt::from(d), BigInt::from(c));
    let a = enumerate_vertical_intersections(&cls, &d, &c).map_err(|e| e.to_string())?;
    let b = enumerate_vertical_intersections_with(&cls, &d, &c, 2).map_err(|e| e.to_string())?;
    ensure(a == b, || format!("{q} {d}/{c}: {} vs {}", a.len(), b.len()))
}
