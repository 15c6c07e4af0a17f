//! Angles between a fixed closed geodesic and all geodesics of a given
//! discriminant, against the `(1/2) sin θ dθ` law.

use modgeo::geodesics::enumerate_closed_intersections;
use modgeo::qforms::class_representatives;
use modgeo::{Error, GroupElement, QForm};
use num_bigint::BigInt;

use crate::run::pool;

#[derive(Clone, Debug)]
pub struct Crossing {
    pub form: QForm,
    pub cos_angle: f64,
    pub sign: i32,
}

#[derive(Clone, Debug)]
pub struct Ladder {
    pub disc: i64,
    pub classes: usize,
    /// Classes equal to the class of the fixed geodesic.
    pub skipped: usize,
    pub crossings: Vec<Crossing>,
    pub counts: Vec<usize>,
    pub ks_distance: f64,
}

/// Kolmogorov–Smirnov distance to the uniform law on `[−1, 1]`, which is the
/// image of `(1/2) sin θ dθ` under `θ ↦ cos θ`.
pub fn ks_uniform(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = ((x + 1.0) / 2.0).clamp(0.0, 1.0);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

pub fn bin_counts(xs: &[f64], bins: usize) -> Vec<usize> {
    let mut c = vec![0; bins];
    for &x in xs {
        let i = (((x + 1.0) / 2.0 * bins as f64) as usize).min(bins - 1);
        c[i] += 1;
    }
    c
}

fn one_disc(gamma: &GroupElement, d: i64, bins: usize) -> Result<Ladder, Error> {
    let classes = class_representatives(&BigInt::from(d))?;
    let mut crossings = Vec::new();
    let mut skipped = 0;
    for cls in &classes {
        match enumerate_closed_intersections(cls, gamma) {
            Ok(ps) => crossings.extend(ps.into_iter().map(|p| Crossing {
                form: p.witness_form,
                cos_angle: p.cos_angle,
                sign: p.sign,
            })),
            Err(Error::EquivalentClasses) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    let cos: Vec<f64> = crossings.iter().map(|c| c.cos_angle).collect();
    Ok(Ladder {
        disc: d,
        classes: classes.len(),
        skipped,
        counts: bin_counts(&cos, bins),
        ks_distance: ks_uniform(&cos),
        crossings,
    })
}

pub fn histogram(gamma: &GroupElement, discs: &[i64], bins: usize, jobs: usize) -> Result<Vec<Ladder>, Error> {
    pool(discs.len(), jobs, |i| one_disc(gamma, discs[i], bins)).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_uniform_grid_is_small() {
        let xs: Vec<f64> = (0..1000).map(|i| -1.0 + (2 * i + 1) as f64 / 1000.0).collect();
        assert!(ks_uniform(&xs) < 1e-3 + 1e-12);
        assert!((ks_uniform(&[1.0, 1.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bins_cover_the_interval() {
        let c = bin_counts(&[-1.0, -0.99, 0.0, 0.999, 1.0], 4);
        assert_eq!(c, vec![2, 0, 1, 2]);
    }

    #[test]
    fn accounting() {
        let g = GroupElement::from_i64(2, 1, 1, 1).unwrap();
        let ls = histogram(&g, &[13, 21], 10, 2).unwrap();
        for l in &ls {
            assert_eq!(l.counts.iter().sum::<usize>(), l.crossings.len());
            assert!(l.crossings.iter().all(|c| (-1.0..=1.0).contains(&c.cos_angle)));
            assert!(!l.crossings.is_empty());
        }
        let own = histogram(&g, &[5], 10, 1).unwrap();
        assert_eq!(own[0].skipped, 1);
    }
}
