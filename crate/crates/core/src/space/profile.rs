//! Doubling and reverse-doubling estimates over all canonical radii.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BallIndex, MetricMeasureSpace};
use crate::num::slope_through_origin;

const LAMBDAS: [f64; 3] = [2.0, 4.0, 8.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceProfile {
    #[serde(rename = "A1")]
    pub a1: f64,
    pub n_exp: f64,
    #[serde(rename = "A3")]
    pub a3: f64,
    pub kappa: f64,
}

impl SpaceProfile {
    pub const DEGENERATE: SpaceProfile = SpaceProfile { a1: 1.0, n_exp: 0.0, a3: 1.0, kappa: 0.0 };

    /// Whether a positive reverse-doubling exponent was fitted.
    pub fn rd_ok(&self) -> bool {
        self.kappa > 0.0
    }
}

pub fn doubling_profile(space: &MetricMeasureSpace) -> SpaceProfile {
    doubling_profile_from_index(&BallIndex::new(space))
}

/// `μ(B(x,r))` is constant for `r` in `(d_k, d_{k+1}]` while `μ(B(x,2r))` is
/// nondecreasing, so the doubling maximum is attained at canonical radii.
pub fn doubling_profile_from_index(index: &BallIndex) -> SpaceProfile {
    let n = index.n_points();
    if n <= 1 {
        return SpaceProfile::DEGENERATE;
    }
    let half = index.diameter() / 2.0;

    // per center: (A1 candidate, [max ratio per λ], [min ratio per λ])
    let per_center: Vec<(f64, [f64; 3], [f64; 3])> = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut a1 = 1.0f64;
            let mut hi = [f64::NEG_INFINITY; 3];
            let mut lo = [f64::INFINITY; 3];
            for (r, _) in index.levels(x) {
                if !r.is_finite() {
                    continue;
                }
                let base = index.measure_open(x, r);
                a1 = a1.max(index.measure_open(x, 2.0 * r) / base);
                if r > half {
                    continue;
                }
                for (k, &lam) in LAMBDAS.iter().enumerate() {
                    if lam * r <= half {
                        let q = index.measure_open(x, lam * r) / base;
                        hi[k] = hi[k].max(q);
                        lo[k] = lo[k].min(q);
                    }
                }
            }
            (a1, hi, lo)
        })
        .collect();

    let mut a1 = 1.0f64;
    let mut hi = [f64::NEG_INFINITY; 3];
    let mut lo = [f64::INFINITY; 3];
    for (c, h, l) in &per_center {
        a1 = a1.max(*c);
        for k in 0..3 {
            hi[k] = hi[k].max(h[k]);
            lo[k] = lo[k].min(l[k]);
        }
    }

    let upper: Vec<(f64, f64)> = (0..3)
        .filter(|&k| hi[k].is_finite())
        .map(|k| (LAMBDAS[k].ln(), hi[k].ln()))
        .collect();
    let lower: Vec<(f64, f64)> = (0..3)
        .filter(|&k| lo[k].is_finite())
        .map(|k| (LAMBDAS[k].ln(), lo[k].ln()))
        .collect();
    let (Some(n_exp), Some(kappa)) = (slope_through_origin(&upper), slope_through_origin(&lower)) else {
        return SpaceProfile { a1, ..SpaceProfile::DEGENERATE };
    };
    let kappa = kappa.max(0.0);
    let a3 = (0..3)
        .filter(|&k| lo[k].is_finite())
        .map(|k| lo[k] / LAMBDAS[k].powf(kappa))
        .fold(f64::INFINITY, f64::min)
        .min(1.0);
    SpaceProfile { a1, n_exp: n_exp.max(kappa), a3, kappa }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_grid_space, builtin_space, WeightSpec};

    fn brute_a1(s: &MetricMeasureSpace) -> f64 {
        let n = s.len();
        let mu = |x: usize, r: f64| -> f64 { (0..n).filter(|&y| s.dist(x, y) < r).map(|y| s.weights()[y]).sum() };
        let mut best = 1.0f64;
        for x in 0..n {
            for y in 0..n {
                let r = s.dist(x, y);
                if r > 0.0 {
                    best = best.max(mu(x, 2.0 * r) / mu(x, r));
                }
            }
        }
        best
    }

    #[test]
    fn single_point() {
        let s = MetricMeasureSpace::from_points("one", vec![vec![0.0]], vec![3.0]).unwrap();
        assert_eq!(doubling_profile(&s), SpaceProfile::DEGENERATE);
    }

    #[test]
    fn two_points() {
        let p = doubling_profile(&builtin_space("two_point").unwrap());
        assert_eq!(p.a1, 2.0);
    }

    #[test]
    fn uniform_line() {
        let s = build_grid_space(1, 1.0, 101, WeightSpec::Uniform).unwrap();
        let p = doubling_profile(&s);
        assert!((2.0..=3.0).contains(&p.a1), "{p:?}");
        assert!((p.a1 - brute_a1(&s)).abs() < 1e-12);
        assert!(p.kappa > 0.5 && p.kappa <= p.n_exp, "{p:?}");
        assert!(p.n_exp < 1.6, "{p:?}");
        assert!(p.a3 > 0.0 && p.a3 <= 1.0);
    }

    #[test]
    fn random_metric_matches_brute_force() {
        let s = builtin_space("random16").unwrap();
        let p = doubling_profile(&s);
        assert!((p.a1 - brute_a1(&s)).abs() < 1e-12);
    }
}
