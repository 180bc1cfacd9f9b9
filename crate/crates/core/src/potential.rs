//! Potentials, the reverse Hölder class, the critical radius `ρ` and
//! admissibility constants.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, invalid_param, Error, Result};
use crate::num::{ArgMax, Exponent};
use crate::space::{BallIndex, MetricMeasureSpace};

/// A nonnegative function on the points of a space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Potential {
    values: Vec<f64>,
}

impl Potential {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid_input("potential values must be finite and nonnegative"));
        }
        Ok(Potential { values })
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; n])
    }

    /// Sample `V` on the coordinates of `space`.
    pub fn from_fn(space: &MetricMeasureSpace, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::new(space.sample(f)?)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vanishes(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReverseHolderReport {
    pub q: Exponent,
    pub constant: f64,
    pub worst_ball: Option<usize>,
}

/// Largest ratio of the `L^q` mean to the `L¹` mean of `V` over all balls.
/// Balls on which `V` vanishes count as ratio 1.
pub fn reverse_holder_constant(index: &BallIndex, v: &Potential, q: Exponent) -> Result<ReverseHolderReport> {
    if let Exponent::Finite(qv) = q {
        if !(qv > 1.0) {
            return Err(invalid_param("reverse Hölder order must exceed 1"));
        }
    }
    check_len(index, v.len())?;
    let w = index.weights();
    let vals = v.values();
    let best = (0..index.len())
        .into_par_iter()
        .map(|b| {
            let members = index.members(b);
            let mu = index.ball(b).measure;
            let mean: f64 = members.iter().map(|&y| vals[y as usize] * w[y as usize]).sum::<f64>() / mu;
            let top = match q {
                Exponent::Infinity => members.iter().map(|&y| vals[y as usize]).fold(0.0, f64::max),
                Exponent::Finite(qv) => {
                    let s: f64 = members.iter().map(|&y| vals[y as usize].powf(qv) * w[y as usize]).sum();
                    (s / mu).powf(1.0 / qv)
                }
            };
            let ratio = if mean > 0.0 { top / mean } else { 1.0 };
            ArgMax::new(ratio, b)
        })
        .reduce(|| ArgMax::EMPTY, ArgMax::merge);
    Ok(ReverseHolderReport { q, constant: best.value.max(1.0), worst_ball: best.id })
}

/// Critical radius together with (optionally) fitted admissibility constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleFunction {
    pub rho: Vec<f64>,
    #[serde(rename = "C0")]
    pub c0: Option<f64>,
    pub k0: Option<f64>,
}

impl AdmissibleFunction {
    /// An explicitly supplied `ρ`; constants are left unfitted.
    pub fn explicit(rho: Vec<f64>) -> Result<Self> {
        check_rho(&rho)?;
        Ok(AdmissibleFunction { rho, c0: None, k0: None })
    }

    /// Fit `C0` for the given `k0` and store both.
    pub fn fit_constants(&mut self, space: &MetricMeasureSpace, k0: f64) -> Result<f64> {
        let c0 = admissibility_constants(space, &self.rho, k0)?;
        self.c0 = Some(c0);
        self.k0 = Some(k0);
        Ok(c0)
    }
}

fn check_rho(rho: &[f64]) -> Result<()> {
    if rho.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(invalid_input("rho must be positive and finite"));
    }
    Ok(())
}

fn check_len(index: &BallIndex, n: usize) -> Result<()> {
    if n != index.n_points() {
        return Err(invalid_input(format!("expected {} values, got {n}", index.n_points())));
    }
    Ok(())
}

/// `ρ(x) = sup{r > 0 : r²·(mean of V on B(x,r)) ≤ 1}`, computed exactly.
///
/// Between consecutive distinct distances `d_{k-1} < r ≤ d_k` the ball is
/// fixed with mean `A`, so `r²A` is increasing and the admissible part of the
/// segment ends at `min(d_k, A^{-1/2})`.
pub fn critical_radius(index: &BallIndex, v: &Potential) -> Result<AdmissibleFunction> {
    check_len(index, v.len())?;
    if v.vanishes() {
        return Err(Error::PotentialVanishes);
    }
    let w = index.weights();
    let vals = v.values();
    let rho: Vec<f64> = (0..index.n_points())
        .into_par_iter()
        .map(|x| {
            let row = index.distance_row(x);
            let ids = index.order_row(x);
            let n = row.len();
            let (mut mass, mut integral) = (0.0, 0.0);
            let mut best = 0.0f64;
            let mut k = 0;
            while k < n {
                let left = row[k];
                while k < n && row[k] == left {
                    let y = ids[k] as usize;
                    mass += w[y];
                    integral += vals[y] * w[y];
                    k += 1;
                }
                let right = if k < n { row[k] } else { f64::INFINITY };
                let a = integral / mass;
                let cap = if a > 0.0 { a.sqrt().recip() } else { f64::INFINITY };
                if cap >= left {
                    best = best.max(cap.min(right));
                }
            }
            best
        })
        .collect();
    Ok(AdmissibleFunction { rho, c0: None, k0: None })
}

/// Smallest `C0` with `1/ρ(x) ≤ C0·(1/ρ(y))·(1 + d(x,y)/ρ(y))^{k0}` for all pairs.
pub fn admissibility_constants(space: &MetricMeasureSpace, rho: &[f64], k0: f64) -> Result<f64> {
    if !(k0 >= 0.0 && k0.is_finite()) {
        return Err(invalid_param("k0 must be nonnegative"));
    }
    if rho.len() != space.len() {
        return Err(invalid_input("rho length differs from the point count"));
    }
    check_rho(rho)?;
    let n = space.len();
    let best = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut m = 0.0f64;
            for y in 0..n {
                let r = rho[y] / rho[x] * (1.0 + space.dist(x, y) / rho[y]).powf(-k0);
                m = m.max(r);
            }
            m
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityPoint {
    pub k0: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
}

/// `C0` for `k0 ∈ {0, 0.25, …, 4}`.
pub fn admissibility_sweep(space: &MetricMeasureSpace, rho: &[f64]) -> Result<Vec<AdmissibilityPoint>> {
    (0..=16)
        .map(|i| {
            let k0 = i as f64 * 0.25;
            Ok(AdmissibilityPoint { k0, c0: admissibility_constants(space, rho, k0)? })
        })
        .collect()
}
