//! Morrey–Campanato type norms as exact maxima over canonical balls.
//!
//! For a ball `B` and exponent `p`, the normalized functionals are
//! `([μ(B)]^{-1-pα} Σ_B g^p w)^{1/p}` with `g` one of `|f − f_B|` (Campanato
//! oscillation), `f − min_B f` (BLO oscillation) or `|f|` (size). Localized
//! norms take the oscillation over balls outside a class `D` and the size over
//! balls in `D`, and add the two suprema.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, invalid_param, Result};
use crate::num::{ArgMax, Exponent};
use crate::space::{BallIndex, MetricMeasureSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid_input("function values must be finite"));
        }
        Ok(GridFunction { values })
    }

    pub fn zeros(n: usize) -> Self {
        GridFunction { values: vec![0.0; n] }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        GridFunction { values: vec![c; n] }
    }

    pub fn from_fn(space: &MetricMeasureSpace, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::new(space.sample(f)?)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        GridFunction { values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn shifted(&self, c: f64) -> Self {
        GridFunction { values: self.values.iter().map(|v| v + c).collect() }
    }

    /// Weighted mean over the members of a ball, taken relative to the first
    /// member so that constants come out exact.
    pub fn ball_mean(&self, index: &BallIndex, ball: usize) -> f64 {
        let w = index.weights();
        let members = index.members(ball);
        let base = self.values[members[0] as usize];
        let s: f64 = members.iter().map(|&y| (self.values[y as usize] - base) * w[y as usize]).sum();
        base + s / index.ball(ball).measure
    }

    pub fn ball_min(&self, index: &BallIndex, ball: usize) -> f64 {
        index.members(ball).iter().map(|&y| self.values[y as usize]).fold(f64::INFINITY, f64::min)
    }

    pub fn ball_max(&self, index: &BallIndex, ball: usize) -> f64 {
        index.members(ball).iter().map(|&y| self.values[y as usize]).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassOrigin {
    Explicit,
    FromRho,
}

/// A set of canonical balls, the class `D` of balls treated by size alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallClass {
    pub member_ball_ids: Vec<usize>,
    pub origin: ClassOrigin,
    #[serde(skip)]
    mask: Vec<bool>,
}

impl BallClass {
    pub fn explicit(index: &BallIndex, ids: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut mask = vec![false; index.len()];
        for id in ids {
            if id >= index.len() {
                return Err(invalid_input(format!("ball id {id} out of range")));
            }
            mask[id] = true;
        }
        Ok(Self::from_mask(mask, ClassOrigin::Explicit))
    }

    pub fn empty(index: &BallIndex) -> Self {
        Self::from_mask(vec![false; index.len()], ClassOrigin::Explicit)
    }

    pub fn all(index: &BallIndex) -> Self {
        Self::from_mask(vec![true; index.len()], ClassOrigin::Explicit)
    }

    fn from_mask(mask: Vec<bool>, origin: ClassOrigin) -> Self {
        let member_ball_ids = mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect();
        BallClass { member_ball_ids, origin, mask }
    }

    #[inline]
    pub fn contains(&self, ball: usize) -> bool {
        self.mask[ball]
    }

    pub fn len(&self) -> usize {
        self.member_ball_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_ball_ids.is_empty()
    }

    fn check(&self, index: &BallIndex) -> Result<()> {
        if self.mask.len() != index.len() {
            return Err(invalid_input("ball class was built for a different ball index"));
        }
        Ok(())
    }
}

/// Balls with some realization `(c, r)` satisfying `r ≥ ρ(c)`; the whole-space
/// radius counts as `diam + h`.
pub fn dclass_from_rho(index: &BallIndex, rho: &[f64]) -> Result<BallClass> {
    if rho.len() != index.n_points() {
        return Err(invalid_input("rho length differs from the point count"));
    }
    if rho.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(invalid_input("rho must be positive and finite"));
    }
    let mask = (0..index.len())
        .map(|b| index.realizations(b).iter().any(|r| index.finite_radius(r.radius) >= rho[r.center]))
        .collect();
    Ok(BallClass::from_mask(mask, ClassOrigin::FromRho))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttainingBalls {
    pub oscillation: Option<usize>,
    pub size: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBreakdown {
    pub oscillation_part: f64,
    pub size_part: f64,
    pub total: f64,
    pub attaining_balls: AttainingBalls,
}

impl NormBreakdown {
    fn from_parts(osc: ArgMax, size: ArgMax) -> Self {
        NormBreakdown {
            oscillation_part: osc.value,
            size_part: size.value,
            total: osc.value + size.value,
            attaining_balls: AttainingBalls { oscillation: osc.id, size: size.id },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormClass {
    E,
    Etilde,
    Lip,
    Morrey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub alpha: f64,
    pub p: Exponent,
    pub class: NormClass,
    pub oscillation_part: f64,
    pub size_part: f64,
    pub total: f64,
    pub attaining_balls: AttainingBalls,
}

impl NormReport {
    pub fn new(class: NormClass, alpha: f64, p: Exponent, b: &NormBreakdown) -> Self {
        NormReport {
            alpha,
            p,
            class,
            oscillation_part: b.oscillation_part,
            size_part: b.size_part,
            total: b.total,
            attaining_balls: b.attaining_balls,
        }
    }
}

/// Which pointwise quantity a per-ball functional integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrand {
    /// `|f − f_B|`
    MeanOscillation,
    /// `f − min_B f`
    MinOscillation,
    /// `|f|`
    Size,
}

/// `Σ_B g^p w` for the chosen integrand.
pub fn ball_power_sum(index: &BallIndex, f: &GridFunction, ball: usize, p: f64, what: Integrand) -> f64 {
    let w = index.weights();
    let v = f.values();
    let members = index.members(ball);
    let shift = match what {
        Integrand::MeanOscillation => f.ball_mean(index, ball),
        Integrand::MinOscillation => f.ball_min(index, ball),
        Integrand::Size => 0.0,
    };
    members
        .iter()
        .map(|&y| {
            let y = y as usize;
            let g = match what {
                Integrand::MeanOscillation | Integrand::Size => (v[y] - shift).abs(),
                Integrand::MinOscillation => v[y] - shift,
            };
            pow(g, p) * w[y]
        })
        .sum()
}

#[inline]
fn pow(g: f64, p: f64) -> f64 {
    if p == 1.0 {
        g
    } else if p == 2.0 {
        g * g
    } else {
        g.powf(p)
    }
}

/// `(Σ_B g^p w / μ(B))^{1/p} · μ(B)^{-α}`.
pub fn ball_functional(index: &BallIndex, f: &GridFunction, ball: usize, alpha: f64, p: f64, what: Integrand) -> f64 {
    let mu = index.ball(ball).measure;
    let s = ball_power_sum(index, f, ball, p, what);
    (s / mu).powf(1.0 / p) * mu.powf(-alpha)
}

fn check_fn(index: &BallIndex, f: &GridFunction) -> Result<()> {
    if f.len() != index.n_points() {
        return Err(invalid_input(format!("function has {} values, space has {}", f.len(), index.n_points())));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(invalid_param("p must be positive and finite"));
    }
    Ok(())
}

fn split_max(
    index: &BallIndex,
    d: &BallClass,
    osc: impl Fn(usize) -> f64 + Sync,
    size: impl Fn(usize) -> f64 + Sync,
) -> NormBreakdown {
    let (o, s) = (0..index.len())
        .into_par_iter()
        .map(|b| {
            if d.contains(b) {
                (ArgMax::EMPTY, ArgMax::new(size(b), b))
            } else {
                (ArgMax::new(osc(b), b), ArgMax::EMPTY)
            }
        })
        .reduce(|| (ArgMax::EMPTY, ArgMax::EMPTY), |a, b| (a.0.merge(b.0), a.1.merge(b.1)));
    NormBreakdown::from_parts(o, s)
}

fn localized(
    index: &BallIndex,
    f: &GridFunction,
    alpha: f64,
    p: f64,
    d: &BallClass,
    osc: Integrand,
) -> Result<NormBreakdown> {
    check_p(p)?;
    check_fn(index, f)?;
    d.check(index)?;
    Ok(split_max(
        index,
        d,
        |b| ball_functional(index, f, b, alpha, p, osc),
        |b| ball_functional(index, f, b, alpha, p, Integrand::Size),
    ))
}

/// Localized Morrey–Campanato norm; `D = ∅` gives the global norm.
pub fn campanato_norm(index: &BallIndex, f: &GridFunction, alpha: f64, p: f64, d: &BallClass) -> Result<NormBreakdown> {
    localized(index, f, alpha, p, d, Integrand::MeanOscillation)
}

/// Localized Campanato-BLO norm (oscillation above the ball minimum).
pub fn campanato_blo_norm(
    index: &BallIndex,
    f: &GridFunction,
    alpha: f64,
    p: f64,
    d: &BallClass,
) -> Result<NormBreakdown> {
    localized(index, f, alpha, p, d, Integrand::MinOscillation)
}

/// Localized Lipschitz norm: `max_B∉D (max−min)/μ^α` plus `max_B∈D max|f|/μ^α`.
///
/// The two parts are reported separately; `total` is their maximum, the
/// smallest `C` satisfying both conditions.
pub fn lipschitz_norm(index: &BallIndex, f: &GridFunction, alpha: f64, d: &BallClass) -> Result<NormBreakdown> {
    if !(alpha > 0.0) {
        return Err(invalid_param("Lipschitz norm needs alpha > 0"));
    }
    check_fn(index, f)?;
    d.check(index)?;
    let mut out = split_max(
        index,
        d,
        |b| (f.ball_max(index, b) - f.ball_min(index, b)) / index.ball(b).measure.powf(alpha),
        |b| {
            let m = index.members(b).iter().map(|&y| f.values()[y as usize].abs()).fold(0.0, f64::max);
            m / index.ball(b).measure.powf(alpha)
        },
    );
    out.total = out.oscillation_part.max(out.size_part);
    Ok(out)
}

/// `sup_B ([μ(B)]^{-1-αp} Σ_B |f|^p w)^{1/p}` over every ball.
pub fn morrey_norm(index: &BallIndex, f: &GridFunction, alpha: f64, p: f64) -> Result<NormBreakdown> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid_param("Morrey norm needs p >= 1"));
    }
    localized(index, f, alpha, p, &BallClass::all(index), Integrand::Size)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationSplit {
    pub global_norm: f64,
    pub size_sup: f64,
}

/// Global norm and `max_{B∈D} |f_B|·μ(B)^{-α}`.
pub fn localization_split(
    index: &BallIndex,
    f: &GridFunction,
    alpha: f64,
    p: f64,
    d: &BallClass,
) -> Result<LocalizationSplit> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid_param("localization split needs p >= 1"));
    }
    d.check(index)?;
    let global_norm = campanato_norm(index, f, alpha, p, &BallClass::empty(index))?.total;
    let size_sup = d
        .member_ball_ids
        .par_iter()
        .map(|&b| f.ball_mean(index, b).abs() * index.ball(b).measure.powf(-alpha))
        .reduce(|| 0.0, f64::max);
    Ok(LocalizationSplit { global_norm, size_sup })
}

/// Pointwise clamp to `[-level, level]`.
pub fn truncate(f: &GridFunction, level: f64) -> Result<GridFunction> {
    if !(level >= 0.0) {
        return Err(invalid_param("truncation level must be nonnegative"));
    }
    Ok(GridFunction { values: f.values().iter().map(|v| v.clamp(-level, level)).collect() })
}

/// Worst per-ball ratio `Σ|f−f_B|^p w / (2^p Σ(f−min_B f)^p w)`; at most 1 for `p ≥ 1`.
pub fn mean_vs_min_worst(index: &BallIndex, f: &GridFunction, p: f64) -> Result<ArgMax> {
    check_p(p)?;
    check_fn(index, f)?;
    let k = 2f64.powf(p);
    Ok((0..index.len())
        .into_par_iter()
        .map(|b| {
            let mean = ball_power_sum(index, f, b, p, Integrand::MeanOscillation);
            let min = ball_power_sum(index, f, b, p, Integrand::MinOscillation);
            let r = if min > 0.0 { mean / (k * min) } else { 0.0 };
            ArgMax::new(r, b)
        })
        .reduce(|| ArgMax::EMPTY, ArgMax::merge))
}

/// Worst per-ball ratio of the normalized `L^{p1}` to `L^{p2}` mean oscillation
/// for `p1 ≤ p2`; at most 1.
pub fn holder_worst(index: &BallIndex, f: &GridFunction, alpha: f64, p1: f64, p2: f64) -> Result<ArgMax> {
    check_p(p1)?;
    check_p(p2)?;
    if p1 > p2 {
        return Err(invalid_param("need p1 <= p2"));
    }
    check_fn(index, f)?;
    Ok((0..index.len())
        .into_par_iter()
        .map(|b| {
            let lo = ball_functional(index, f, b, alpha, p1, Integrand::MeanOscillation);
            let hi = ball_functional(index, f, b, alpha, p2, Integrand::MeanOscillation);
            let r = if hi > 0.0 { lo / hi } else { 0.0 };
            ArgMax::new(r, b)
        })
        .reduce(|| ArgMax::EMPTY, ArgMax::merge))
}
