//! Smallest constants making the kernel size, smoothness and conservation
//! bounds hold on a sampled set of scales and points.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BoundaryCondition, KernelFamily};
use crate::error::{invalid_input, invalid_param, Result};
use crate::space::{BallIndex, MetricMeasureSpace, WeightSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundId {
    /// `|K_t(x,y)| ≤ C/(V_t(x)+V(x,y)) (t/(t+d))^γ (ρ(x)/(t+ρ(x)))^{δ1}`
    #[serde(rename = "eq31")]
    Eq31,
    /// `|K_t(x,y) − K_t(x',y)| ≤ C/(V_t(x)+V(x,y)) (t/(t+d))^γ (d(x,x')/t)^β`
    #[serde(rename = "eq32")]
    Eq32,
    /// `|1 − T_t 1(x)| ≤ C (t/(t+ρ(x)))^{δ2}`
    #[serde(rename = "eq33")]
    Eq33,
    /// Size bound for `Q_t`, same shape as `eq31`.
    #[serde(rename = "Qi")]
    Qi,
    /// `|Q_t(x,y) − Q_t(x',y)| ≤ C (d(x,x')/(t+d))^β /(V_t(x)+V(x,y)) (t/(t+d))^γ`
    #[serde(rename = "Qii")]
    Qii,
    /// `|Q_t 1(x)| ≤ C (t/(t+ρ(x)))^{δ2}`
    #[serde(rename = "Qiii")]
    Qiii,
    /// Gaussian bound `|K_t(x,y)| ≤ C·P_t(x)·exp(−d²/(c t²)) (ρ(x)/(t+ρ(x)))^N (ρ(y)/(t+ρ(y)))^N`
    /// with `P_t(x) = t^{−dim}` on uniform lattices and `1/V_t(x)` otherwise.
    #[serde(rename = "prop51")]
    Prop51,
}

impl BoundId {
    pub const ALL: [BoundId; 7] =
        [BoundId::Eq31, BoundId::Eq32, BoundId::Eq33, BoundId::Qi, BoundId::Qii, BoundId::Qiii, BoundId::Prop51];

    pub fn name(self) -> &'static str {
        match self {
            BoundId::Eq31 => "eq31",
            BoundId::Eq32 => "eq32",
            BoundId::Eq33 => "eq33",
            BoundId::Qi => "Qi",
            BoundId::Qii => "Qii",
            BoundId::Qiii => "Qiii",
            BoundId::Prop51 => "prop51",
        }
    }

    fn needs_matrix(self) -> bool {
        !matches!(self, BoundId::Eq33 | BoundId::Qiii)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundParams {
    pub gamma: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub beta: f64,
    /// Power `N` of the `ρ` factors in the Gaussian bound.
    pub n_power: f64,
    /// Constant `c` in `exp(−d²/(c t²))`.
    pub gauss_c: f64,
    /// Sample `x` only in the central box of this relative size under
    /// Dirichlet conditions; `None` samples every point.
    pub inner_fraction: Option<f64>,
    /// Cap on the number of partners `x'` per `x` for the smoothness bounds.
    pub max_partners: usize,
    /// Skip scales below this value.
    pub t_min: Option<f64>,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams {
            gamma: 1.0,
            delta1: 1.0,
            delta2: 1.0,
            beta: 1.0,
            n_power: 1.0,
            gauss_c: 4.0,
            inner_fraction: Some(0.5),
            max_partners: 16,
            t_min: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub t: f64,
    pub x: usize,
    pub y: Option<usize>,
    pub x_prime: Option<usize>,
    pub lhs: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPerScale {
    pub t: f64,
    /// `None` when no admissible sample exists at this scale.
    pub constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundFit {
    pub bound: BoundId,
    pub constant: f64,
    pub witness: Option<Witness>,
    pub per_scale: Vec<FitPerScale>,
}

struct Ctx<'a> {
    space: &'a MetricMeasureSpace,
    index: &'a BallIndex,
    rho: &'a [f64],
    p: BoundParams,
    uniform: bool,
    dim: f64,
}

#[derive(Default)]
struct Best {
    ratio: f64,
    witness: Option<Witness>,
    seen: bool,
    /// Values at or below this count as zero.
    floor: f64,
}

impl Best {
    fn offer(&mut self, lhs: f64, bound: f64, w: impl FnOnce(f64, f64) -> Witness) {
        self.seen = true;
        let r = if lhs <= self.floor {
            0.0
        } else if bound > 0.0 {
            lhs / bound
        } else {
            f64::INFINITY
        };
        if self.witness.is_none() || r > self.ratio {
            self.ratio = r;
            self.witness = Some(w(lhs, bound));
        }
    }
}

/// Fit the smallest `C` for `bound` over the family's scale grid.
pub fn kernel_bound_fit(
    family: &KernelFamily<'_>,
    space: &MetricMeasureSpace,
    index: &BallIndex,
    rho: &[f64],
    bound: BoundId,
    params: BoundParams,
) -> Result<BoundFit> {
    for (name, v) in [
        ("gamma", params.gamma),
        ("delta1", params.delta1),
        ("delta2", params.delta2),
        ("beta", params.beta),
        ("n_power", params.n_power),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(invalid_param(format!("{name} must be nonnegative")));
        }
    }
    if !(params.gauss_c > 0.0) {
        return Err(invalid_param("gauss_c must be positive"));
    }
    let n = space.len();
    if rho.len() != n || family.spectrum.len() != n || index.n_points() != n {
        return Err(invalid_input("space, spectrum and rho sizes differ"));
    }
    if rho.iter().any(|r| !(*r > 0.0)) {
        return Err(invalid_input("rho must be positive"));
    }
    let lattice = space.lattice();
    let ctx = Ctx {
        space,
        index,
        rho,
        p: params,
        uniform: matches!(lattice.map(|l| l.weight), Some(WeightSpec::Uniform)),
        dim: lattice.map(|l| l.dim as f64).unwrap_or(1.0),
    };
    let xs: Vec<usize> = match (family.spectrum.bc(), params.inner_fraction) {
        (BoundaryCondition::Dirichlet, Some(frac)) => (0..n).filter(|&x| space.is_inner(x, frac)).collect(),
        _ => (0..n).collect(),
    };

    let per: Vec<(FitPerScale, Option<Witness>)> = family
        .grid
        .ts
        .par_iter()
        .map(|&t| {
            if params.t_min.is_some_and(|m| t < m) {
                return Ok((FitPerScale { t, constant: None }, None));
            }
            let best = if bound.needs_matrix() {
                let k = family.kernel_matrix(t)?;
                scan_matrix(&ctx, &k, &xs, t, bound)
            } else {
                let one = family.apply_to_one(t)?;
                scan_conservation(&ctx, &one, &xs, t, bound)
            };
            let c = best.seen.then_some(best.ratio);
            Ok((FitPerScale { t, constant: c }, best.witness))
        })
        .collect::<Result<_>>()?;

    let mut constant = 0.0f64;
    let mut witness = None;
    let mut per_scale = Vec::with_capacity(per.len());
    for (s, w) in per {
        if let Some(c) = s.constant {
            if witness.is_none() || c > constant {
                constant = constant.max(c);
                witness = w;
            }
        }
        per_scale.push(s);
    }
    Ok(BoundFit { bound, constant, witness, per_scale })
}

fn rho_factor(rho: f64, t: f64, power: f64) -> f64 {
    (rho / (t + rho)).powf(power)
}

fn scan_matrix(ctx: &Ctx<'_>, k: &DMatrix<f64>, xs: &[usize], t: f64, bound: BoundId) -> Best {
    let n = ctx.space.len();
    let p = &ctx.p;
    // roundoff level of a spectral sum of n terms
    let floor = n as f64 * f64::EPSILON * k.abs().max();
    let mut best = Best { floor, ..Best::default() };
    for &x in xs {
        let vt = ctx.index.measure_open(x, t);
        let rx = ctx.rho[x];
        match bound {
            BoundId::Eq31 | BoundId::Qi => {
                let rf = rho_factor(rx, t, p.delta1);
                for y in 0..n {
                    let d = ctx.space.dist(x, y);
                    let b = (t / (t + d)).powf(p.gamma) * rf / (vt + ctx.index.measure_open(x, d));
                    best.offer(k[(x, y)].abs(), b, |l, b| Witness { t, x, y: Some(y), x_prime: None, lhs: l, bound: b });
                }
            }
            BoundId::Prop51 => {
                let pre = if ctx.uniform { t.powf(-ctx.dim) } else { 1.0 / vt };
                let rf = rho_factor(rx, t, p.n_power);
                for y in 0..n {
                    let d = ctx.space.dist(x, y);
                    let b = pre * (-d * d / (p.gauss_c * t * t)).exp() * rf * rho_factor(ctx.rho[y], t, p.n_power);
                    best.offer(k[(x, y)].abs(), b, |l, b| Witness { t, x, y: Some(y), x_prime: None, lhs: l, bound: b });
                }
            }
            BoundId::Eq32 | BoundId::Qii => {
                for xp in partners(ctx, x, t) {
                    let dxx = ctx.space.dist(x, xp);
                    for y in 0..n {
                        let d = ctx.space.dist(x, y);
                        let base = (t / (t + d)).powf(p.gamma) / (vt + ctx.index.measure_open(x, d));
                        let smooth = match bound {
                            BoundId::Eq32 => (dxx / t).powf(p.beta),
                            _ => (dxx / (t + d)).powf(p.beta),
                        };
                        let lhs = (k[(x, y)] - k[(xp, y)]).abs();
                        best.offer(lhs, base * smooth, |l, b| Witness {
                            t,
                            x,
                            y: Some(y),
                            x_prime: Some(xp),
                            lhs: l,
                            bound: b,
                        });
                    }
                }
            }
            BoundId::Eq33 | BoundId::Qiii => unreachable!("conservation bounds do not use the matrix"),
        }
    }
    best
}

/// Points `x' ≠ x` with `d(x,x') ≤ t/2`, thinned evenly to at most `max_partners`.
fn partners(ctx: &Ctx<'_>, x: usize, t: f64) -> Vec<usize> {
    let row = ctx.index.distance_row(x);
    let ids = ctx.index.order_row(x);
    let cand: Vec<usize> =
        (0..row.len()).filter(|&k| row[k] > 0.0 && row[k] <= t / 2.0).map(|k| ids[k] as usize).collect();
    let cap = ctx.p.max_partners.max(1);
    if cand.len() <= cap {
        return cand;
    }
    (0..cap).map(|i| cand[i * (cand.len() - 1) / (cap - 1).max(1)]).collect()
}

fn scan_conservation(ctx: &Ctx<'_>, one: &[f64], xs: &[usize], t: f64, bound: BoundId) -> Best {
    let mut best = Best::default();
    for &x in xs {
        let lhs = match bound {
            BoundId::Eq33 => (1.0 - one[x]).abs(),
            _ => one[x].abs(),
        };
        let b = (t / (t + ctx.rho[x])).powf(ctx.p.delta2);
        best.offer(lhs, b, |l, b| Witness { t, x, y: None, x_prime: None, lhs: l, bound: b });
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{critical_radius, Potential};
    use crate::semigroup::{build_schrodinger, KernelKind, ScaleGrid};
    use crate::space::build_grid_space;

    fn setup(n: usize, v: f64, bc: BoundaryCondition) -> (MetricMeasureSpace, BallIndex, super::super::OperatorSpectrum) {
        let s = build_grid_space(1, 1.0, n, WeightSpec::Uniform).unwrap();
        let idx = BallIndex::new(&s);
        let sp = build_schrodinger(&s, &Potential::constant(n, v).unwrap(), bc).unwrap();
        (s, idx, sp)
    }

    #[test]
    fn gamma_monotone() {
        let (s, idx, sp) = setup(24, 4.0, BoundaryCondition::Dirichlet);
        let rho = critical_radius(&idx, &Potential::constant(24, 4.0).unwrap()).unwrap().rho;
        let fam = KernelFamily::new(&sp, KernelKind::Heat, ScaleGrid::standard(sp.spacing(), idx.diameter()).unwrap());
        let mut prev = 0.0;
        for g in [0.0, 0.5, 1.0, 2.0] {
            let p = BoundParams { gamma: g, ..Default::default() };
            let c = kernel_bound_fit(&fam, &s, &idx, &rho, BoundId::Eq31, p).unwrap().constant;
            assert!(c >= prev, "gamma {g}: {c} < {prev}");
            prev = c;
        }
    }

    #[test]
    fn periodic_conservation_is_exact() {
        let (s, idx, sp) = setup(16, 0.0, BoundaryCondition::Periodic);
        let rho = vec![0.5; 16];
        let fam = KernelFamily::new(&sp, KernelKind::Heat, ScaleGrid::standard(sp.spacing(), idx.diameter()).unwrap());
        let fit = kernel_bound_fit(&fam, &s, &idx, &rho, BoundId::Eq33, BoundParams::default()).unwrap();
        assert_eq!(fit.constant, 0.0);
    }

    #[test]
    fn smoothness_reports_no_data_at_small_scales() {
        let (s, idx, sp) = setup(16, 1.0, BoundaryCondition::Dirichlet);
        let rho = vec![1.0; 16];
        let fam = KernelFamily::new(&sp, KernelKind::Qt, ScaleGrid::standard(sp.spacing(), idx.diameter()).unwrap());
        let fit = kernel_bound_fit(&fam, &s, &idx, &rho, BoundId::Qii, BoundParams::default()).unwrap();
        assert_eq!(fit.per_scale[0].constant, None);
        assert!(fit.per_scale.iter().any(|p| p.constant.is_some()));
        assert!(fit.constant.is_finite() && fit.constant > 0.0);
        let w = fit.witness.unwrap();
        assert!(w.x_prime.is_some() && w.x_prime != Some(w.x));
    }

    #[test]
    fn bound_names_roundtrip() {
        for b in BoundId::ALL {
            let js = serde_json::to_string(&b).unwrap();
            assert_eq!(js, format!("\"{}\"", b.name()));
        }
    }
}
