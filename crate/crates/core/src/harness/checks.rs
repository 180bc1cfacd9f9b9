//! The named checks.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{CheckId, CheckReport, Context, Status};
use crate::atoms::{pairing, validate_atom, Atom, AtomKind};
use crate::error::{invalid_param, Result};
use crate::fnspaces::{
    campanato_blo_norm, campanato_norm, dclass_from_rho, holder_worst, lipschitz_norm, localization_split,
    mean_vs_min_worst, morrey_norm, truncate, BallClass, GridFunction,
};
use crate::maximal_g::{boundedness_report, g_function, generate_corpus, BoundednessSetup, TheoremId};
use crate::num::Exponent;
use crate::potential::{admissibility_sweep, reverse_holder_constant};
use crate::semigroup::{
    heat_kernel, kernel_bound_fit, poisson_kernel, qt_kernel, BoundId, KernelFamily, KernelKind, OperatorSpectrum,
    PoissonMethod, ScaleGrid, SubordinationRule,
};
use crate::space::doubling_profile;

/// Relative slack on every exact-constant inequality.
pub const REL_TOL: f64 = 1e-10;
const SUBORDINATION_TOL: f64 = 1e-6;
const QT_GRADIENT_TOL: f64 = 1e-5;
const G_IDENTITY_TOL: f64 = 1e-3;

pub(super) fn needs_rho(c: CheckId) -> bool {
    use CheckId::*;
    matches!(
        c,
        Lemma21
            | Eq27
            | AtomPairing
            | CriticalRadius
            | Admissibility
            | Lemma23
            | Lemma24
            | Lemma41
            | Thm31
            | Thm32
            | Thm41
            | Cor41
            | HlDomination
            | KernelFit
    )
}

pub(super) fn needs_spectrum(c: CheckId) -> bool {
    use CheckId::*;
    matches!(
        c,
        Subordination | QtGradient | GEigen | Lemma24 | Lemma41 | Thm31 | Thm32 | Thm41 | Cor41 | HlDomination | KernelFit | KernelSlice
    )
}

pub(super) fn needs_potential(c: CheckId) -> bool {
    needs_spectrum(c) || c == CheckId::ReverseHolder
}

pub(super) fn needs_lattice(c: CheckId) -> bool {
    needs_spectrum(c)
}

pub(super) fn run(ctx: &Context, id: CheckId) -> Result<CheckReport> {
    let (status, witness, details) = match id {
        CheckId::Lemma21 => lemma21(ctx)?,
        CheckId::Eq27 => eq27(ctx)?,
        CheckId::AtomPairing => atom_pairing(ctx)?,
        CheckId::MeanVsMin => mean_vs_min(ctx)?,
        CheckId::Holder => holder(ctx)?,
        CheckId::Subordination => subordination(ctx)?,
        CheckId::QtGradient => qt_gradient(ctx)?,
        CheckId::GEigen => g_eigen(ctx)?,
        CheckId::DoublingProfile => soft(serde_json::to_value(doubling_profile(&ctx.space))?)?,
        CheckId::CriticalRadius => critical_radius_report(ctx)?,
        CheckId::Admissibility => soft(serde_json::to_value(admissibility_sweep(&ctx.space, rho(ctx))?)?)?,
        CheckId::ReverseHolder => {
            let v = ctx.potential.as_ref().expect("validated");
            soft(serde_json::to_value(reverse_holder_constant(&ctx.index, v, ctx.scenario.q)?)?)?
        }
        CheckId::Lemma23 => lemma23(ctx)?,
        CheckId::Lemma24 => boundedness(ctx, TheoremId::Lemma24)?,
        CheckId::Lemma41 => boundedness(ctx, TheoremId::Lemma41)?,
        CheckId::Thm31 => boundedness(ctx, TheoremId::Thm31)?,
        CheckId::Thm32 => boundedness(ctx, TheoremId::Thm32)?,
        CheckId::Thm41 => boundedness(ctx, TheoremId::Thm41)?,
        CheckId::Cor41 => boundedness(ctx, TheoremId::Cor41)?,
        CheckId::HlDomination => boundedness(ctx, TheoremId::HlDomination)?,
        CheckId::KernelFit => kernel_fit(ctx)?,
        CheckId::KernelSlice => kernel_slice(ctx)?,
        CheckId::NormProfile => norm_profile(ctx)?,
    };
    Ok(CheckReport { check: id, hard: id.is_hard(), status, witness, details })
}

type Outcome = (Status, Option<String>, Value);

fn soft(details: Value) -> Result<Outcome> {
    Ok((Status::Reported, None, details))
}

fn hard(witness: Option<String>, details: Value) -> Result<Outcome> {
    let status = if witness.is_none() { Status::Pass } else { Status::Fail };
    Ok((status, witness, details))
}

fn rho(ctx: &Context) -> &[f64] {
    ctx.rho.as_deref().expect("validated")
}

fn spectrum(ctx: &Context) -> &OperatorSpectrum {
    ctx.spectrum.as_ref().expect("validated")
}

fn d_class(ctx: &Context) -> Result<BallClass> {
    dclass_from_rho(&ctx.index, rho(ctx))
}

fn standard_grid(ctx: &Context) -> Result<ScaleGrid> {
    ScaleGrid::standard(ctx.space.min_separation(), ctx.index.diameter())
}

/// Seeded random functions of four shapes: uniform noise, sparse spikes,
/// offset noise and heavy-tailed values.
pub fn random_functions(n: usize, count: usize, seed: u64) -> Vec<GridFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x00f0_0d00);
    (0..count)
        .map(|i| {
            let v: Vec<f64> = match i % 4 {
                0 => (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                1 => {
                    let mut v = vec![0.0; n];
                    for _ in 0..(1 + n / 8) {
                        let j = rng.gen_range(0..n);
                        v[j] = rng.gen_range(-10.0..10.0);
                    }
                    v
                }
                2 => {
                    let c = rng.gen_range(-5.0..5.0);
                    (0..n).map(|_| c + 0.1 * rng.gen_range(-1.0..1.0)).collect()
                }
                _ => (0..n)
                    .map(|_| {
                        let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                        s * (3.0 * rng.gen_range(-1.0f64..1.0)).exp()
                    })
                    .collect(),
            };
            GridFunction::new(v).expect("finite")
        })
        .collect()
}

fn functions(ctx: &Context) -> Vec<GridFunction> {
    random_functions(ctx.space.len(), ctx.scenario.random_functions, ctx.scenario.seed)
}

/// First failing item, or `None`.
fn first_failure<T>(items: &[T], describe: impl Fn(&T) -> Option<String>) -> (usize, Option<String>) {
    let fails: Vec<String> = items.iter().filter_map(describe).collect();
    (fails.len(), fails.into_iter().next())
}

fn lemma21(ctx: &Context) -> Result<Outcome> {
    let d = d_class(ctx)?;
    let fs = functions(ctx);
    let mut per = Vec::new();
    let mut witness = None;
    for np in &ctx.scenario.params {
        let rows: Vec<(usize, f64, f64, f64)> = fs
            .par_iter()
            .enumerate()
            .map(|(i, f)| {
                let s = localization_split(&ctx.index, f, np.alpha, np.p, &d)?;
                let loc = campanato_norm(&ctx.index, f, np.alpha, np.p, &d)?.total;
                Ok((i, loc, s.global_norm, s.size_sup))
            })
            .collect::<Result<_>>()?;
        let upper = |r: &(usize, f64, f64, f64)| ratio(r.1, 2.0 * r.2 + r.3);
        let lower = |r: &(usize, f64, f64, f64)| ratio(r.2 + r.3, 3.0 * r.1);
        let (nu, wu) = first_failure(&rows, |r| {
            (upper(r) > 1.0 + REL_TOL).then(|| format!("f{} alpha={} p={}: localized {} > 2·{} + {}", r.0, np.alpha, np.p, r.1, r.2, r.3))
        });
        let (nl, wl) = first_failure(&rows, |r| {
            (lower(r) > 1.0 + REL_TOL).then(|| format!("f{} alpha={} p={}: {} + {} > 3·{}", r.0, np.alpha, np.p, r.2, r.3, r.1))
        });
        witness = witness.or(wu).or(wl);
        per.push(json!({
            "alpha": np.alpha, "p": np.p,
            "worst_upper_ratio": rows.iter().map(upper).fold(0.0, f64::max),
            "worst_lower_ratio": rows.iter().map(lower).fold(0.0, f64::max),
            "violations_upper": nu, "violations_lower": nl,
        }));
    }
    hard(witness, json!({ "functions": fs.len(), "tolerance": REL_TOL, "params": per }))
}

/// `a/b` with `0/0 = 0`.
fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a / b
    }
}

fn eq27(ctx: &Context) -> Result<Outcome> {
    let d = d_class(ctx)?;
    let fs = functions(ctx);
    let rows: Vec<(usize, f64, f64)> = fs
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let base = campanato_norm(&ctx.index, f, 0.0, 1.0, &d)?.total;
            let mut abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
            abs.sort_by(f64::total_cmp);
            let q = |x: f64| abs[((abs.len() - 1) as f64 * x).round() as usize];
            let mut worst = (0.0, 0.0);
            for level in [0.0, q(0.25), q(0.5), q(0.75), q(1.0) * 1.1] {
                let r = ratio(campanato_norm(&ctx.index, &truncate(f, level)?, 0.0, 1.0, &d)?.total, base);
                if r > worst.0 {
                    worst = (r, level);
                }
            }
            Ok((i, worst.0, worst.1))
        })
        .collect::<Result<_>>()?;
    let bound = 9.0 / 4.0;
    let (n, w) = first_failure(&rows, |r| {
        (r.1 > bound * (1.0 + REL_TOL)).then(|| format!("f{} level {}: ratio {} > 9/4", r.0, r.2, r.1))
    });
    hard(w, json!({ "functions": fs.len(), "bound": bound, "worst_ratio": rows.iter().map(|r| r.1).fold(0.0, f64::max), "violations": n }))
}

/// `+1/μ(S1)` on the first half of the members, `−1/μ(S2)` on the rest,
/// scaled to the size condition of a `(p, ∞)`-atom.
fn dipole_atom(ctx: &Context, ball: usize, p: f64, q: Exponent) -> Option<Atom> {
    let m = ctx.index.members(ball);
    if m.len() < 2 {
        return None;
    }
    let w = ctx.index.weights();
    let (s1, s2) = m.split_at(m.len().div_ceil(2));
    let mu = |s: &[u32]| s.iter().map(|&y| w[y as usize]).sum::<f64>();
    let (a, b) = (1.0 / mu(s1), 1.0 / mu(s2));
    let c = ctx.index.ball(ball).measure.powf(-1.0 / p) / a.max(b);
    let mut values = vec![0.0; ctx.index.n_points()];
    for &y in s1 {
        values[y as usize] = c * a;
    }
    for &y in s2 {
        values[y as usize] = -c * b;
    }
    Some(Atom { kind: AtomKind::Cancellative, p, q, support_ball: ball, values })
}

fn atom_pairing(ctx: &Context) -> Result<Outcome> {
    let d = d_class(ctx)?;
    let fs = functions(ctx);
    let per_f = 8.min(ctx.index.len());
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.scenario.seed ^ 0xa70a);
    let picks: Vec<Vec<usize>> = fs.iter().map(|_| sample(&mut rng, ctx.index.len(), per_f).into_vec()).collect();
    let results: Vec<(usize, usize, Option<String>, f64)> = fs
        .par_iter()
        .zip(&picks)
        .enumerate()
        .map(|(i, (f, balls))| {
            let mut worst = 0.0f64;
            let mut checked = 0;
            for &b in balls {
                for p in [1.0, 0.5] {
                    for q in [Exponent::Infinity, Exponent::Finite(2.0)] {
                        let atom = if d.contains(b) {
                            Atom::normalized_indicator(&ctx.index, b, p, q)
                        } else {
                            match dipole_atom(ctx, b, p, q) {
                                Some(a) => a,
                                None => continue,
                            }
                        };
                        let v = validate_atom(&ctx.index, &atom, &d);
                        if !v.is_valid() {
                            return Ok((i, checked, Some(format!("f{i} ball {b}: constructed atom invalid: {:?}", v.failures)), worst));
                        }
                        let r = pairing(&ctx.index, f, &atom, &d)?;
                        checked += 1;
                        worst = worst.max(ratio(r.value.abs(), r.bound));
                        if r.value.abs() > r.bound * (1.0 + REL_TOL) + 1e-14 {
                            return Ok((i, checked, Some(format!("f{i} ball {b} p={p}: |{}| > {}", r.value, r.bound)), worst));
                        }
                    }
                }
            }
            Ok((i, checked, None, worst))
        })
        .collect::<Result<_>>()?;
    let fails: Vec<&String> = results.iter().filter_map(|r| r.2.as_ref()).collect();
    hard(
        fails.first().map(|s| s.to_string()),
        json!({
            "functions": fs.len(),
            "pairings": results.iter().map(|r| r.1).sum::<usize>(),
            "worst_ratio": results.iter().map(|r| r.3).fold(0.0, f64::max),
            "violations": fails.len(),
        }),
    )
}

fn distinct_ps(ctx: &Context, extra: &[f64]) -> Vec<f64> {
    let mut ps: Vec<f64> = ctx.scenario.params.iter().map(|n| n.p).chain(extra.iter().copied()).collect();
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    ps
}

fn mean_vs_min(ctx: &Context) -> Result<Outcome> {
    let fs = functions(ctx);
    let mut per = Vec::new();
    let mut witness = None;
    for p in distinct_ps(ctx, &[]) {
        let worst: Vec<(usize, f64, Option<usize>)> = fs
            .par_iter()
            .enumerate()
            .map(|(i, f)| mean_vs_min_worst(&ctx.index, f, p).map(|a| (i, a.value, a.id)))
            .collect::<Result<_>>()?;
        let (n, w) = first_failure(&worst, |r| {
            (r.1 > 1.0 + REL_TOL).then(|| format!("f{} ball {:?} p={p}: ratio {} > 1", r.0, r.2, r.1))
        });
        witness = witness.or(w);
        per.push(json!({ "p": p, "worst_ratio": worst.iter().map(|r| r.1).fold(0.0, f64::max), "violations": n }));
    }
    hard(witness, json!({ "functions": fs.len(), "params": per }))
}

fn holder(ctx: &Context) -> Result<Outcome> {
    let fs = functions(ctx);
    let ps = distinct_ps(ctx, &[1.0, 2.0, 3.0]);
    let mut alphas: Vec<f64> = ctx.scenario.params.iter().map(|n| n.alpha).collect();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    let mut per = Vec::new();
    let mut witness = None;
    for &alpha in &alphas {
        for (k, &p1) in ps.iter().enumerate() {
            for &p2 in &ps[k + 1..] {
                let worst: Vec<(usize, f64, Option<usize>)> = fs
                    .par_iter()
                    .enumerate()
                    .map(|(i, f)| holder_worst(&ctx.index, f, alpha, p1, p2).map(|a| (i, a.value, a.id)))
                    .collect::<Result<_>>()?;
                let (n, w) = first_failure(&worst, |r| {
                    (r.1 > 1.0 + REL_TOL)
                        .then(|| format!("f{} ball {:?} alpha={alpha} p1={p1} p2={p2}: ratio {}", r.0, r.2, r.1))
                });
                witness = witness.or(w);
                per.push(json!({
                    "alpha": alpha, "p1": p1, "p2": p2,
                    "worst_ratio": worst.iter().map(|r| r.1).fold(0.0, f64::max), "violations": n,
                }));
            }
        }
    }
    hard(witness, json!({ "functions": fs.len(), "pairs": per }))
}

fn subordination(ctx: &Context) -> Result<Outcome> {
    let sp = spectrum(ctx);
    let grid = standard_grid(ctx)?;
    let quad = PoissonMethod::Quadrature { rule: SubordinationRule::default() };
    let errs: Vec<(f64, f64)> = grid
        .ts
        .par_iter()
        .map(|&t| {
            let a = poisson_kernel(sp, t, PoissonMethod::Spectral)?;
            let b = poisson_kernel(sp, t, quad)?;
            Ok((t, (a - b).abs().max()))
        })
        .collect::<Result<_>>()?;
    let worst = errs.iter().copied().fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let w = (worst.1 > SUBORDINATION_TOL).then(|| format!("t={}: max-abs {} > {SUBORDINATION_TOL}", worst.0, worst.1));
    hard(
        w,
        json!({
            "rule": SubordinationRule::default(),
            "tolerance": SUBORDINATION_TOL,
            "max_abs_error": worst.1,
            "worst_t": worst.0,
            "per_scale": errs.iter().map(|(t, e)| json!({"t": t, "max_abs_error": e})).collect::<Vec<_>>(),
        }),
    )
}

/// Relative error between `Q_t` and `s·∂_s e^{−sL}` (`s = t²`) by central
/// differences. The step shrinks with `s·λ₁` (`λ₁` the smallest positive
/// eigenvalue) so the truncation term stays near `1e-8` at large `t`.
pub fn qt_fd_error(sp: &OperatorSpectrum, t: f64) -> Result<f64> {
    let s = t * t;
    let lmax = sp.eigenvalues().iter().fold(0.0f64, |a, &b| a.max(b));
    let l1 = sp.eigenvalues().iter().copied().filter(|&l| l > 1e-12 * lmax).fold(f64::INFINITY, f64::min);
    let l1 = if l1.is_finite() { l1 } else { 0.0 };
    let ds = 1e-4 * s / (1.0 + s * l1);
    let plus = heat_kernel(sp, (s + ds).sqrt())?;
    let minus = heat_kernel(sp, (s - ds).sqrt())?;
    let fd = (plus - minus) * (s / (2.0 * ds));
    let q = qt_kernel(sp, t)?;
    let scale = q.abs().max();
    Ok(if scale == 0.0 { fd.abs().max() } else { (&fd - &q).abs().max() / scale })
}

fn qt_gradient(ctx: &Context) -> Result<Outcome> {
    let sp = spectrum(ctx);
    let grid = standard_grid(ctx)?;
    let errs: Vec<(f64, f64)> =
        grid.ts.par_iter().map(|&t| Ok((t, qt_fd_error(sp, t)?))).collect::<Result<_>>()?;
    let worst = errs.iter().copied().fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let w = (worst.1 > QT_GRADIENT_TOL).then(|| format!("t={}: relative {} > {QT_GRADIENT_TOL}", worst.0, worst.1));
    hard(w, json!({ "tolerance": QT_GRADIENT_TOL, "max_relative_error": worst.1, "worst_t": worst.0 }))
}

/// Grid used for the g-function identities: `h/64 … 8·diam`, ratio `2^{1/4}`.
pub fn identity_grid(sp: &OperatorSpectrum, diameter: f64) -> Result<ScaleGrid> {
    ScaleGrid::geometric(sp.spacing() / 64.0, 8.0 * diameter, 2f64.powf(0.25))
}

/// Largest relative error of `g(φ_k) = |φ_k|/√8` over modes with `λ_k > 0`,
/// at points where `|φ_k|` is at least `1e-6` of its maximum.
pub fn g_eigen_error(sp: &OperatorSpectrum, grid: &ScaleGrid) -> Result<(f64, usize)> {
    let lmax = sp.eigenvalues().iter().fold(0.0f64, |a, &b| a.max(b));
    let modes: Vec<usize> = (0..sp.len()).filter(|&k| sp.eigenvalues()[k] > 1e-12 * lmax).collect();
    let errs: Vec<(f64, usize)> = modes
        .par_iter()
        .map(|&k| {
            let phi: Vec<f64> = sp.eigenvectors().column(k).iter().copied().collect();
            let top = phi.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            let g = g_function(sp, &GridFunction::new(phi.clone())?, grid)?;
            let e = g
                .values()
                .iter()
                .zip(&phi)
                .filter(|(_, p)| p.abs() >= 1e-6 * top)
                .map(|(a, p)| {
                    let want = p.abs() / 8f64.sqrt();
                    (a - want).abs() / want
                })
                .fold(0.0, f64::max);
            Ok((e, k))
        })
        .collect::<Result<_>>()?;
    Ok(errs.into_iter().fold((0.0, 0), |a, b| if b.0 > a.0 { b } else { a }))
}

/// Relative error of `‖g(f)‖₂ = ‖f_⊥‖₂/√8`.
pub fn g_l2_error(sp: &OperatorSpectrum, f: &GridFunction, grid: &ScaleGrid) -> Result<f64> {
    let lmax = sp.eigenvalues().iter().fold(0.0f64, |a, &b| a.max(b));
    let c = sp.coefficients(f.values());
    let perp: f64 = (0..sp.len()).filter(|&k| sp.eigenvalues()[k] > 1e-12 * lmax).map(|k| c[k] * c[k]).sum();
    let g = g_function(sp, f, grid)?;
    let lhs: f64 = g.values().iter().zip(sp.weights()).map(|(g, w)| g * g * w).sum::<f64>().sqrt();
    let want = (perp / 8.0).sqrt();
    Ok(if want == 0.0 { lhs } else { (lhs - want).abs() / want })
}

fn g_eigen(ctx: &Context) -> Result<Outcome> {
    let sp = spectrum(ctx);
    let grid = identity_grid(sp, ctx.index.diameter())?;
    let (eig, mode) = g_eigen_error(sp, &grid)?;
    let fs = functions(ctx);
    let l2: Vec<f64> = fs.iter().take(20).map(|f| g_l2_error(sp, f, &grid)).collect::<Result<_>>()?;
    let l2_worst = l2.iter().copied().fold(0.0, f64::max);
    let base = standard_grid(ctx)?;
    let (e_base, _) = g_eigen_error(sp, &base)?;
    let (e_fine, _) = g_eigen_error(sp, &base.refined()?)?;
    let mut w = None;
    if eig > G_IDENTITY_TOL {
        w = Some(format!("mode {mode}: eigenfunction identity relative error {eig}"));
    } else if l2_worst > G_IDENTITY_TOL {
        w = Some(format!("L2 identity relative error {l2_worst}"));
    }
    hard(
        w,
        json!({
            "tolerance": G_IDENTITY_TOL,
            "grid": { "t_min": grid.ts[0], "t_max": grid.ts[grid.len() - 1], "ratio": grid.ratio },
            "eigen_max_relative_error": eig,
            "eigen_worst_mode": mode,
            "l2_max_relative_error": l2_worst,
            "density_doubling": {
                "t_min": base.ts[0], "t_max": base.ts[base.len() - 1],
                "error": e_base, "error_refined": e_fine, "ratio": ratio(e_base, e_fine),
            },
        }),
    )
}

fn critical_radius_report(ctx: &Context) -> Result<Outcome> {
    let r = ctx.rho.as_deref().expect("validated");
    let min = r.iter().copied().fold(f64::INFINITY, f64::min);
    let max = r.iter().copied().fold(0.0, f64::max);
    soft(json!({ "min": min, "max": max, "rho": r }))
}

fn lemma23(ctx: &Context) -> Result<Outcome> {
    let d = d_class(ctx)?;
    let fs = functions(ctx);
    let mut per = Vec::new();
    for np in ctx.scenario.params.iter().filter(|n| n.alpha < 0.0) {
        let rows: Vec<(f64, f64)> = fs
            .par_iter()
            .map(|f| {
                let loc = campanato_norm(&ctx.index, f, np.alpha, np.p, &d)?.total;
                let mor = morrey_norm(&ctx.index, f, np.alpha, np.p)?.total;
                Ok((loc, mor))
            })
            .collect::<Result<_>>()?;
        per.push(json!({
            "alpha": np.alpha, "p": np.p,
            "localized_over_morrey": rows.iter().map(|r| ratio(r.0, r.1)).fold(0.0, f64::max),
            "morrey_over_localized": rows.iter().map(|r| ratio(r.1, r.0)).fold(0.0, f64::max),
            "explicit_upper_constant": 3.0,
        }));
    }
    soft(json!({ "functions": fs.len(), "params": per }))
}

fn boundedness(ctx: &Context, theorem: TheoremId) -> Result<Outcome> {
    let corpus = generate_corpus(&ctx.space, ctx.scenario.corpus_size, ctx.scenario.seed, 0.5)?;
    let setup = BoundednessSetup {
        index: &ctx.index,
        spectrum: spectrum(ctx),
        rho: rho(ctx),
        grid: standard_grid(ctx)?,
        exponents: ctx.scenario.exponents,
    };
    let mut per = Vec::new();
    for np in &ctx.scenario.params {
        match boundedness_report(theorem, &setup, np.alpha, np.p, &corpus) {
            Ok(r) => per.push(serde_json::to_value(r)?),
            Err(crate::Error::InvalidParameter(m)) => per.push(json!({ "alpha": np.alpha, "p": np.p, "skipped": m })),
            Err(e) => return Err(e),
        }
    }
    soft(json!({ "theorem": theorem, "corpus_size": corpus.len(), "reports": per }))
}

fn kernel_fit(ctx: &Context) -> Result<Outcome> {
    let sp = spectrum(ctx);
    let grid = standard_grid(ctx)?;
    let fine = grid.refined()?;
    let mut per = Vec::new();
    for bound in BoundId::ALL {
        let kind = match bound {
            BoundId::Qi | BoundId::Qii | BoundId::Qiii => KernelKind::Qt,
            _ => KernelKind::Heat,
        };
        let mut params = ctx.scenario.bounds;
        if bound == BoundId::Prop51 {
            let cut = ctx.scenario.gaussian_t_min_spacings * sp.spacing();
            params.t_min = Some(params.t_min.map_or(cut, |m| m.max(cut)));
        }
        let fit = |g: &ScaleGrid| {
            kernel_bound_fit(&KernelFamily::new(sp, kind, g.clone()), &ctx.space, &ctx.index, rho(ctx), bound, params)
        };
        let (a, b) = (fit(&grid)?, fit(&fine)?);
        per.push(json!({
            "bound": bound,
            "constant": a.constant,
            "constant_refined": b.constant,
            "refinement_ratio": ratio(b.constant.max(a.constant), a.constant.min(b.constant)),
            "witness": a.witness,
            "per_scale": a.per_scale,
        }));
    }
    soft(json!({ "params": ctx.scenario.bounds, "fits": per }))
}

fn kernel_slice(ctx: &Context) -> Result<Outcome> {
    let t = ctx.scenario.slice_t;
    let k = heat_kernel(spectrum(ctx), t)?;
    let n = k.nrows();
    let values: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| k[(i, j)]).collect();
    soft(json!({ "kind": "heat", "t": t, "n": n, "values": values }))
}

fn norm_profile(ctx: &Context) -> Result<Outcome> {
    let f = match ctx.space.lattice() {
        Some(_) => generate_corpus(&ctx.space, 1, ctx.scenario.seed, 0.5)?.remove(0),
        None => random_functions(ctx.space.len(), 1, ctx.scenario.seed).remove(0),
    };
    let d = match &ctx.rho {
        Some(r) => dclass_from_rho(&ctx.index, r)?,
        None => BallClass::empty(&ctx.index),
    };
    let p = ctx.scenario.params.first().ok_or_else(|| invalid_param("params list is empty"))?.p;
    let mut rows = Vec::new();
    for k in -5..=5 {
        let alpha = k as f64 / 10.0;
        let lip = if alpha > 0.0 { Some(lipschitz_norm(&ctx.index, &f, alpha, &d)?.total) } else { None };
        rows.push(json!({
            "alpha": alpha,
            "campanato": campanato_norm(&ctx.index, &f, alpha, p, &d)?.total,
            "campanato_blo": campanato_blo_norm(&ctx.index, &f, alpha, p, &d)?.total,
            "morrey": morrey_norm(&ctx.index, &f, alpha, p)?.total,
            "lipschitz": lip,
        }));
    }
    soft(json!({ "p": p, "rows": rows }))
}
