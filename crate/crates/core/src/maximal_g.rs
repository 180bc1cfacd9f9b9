//! Maximal operators, the Littlewood–Paley g-function and boundedness reports.
//!
//! Suprema over `t > 0` are maxima over a [`ScaleGrid`], hence lower bounds
//! for the continuum values. The g-function integral is a trapezoid rule in
//! `ln t`, with a per-point bound on the part of the integral outside the grid.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, invalid_param, Result};
use crate::fnspaces::{campanato_blo_norm, campanato_norm, dclass_from_rho, BallClass, GridFunction};
use crate::semigroup::{KernelFamily, KernelKind, OperatorSpectrum, ScaleGrid};
use crate::space::{BallIndex, MetricMeasureSpace};

/// `HL f(x) = max_{B∋x} μ(B)^{-1} Σ_B |f| w`.
pub fn hl_maximal(index: &BallIndex, f: &GridFunction) -> Result<GridFunction> {
    if f.len() != index.n_points() {
        return Err(invalid_input("function length does not match the space"));
    }
    let abs = GridFunction::new(f.values().iter().map(|v| v.abs()).collect())?;
    let means: Vec<f64> = (0..index.len()).into_par_iter().map(|b| abs.ball_mean(index, b)).collect();
    let mut out = vec![0.0f64; index.n_points()];
    for (b, &m) in means.iter().enumerate() {
        for &y in index.members(b) {
            let slot = &mut out[y as usize];
            if m > *slot {
                *slot = m;
            }
        }
    }
    GridFunction::new(out)
}

fn check_input(spec: &OperatorSpectrum, f: &GridFunction, grid: &ScaleGrid) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid_param("scale grid is empty"));
    }
    if f.len() != spec.len() {
        return Err(invalid_input("function length does not match the operator"));
    }
    Ok(())
}

fn pointwise_sup(family: &KernelFamily<'_>, f: &GridFunction) -> Result<GridFunction> {
    check_input(family.spectrum, f, &family.grid)?;
    let outs: Vec<Vec<f64>> =
        family.grid.ts.par_iter().map(|&t| family.apply(t, f.values())).collect::<Result<_>>()?;
    let mut m = vec![0.0f64; f.len()];
    for o in &outs {
        for (a, b) in m.iter_mut().zip(o) {
            *a = a.max(b.abs());
        }
    }
    GridFunction::new(m)
}

/// `T⁺f(x) = max_{t∈grid} |e^{−t²L} f(x)|`.
pub fn radial_maximal(spec: &OperatorSpectrum, f: &GridFunction, grid: &ScaleGrid) -> Result<GridFunction> {
    pointwise_sup(&KernelFamily::new(spec, KernelKind::Heat, grid.clone()), f)
}

/// `P⁺f(x) = max_{t∈grid} |e^{−t√L} f(x)|`.
pub fn poisson_maximal(spec: &OperatorSpectrum, f: &GridFunction, grid: &ScaleGrid) -> Result<GridFunction> {
    pointwise_sup(&KernelFamily::new(spec, KernelKind::Poisson, grid.clone()), f)
}

/// g-function values and a pointwise bound on the omitted tails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareFunction {
    pub g: GridFunction,
    /// Bound on `(∫_{t∉[t_min,t_max]} |Q_t f(x)|² dt/t)^{1/2}`.
    pub tail_bound: Vec<f64>,
}

/// `∫_0^{t_min}` and `∫_{t_max}^∞` of `(t²λ)² e^{−2t²λ} dt/t`.
fn mode_tails(lambda: f64, t_min: f64, t_max: f64) -> f64 {
    let lo = t_min * t_min * lambda;
    let hi = t_max * t_max * lambda;
    let lower = 0.125 * (1.0 - (-2.0 * lo).exp() * (2.0 * lo + 1.0));
    let upper = 0.125 * (-2.0 * hi).exp() * (2.0 * hi + 1.0);
    (lower.max(0.0) + upper).max(0.0)
}

/// `g(f)(x) = (∫_0^∞ |Q_t f(x)|² dt/t)^{1/2}` by the trapezoid rule in `ln t`
/// over a geometric grid with `t_min ≤ h/4`.
pub fn g_function_with_tail(spec: &OperatorSpectrum, f: &GridFunction, grid: &ScaleGrid) -> Result<SquareFunction> {
    check_input(spec, f, grid)?;
    if !grid.is_geometric() {
        return Err(invalid_param("g-function needs a geometric grid with at least two scales"));
    }
    if grid.ts[0] > 0.25 * spec.spacing() * (1.0 + 1e-9) {
        return Err(invalid_param("g-function grid must start at or below h/4"));
    }
    let n = f.len();
    let family = KernelFamily::new(spec, KernelKind::Qt, grid.clone());
    let outs: Vec<Vec<f64>> = grid.ts.par_iter().map(|&t| family.apply(t, f.values())).collect::<Result<_>>()?;
    let du = grid.ratio.ln();
    let last = outs.len() - 1;
    let mut sq = vec![0.0f64; n];
    for (i, o) in outs.iter().enumerate() {
        let w = if i == 0 || i == last { 0.5 * du } else { du };
        for (s, v) in sq.iter_mut().zip(o) {
            *s += w * v * v;
        }
    }
    let g = GridFunction::new(sq.into_iter().map(f64::sqrt).collect())?;

    let tail_bound = if spec.conserves_constants() && OperatorSpectrum::is_exact_constant(f.values()) {
        vec![0.0; n]
    } else {
        let (t_min, t_max) = (grid.ts[0], grid.ts[last]);
        let c = spec.coefficients(f.values());
        let phi = spec.eigenvectors();
        let tails: Vec<f64> = spec.eigenvalues().iter().map(|&l| mode_tails(l, t_min, t_max).sqrt()).collect();
        (0..n)
            .map(|x| (0..n).map(|k| (c[k] * phi[(x, k)]).abs() * tails[k]).sum())
            .collect()
    };
    Ok(SquareFunction { g, tail_bound })
}

pub fn g_function(spec: &OperatorSpectrum, f: &GridFunction, grid: &ScaleGrid) -> Result<GridFunction> {
    Ok(g_function_with_tail(spec, f, grid)?.g)
}

/// Largest `(g − min_B g)² − (g − min_B g)(g + min_B g)` over balls and members;
/// nonpositive whenever `g ≥ 0`.
pub fn square_root_gap(index: &BallIndex, g: &GridFunction) -> f64 {
    (0..index.len())
        .into_par_iter()
        .map(|b| {
            let m = g.ball_min(index, b);
            index
                .members(b)
                .iter()
                .map(|&y| {
                    let a = g.values()[y as usize] - m;
                    a * a - a * (g.values()[y as usize] + m)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

// ---------------------------------------------------------------------------
// Corpus

/// Seeded test functions supported in the central box of relative size
/// `inner_fraction`: cut-off Fourier sums, differences of normalized box
/// indicators, and clamped logarithmic or power profiles around a point.
pub fn generate_corpus(
    space: &MetricMeasureSpace,
    size: usize,
    seed: u64,
    inner_fraction: f64,
) -> Result<Vec<GridFunction>> {
    let lattice = space.lattice().ok_or_else(|| invalid_input("corpus needs a lattice space"))?;
    let coords = space.coords().ok_or_else(|| invalid_input("corpus needs coordinates"))?;
    if !(inner_fraction > 0.0 && inner_fraction <= 1.0) {
        return Err(invalid_param("inner_fraction must lie in (0, 1]"));
    }
    let half = inner_fraction * lattice.extent;
    let h = lattice.spacing;
    let dim = lattice.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(size);
    for i in 0..size {
        let values: Vec<f64> = match i % 3 {
            0 => {
                let terms: Vec<(Vec<f64>, f64, f64)> = (0..4)
                    .map(|_| {
                        let k: Vec<f64> = (0..dim).map(|_| rng.gen_range(1..=6) as f64).collect();
                        (k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU))
                    })
                    .collect();
                coords
                    .iter()
                    .map(|x| {
                        let cut: f64 = x.iter().map(|&c| (1.0 - (c / half).powi(2)).max(0.0)).product();
                        if cut == 0.0 {
                            return 0.0;
                        }
                        let s: f64 = terms
                            .iter()
                            .map(|(k, a, ph)| {
                                let arg: f64 = k.iter().zip(x).map(|(k, c)| k * c).sum::<f64>();
                                a * (std::f64::consts::PI * arg / lattice.extent + ph).sin()
                            })
                            .sum();
                        cut * s
                    })
                    .collect()
            }
            1 => {
                let amp = rng.gen_range(0.5..2.0);
                let mut v = vec![0.0; coords.len()];
                for sign in [1.0, -1.0] {
                    let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-half..=half)).collect();
                    let r = rng.gen_range(h..=half.max(h));
                    let inside: Vec<usize> = (0..coords.len())
                        .filter(|&j| {
                            coords[j].iter().zip(&c).all(|(x, c)| (x - c).abs() < r && x.abs() <= half + 1e-12)
                        })
                        .collect();
                    let inside = if inside.is_empty() {
                        vec![nearest(coords, &c)]
                    } else {
                        inside
                    };
                    let mass: f64 = inside.iter().map(|&j| space.weights()[j]).sum();
                    for j in inside {
                        v[j] += sign * amp / mass;
                    }
                }
                v
            }
            _ => {
                let x0: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.5 * half..=0.5 * half)).collect();
                let room = x0.iter().map(|c| half - c.abs()).fold(f64::INFINITY, f64::min);
                let r0 = rng.gen_range(room.min(2.0 * h).min(room)..=room);
                let amp = rng.gen_range(0.5..2.0);
                let log = rng.gen_bool(0.5);
                let s = rng.gen_range(0.25..1.0);
                coords
                    .iter()
                    .map(|x| {
                        let d = x.iter().zip(&x0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                        if d >= r0 {
                            0.0
                        } else if log {
                            amp * (r0 / d.max(0.5 * h)).ln()
                        } else {
                            amp * (r0.powf(s) - d.powf(s))
                        }
                    })
                    .collect()
            }
        };
        out.push(GridFunction::new(values)?);
    }
    Ok(out)
}

fn nearest(coords: &[Vec<f64>], c: &[f64]) -> usize {
    let d = |x: &Vec<f64>| x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    (0..coords.len()).min_by(|&a, &b| d(&coords[a]).total_cmp(&d(&coords[b]))).unwrap_or(0)
}

// ---------------------------------------------------------------------------
// Boundedness reports

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremId {
    /// `‖T⁺f‖_Ẽ ≤ C‖f‖_E`
    Thm31,
    /// `‖P⁺f‖_Ẽ ≤ C‖f‖_E`
    Thm32,
    /// `‖g(f)²‖_{Ẽ^{2α,p/2}} ≤ C‖f‖²_{E^{α,p}}`
    Thm41,
    /// `‖g(f)‖_Ẽ ≤ C‖f‖_E`
    Cor41,
    /// `|Q_t f(x)| ≤ C (ρ(x)/(t+ρ(x)))^{δ1} μ(B(x,t))^α ‖f‖_E`
    Lemma41,
    /// Ball means `μ(B)^{-1}Σ_B|f|w` for `B ∉ D_ρ` against the growth envelope.
    Lemma24,
    /// `T⁺f ≤ C·HL f` pointwise.
    HlDomination,
}

impl TheoremId {
    pub const ALL: [TheoremId; 7] = [
        TheoremId::Thm31,
        TheoremId::Thm32,
        TheoremId::Thm41,
        TheoremId::Cor41,
        TheoremId::Lemma41,
        TheoremId::Lemma24,
        TheoremId::HlDomination,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TheoremId::Thm31 => "thm31",
            TheoremId::Thm32 => "thm32",
            TheoremId::Thm41 => "thm41",
            TheoremId::Cor41 => "cor41",
            TheoremId::Lemma41 => "lemma41",
            TheoremId::Lemma24 => "lemma24",
            TheoremId::HlDomination => "hl_domination",
        }
    }

    fn uses_grid(self) -> bool {
        self != TheoremId::Lemma24
    }
}

/// Kernel exponents and homogeneous dimension used for α-ranges and envelopes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelExponents {
    pub gamma: f64,
    pub beta: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// Homogeneous dimension `n`.
    pub n: f64,
}

impl Default for KernelExponents {
    fn default() -> Self {
        KernelExponents { gamma: 1.0, beta: 1.0, delta1: 1.0, delta2: 1.0, n: 1.0 }
    }
}

/// `α < upper` (or `≤` when `inclusive`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaRange {
    pub upper: f64,
    pub inclusive: bool,
}

impl AlphaRange {
    fn from_limits(limits: &[(f64, bool)]) -> Self {
        let mut r = AlphaRange { upper: f64::INFINITY, inclusive: true };
        for &(u, inc) in limits {
            if u < r.upper {
                r = AlphaRange { upper: u, inclusive: inc };
            } else if u == r.upper {
                r.inclusive &= inc;
            }
        }
        r
    }

    pub fn contains(&self, alpha: f64) -> bool {
        alpha < self.upper || (self.inclusive && alpha == self.upper)
    }
}

/// Admissible α for each statement. Primed exponents of the Poisson family
/// are capped by 1 from above, with the cap itself excluded.
pub fn alpha_range(theorem: TheoremId, e: &KernelExponents) -> AlphaRange {
    let n = e.n;
    let cap = |x: f64| if x < 1.0 { (x, true) } else { (1.0, false) };
    match theorem {
        TheoremId::Thm31 => AlphaRange::from_limits(&[
            (e.gamma / n, false),
            (e.beta / (2.0 * n), true),
            (e.delta1 / n, true),
            (e.delta2 / (2.0 * n), true),
        ]),
        TheoremId::Thm32 => {
            let (g, _) = cap(e.gamma);
            let (b, bi) = cap(e.beta);
            let (d2, d2i) = cap(e.delta2);
            AlphaRange::from_limits(&[
                (g / n, false),
                (b / (2.0 * n), bi),
                (e.delta1 / n, true),
                (d2 / (2.0 * n), d2i),
            ])
        }
        TheoremId::Thm41 | TheoremId::Cor41 => AlphaRange::from_limits(&[
            (e.beta / (3.0 * n), true),
            (e.gamma / n, false),
            (e.delta1 / n, false),
            (e.delta2 / (3.0 * n), false),
        ]),
        TheoremId::Lemma41 => AlphaRange::from_limits(&[(e.gamma / n, false), (e.delta2 / n, false)]),
        TheoremId::Lemma24 | TheoremId::HlDomination => AlphaRange::from_limits(&[]),
    }
}

/// Everything a report needs besides the corpus.
#[derive(Debug, Clone)]
pub struct BoundednessSetup<'a> {
    pub index: &'a BallIndex,
    pub spectrum: &'a OperatorSpectrum,
    pub rho: &'a [f64],
    pub grid: ScaleGrid,
    pub exponents: KernelExponents,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub function_id: usize,
    pub input_norm: f64,
    pub output_norm: f64,
    pub ratio: f64,
}

/// Significant figures of a fitted constant.
pub const FIT_DIGITS: i32 = 3;

/// `x` rounded up to `digits` significant figures.
pub fn round_up_significant(x: f64, digits: i32) -> f64 {
    if !(x > 0.0 && x.is_finite()) {
        return x;
    }
    let scale = 10f64.powi(x.log10().floor() as i32 - digits + 1);
    let r = (x / scale).ceil() * scale;
    if r < x {
        r + scale
    } else {
        r
    }
}

/// Constant fitted on the first half of the corpus, checked on the second.
///
/// The fitted constant is the first-half maximum stated to [`FIT_DIGITS`]
/// significant figures, rounded up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeldOut {
    pub sample_max: f64,
    pub fitted_constant: f64,
    pub held_out_max: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub theorem_id: TheoremId,
    pub alpha: f64,
    pub p: f64,
    pub corpus_size: usize,
    pub skipped_zero_norm: usize,
    pub sup_ratio: f64,
    pub worst_function: Option<usize>,
    /// `sup_ratio` on the grid and on its refinement.
    pub refinement_ratios: Vec<f64>,
    pub alpha_range: AlphaRange,
    pub alpha_in_range: bool,
    pub held_out: HeldOut,
    pub rows: Vec<RatioRow>,
}

/// Sup over the corpus of output norm over input norm for `theorem`.
///
/// Norms are localized with `D_ρ`. For [`TheoremId::HlDomination`] the
/// per-function ratio is `max_x T⁺f(x)/HL f(x)`; for the pointwise lemmas it
/// is the largest bound ratio at unit input norm.
pub fn boundedness_report(
    theorem: TheoremId,
    setup: &BoundednessSetup<'_>,
    alpha: f64,
    p: f64,
    corpus: &[GridFunction],
) -> Result<VerificationReport> {
    if corpus.is_empty() {
        return Err(invalid_param("corpus is empty"));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid_param("p must lie in [1, ∞)"));
    }
    if theorem == TheoremId::Thm41 && p < 2.0 {
        return Err(invalid_param("the squared g-function report needs p >= 2"));
    }
    if setup.rho.len() != setup.index.n_points() {
        return Err(invalid_input("rho length does not match the space"));
    }
    let d = dclass_from_rho(setup.index, setup.rho)?;
    let rows = corpus_rows(theorem, setup, &d, &setup.grid, alpha, p, corpus)?;
    let mut refinement_ratios = vec![sup_of(&rows).0];
    if theorem.uses_grid() {
        let fine = setup.grid.refined()?;
        refinement_ratios.push(sup_of(&corpus_rows(theorem, setup, &d, &fine, alpha, p, corpus)?).0);
    }
    let (sup_ratio, worst_function) = sup_of(&rows);
    let split = corpus.len().div_ceil(2);
    let sample_max = rows.iter().filter(|r| r.function_id < split).map(|r| r.ratio).fold(0.0, f64::max);
    let fitted_constant = round_up_significant(sample_max, FIT_DIGITS);
    let held: Vec<f64> = rows.iter().filter(|r| r.function_id >= split).map(|r| r.ratio).collect();
    let held_out = HeldOut {
        sample_max,
        fitted_constant,
        held_out_max: held.iter().copied().fold(0.0, f64::max),
        violations: held.iter().filter(|&&r| r > fitted_constant).count(),
    };
    let range = alpha_range(theorem, &setup.exponents);
    Ok(VerificationReport {
        theorem_id: theorem,
        alpha,
        p,
        corpus_size: corpus.len(),
        skipped_zero_norm: corpus.len() - rows.len(),
        sup_ratio,
        worst_function,
        refinement_ratios,
        alpha_range: range,
        alpha_in_range: range.contains(alpha),
        held_out,
        rows,
    })
}

fn sup_of(rows: &[RatioRow]) -> (f64, Option<usize>) {
    let mut best = (0.0, None);
    for r in rows {
        if best.1.is_none() || r.ratio > best.0 {
            best = (r.ratio, Some(r.function_id));
        }
    }
    best
}

fn corpus_rows(
    theorem: TheoremId,
    setup: &BoundednessSetup<'_>,
    d: &BallClass,
    grid: &ScaleGrid,
    alpha: f64,
    p: f64,
    corpus: &[GridFunction],
) -> Result<Vec<RatioRow>> {
    let rows: Vec<Option<RatioRow>> = corpus
        .par_iter()
        .enumerate()
        .map(|(id, f)| one_row(theorem, setup, d, grid, alpha, p, id, f))
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

#[allow(clippy::too_many_arguments)]
fn one_row(
    theorem: TheoremId,
    s: &BoundednessSetup<'_>,
    d: &BallClass,
    grid: &ScaleGrid,
    alpha: f64,
    p: f64,
    function_id: usize,
    f: &GridFunction,
) -> Result<Option<RatioRow>> {
    let index = s.index;
    let row = |input_norm: f64, output_norm: f64| {
        Some(RatioRow { function_id, input_norm, output_norm, ratio: output_norm / input_norm })
    };
    if theorem == TheoremId::HlDomination {
        if f.values().iter().all(|&v| v == 0.0) {
            return Ok(None);
        }
        let t = radial_maximal(s.spectrum, f, grid)?;
        let hl = hl_maximal(index, f)?;
        let worst = t.values().iter().zip(hl.values()).map(|(a, b)| a / b).fold(0.0, f64::max);
        return Ok(row(1.0, worst));
    }
    let norm = campanato_norm(index, f, alpha, p, d)?.total;
    if !(norm > 0.0) {
        return Ok(None);
    }
    let out = match theorem {
        TheoremId::Thm31 => campanato_blo_norm(index, &radial_maximal(s.spectrum, f, grid)?, alpha, p, d)?.total,
        TheoremId::Thm32 => campanato_blo_norm(index, &poisson_maximal(s.spectrum, f, grid)?, alpha, p, d)?.total,
        TheoremId::Cor41 => campanato_blo_norm(index, &g_function(s.spectrum, f, grid)?, alpha, p, d)?.total,
        TheoremId::Thm41 => {
            let g = g_function(s.spectrum, f, grid)?;
            let g2 = GridFunction::new(g.values().iter().map(|v| v * v).collect())?;
            let out = campanato_blo_norm(index, &g2, 2.0 * alpha, p / 2.0, d)?.total;
            return Ok(row(norm * norm, out));
        }
        TheoremId::Lemma41 => lemma41_lhs(s, grid, alpha, f)?,
        TheoremId::Lemma24 => lemma24_lhs(s, alpha, f),
        TheoremId::HlDomination => unreachable!(),
    };
    Ok(row(norm, out))
}

fn lemma41_lhs(s: &BoundednessSetup<'_>, grid: &ScaleGrid, alpha: f64, f: &GridFunction) -> Result<f64> {
    let family = KernelFamily::new(s.spectrum, KernelKind::Qt, grid.clone());
    let delta1 = s.exponents.delta1;
    let per_t: Vec<f64> = grid
        .ts
        .par_iter()
        .map(|&t| {
            let q = family.apply(t, f.values())?;
            Ok(q.iter()
                .enumerate()
                .map(|(x, v)| {
                    let r = s.rho[x];
                    let bound = (r / (t + r)).powf(delta1) * s.index.measure_open(x, t).powf(alpha);
                    v.abs() / bound
                })
                .fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    Ok(per_t.into_iter().fold(0.0, f64::max))
}

fn lemma24_lhs(s: &BoundednessSetup<'_>, alpha: f64, f: &GridFunction) -> f64 {
    let index = s.index;
    let abs = GridFunction::new(f.values().iter().map(|v| v.abs()).collect()).expect("finite");
    let n = s.exponents.n;
    (0..index.len())
        .into_par_iter()
        .map(|b| {
            let mean = abs.ball_mean(index, b);
            let mu = index.ball(b).measure;
            let mut worst = 0.0f64;
            for real in index.realizations(b) {
                let r = index.finite_radius(real.radius);
                let rho = s.rho[real.center];
                if r >= rho {
                    return 0.0;
                }
                let env = if alpha > 0.0 { (rho / r).powf(alpha * n) } else { 1.0 + (rho / r).ln() };
                worst = worst.max(mean / (env * mu.powf(alpha)));
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// CSV `function_id,input_norm,output_norm,ratio`.
pub fn ratio_table_csv(report: &VerificationReport) -> String {
    let mut out = String::from("function_id,input_norm,output_norm,ratio\n");
    for r in &report.rows {
        writeln!(out, "{},{},{},{}", r.function_id, r.input_norm, r.output_norm, r.ratio).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{critical_radius, Potential};
    use crate::semigroup::{build_schrodinger, BoundaryCondition};
    use crate::space::{build_grid_space, MetricMeasureSpace, WeightSpec};
    use nalgebra::DMatrix;

    fn point(v: f64) -> OperatorSpectrum {
        OperatorSpectrum::from_stiffness(DMatrix::from_element(1, 1, v), &[1.0], BoundaryCondition::Dirichlet, 1.0, 1)
            .unwrap()
    }

    fn line(n: usize, v: f64, bc: BoundaryCondition) -> (MetricMeasureSpace, BallIndex, OperatorSpectrum) {
        let s = build_grid_space(1, 1.0, n, WeightSpec::Uniform).unwrap();
        let idx = BallIndex::new(&s);
        let sp = build_schrodinger(&s, &Potential::constant(n, v).unwrap(), bc).unwrap();
        (s, idx, sp)
    }

    fn fine_grid(sp: &OperatorSpectrum, diam: f64) -> ScaleGrid {
        ScaleGrid::geometric(sp.spacing() / 64.0, 8.0 * diam, 2f64.powf(0.25)).unwrap()
    }

    #[test]
    fn hl_two_points() {
        let s = MetricMeasureSpace::from_points("two", vec![vec![0.0], vec![1.0]], vec![1.0, 1.0]).unwrap();
        let idx = BallIndex::new(&s);
        let hl = hl_maximal(&idx, &GridFunction::new(vec![1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(hl.values(), &[1.0, 0.5]);
        let one = hl_maximal(&idx, &GridFunction::constant(2, 1.0)).unwrap();
        assert_eq!(one.values(), &[1.0, 1.0]);
    }

    #[test]
    fn one_point_maximals_are_abs() {
        let sp = point(2.0);
        let grid = ScaleGrid::geometric(0.01, 10.0, 2.0).unwrap();
        let f = GridFunction::new(vec![-3.0]).unwrap();
        let t = radial_maximal(&sp, &f, &grid).unwrap().values()[0];
        let p = poisson_maximal(&sp, &f, &grid).unwrap().values()[0];
        // sup is attained at the smallest grid scale
        assert!((t - 3.0 * (-0.0002f64).exp()).abs() < 1e-14);
        assert!((p - 3.0 * (-0.01 * 2f64.sqrt()).exp()).abs() < 1e-14);
        assert!(radial_maximal(&sp, &f, &ScaleGrid { ts: vec![], ratio: 2.0 }).is_err());
    }

    #[test]
    fn periodic_constants_are_fixed() {
        let (s, idx, sp) = line(16, 0.0, BoundaryCondition::Periodic);
        let grid = ScaleGrid::standard(sp.spacing(), idx.diameter()).unwrap();
        let one = GridFunction::constant(16, 1.0);
        assert!(radial_maximal(&sp, &one, &grid).unwrap().values().iter().all(|&v| v == 1.0));
        assert!(poisson_maximal(&sp, &one, &grid).unwrap().values().iter().all(|&v| v == 1.0));
        let g = g_function_with_tail(&sp, &one, &grid).unwrap();
        assert!(g.g.values().iter().all(|&v| v == 0.0));
        assert!(g.tail_bound.iter().all(|&v| v == 0.0));
        assert_eq!(s.len(), 16);
    }

    #[test]
    fn g_of_eigenfunction() {
        let (_, idx, sp) = line(32, 1.0, BoundaryCondition::Dirichlet);
        let grid = fine_grid(&sp, idx.diameter());
        for k in [0, 3, 10] {
            let phi: Vec<f64> = sp.eigenvectors().column(k).iter().copied().collect();
            let g = g_function(&sp, &GridFunction::new(phi.clone()).unwrap(), &grid).unwrap();
            for (a, b) in g.values().iter().zip(&phi) {
                let want = b.abs() / 8f64.sqrt();
                assert!((a - want).abs() <= 1e-3 * want + 1e-12, "k={k}: {a} vs {want}");
            }
        }
    }

    #[test]
    fn g_rejects_bad_grids() {
        let (_, idx, sp) = line(8, 1.0, BoundaryCondition::Dirichlet);
        let f = GridFunction::constant(8, 1.0);
        let coarse = ScaleGrid::standard(4.0 * sp.spacing(), idx.diameter()).unwrap();
        assert!(g_function(&sp, &f, &coarse).is_err());
        let uneven = ScaleGrid { ts: vec![0.001, 0.01, 0.5], ratio: 10.0 };
        assert!(g_function(&sp, &f, &uneven).is_err());
    }

    #[test]
    fn tail_bound_covers_truncation() {
        let (_, idx, sp) = line(24, 1.0, BoundaryCondition::Dirichlet);
        let f = GridFunction::new((0..24).map(|i| ((i * i) as f64 * 0.37).sin()).collect()).unwrap();
        let exact = g_function(&sp, &f, &fine_grid(&sp, idx.diameter())).unwrap();
        let short = ScaleGrid::geometric(sp.spacing() / 4.0, 0.5, 2f64.powf(0.25)).unwrap();
        let g = g_function_with_tail(&sp, &f, &short).unwrap();
        for x in 0..24 {
            let missing = (exact.values()[x].powi(2) - g.g.values()[x].powi(2)).max(0.0).sqrt();
            assert!(missing <= g.tail_bound[x] * (1.0 + 1e-6) + 1e-9, "x={x}");
        }
    }

    #[test]
    fn corpus_is_seeded_and_inner() {
        let s = build_grid_space(1, 1.0, 33, WeightSpec::Uniform).unwrap();
        let a = generate_corpus(&s, 12, 7, 0.5).unwrap();
        let b = generate_corpus(&s, 12, 7, 0.5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_corpus(&s, 12, 8, 0.5).unwrap());
        for f in &a {
            for (i, v) in f.values().iter().enumerate() {
                if !s.is_inner(i, 0.5) {
                    assert_eq!(*v, 0.0);
                }
            }
            assert!(f.values().iter().any(|&v| v != 0.0));
        }
    }

    #[test]
    fn fitted_constants_round_up() {
        assert_eq!(round_up_significant(0.99998, 3), 1.0);
        assert_eq!(round_up_significant(1.0, 3), 1.0);
        assert_eq!(round_up_significant(1.2341, 3), 1.24);
        assert_eq!(round_up_significant(0.0, 3), 0.0);
        for x in [3.3e-7, 0.07777, 12.5001, 4567.0] {
            let r = round_up_significant(x, 3);
            assert!(r >= x && r <= x * 1.01, "{x} -> {r}");
        }
    }

    #[test]
    fn alpha_ranges() {
        let e = KernelExponents { gamma: 1.0, beta: 1.0, delta1: 1.0, delta2: 1.0, n: 1.0 };
        let r = alpha_range(TheoremId::Thm31, &e);
        assert_eq!((r.upper, r.inclusive), (0.5, true));
        let r = alpha_range(TheoremId::Thm32, &e);
        assert_eq!((r.upper, r.inclusive), (0.5, false));
        let r = alpha_range(TheoremId::Thm41, &e);
        assert!((r.upper - 1.0 / 3.0).abs() < 1e-15 && !r.inclusive);
        assert!(r.contains(0.0) && !r.contains(0.4));
    }

    #[test]
    fn constants_report_unit_ratio() {
        let (_, idx, sp) = line(12, 0.0, BoundaryCondition::Periodic);
        let rho = vec![0.25; 12];
        let grid = ScaleGrid::standard(sp.spacing(), idx.diameter()).unwrap();
        let setup =
            BoundednessSetup { index: &idx, spectrum: &sp, rho: &rho, grid, exponents: KernelExponents::default() };
        let corpus: Vec<GridFunction> = [1.0, -2.0, 0.0].iter().map(|&c| GridFunction::constant(12, c)).collect();
        let r = boundedness_report(TheoremId::Thm31, &setup, 0.0, 2.0, &corpus).unwrap();
        assert_eq!(r.skipped_zero_norm, 1);
        assert_eq!(r.rows.len(), 2);
        for row in &r.rows {
            assert!((row.ratio - 1.0).abs() < 1e-12, "{row:?}");
        }
        assert!(boundedness_report(TheoremId::Thm31, &setup, 0.0, 2.0, &[]).is_err());
    }

    #[test]
    fn reports_on_small_line() {
        let (s, idx, sp) = line(17, 4.0, BoundaryCondition::Dirichlet);
        let rho = critical_radius(&idx, &Potential::constant(17, 4.0).unwrap()).unwrap().rho;
        let grid = ScaleGrid::standard(sp.spacing(), idx.diameter()).unwrap();
        let setup =
            BoundednessSetup { index: &idx, spectrum: &sp, rho: &rho, grid, exponents: KernelExponents::default() };
        let corpus = generate_corpus(&s, 6, 1, 0.5).unwrap();
        for th in TheoremId::ALL {
            let r = boundedness_report(th, &setup, 0.0, 2.0, &corpus).unwrap();
            assert!(r.sup_ratio.is_finite() && r.sup_ratio > 0.0, "{th:?}");
            assert!(!r.refinement_ratios.is_empty());
            let csv = ratio_table_csv(&r);
            assert_eq!(csv.lines().count(), r.rows.len() + 1);
        }
    }

    #[test]
    fn square_root_gap_is_nonpositive() {
        let (_, idx, sp) = line(16, 1.0, BoundaryCondition::Dirichlet);
        let f = GridFunction::new((0..16).map(|i| (i as f64 * 1.3).cos()).collect()).unwrap();
        let g = g_function(&sp, &f, &ScaleGrid::standard(sp.spacing(), idx.diameter()).unwrap()).unwrap();
        assert!(square_root_gap(&idx, &g) <= 0.0);
    }
}
