//! Atoms, the re-splitting of local atoms and the pairing bound against
//! localized Campanato norms.

use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, invalid_param, Result};
use crate::fnspaces::{campanato_norm, BallClass, GridFunction};
use crate::num::Exponent;
use crate::space::BallIndex;

/// Relative tolerance on the zero-mean condition.
pub const MEAN_TOL: f64 = 1e-12;
/// Relative slack on the size condition.
pub const SIZE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomKind {
    Cancellative,
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub kind: AtomKind,
    pub p: f64,
    pub q: Exponent,
    pub support_ball: usize,
    pub values: Vec<f64>,
}

impl Atom {
    /// `μ(B)^{-1/p}·χ_B`, a local atom for every `q`.
    pub fn normalized_indicator(index: &BallIndex, ball: usize, p: f64, q: Exponent) -> Atom {
        let h = index.ball(ball).measure.powf(-1.0 / p);
        let mut values = vec![0.0; index.n_points()];
        for &y in index.members(ball) {
            values[y as usize] = h;
        }
        Atom { kind: AtomKind::Local, p, q, support_ball: ball, values }
    }

    pub fn function(&self) -> GridFunction {
        GridFunction::new(self.values.clone()).expect("atom values are finite")
    }
}

/// Weighted `L^q` norm over the members of a ball.
fn lq_norm_on(index: &BallIndex, values: &[f64], ball: usize, q: Exponent) -> f64 {
    let w = index.weights();
    let m = index.members(ball);
    match q {
        Exponent::Infinity => m.iter().map(|&y| values[y as usize].abs()).fold(0.0, f64::max),
        Exponent::Finite(q) => {
            let s: f64 = m.iter().map(|&y| values[y as usize].abs().powf(q) * w[y as usize]).sum();
            s.powf(1.0 / q)
        }
    }
}

/// Weighted `L¹` norm over the whole space.
pub fn l1_norm(index: &BallIndex, values: &[f64]) -> f64 {
    values.iter().zip(index.weights()).map(|(v, w)| v.abs() * w).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomValidation {
    /// Largest `|a|` off the support ball.
    pub support_leak: f64,
    /// `‖a‖_q · μ(B)^{1/p−1/q}`; valid atoms have this at most 1.
    pub size_margin: f64,
    /// `|Σ a·w| / Σ |a|·w` for cancellative atoms.
    pub relative_mean: Option<f64>,
    /// Whether the support is in `D`, for local atoms.
    pub support_in_class: Option<bool>,
    pub failures: Vec<String>,
}

impl AtomValidation {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }
}

fn check_exponents(p: f64, q: Exponent) -> std::result::Result<(), String> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(format!("p = {p} outside (0, 1]"));
    }
    match q {
        Exponent::Infinity => Ok(()),
        Exponent::Finite(q) if q >= 1.0 && q > p => Ok(()),
        Exponent::Finite(q) => Err(format!("q = {q} must be >= 1 and > p")),
    }
}

/// Check the support, size and cancellation (or class membership) conditions.
pub fn validate_atom(index: &BallIndex, a: &Atom, d: &BallClass) -> AtomValidation {
    let mut failures = Vec::new();
    let mut out = AtomValidation {
        support_leak: 0.0,
        size_margin: f64::NAN,
        relative_mean: None,
        support_in_class: None,
        failures: Vec::new(),
    };
    if let Err(e) = check_exponents(a.p, a.q) {
        failures.push(e);
    }
    if a.values.len() != index.n_points() || a.support_ball >= index.len() {
        failures.push("atom does not match the ball index".into());
        out.failures = failures;
        return out;
    }
    if a.values.iter().any(|v| !v.is_finite()) {
        failures.push("non-finite atom values".into());
        out.failures = failures;
        return out;
    }
    let mut inside = vec![false; index.n_points()];
    for &y in index.members(a.support_ball) {
        inside[y as usize] = true;
    }
    out.support_leak =
        a.values.iter().zip(&inside).filter(|(_, &i)| !i).map(|(v, _)| v.abs()).fold(0.0, f64::max);
    if out.support_leak > 0.0 {
        failures.push(format!("nonzero off the support ball (max {:e})", out.support_leak));
    }
    let mu = index.ball(a.support_ball).measure;
    let norm = lq_norm_on(index, &a.values, a.support_ball, a.q);
    out.size_margin = norm * mu.powf(1.0 / a.p - a.q.reciprocal());
    if out.size_margin > 1.0 + SIZE_TOL {
        failures.push(format!("size condition fails (margin {})", out.size_margin));
    }
    match a.kind {
        AtomKind::Cancellative => {
            let w = index.weights();
            let s: f64 = a.values.iter().zip(w).map(|(v, w)| v * w).sum();
            let t = l1_norm(index, &a.values);
            let rel = if t > 0.0 { s.abs() / t } else { 0.0 };
            out.relative_mean = Some(rel);
            if rel > MEAN_TOL {
                failures.push(format!("mean is not zero (relative {rel:e})"));
            }
        }
        AtomKind::Local => {
            let inn = d.contains(a.support_ball);
            out.support_in_class = Some(inn);
            if !inn {
                failures.push("local atom supported on a ball outside the class".into());
            }
        }
    }
    out.failures = failures;
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSplit {
    /// `(b − b_B χ_B)/2`, zero mean on `B`.
    pub cancellative: Atom,
    /// `b_B χ_B`.
    pub constant: Atom,
    /// Size margin of the cancellative part: the constant needed to make it an atom.
    pub scale: f64,
    /// `max |b − (2c + s)|`.
    pub reconstruction_error: f64,
}

/// Split a local atom into a cancellative half and its constant part.
pub fn split_local_atom(index: &BallIndex, b: &Atom, d: &BallClass) -> Result<LocalSplit> {
    if b.kind != AtomKind::Local {
        return Err(invalid_input("expected a local atom"));
    }
    let v = validate_atom(index, b, d);
    if !v.is_valid() {
        return Err(invalid_input(format!("invalid local atom: {}", v.failures.join("; "))));
    }
    let ball = b.support_ball;
    let f = b.function();
    let mean = f.ball_mean(index, ball);
    let mut c = vec![0.0; b.values.len()];
    let mut s = vec![0.0; b.values.len()];
    for &y in index.members(ball) {
        let y = y as usize;
        s[y] = mean;
        c[y] = (b.values[y] - mean) / 2.0;
    }
    let reconstruction_error =
        (0..c.len()).map(|i| (b.values[i] - (2.0 * c[i] + s[i])).abs()).fold(0.0, f64::max);
    let cancellative = Atom { kind: AtomKind::Cancellative, p: b.p, q: b.q, support_ball: ball, values: c };
    let constant = Atom { kind: AtomKind::Local, p: b.p, q: b.q, support_ball: ball, values: s };
    let scale = lq_norm_on(index, &cancellative.values, ball, b.q)
        * index.ball(ball).measure.powf(1.0 / b.p - b.q.reciprocal());
    Ok(LocalSplit { cancellative, constant, scale, reconstruction_error })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairingCheck {
    pub value: f64,
    pub bound: f64,
    pub ok: bool,
}

/// `Σ f·a·w` against the localized norm `E_D^{1/p−1, q'}` (`q'` conjugate to
/// the atom's `q`; for `q = ∞` this is the `p = 1` norm).
pub fn pairing(index: &BallIndex, f: &GridFunction, a: &Atom, d: &BallClass) -> Result<PairingCheck> {
    if f.len() != index.n_points() || a.values.len() != index.n_points() {
        return Err(invalid_input("length mismatch"));
    }
    check_exponents(a.p, a.q).map_err(invalid_param)?;
    if a.kind == AtomKind::Local && !d.contains(a.support_ball) {
        return Err(invalid_input("local atom supported on a ball outside the class"));
    }
    let value: f64 = f.values().iter().zip(&a.values).zip(index.weights()).map(|((f, a), w)| f * a * w).sum();
    let alpha = 1.0 / a.p - 1.0;
    let bound = match a.q.conjugate() {
        Exponent::Finite(r) => campanato_norm(index, f, alpha, r, d)?.total,
        Exponent::Infinity => sup_campanato(index, f, alpha, d),
    };
    Ok(PairingCheck { value, bound, ok: value.abs() <= bound * (1.0 + 1e-12) + 1e-14 })
}

/// The `L^∞` version of the localized Campanato norm.
fn sup_campanato(index: &BallIndex, f: &GridFunction, alpha: f64, d: &BallClass) -> f64 {
    let (mut osc, mut size) = (0.0f64, 0.0f64);
    for b in 0..index.len() {
        let scale = index.ball(b).measure.powf(-alpha);
        let members = index.members(b);
        if d.contains(b) {
            let m = members.iter().map(|&y| f.values()[y as usize].abs()).fold(0.0, f64::max);
            size = size.max(m * scale);
        } else {
            let mean = f.ball_mean(index, b);
            let m = members.iter().map(|&y| (f.values()[y as usize] - mean).abs()).fold(0.0, f64::max);
            osc = osc.max(m * scale);
        }
    }
    osc + size
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicDecomposition {
    pub p: f64,
    pub terms: Vec<(f64, Atom)>,
}

impl AtomicDecomposition {
    pub fn reconstruct(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (c, a) in &self.terms {
            for (o, v) in out.iter_mut().zip(&a.values) {
                *o += c * v;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCost {
    pub cost: f64,
    pub reconstruction_error: Option<f64>,
    pub reconstruction_ok: Option<bool>,
}

/// `(Σ|λ_j|^p)^{1/p}` for a decomposition whose atoms are all valid; when a
/// target is supplied the reconstruction is checked to `1e-10·max|λ|`.
pub fn decomposition_cost(
    index: &BallIndex,
    dec: &AtomicDecomposition,
    d: &BallClass,
    target: Option<&[f64]>,
) -> Result<DecompositionCost> {
    if !(dec.p > 0.0 && dec.p <= 1.0) {
        return Err(invalid_param("decomposition p must lie in (0, 1]"));
    }
    for (j, (_, a)) in dec.terms.iter().enumerate() {
        let v = validate_atom(index, a, d);
        if !v.is_valid() {
            return Err(invalid_input(format!("term {j}: {}", v.failures.join("; "))));
        }
    }
    let cost = dec.terms.iter().map(|(c, _)| c.abs().powf(dec.p)).sum::<f64>().powf(1.0 / dec.p);
    let (reconstruction_error, reconstruction_ok) = match target {
        None => (None, None),
        Some(t) => {
            if t.len() != index.n_points() {
                return Err(invalid_input("target length mismatch"));
            }
            let r = dec.reconstruct(index.n_points());
            let err = r.iter().zip(t).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let top = dec.terms.iter().map(|(c, _)| c.abs()).fold(0.0, f64::max);
            (Some(err), Some(err <= 1e-10 * top.max(f64::MIN_POSITIVE)))
        }
    };
    Ok(DecompositionCost { cost, reconstruction_error, reconstruction_ok })
}

/// Chain of dipole `(p, ∞)`-atoms reproducing a function of zero total mass.
///
/// Points are visited in distance order from point 0; the running mass
/// `m_k = Σ_{i≤k} f_i w_i` is carried from each point to the next by a dipole
/// `δ_k/w_k − δ_{k+1}/w_{k+1}` supported on the smallest ball around `x_k`
/// reaching `x_{k+1}`.
pub fn greedy_dipole_decomposition(index: &BallIndex, f: &GridFunction, p: f64) -> Result<AtomicDecomposition> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid_param("p must lie in (0, 1]"));
    }
    let n = index.n_points();
    if f.len() != n {
        return Err(invalid_input("length mismatch"));
    }
    let w = index.weights();
    let total: f64 = f.values().iter().zip(w).map(|(v, w)| v * w).sum();
    let scale: f64 = f.values().iter().zip(w).map(|(v, w)| (v * w).abs()).sum();
    if total.abs() > MEAN_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(invalid_input("function must have zero total mass"));
    }
    let order = index.order_row(0);
    let mut terms = Vec::new();
    let mut mass = 0.0;
    for k in 0..n.saturating_sub(1) {
        let (x, y) = (order[k] as usize, order[k + 1] as usize);
        mass += f.values()[x] * w[x];
        if mass == 0.0 {
            continue;
        }
        let ball = index.ball_reaching(x, index_dist(index, x, y));
        let top = (1.0 / w[x]).max(1.0 / w[y]);
        let norm = top * index.ball(ball).measure.powf(1.0 / p);
        let mut values = vec![0.0; n];
        values[x] = 1.0 / w[x] / norm;
        values[y] = -1.0 / w[y] / norm;
        terms.push((mass * norm, Atom { kind: AtomKind::Cancellative, p, q: Exponent::Infinity, support_ball: ball, values }));
    }
    Ok(AtomicDecomposition { p, terms })
}

fn index_dist(index: &BallIndex, x: usize, y: usize) -> f64 {
    let row = index.order_row(x);
    let k = row.iter().position(|&v| v as usize == y).expect("point in row");
    index.distance_row(x)[k]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_grid_space, builtin_space, MetricMeasureSpace, WeightSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two() -> BallIndex {
        BallIndex::new(&builtin_space("two_point").unwrap())
    }

    fn pair(idx: &BallIndex) -> usize {
        idx.balls().iter().find(|b| b.size == 2).unwrap().id
    }

    #[test]
    fn two_point_atoms() {
        let idx = two();
        let e = BallClass::empty(&idx);
        let b = pair(&idx);
        let mk = |v: Vec<f64>| Atom { kind: AtomKind::Cancellative, p: 1.0, q: Exponent::Infinity, support_ball: b, values: v };
        let good = validate_atom(&idx, &mk(vec![0.5, -0.5]), &e);
        assert!(good.is_valid(), "{good:?}");
        assert!((good.size_margin - 1.0).abs() < 1e-15);
        let bad = validate_atom(&idx, &mk(vec![0.5, 0.5]), &e);
        assert!(!bad.is_valid());
        assert!(bad.failures.iter().any(|f| f.contains("mean")));
        // ∞-atoms are q-atoms too
        let mut a = mk(vec![0.5, -0.5]);
        a.q = Exponent::Finite(2.0);
        assert!(validate_atom(&idx, &a, &e).is_valid());
    }

    #[test]
    fn local_atoms() {
        let idx = two();
        let b = pair(&idx);
        let d = BallClass::explicit(&idx, [b]).unwrap();
        for p in [0.3, 0.7, 1.0] {
            let a = Atom::normalized_indicator(&idx, b, p, Exponent::Infinity);
            assert!(validate_atom(&idx, &a, &d).is_valid());
            assert!(!validate_atom(&idx, &a, &BallClass::empty(&idx)).is_valid());
            let s = split_local_atom(&idx, &a, &d).unwrap();
            assert!(s.cancellative.values.iter().all(|&v| v == 0.0));
            assert_eq!(s.constant.values, a.values);
            assert_eq!(s.reconstruction_error, 0.0);
        }
        let w = idx.weights();
        let v = vec![1.0 / 2f64.sqrt(), 0.0];
        let a = Atom { kind: AtomKind::Local, p: 1.0, q: Exponent::Finite(2.0), support_ball: b, values: v };
        assert!(validate_atom(&idx, &a, &d).is_valid());
        let s = split_local_atom(&idx, &a, &d).unwrap();
        let m: f64 = s.cancellative.values.iter().zip(w).map(|(c, w)| c * w).sum();
        assert!(m.abs() < 1e-15);
        assert!(s.reconstruction_error < 1e-15);
        assert!(s.scale <= 1.0);
    }

    #[test]
    fn pairing_kills_constants() {
        let idx = two();
        let b = pair(&idx);
        let a = Atom { kind: AtomKind::Cancellative, p: 1.0, q: Exponent::Infinity, support_ball: b, values: vec![0.5, -0.5] };
        let r = pairing(&idx, &GridFunction::constant(2, 7.0), &a, &BallClass::empty(&idx)).unwrap();
        assert_eq!(r.value, 0.0);
        let local = Atom::normalized_indicator(&idx, b, 1.0, Exponent::Infinity);
        assert!(pairing(&idx, &GridFunction::constant(2, 1.0), &local, &BallClass::empty(&idx)).is_err());
    }

    fn random_space(rng: &mut ChaCha8Rng, n: usize) -> MetricMeasureSpace {
        let coords = (0..n).map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
        let w = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
        MetricMeasureSpace::from_points("random", coords, w).unwrap()
    }

    #[test]
    fn pairing_bound_on_random_atoms() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = random_space(&mut rng, 10);
        let idx = BallIndex::new(&s);
        let d = BallClass::explicit(&idx, (0..idx.len()).filter(|_| rng.gen_bool(0.3))).unwrap();
        for _ in 0..100 {
            let f = GridFunction::new((0..10).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
            let p = [1.0, 0.8, 0.5][rng.gen_range(0..3)];
            let mut q = [Exponent::Infinity, Exponent::Finite(2.0), Exponent::Finite(1.0)][rng.gen_range(0..3)];
            if q == Exponent::Finite(1.0) && p == 1.0 {
                q = Exponent::Infinity;
            }
            let b = rng.gen_range(0..idx.len());
            let members = idx.members(b).to_vec();
            if members.len() < 2 {
                continue;
            }
            let mut v = vec![0.0; 10];
            for &y in &members {
                v[y as usize] = rng.gen_range(-1.0..1.0);
            }
            let mean = GridFunction::new(v.clone()).unwrap().ball_mean(&idx, b);
            for &y in &members {
                v[y as usize] -= mean;
            }
            let mut a = Atom { kind: AtomKind::Cancellative, p, q, support_ball: b, values: v };
            let m = validate_atom(&idx, &a, &d).size_margin;
            a.values.iter_mut().for_each(|x| *x /= m);
            let v = validate_atom(&idx, &a, &d);
            assert!(v.is_valid(), "{v:?}");
            let r = pairing(&idx, &f, &a, &d).unwrap();
            assert!(r.ok, "{r:?}");
            assert!(l1_norm(&idx, &a.values) <= idx.ball(b).measure.powf(1.0 - 1.0 / p) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn costs() {
        let idx = two();
        let b = pair(&idx);
        let a = Atom { kind: AtomKind::Cancellative, p: 1.0, q: Exponent::Infinity, support_ball: b, values: vec![0.5, -0.5] };
        let e = BallClass::empty(&idx);
        let one = AtomicDecomposition { p: 1.0, terms: vec![(1.0, a.clone())] };
        assert_eq!(decomposition_cost(&idx, &one, &e, None).unwrap().cost, 1.0);
        let two = AtomicDecomposition { p: 1.0, terms: vec![(3.0, a.clone()), (4.0, a)] };
        assert_eq!(decomposition_cost(&idx, &two, &e, None).unwrap().cost, 7.0);
    }

    #[test]
    fn greedy_dipoles_reconstruct() {
        let s = builtin_space("random8").unwrap();
        let idx = BallIndex::new(&s);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut v: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m: f64 = v.iter().zip(s.weights()).map(|(a, w)| a * w).sum::<f64>() / s.total_measure();
        v.iter_mut().for_each(|x| *x -= m);
        let f = GridFunction::new(v.clone()).unwrap();
        let dec = greedy_dipole_decomposition(&idx, &f, 1.0).unwrap();
        let c = decomposition_cost(&idx, &dec, &BallClass::empty(&idx), Some(&v)).unwrap();
        assert_eq!(c.reconstruction_ok, Some(true), "{c:?}");
        let independent: f64 = dec.terms.iter().map(|(l, _)| l.abs()).sum();
        assert!((c.cost - independent).abs() <= 1e-14 * independent);
    }

    #[test]
    fn atom_json_shape() {
        let s = build_grid_space(1, 1.0, 3, WeightSpec::Uniform).unwrap();
        let idx = BallIndex::new(&s);
        let a = Atom::normalized_indicator(&idx, 0, 1.0, Exponent::Infinity);
        let js = serde_json::to_value(&a).unwrap();
        assert_eq!(js["kind"], "local");
        assert_eq!(js["q"], "inf");
        let back: Atom = serde_json::from_value(js).unwrap();
        assert_eq!(back, a);
    }
}
