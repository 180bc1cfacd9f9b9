//! Finite metric measure spaces.
//!
//! A space is a finite point set with a metric and strictly positive point
//! weights. Balls are open, `B(x, r) = {y : d(x, y) < r}`; see [`BallIndex`]
//! for the exact enumeration of all distinct balls.

mod balls;
mod profile;

pub use balls::{Ball, BallIndex, Realization};
pub use profile::{doubling_profile, SpaceProfile};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, invalid_param, Result};

/// Above this many points distances are evaluated from coordinates on demand.
pub const DENSE_DISTANCE_LIMIT: usize = 4096;

/// Density of the lattice measure relative to Lebesgue measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    Uniform,
    /// `w(x) = |x|^sigma`, an A₂-type weight for `|sigma| < dim`.
    Power { sigma: f64 },
}

impl WeightSpec {
    pub fn density(&self, x: &[f64]) -> f64 {
        match *self {
            WeightSpec::Uniform => 1.0,
            WeightSpec::Power { sigma } => x.iter().map(|c| c * c).sum::<f64>().sqrt().powf(sigma),
        }
    }
}

/// Geometry of a uniform lattice build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub dim: usize,
    pub n_per_axis: usize,
    pub extent: f64,
    pub spacing: f64,
    /// Offset applied to every coordinate (nonzero when the lattice was moved
    /// off the origin to keep a power weight finite and positive).
    pub shift: f64,
    pub weight: WeightSpec,
}

impl Lattice {
    /// Multi-index of point `i` (lexicographic ordering, last axis fastest).
    pub fn multi_index(&self, i: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        let mut rest = i;
        for a in (0..self.dim).rev() {
            idx[a] = rest % self.n_per_axis;
            rest /= self.n_per_axis;
        }
        idx
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &k| acc * self.n_per_axis + k)
    }

    pub fn len(&self) -> usize {
        self.n_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone)]
enum Metric {
    Dense(Vec<f64>),
    /// Integer lattice offsets times the spacing, so that radius ties like
    /// `2·d(x, x+1) = d(x, x+2)` hold exactly.
    Lattice { idx: Vec<Vec<i64>>, h: f64 },
    /// Euclidean distance recomputed from coordinates.
    Euclidean,
}

#[derive(Debug, Clone)]
pub struct MetricMeasureSpace {
    label: String,
    coords: Option<Vec<Vec<f64>>>,
    metric: Metric,
    weights: Vec<f64>,
    lattice: Option<Lattice>,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl MetricMeasureSpace {
    /// Points in ℝ^d with the Euclidean metric.
    pub fn from_points(label: impl Into<String>, coords: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if coords.len() != weights.len() {
            return Err(invalid_input("coords and weights differ in length"));
        }
        if coords.is_empty() {
            return Err(invalid_input("empty point set"));
        }
        let d = coords[0].len();
        if coords.iter().any(|c| c.len() != d || c.iter().any(|v| !v.is_finite())) {
            return Err(invalid_input("coordinates must be finite and of equal dimension"));
        }
        check_weights(&weights)?;
        let n = coords.len();
        let metric = if n <= DENSE_DISTANCE_LIMIT {
            let mut dist = vec![0.0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = euclid(&coords[i], &coords[j]);
                    dist[i * n + j] = v;
                    dist[j * n + i] = v;
                }
            }
            Metric::Dense(dist)
        } else {
            Metric::Euclidean
        };
        Ok(MetricMeasureSpace { label: label.into(), coords: Some(coords), metric, weights, lattice: None })
    }

    /// An explicit distance table; validated as a metric.
    pub fn from_distances(label: impl Into<String>, dist: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let n = dist.len();
        if n == 0 || weights.len() != n || dist.iter().any(|r| r.len() != n) {
            return Err(invalid_input("distance table must be square and match the weights"));
        }
        check_weights(&weights)?;
        let flat: Vec<f64> = dist.into_iter().flatten().collect();
        validate_metric(&flat, n)?;
        Ok(MetricMeasureSpace { label: label.into(), coords: None, metric: Metric::Dense(flat), weights, lattice: None })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    pub fn lattice(&self) -> Option<&Lattice> {
        self.lattice.as_ref()
    }

    pub fn total_measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.metric {
            Metric::Dense(d) => d[i * self.len() + j],
            Metric::Euclidean => {
                let c = self.coords.as_ref().expect("euclidean metric has coordinates");
                euclid(&c[i], &c[j])
            }
            Metric::Lattice { idx, h } => {
                let s: i64 = idx[i].iter().zip(&idx[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                h * (s as f64).sqrt()
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                d = d.max(self.dist(i, j));
            }
        }
        d
    }

    /// Smallest nonzero distance; the lattice spacing on grid builds.
    pub fn min_separation(&self) -> f64 {
        if let Some(l) = &self.lattice {
            return l.spacing;
        }
        let n = self.len();
        let mut m = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self.dist(i, j);
                if v > 0.0 {
                    m = m.min(v);
                }
            }
        }
        if m.is_finite() {
            m
        } else {
            1.0
        }
    }

    /// Whether `x` lies in the central box of relative size `fraction`
    /// (e.g. 0.5 for the inner 50%). Spaces without a lattice count every
    /// point as inner.
    pub fn is_inner(&self, i: usize, fraction: f64) -> bool {
        match (&self.lattice, &self.coords) {
            (Some(l), Some(c)) => c[i].iter().all(|&x| x.abs() <= fraction * l.extent + 1e-12),
            _ => true,
        }
    }

    /// Sample a function given on coordinates.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Result<Vec<f64>> {
        let c = self.coords.as_ref().ok_or_else(|| invalid_input("space has no coordinates"))?;
        Ok(c.iter().map(|x| f(x)).collect())
    }

    pub fn to_json(&self) -> SpaceJson {
        let n = self.len();
        let points = (0..n)
            .map(|i| PointJson {
                id: i,
                coords: self.coords.as_ref().map(|c| c[i].clone()),
                weight: self.weights[i],
            })
            .collect();
        let (metric, dist) = match (&self.metric, &self.coords) {
            (Metric::Dense(_), None) => (
                MetricKind::Explicit,
                Some((0..n).map(|i| (0..n).map(|j| self.dist(i, j)).collect()).collect()),
            ),
            _ => (MetricKind::Euclidean, None),
        };
        SpaceJson { label: self.label.clone(), points, metric, dist, lattice: self.lattice.clone() }
    }

    pub fn from_json(json: &SpaceJson) -> Result<Self> {
        let weights: Vec<f64> = json.points.iter().map(|p| p.weight).collect();
        if json.points.iter().enumerate().any(|(i, p)| p.id != i) {
            return Err(invalid_input("point ids must be 0..n in order"));
        }
        let mut space = match json.metric {
            MetricKind::Euclidean => {
                let coords = json
                    .points
                    .iter()
                    .map(|p| p.coords.clone().ok_or_else(|| invalid_input("euclidean metric needs coords")))
                    .collect::<Result<Vec<_>>>()?;
                Self::from_points(json.label.clone(), coords, weights)?
            }
            MetricKind::Explicit => {
                let dist = json.dist.clone().ok_or_else(|| invalid_input("explicit metric needs dist"))?;
                let mut s = Self::from_distances(json.label.clone(), dist, weights)?;
                if json.points.iter().all(|p| p.coords.is_some()) {
                    s.coords = Some(json.points.iter().map(|p| p.coords.clone().unwrap()).collect());
                }
                s
            }
        };
        if let (MetricKind::Euclidean, Some(l)) = (&json.metric, &json.lattice) {
            if l.len() != space.len() {
                return Err(invalid_input("lattice size does not match point count"));
            }
            space.metric = lattice_metric(l);
        }
        space.lattice = json.lattice.clone();
        Ok(space)
    }
}

fn lattice_metric(l: &Lattice) -> Metric {
    let n = l.len();
    let idx: Vec<Vec<i64>> = (0..n).map(|i| l.multi_index(i).iter().map(|&k| k as i64).collect()).collect();
    let lat = Metric::Lattice { idx, h: l.spacing };
    if n > DENSE_DISTANCE_LIMIT {
        return lat;
    }
    let mut dist = vec![0.0; n * n];
    if let Metric::Lattice { idx, h } = &lat {
        for i in 0..n {
            for j in (i + 1)..n {
                let s: i64 = idx[i].iter().zip(&idx[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                let v = h * (s as f64).sqrt();
                dist[i * n + j] = v;
                dist[j * n + i] = v;
            }
        }
    }
    Metric::Dense(dist)
}

fn check_weights(w: &[f64]) -> Result<()> {
    if w.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(invalid_input("weights must be positive and finite"));
    }
    Ok(())
}

fn validate_metric(d: &[f64], n: usize) -> Result<()> {
    for i in 0..n {
        if d[i * n + i] != 0.0 {
            return Err(invalid_input(format!("dist({i},{i}) != 0")));
        }
        for j in 0..n {
            let v = d[i * n + j];
            if !(v >= 0.0 && v.is_finite()) || v != d[j * n + i] {
                return Err(invalid_input(format!("dist({i},{j}) not symmetric nonnegative")));
            }
            if i != j && v == 0.0 {
                return Err(invalid_input(format!("distinct points {i},{j} at distance 0")));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let lhs = d[i * n + k];
                let rhs = d[i * n + j] + d[j * n + k];
                if lhs > rhs * (1.0 + 1e-12) {
                    return Err(invalid_input(format!("triangle inequality fails for ({i},{j},{k})")));
                }
            }
        }
    }
    Ok(())
}

/// Uniform lattice in `[-extent, extent]^dim` with Euclidean distance.
///
/// Weights are `w(x_i)·h^dim`. A power weight that would vanish or blow up at a
/// lattice node moves the whole lattice by `h/2` along every axis; the shift is
/// recorded in [`Lattice::shift`].
pub fn build_grid_space(dim: usize, extent: f64, n_per_axis: usize, weight: WeightSpec) -> Result<MetricMeasureSpace> {
    if !(dim == 1 || dim == 2) {
        return Err(invalid_param("dim must be 1 or 2"));
    }
    if n_per_axis < 2 {
        return Err(invalid_param("n_per_axis must be at least 2"));
    }
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(invalid_param("extent must be positive"));
    }
    let h = 2.0 * extent / (n_per_axis - 1) as f64;
    if !(h > 0.0) {
        return Err(invalid_param("non-positive spacing"));
    }
    if let WeightSpec::Power { sigma } = weight {
        if !(sigma.abs() < dim as f64) {
            return Err(invalid_param("power weight needs |sigma| < dim"));
        }
    }
    let axis: Vec<f64> = (0..n_per_axis).map(|i| -extent + i as f64 * h).collect();
    let hits_origin = axis.iter().any(|x| x.abs() < 1e-12 * h);
    let shift = match weight {
        WeightSpec::Power { sigma } if sigma != 0.0 && hits_origin => h / 2.0,
        _ => 0.0,
    };
    let lattice = Lattice { dim, n_per_axis, extent, spacing: h, shift, weight };
    let n = lattice.len();
    let coords: Vec<Vec<f64>> = (0..n)
        .map(|i| lattice.multi_index(i).iter().map(|&k| axis[k] + shift).collect())
        .collect();
    let cell = h.powi(dim as i32);
    let weights: Vec<f64> = coords.iter().map(|x| weight.density(x) * cell).collect();
    check_weights(&weights)?;
    let label = match weight {
        WeightSpec::Uniform => format!("grid{dim}d n={n_per_axis} extent={extent}"),
        WeightSpec::Power { sigma } => format!("grid{dim}d n={n_per_axis} extent={extent} |x|^{sigma}"),
    };
    let mut space = MetricMeasureSpace::from_points(label, coords, weights)?;
    space.metric = lattice_metric(&lattice);
    space.lattice = Some(lattice);
    Ok(space)
}

/// Named reference spaces used by tests and scenarios.
#[allow(clippy::mistyped_literal_suffixes)]
pub fn builtin_space(name: &str) -> Result<MetricMeasureSpace> {
    match name {
        "two_point" => MetricMeasureSpace::from_points("two-point", vec![vec![0.0], vec![1.0]], vec![1.0, 1.0]),
        "three_point_line" => MetricMeasureSpace::from_points(
            "three points {0,1,3}",
            vec![vec![0.0], vec![1.0], vec![3.0]],
            vec![1.0; 3],
        ),
        "random16" => random_graph_metric(16, 0x5eed_16),
        "random8" => random_graph_metric(8, 0x5eed_08),
        "random12" => random_graph_metric(12, 0x5eed_12),
        _ => Err(invalid_param(format!("unknown builtin space {name:?}"))),
    }
}

/// Shortest-path metric of a complete graph with random edge lengths and
/// random positive weights.
pub fn random_graph_metric(n: usize, seed: u64) -> Result<MetricMeasureSpace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.gen_range(0.1..1.0);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    let weights = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    MetricMeasureSpace::from_distances(format!("random graph metric n={n}"), d, weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Euclidean,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointJson {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<f64>>,
    pub weight: f64,
}

/// On-disk form of a space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceJson {
    pub label: String,
    pub points: Vec<PointJson>,
    pub metric: MetricKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<Lattice>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_lattice() {
        let s = build_grid_space(1, 1.0, 3, WeightSpec::Uniform).unwrap();
        assert_eq!(s.coords().unwrap(), &[vec![-1.0], vec![0.0], vec![1.0]]);
        assert_eq!(s.weights(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn total_measure_101() {
        let s = build_grid_space(1, 1.0, 101, WeightSpec::Uniform).unwrap();
        assert!((s.total_measure() - 2.02).abs() < 1e-12);
    }

    #[test]
    fn power_weight_positive() {
        let s = build_grid_space(1, 1.0, 64, WeightSpec::Power { sigma: 0.5 }).unwrap();
        assert!(s.weights().iter().all(|&w| w > 0.0));
        let h = 2.0 / 63.0;
        for (x, w) in s.coords().unwrap().iter().zip(s.weights()) {
            assert!((w - x[0].abs().sqrt() * h).abs() < 1e-15);
        }
    }

    #[test]
    fn power_weight_shifts_off_origin() {
        let s = build_grid_space(1, 1.0, 65, WeightSpec::Power { sigma: 0.5 }).unwrap();
        let l = s.lattice().unwrap();
        assert!((l.shift - l.spacing / 2.0).abs() < 1e-15);
        assert!(s.weights().iter().all(|&w| w > 0.0));
        let u = build_grid_space(1, 1.0, 65, WeightSpec::Uniform).unwrap();
        assert_eq!(u.lattice().unwrap().shift, 0.0);
    }

    #[test]
    fn grid_errors() {
        assert!(build_grid_space(1, 0.0, 3, WeightSpec::Uniform).is_err());
        assert!(build_grid_space(1, 1.0, 1, WeightSpec::Uniform).is_err());
        assert!(build_grid_space(3, 1.0, 3, WeightSpec::Uniform).is_err());
        assert!(build_grid_space(1, 1.0, 8, WeightSpec::Power { sigma: 1.5 }).is_err());
    }

    #[test]
    fn two_d_ordering_is_lexicographic() {
        let s = build_grid_space(2, 1.0, 3, WeightSpec::Uniform).unwrap();
        let c = s.coords().unwrap();
        assert_eq!(c[0], vec![-1.0, -1.0]);
        assert_eq!(c[1], vec![-1.0, 0.0]);
        assert_eq!(c[3], vec![0.0, -1.0]);
        let l = s.lattice().unwrap();
        assert_eq!(l.linear_index(&l.multi_index(7)), 7);
    }

    #[test]
    fn rejects_non_metric() {
        let d = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        assert!(MetricMeasureSpace::from_distances("bad", d, vec![1.0; 3]).is_err());
        let d = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(MetricMeasureSpace::from_distances("asym", d, vec![1.0; 2]).is_err());
    }

    #[test]
    fn random_metric_is_valid() {
        let s = builtin_space("random16").unwrap();
        assert_eq!(s.len(), 16);
        let again = builtin_space("random16").unwrap();
        assert_eq!(s.to_json(), again.to_json());
    }

    #[test]
    fn json_roundtrip() {
        for s in [
            build_grid_space(1, 1.0, 5, WeightSpec::Power { sigma: 0.5 }).unwrap(),
            builtin_space("random8").unwrap(),
        ] {
            let text = serde_json::to_string(&s.to_json()).unwrap();
            let back: SpaceJson = serde_json::from_str(&text).unwrap();
            let s2 = MetricMeasureSpace::from_json(&back).unwrap();
            assert_eq!(s2.to_json(), s.to_json());
        }
    }
}
