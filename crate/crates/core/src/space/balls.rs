//! Exact enumeration of the distinct open balls of a finite space.
//!
//! For a center `c` with distinct distances `0 = d_0 < d_1 < … < d_m`, the open
//! ball `B(c, r)` only changes when `r` crosses some `d_k`, so the balls around
//! `c` are the prefixes `{y : d(c, y) ≤ d_k}` of the distance-sorted row. The
//! canonical radius of such a prefix is `d_{k+1}` (the largest radius realising
//! it), or `+∞` for the whole space. Member sets are deduplicated across
//! centers, so a maximum over the returned list is a supremum over all balls.

use std::collections::HashMap;

use rayon::prelude::*;

use super::MetricMeasureSpace;
use crate::num::splitmix64;

/// One `(center, canonical radius)` pair realising a ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Realization {
    pub center: usize,
    /// `+∞` when the ball is the whole space.
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub id: usize,
    pub center: usize,
    pub canonical_radius: f64,
    pub measure: f64,
    /// Number of members.
    pub size: usize,
}

#[derive(Debug, Clone)]
struct Level {
    prefix: usize,
    radius: f64,
    ball: usize,
}

#[derive(Debug, Clone)]
pub struct BallIndex {
    n: usize,
    weights: Vec<f64>,
    /// Row `c`: point ids sorted by distance from `c` (ties by id).
    order: Vec<u32>,
    /// Row `c`: distances matching `order`.
    row_dist: Vec<f64>,
    /// Row `c`: cumulative weights along `order`.
    row_mass: Vec<f64>,
    balls: Vec<Ball>,
    realizations: Vec<Vec<Realization>>,
    levels: Vec<Vec<Level>>,
    diameter: f64,
    sentinel: f64,
}

impl BallIndex {
    pub fn new(space: &MetricMeasureSpace) -> Self {
        let n = space.len();
        let weights = space.weights().to_vec();

        let rows: Vec<(Vec<u32>, Vec<f64>)> = (0..n)
            .into_par_iter()
            .map(|c| {
                let mut ids: Vec<u32> = (0..n as u32).collect();
                ids.sort_by(|&a, &b| {
                    space
                        .dist(c, a as usize)
                        .total_cmp(&space.dist(c, b as usize))
                        .then(a.cmp(&b))
                });
                let d = ids.iter().map(|&y| space.dist(c, y as usize)).collect();
                (ids, d)
            })
            .collect();
        let mut order = Vec::with_capacity(n * n);
        let mut row_dist = Vec::with_capacity(n * n);
        for (ids, d) in rows {
            order.extend(ids);
            row_dist.extend(d);
        }
        let mut row_mass = vec![0.0; n * n];
        for c in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += weights[order[c * n + k] as usize];
                row_mass[c * n + k] = acc;
            }
        }
        let diameter = row_dist
            .chunks(n.max(1))
            .map(|r| r.last().copied().unwrap_or(0.0))
            .fold(0.0, f64::max);
        let sentinel = diameter + space.min_separation();

        let keys: Vec<u64> = (0..n as u64).map(splitmix64).collect();
        let mut balls: Vec<Ball> = Vec::new();
        let mut realizations: Vec<Vec<Realization>> = Vec::new();
        let mut levels: Vec<Vec<Level>> = vec![Vec::new(); n];
        let mut seen: HashMap<(u64, usize), Vec<usize>> = HashMap::new();

        for c in 0..n {
            let row = &row_dist[c * n..(c + 1) * n];
            let ids = &order[c * n..(c + 1) * n];
            let mut hash = 0u64;
            let mut k = 0;
            while k < n {
                // extend the prefix through all points tied at distance row[k]
                let mut end = k;
                while end < n && row[end] == row[k] {
                    hash = hash.wrapping_add(keys[ids[end] as usize]);
                    end += 1;
                }
                let radius = if end < n { row[end] } else { f64::INFINITY };
                let members = &ids[..end];
                let bucket = seen.entry((hash, end)).or_default();
                let found = bucket.iter().copied().find(|&b| {
                    let other = &balls[b];
                    let om = &order[other.center * n..other.center * n + other.size];
                    same_set(members, om)
                });
                let id = match found {
                    Some(b) => b,
                    None => {
                        let id = balls.len();
                        balls.push(Ball {
                            id,
                            center: c,
                            canonical_radius: radius,
                            measure: row_mass[c * n + end - 1],
                            size: end,
                        });
                        realizations.push(Vec::new());
                        bucket.push(id);
                        id
                    }
                };
                realizations[id].push(Realization { center: c, radius });
                levels[c].push(Level { prefix: end, radius, ball: id });
                k = end;
            }
        }

        BallIndex { n, weights, order, row_dist, row_mass, balls, realizations, levels, diameter, sentinel }
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn ball(&self, id: usize) -> &Ball {
        &self.balls[id]
    }

    /// Member ids of a ball, in distance order from its first center.
    pub fn members(&self, id: usize) -> &[u32] {
        let b = &self.balls[id];
        &self.order[b.center * self.n..b.center * self.n + b.size]
    }

    pub fn realizations(&self, id: usize) -> &[Realization] {
        &self.realizations[id]
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Finite stand-in for the `+∞` radius of whole-space balls, `diam + h`.
    pub fn sentinel_radius(&self) -> f64 {
        self.sentinel
    }

    /// `radius` with the whole-space sentinel materialised.
    pub fn finite_radius(&self, radius: f64) -> f64 {
        if radius.is_finite() {
            radius
        } else {
            self.sentinel
        }
    }

    /// Sorted distances from `center`.
    pub fn distance_row(&self, center: usize) -> &[f64] {
        &self.row_dist[center * self.n..(center + 1) * self.n]
    }

    /// Point ids sorted by distance from `center`.
    pub fn order_row(&self, center: usize) -> &[u32] {
        &self.order[center * self.n..(center + 1) * self.n]
    }

    /// Number of points in the open ball `B(center, r)`.
    pub fn count_open(&self, center: usize, r: f64) -> usize {
        self.distance_row(center).partition_point(|&d| d < r)
    }

    /// `μ(B(center, r))` for the open ball; zero for `r ≤ 0`.
    pub fn measure_open(&self, center: usize, r: f64) -> f64 {
        match self.count_open(center, r) {
            0 => 0.0,
            k => self.row_mass[center * self.n + k - 1],
        }
    }

    /// Id of the ball `B(center, r)`, or `None` if it is empty.
    pub fn ball_at(&self, center: usize, r: f64) -> Option<usize> {
        let k = self.count_open(center, r);
        if k == 0 {
            return None;
        }
        let lv = &self.levels[center];
        let pos = lv.partition_point(|l| l.prefix < k);
        Some(lv[pos].ball)
    }

    /// Smallest ball around `center` containing every point at distance `≤ d`.
    pub fn ball_reaching(&self, center: usize, d: f64) -> usize {
        let k = self.distance_row(center).partition_point(|&x| x <= d).max(1);
        let lv = &self.levels[center];
        lv[lv.partition_point(|l| l.prefix < k)].ball
    }

    /// `(canonical radius, ball id)` for each nested ball around `center`.
    pub fn levels(&self, center: usize) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.levels[center].iter().map(|l| (l.radius, l.ball))
    }

    /// Ids of the balls containing point `x`.
    pub fn balls_containing(&self, x: usize) -> Vec<usize> {
        (0..self.len()).filter(|&b| self.members(b).contains(&(x as u32))).collect()
    }
}

fn same_set(a: &[u32], b: &[u32]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_unstable();
    y.sort_unstable();
    x == y
}
