//! Brute-force reference implementations: direct loops over every
//! `(center, radius)` pair with no deduplication.
#![allow(dead_code)]

use campanato::MetricMeasureSpace;

/// One open ball `B(x, r)` with the supremum of radii giving the same members.
#[derive(Debug, Clone)]
pub struct RawBall {
    pub center: usize,
    pub sup_radius: f64,
    pub members: Vec<usize>,
}

/// Every open ball: for each center, one ball per distinct positive distance
/// plus the whole space (radius sentinel `diam + min_sep`).
pub fn raw_balls(s: &MetricMeasureSpace) -> Vec<RawBall> {
    let n = s.len();
    let sentinel = s.diameter() + s.min_separation();
    let mut out = Vec::new();
    for x in 0..n {
        let mut ds: Vec<f64> = (0..n).map(|y| s.dist(x, y)).filter(|&d| d > 0.0).collect();
        ds.sort_by(f64::total_cmp);
        ds.dedup();
        for &r in &ds {
            let members: Vec<usize> = (0..n).filter(|&y| s.dist(x, y) < r).collect();
            out.push(RawBall { center: x, sup_radius: r, members });
        }
        out.push(RawBall { center: x, sup_radius: sentinel, members: (0..n).collect() });
    }
    out
}

/// D-membership of each raw ball: any raw ball with the same members reaching `ρ`.
pub fn in_d(balls: &[RawBall], rho: &[f64]) -> Vec<bool> {
    balls
        .iter()
        .map(|b| balls.iter().any(|c| c.members == b.members && c.sup_radius >= rho[c.center]))
        .collect()
}

fn measure(s: &MetricMeasureSpace, m: &[usize]) -> f64 {
    m.iter().map(|&y| s.weights()[y]).sum()
}

fn mean(s: &MetricMeasureSpace, f: &[f64], m: &[usize]) -> f64 {
    m.iter().map(|&y| f[y] * s.weights()[y]).sum::<f64>() / measure(s, m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    Mean,
    Min,
}

/// `(osc part, size part)` of the localized norm.
pub fn localized(
    s: &MetricMeasureSpace,
    f: &[f64],
    alpha: f64,
    p: f64,
    d: &[bool],
    balls: &[RawBall],
    kind: Kind,
) -> (f64, f64) {
    let mut osc = 0.0f64;
    let mut size = 0.0f64;
    for (b, &inside) in balls.iter().zip(d) {
        let mu = measure(s, &b.members);
        let norm = |g: &dyn Fn(usize) -> f64| {
            let sum: f64 = b.members.iter().map(|&y| g(y).powf(p) * s.weights()[y]).sum();
            (sum / mu.powf(1.0 + alpha * p)).powf(1.0 / p)
        };
        if inside {
            size = size.max(norm(&|y| f[y].abs()));
        } else {
            let c = match kind {
                Kind::Mean => mean(s, f, &b.members),
                Kind::Min => b.members.iter().map(|&y| f[y]).fold(f64::INFINITY, f64::min),
            };
            osc = osc.max(norm(&|y| (f[y] - c).abs()));
        }
    }
    (osc, size)
}

/// `(osc, size)` of the localized Lipschitz norm.
pub fn lipschitz(s: &MetricMeasureSpace, f: &[f64], alpha: f64, d: &[bool], balls: &[RawBall]) -> (f64, f64) {
    let mut osc = 0.0f64;
    let mut size = 0.0f64;
    for (b, &inside) in balls.iter().zip(d) {
        let scale = measure(s, &b.members).powf(-alpha);
        if inside {
            size = size.max(b.members.iter().map(|&y| f[y].abs()).fold(0.0, f64::max) * scale);
        } else {
            let hi = b.members.iter().map(|&y| f[y]).fold(f64::NEG_INFINITY, f64::max);
            let lo = b.members.iter().map(|&y| f[y]).fold(f64::INFINITY, f64::min);
            osc = osc.max((hi - lo) * scale);
        }
    }
    (osc, size)
}

pub fn hl(s: &MetricMeasureSpace, f: &[f64], balls: &[RawBall]) -> Vec<f64> {
    let abs: Vec<f64> = f.iter().map(|v| v.abs()).collect();
    (0..s.len())
        .map(|x| balls.iter().filter(|b| b.members.contains(&x)).map(|b| mean(s, &abs, &b.members)).fold(0.0, f64::max))
        .collect()
}

/// `sup{r : r²·mean_{B(x,r)} V ≤ 1}` on the radius lattice `k·step`.
pub fn critical_radius_scan(s: &MetricMeasureSpace, v: &[f64], step: f64) -> Vec<f64> {
    let n = s.len();
    let total = mean(s, v, &(0..n).collect::<Vec<_>>());
    let r_max = s.diameter().max(1.0 / total.sqrt()) + 2.0 * step;
    (0..n)
        .map(|x| {
            let mut best = 0.0;
            let mut k = 1usize;
            loop {
                let r = k as f64 * step;
                if r > r_max {
                    break;
                }
                let m: Vec<usize> = (0..n).filter(|&y| s.dist(x, y) < r).collect();
                if r * r * mean(s, v, &m) <= 1.0 {
                    best = r;
                }
                k += 1;
            }
            best
        })
        .collect()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
