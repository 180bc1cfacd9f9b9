//! Quadrature for the subordination integral
//! `(1/√π) ∫_0^∞ e^{−s} s^{−1/2} g(s) ds`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum SubordinationRule {
    /// Trapezoid in `u = ln s` over `[u_min, u_max]`.
    LogTrapezoid { nodes: usize, u_min: f64, u_max: f64 },
    /// Generalized Gauss–Laguerre with weight `s^{−1/2} e^{−s}`.
    GaussLaguerre { nodes: usize },
}

impl Default for SubordinationRule {
    fn default() -> Self {
        SubordinationRule::LogTrapezoid { nodes: 128, u_min: -40.0, u_max: 5.0 }
    }
}

impl SubordinationRule {
    /// `(s_i, ω_i)` with `Σ ω_i g(s_i) ≈ (1/√π) ∫ e^{−s} s^{−1/2} g(s) ds`.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        match *self {
            SubordinationRule::LogTrapezoid { nodes, u_min, u_max } => log_trapezoid(nodes, u_min, u_max),
            SubordinationRule::GaussLaguerre { nodes } => gauss_laguerre_half(nodes),
        }
    }
}

/// In `u = ln s` the integrand is `e^{−s} s^{1/2} g(e^u)`, which decays
/// doubly exponentially on the right and like `e^{u/2}` on the left. The mass
/// below `s_lo`, `≈ 2√s_lo/√π`, is lumped onto the first node.
pub fn log_trapezoid(nodes: usize, u_min: f64, u_max: f64) -> Vec<(f64, f64)> {
    assert!(nodes >= 2 && u_max > u_min);
    let du = (u_max - u_min) / (nodes - 1) as f64;
    let rpi = std::f64::consts::PI.sqrt().recip();
    let mut out: Vec<(f64, f64)> = (0..nodes)
        .map(|i| {
            let s = (u_min + i as f64 * du).exp();
            let half = if i == 0 || i == nodes - 1 { 0.5 } else { 1.0 };
            (s, half * du * (-s).exp() * s.sqrt() * rpi)
        })
        .collect();
    out[0].1 += 2.0 * out[0].0.sqrt() * rpi;
    out
}

/// Golub–Welsch nodes for the weight `s^{−1/2}e^{−s}`, weights normalized by
/// `Γ(1/2) = √π` so that they sum to one.
pub fn gauss_laguerre_half(nodes: usize) -> Vec<(f64, f64)> {
    assert!(nodes >= 1);
    let a = -0.5;
    let j = DMatrix::from_fn(nodes, nodes, |r, c| {
        if r == c {
            2.0 * r as f64 + 1.0 + a
        } else if r.abs_diff(c) == 1 {
            let i = r.max(c) as f64;
            (i * (i + a)).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(j);
    let mut out: Vec<(f64, f64)> =
        (0..nodes).map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2))).collect();
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}
