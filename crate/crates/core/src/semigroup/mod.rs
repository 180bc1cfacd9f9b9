//! Discrete Schrödinger operators `L = L₀ + V` on lattice spaces and their
//! spectral calculus.
//!
//! `L₀ = −(1/w)·div grad` is discretized with the second-difference stencil,
//! giving a stiffness matrix `K` and a lumped mass `M = diag(w_i h^d)` (the
//! point weights of the space). `L = M⁻¹K` is self-adjoint in the weighted
//! inner product, and `S = M^{-1/2} K M^{-1/2}` is diagonalized directly.
//! Eigenvectors `φ_k = M^{-1/2} u_k` are then weighted-orthonormal, and every
//! kernel is `Σ_k m(λ_k) φ_k(x) φ_k(y)` for a spectral multiplier `m`. The
//! scale convention is `T_t = exp(−t²L)`.

mod fit;
mod kernels;
mod quadrature;

pub use fit::{kernel_bound_fit, BoundFit, BoundId, BoundParams, FitPerScale, Witness};
pub use kernels::{heat_kernel, kernel_csv, poisson_kernel, qt_kernel, KernelFamily, KernelKind, PoissonMethod};
pub use quadrature::{gauss_laguerre_half, log_trapezoid, SubordinationRule};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, invalid_param, Error, Result};
use crate::potential::Potential;
use crate::space::MetricMeasureSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    #[default]
    Dirichlet,
    Periodic,
}

/// Full eigendecomposition of a weighted-symmetric operator.
#[derive(Debug, Clone)]
pub struct OperatorSpectrum {
    eigenvalues: Vec<f64>,
    /// Column `k` is `φ_k`.
    phi: DMatrix<f64>,
    weights: Vec<f64>,
    bc: BoundaryCondition,
    h: f64,
    dim: usize,
    /// Every row of the stiffness matrix sums to exactly zero, so constants
    /// are in the kernel of `L` without roundoff.
    conserves_constants: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumJson {
    pub bc: BoundaryCondition,
    pub eigenvalues: Vec<f64>,
    pub h: f64,
    pub n: usize,
}

/// Eigenvalues this far below zero (relative to the largest) are roundoff.
const NEGATIVE_EIGEN_TOL: f64 = 1e-12;

impl OperatorSpectrum {
    /// Diagonalize `M⁻¹K` for symmetric `K` and positive masses `m`.
    pub fn from_stiffness(
        stiffness: DMatrix<f64>,
        mass: &[f64],
        bc: BoundaryCondition,
        h: f64,
        dim: usize,
    ) -> Result<Self> {
        let n = mass.len();
        if stiffness.nrows() != n || stiffness.ncols() != n {
            return Err(invalid_input("stiffness and mass sizes differ"));
        }
        if mass.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(invalid_input("masses must be positive"));
        }
        let conserves_constants = (0..n).all(|i| stiffness.row(i).iter().sum::<f64>() == 0.0);
        let inv_sqrt: Vec<f64> = mass.iter().map(|m| m.sqrt().recip()).collect();
        let s = DMatrix::from_fn(n, n, |i, j| stiffness[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
        let s = (&s + s.transpose()) * 0.5;
        let eig = SymmetricEigen::new(s);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
        let top = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);
        let mut eigenvalues = Vec::with_capacity(n);
        let mut phi = DMatrix::zeros(n, n);
        for (k, &j) in order.iter().enumerate() {
            let lam = eig.eigenvalues[j];
            if lam < -NEGATIVE_EIGEN_TOL * top {
                return Err(invalid_input(format!("operator has a negative eigenvalue {lam}")));
            }
            eigenvalues.push(lam.max(0.0));
            let u = eig.eigenvectors.column(j);
            // fix the sign so the first clearly nonzero entry is positive
            let big = u.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            let pivot = u.iter().copied().find(|v| v.abs() >= 1e-6 * big).unwrap_or(0.0);
            let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
            for i in 0..n {
                phi[(i, k)] = sign * u[i] * inv_sqrt[i];
            }
        }
        Ok(OperatorSpectrum { eigenvalues, phi, weights: mass.to_vec(), bc, h, dim, conserves_constants })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Column `k` is the weighted-orthonormal eigenvector `φ_k`.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn conserves_constants(&self) -> bool {
        self.conserves_constants
    }

    /// `c_k = Σ_y φ_k(y) f(y) w(y)`.
    pub fn coefficients(&self, f: &[f64]) -> DVector<f64> {
        let fw = DVector::from_iterator(f.len(), f.iter().zip(&self.weights).map(|(a, w)| a * w));
        self.phi.tr_mul(&fw)
    }

    /// `Σ_k m(λ_k) c_k φ_k`.
    pub fn apply_multiplier(&self, f: &[f64], m: impl Fn(f64) -> f64) -> Vec<f64> {
        let c = self.coefficients(f);
        let scaled = DVector::from_iterator(c.len(), c.iter().zip(&self.eigenvalues).map(|(c, &l)| c * m(l)));
        (&self.phi * scaled).iter().copied().collect()
    }

    /// Kernel matrix `Σ_k m(λ_k) φ_k(x) φ_k(y)`.
    pub fn multiplier_kernel(&self, m: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.len();
        let mut a = self.phi.clone();
        for k in 0..n {
            let s = m(self.eigenvalues[k]);
            a.column_mut(k).scale_mut(s);
        }
        let k = &a * self.phi.transpose();
        (&k + k.transpose()) * 0.5
    }

    /// `L f` computed from the spectrum.
    pub fn apply_operator(&self, f: &[f64]) -> Vec<f64> {
        self.apply_multiplier(f, |l| l)
    }

    /// Whether `f` is exactly constant (used for exact conservation).
    pub(crate) fn is_exact_constant(f: &[f64]) -> bool {
        f.windows(2).all(|w| w[0] == w[1])
    }

    pub fn to_json(&self) -> SpectrumJson {
        SpectrumJson { bc: self.bc, eigenvalues: self.eigenvalues.clone(), h: self.h, n: self.len() }
    }
}

/// Stiffness matrix of `−div grad` on a lattice, scaled by `h^{d−2}`, with the
/// potential term `V_i m_i` on the diagonal.
pub fn build_schrodinger(space: &MetricMeasureSpace, v: &Potential, bc: BoundaryCondition) -> Result<OperatorSpectrum> {
    let lattice = space
        .lattice()
        .ok_or_else(|| Error::Unsupported("Schrödinger operator needs a lattice space".into()))?;
    if v.len() != space.len() {
        return Err(invalid_input("potential length differs from the point count"));
    }
    let n = space.len();
    let (dim, npa, h) = (lattice.dim, lattice.n_per_axis, lattice.spacing);
    let coupling = h.powi(dim as i32 - 2);
    let mut k = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let idx = lattice.multi_index(i);
        for axis in 0..dim {
            for step in [-1i64, 1] {
                let j = idx[axis] as i64 + step;
                let j = match bc {
                    BoundaryCondition::Dirichlet if j < 0 || j >= npa as i64 => {
                        // ghost node held at zero
                        k[(i, i)] += coupling;
                        continue;
                    }
                    BoundaryCondition::Dirichlet => j as usize,
                    BoundaryCondition::Periodic => j.rem_euclid(npa as i64) as usize,
                };
                let mut other = idx.clone();
                other[axis] = j;
                let jj = lattice.linear_index(&other);
                k[(i, i)] += coupling;
                k[(i, jj)] -= coupling;
            }
        }
        k[(i, i)] += v.values()[i] * space.weights()[i];
    }
    OperatorSpectrum::from_stiffness(k, space.weights(), bc, h, dim)
}

/// Geometric sequence of scales `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    pub ts: Vec<f64>,
    pub ratio: f64,
}

impl ScaleGrid {
    /// `t_min, t_min·r, …` up to the first value `≥ t_max`.
    pub fn geometric(t_min: f64, t_max: f64, ratio: f64) -> Result<Self> {
        if !(t_min > 0.0 && t_max >= t_min && ratio > 1.0 && t_max.is_finite()) {
            return Err(invalid_param("need 0 < t_min <= t_max and ratio > 1"));
        }
        let steps = ((t_max / t_min).ln() / ratio.ln() - 1e-9).ceil().max(0.0) as usize;
        let ts = (0..=steps).map(|k| t_min * ratio.powi(k as i32)).collect();
        Ok(ScaleGrid { ts, ratio })
    }

    /// `h/4 … 4·diam` with ratio `2^{1/4}`.
    pub fn standard(h: f64, diameter: f64) -> Result<Self> {
        Self::geometric(h / 4.0, 4.0 * diameter, 2f64.powf(0.25))
    }

    /// Same range with the ratio exponent halved.
    pub fn refined(&self) -> Result<Self> {
        let (lo, hi) = (self.ts[0], *self.ts.last().unwrap());
        Self::geometric(lo, hi, self.ratio.sqrt())
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    pub fn is_geometric(&self) -> bool {
        self.ts.len() >= 2
            && self.ts.windows(2).all(|w| ((w[1] / w[0]) / self.ratio - 1.0).abs() < 1e-9)
    }
}
