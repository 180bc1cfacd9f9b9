//! Heat, `Q_t` and Poisson kernel families.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{OperatorSpectrum, ScaleGrid, SubordinationRule};
use crate::error::{invalid_param, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `exp(−t²L)`
    Heat,
    /// `−t²L·exp(−t²L)`
    Qt,
    /// `exp(−t√L)`
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum PoissonMethod {
    /// Closed form `e^{−t√λ}` per mode.
    Spectral,
    /// Subordination integral over heat kernels.
    Quadrature { rule: SubordinationRule },
}

impl Default for PoissonMethod {
    fn default() -> Self {
        PoissonMethod::Spectral
    }
}

#[derive(Debug, Clone)]
pub struct KernelFamily<'a> {
    pub spectrum: &'a OperatorSpectrum,
    pub kind: KernelKind,
    pub grid: ScaleGrid,
    pub poisson: PoissonMethod,
    nodes: Vec<(f64, f64)>,
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid_param("scale t must be positive"));
    }
    Ok(())
}

impl<'a> KernelFamily<'a> {
    pub fn new(spectrum: &'a OperatorSpectrum, kind: KernelKind, grid: ScaleGrid) -> Self {
        Self::with_poisson(spectrum, kind, grid, PoissonMethod::Spectral)
    }

    pub fn with_poisson(spectrum: &'a OperatorSpectrum, kind: KernelKind, grid: ScaleGrid, poisson: PoissonMethod) -> Self {
        let nodes = match poisson {
            PoissonMethod::Quadrature { rule } => rule.nodes(),
            PoissonMethod::Spectral => Vec::new(),
        };
        KernelFamily { spectrum, kind, grid, poisson, nodes }
    }

    /// Spectral multiplier of the operator at scale `t`.
    pub fn multiplier(&self, t: f64, lambda: f64) -> f64 {
        let a = t * t * lambda;
        match self.kind {
            KernelKind::Heat => (-a).exp(),
            KernelKind::Qt => -a * (-a).exp(),
            KernelKind::Poisson => match self.poisson {
                PoissonMethod::Spectral => (-t * lambda.sqrt()).exp(),
                PoissonMethod::Quadrature { .. } => {
                    self.nodes.iter().map(|&(s, w)| w * (-a / (4.0 * s)).exp()).sum()
                }
            },
        }
    }

    /// Full kernel matrix `K_t(x, y)`.
    pub fn kernel_matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        check_t(t)?;
        Ok(self.spectrum.multiplier_kernel(|l| self.multiplier(t, l)))
    }

    /// `(T_t f)(x) = Σ_y K_t(x,y) f(y) w(y)`.
    pub fn apply(&self, t: f64, f: &[f64]) -> Result<Vec<f64>> {
        check_t(t)?;
        if self.spectrum.conserves_constants() && OperatorSpectrum::is_exact_constant(f) {
            return Ok(match self.kind {
                KernelKind::Qt => vec![0.0; f.len()],
                KernelKind::Heat | KernelKind::Poisson => f.to_vec(),
            });
        }
        Ok(self.spectrum.apply_multiplier(f, |l| self.multiplier(t, l)))
    }

    /// `(T_t 1)(x)`.
    pub fn apply_to_one(&self, t: f64) -> Result<Vec<f64>> {
        self.apply(t, &vec![1.0; self.spectrum.len()])
    }
}

pub fn heat_kernel(spec: &OperatorSpectrum, t: f64) -> Result<DMatrix<f64>> {
    single(spec, KernelKind::Heat, PoissonMethod::Spectral).kernel_matrix(t)
}

pub fn qt_kernel(spec: &OperatorSpectrum, t: f64) -> Result<DMatrix<f64>> {
    single(spec, KernelKind::Qt, PoissonMethod::Spectral).kernel_matrix(t)
}

pub fn poisson_kernel(spec: &OperatorSpectrum, t: f64, method: PoissonMethod) -> Result<DMatrix<f64>> {
    single(spec, KernelKind::Poisson, method).kernel_matrix(t)
}

fn single(spec: &OperatorSpectrum, kind: KernelKind, method: PoissonMethod) -> KernelFamily<'_> {
    KernelFamily::with_poisson(spec, kind, ScaleGrid { ts: Vec::new(), ratio: 2.0 }, method)
}

/// CSV with header `y_0,…,y_{N−1}` and one row per `x`.
pub fn kernel_csv(k: &DMatrix<f64>) -> String {
    let mut out = String::new();
    let header: Vec<String> = (0..k.ncols()).map(|j| format!("y_{j}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..k.nrows() {
        for j in 0..k.ncols() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{}", k[(i, j)]).unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Potential;
    use crate::semigroup::{build_schrodinger, BoundaryCondition};
    use crate::space::{build_grid_space, WeightSpec};

    fn point(v: f64) -> OperatorSpectrum {
        OperatorSpectrum::from_stiffness(DMatrix::from_element(1, 1, v), &[1.0], BoundaryCondition::Dirichlet, 1.0, 1)
            .unwrap()
    }

    fn line_spec(n: usize, v: f64, bc: BoundaryCondition) -> OperatorSpectrum {
        let s = build_grid_space(1, 1.0, n, WeightSpec::Uniform).unwrap();
        build_schrodinger(&s, &Potential::constant(n, v).unwrap(), bc).unwrap()
    }

    #[test]
    fn one_point_values() {
        let sp = point(1.0);
        let e = (-1f64).exp();
        assert!((heat_kernel(&sp, 1.0).unwrap()[(0, 0)] - e).abs() < 1e-15);
        assert!((qt_kernel(&sp, 1.0).unwrap()[(0, 0)] + e).abs() < 1e-15);
        assert!((poisson_kernel(&sp, 1.0, PoissonMethod::Spectral).unwrap()[(0, 0)] - e).abs() < 1e-15);
        let q = poisson_kernel(&sp, 1.0, PoissonMethod::Quadrature { rule: SubordinationRule::default() }).unwrap();
        assert!((q[(0, 0)] - e).abs() < 1e-6);
        assert!(heat_kernel(&sp, 0.0).is_err());
        assert!(heat_kernel(&sp, -1.0).is_err());
    }

    #[test]
    fn small_t_is_identity() {
        let sp = line_spec(33, 2.0, BoundaryCondition::Dirichlet);
        let fam = KernelFamily::new(&sp, KernelKind::Heat, ScaleGrid::standard(sp.spacing(), 2.0).unwrap());
        let f: Vec<f64> = (0..33).map(|i| ((i as f64) * 0.7).sin()).collect();
        let g = fam.apply(1e-4 * sp.spacing(), &f).unwrap();
        let d = f.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(d <= 1e-6, "{d}");
    }

    #[test]
    fn periodic_heat_preserves_one() {
        let sp = line_spec(16, 0.0, BoundaryCondition::Periodic);
        let fam = KernelFamily::new(&sp, KernelKind::Heat, ScaleGrid::standard(sp.spacing(), 2.0).unwrap());
        for &t in &fam.grid.ts {
            assert!(fam.apply_to_one(t).unwrap().iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn qt_is_derivative_of_heat() {
        let sp = line_spec(24, 1.0, BoundaryCondition::Dirichlet);
        for t in [0.1f64, 0.3, 1.0] {
            let s = t * t;
            let ds = s * 1e-4;
            let plus = heat_kernel(&sp, (s + ds).sqrt()).unwrap();
            let minus = heat_kernel(&sp, (s - ds).sqrt()).unwrap();
            let fd = (plus - minus) * (s / (2.0 * ds));
            let q = qt_kernel(&sp, t).unwrap();
            let rel = (&fd - &q).abs().max() / q.abs().max();
            assert!(rel < 1e-5, "t={t}: {rel}");
        }
    }

    #[test]
    fn poisson_methods_agree_and_compose() {
        let sp = line_spec(32, 0.5, BoundaryCondition::Dirichlet);
        let quad = PoissonMethod::Quadrature { rule: SubordinationRule::default() };
        for &t in &ScaleGrid::standard(sp.spacing(), 2.0).unwrap().ts {
            let a = poisson_kernel(&sp, t, PoissonMethod::Spectral).unwrap();
            let b = poisson_kernel(&sp, t, quad).unwrap();
            assert!((a - b).abs().max() < 1e-6);
        }
        let fam = KernelFamily::new(&sp, KernelKind::Poisson, ScaleGrid::standard(sp.spacing(), 2.0).unwrap());
        let f: Vec<f64> = (0..32).map(|i| (i as f64 * 0.3).cos()).collect();
        let two = fam.apply(0.2, &fam.apply(0.3, &f).unwrap()).unwrap();
        let one = fam.apply(0.5, &f).unwrap();
        let d = two.iter().zip(&one).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(d < 1e-8);
    }

    #[test]
    fn heat_is_symmetric_positive_submarkov() {
        let s = build_grid_space(1, 1.0, 20, WeightSpec::Power { sigma: 0.5 }).unwrap();
        let v = Potential::from_fn(&s, |x| x[0].abs()).unwrap();
        let sp = build_schrodinger(&s, &v, BoundaryCondition::Dirichlet).unwrap();
        for t in [0.05, 0.5, 2.0] {
            let k = heat_kernel(&sp, t).unwrap();
            assert!((&k - k.transpose()).abs().max() < 1e-10);
            assert!(k.iter().all(|&v| v >= -1e-12));
            for i in 0..20 {
                let row: f64 = (0..20).map(|j| k[(i, j)] * s.weights()[j]).sum();
                assert!((0.0..=1.0 + 1e-10).contains(&row));
            }
        }
    }

    #[test]
    fn csv_shape() {
        let sp = line_spec(4, 1.0, BoundaryCondition::Dirichlet);
        let csv = kernel_csv(&heat_kernel(&sp, 0.5).unwrap());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "y_0,y_1,y_2,y_3");
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 4));
    }
}
