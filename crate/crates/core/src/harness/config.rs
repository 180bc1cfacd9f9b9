//! Scenario configuration: a single JSON document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CheckId;
use crate::error::{invalid_input, invalid_param, Result};
use crate::maximal_g::KernelExponents;
use crate::num::Exponent;
use crate::potential::Potential;
use crate::semigroup::{BoundParams, BoundaryCondition};
use crate::space::{build_grid_space, builtin_space, MetricMeasureSpace, SpaceJson, WeightSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    /// Uniform lattice on `[-extent, extent]^dim` with `n` points per axis.
    Grid {
        dim: usize,
        n: usize,
        #[serde(default = "one")]
        extent: f64,
        #[serde(default = "uniform")]
        weight: WeightSpec,
    },
    /// `two_point`, `three_point_line`, `random8`, `random12` or `random16`.
    Builtin { name: String },
    Inline { space: SpaceJson },
}

fn one() -> f64 {
    1.0
}

fn uniform() -> WeightSpec {
    WeightSpec::Uniform
}

fn sixteen() -> f64 {
    16.0
}

/// Potentials given on the first coordinate of lattice points, or as raw values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Constant { value: f64 },
    /// `low` for `x < at`, `high` for `x ≥ at`.
    Step {
        low: f64,
        high: f64,
        #[serde(default)]
        at: f64,
    },
    /// `min(scale·|x|², cap)`.
    ClampedSquare {
        #[serde(default = "sixteen")]
        scale: f64,
        #[serde(default = "sixteen")]
        cap: f64,
    },
    /// `scale·|x|^exponent`.
    Power {
        exponent: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Values { values: Vec<f64> },
}

impl PotentialSpec {
    pub fn build(&self, space: &MetricMeasureSpace) -> Result<Potential> {
        let norm = |x: &[f64]| x.iter().map(|c| c * c).sum::<f64>().sqrt();
        match self {
            PotentialSpec::Constant { value } => Potential::constant(space.len(), *value),
            PotentialSpec::Values { values } => {
                if values.len() != space.len() {
                    return Err(invalid_input("potential values do not match the space size"));
                }
                Potential::new(values.clone())
            }
            PotentialSpec::Step { low, high, at } => Potential::from_fn(space, |x| if x[0] >= *at { *high } else { *low }),
            PotentialSpec::ClampedSquare { scale, cap } => {
                Potential::from_fn(space, |x| (scale * norm(x).powi(2)).min(*cap))
            }
            PotentialSpec::Power { exponent, scale } => Potential::from_fn(space, |x| scale * norm(x).powf(*exponent)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhoSpec {
    #[default]
    FromPotential,
    Explicit { values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormParams {
    pub alpha: f64,
    pub p: f64,
}

fn default_random() -> usize {
    200
}

fn default_corpus() -> usize {
    50
}

fn default_q() -> Exponent {
    Exponent::Infinity
}

fn default_slice() -> f64 {
    1.0
}

fn default_gaussian_cutoff() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub space: SpaceSpec,
    #[serde(default)]
    pub potential: Option<PotentialSpec>,
    #[serde(default)]
    pub rho: RhoSpec,
    #[serde(default)]
    pub bc: BoundaryCondition,
    pub params: Vec<NormParams>,
    pub checks: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    /// Random functions for the exact-constant checks.
    #[serde(default = "default_random")]
    pub random_functions: usize,
    /// Corpus size for the boundedness reports.
    #[serde(default = "default_corpus")]
    pub corpus_size: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub exponents: KernelExponents,
    #[serde(default)]
    pub bounds: BoundParams,
    /// Reverse Hölder exponent.
    #[serde(default = "default_q")]
    pub q: Exponent,
    /// Scale of the exported kernel slice.
    #[serde(default = "default_slice")]
    pub slice_t: f64,
    /// The Gaussian bound is fitted only for `t ≥ gaussian_t_min_spacings·h`;
    /// below a few grid spacings lattice heat kernels have Poisson-type tails.
    #[serde(default = "default_gaussian_cutoff")]
    pub gaussian_t_min_spacings: f64,
}

impl Scenario {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(s)?;
        sc.check_ids()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Parsed check ids; fails on unknown ids or an empty list.
    pub fn check_ids(&self) -> Result<Vec<CheckId>> {
        if self.checks.is_empty() {
            return Err(invalid_param("checks list is empty"));
        }
        if self.params.is_empty() {
            return Err(invalid_param("params list is empty"));
        }
        self.checks
            .iter()
            .map(|c| CheckId::parse(c).ok_or_else(|| invalid_param(format!("unknown check id {c:?}"))))
            .collect()
    }

    pub fn build_space(&self) -> Result<MetricMeasureSpace> {
        match &self.space {
            SpaceSpec::Grid { dim, n, extent, weight } => build_grid_space(*dim, *extent, *n, *weight),
            SpaceSpec::Builtin { name } => builtin_space(name),
            SpaceSpec::Inline { space } => MetricMeasureSpace::from_json(space),
        }
    }
}
