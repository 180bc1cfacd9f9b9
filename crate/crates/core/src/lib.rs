//! Localized Morrey–Campanato machinery on finite metric measure spaces.
//!
//! Every supremum over balls is an exact finite maximum over the canonical
//! ball list of a [`space::MetricMeasureSpace`]. Semigroup kernels come from a
//! full weighted-symmetric eigendecomposition of a discrete Schrödinger
//! operator `L = -Δ_h + V`, with the scale convention `T_t = exp(-t² L)`.
//!
//! Module map:
//!
//! - [`space`]: spaces, canonical balls, doubling profiles.
//! - [`potential`]: reverse Hölder constants, critical radius, admissibility.
//! - [`fnspaces`]: Campanato / BLO / Lipschitz / Morrey norms and ball classes.
//! - [`atoms`]: atoms, re-splitting of local atoms, pairing bounds.
//! - [`semigroup`]: operator spectrum, heat / `Q_t` / Poisson kernels, kernel-bound fits.
//! - [`maximal_g`]: maximal operators, the g-function, boundedness reports.
//! - [`harness`]: scenario configs, named checks, report export.

pub mod atoms;
pub mod error;
pub mod fnspaces;
pub mod harness;
pub mod maximal_g;
pub mod num;
pub mod potential;
pub mod semigroup;
pub mod space;

pub use error::{Error, Result};
pub use fnspaces::{BallClass, GridFunction, NormBreakdown};
pub use potential::{AdmissibleFunction, Potential};
pub use semigroup::{BoundaryCondition, OperatorSpectrum, ScaleGrid};
pub use space::{Ball, BallIndex, MetricMeasureSpace, SpaceProfile, WeightSpec};
