//! Simulation and statistical verification of finite Gibbs point processes
//! on boxes of R^d, d <= 3.
//!
//! The crate is organised bottom-up:
//!
//! - [`measure`]: points, windows, finite counting measures and their
//!   factorial measures;
//! - [`models`]: Papangelou intensities, `kappa_m` and the Hamiltonian;
//! - [`geometry`]: particles, grain laws, clusters and Boolean models;
//! - [`partition`]: partition functions and void probabilities;
//! - [`sampler`]: Poisson, rejection and birth-death samplers;
//! - [`estimators`]: Janossy and factorial moment estimates and the series
//!   converting between them;
//! - [`diagnostics`]: GNZ, DLR, local-convergence and disagreement checks.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod measure;
pub mod models;
pub mod partition;
pub mod rng;
pub mod sampler;
pub mod stats;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{GibbsError, Result};
pub use measure::{CountingMeasure, Point, ReferenceMeasure, ScalarField, Window};
pub use models::{hamiltonian, BoundaryCondition, PairPotential, PapangelouModel};
pub use stats::Estimate;
