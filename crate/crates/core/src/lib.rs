//! Estimation of linear models whose coefficients split into a sparse block
//! `Z β` and a non-sparse (dense) block `W γ`:
//!
//! ```text
//! y = Z β + W γ + ε
//! ```
//!
//! The crate is `no_std` (it needs `alloc`). It contains the dense linear
//! algebra, the lasso coordinate-descent solver, precision-matrix estimators
//! (including the graphical lasso), the alternating sparse/non-sparse
//! iteration itself, the simulation designs used to benchmark it, k-fold
//! cross-validation and the evaluation metrics. IO, parallel replication and
//! the command line live in the `nsi` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;
pub mod linalg;
pub mod matrix;
pub mod metrics;
pub mod nsi;
pub mod precision;
pub mod rng;
pub mod simulate;
pub mod sparse;
pub mod tuning;
mod types;

pub use error::{Error, Result};
pub use matrix::{Matrix, SymmetricMatrix};
pub use types::{CoefficientEstimate, Dataset, MetricsReport, TrueModel};
