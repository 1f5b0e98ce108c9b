//! Distortion analysis of rank-one perturbations of `diag(1, a, b)`.
//!
//! The crate computes the linear distortion `H = σ_max/σ_min` of 3×3 maps,
//! finds the rank-one direction along which `H` is most concave at a diagonal
//! map, describes the window of parameters on which that concavity persists,
//! builds the corresponding laminate maps and tracks the behaviour along
//! one-parameter families of diagonal maps.

// Comparisons are written as `!(x > y)` on purpose so that NaN is rejected,
// and fixed-size matrix code reads best with explicit indices.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod config;
pub mod error;
pub mod lamination;
pub mod linalg3;
pub mod oracle;
pub mod rank_one;
pub mod sweep;
pub mod verify;
pub mod window;

pub use analysis::{analyze, AnalysisBundle};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use lamination::{LaminateSequence, SawtoothProfile};
pub use linalg3::{DiagonalMap, DistortionReport, Matrix3, SortedEigenTriple, Vector3};
pub use rank_one::{OptimalDirection, QuadraticFormData, SphericalRankOne, TaylorCoefficients};
pub use sweep::{Family, FamilySpec, SweepRecord};
pub use window::{CharCubic, ConcavityWindow, EigenBranches};
