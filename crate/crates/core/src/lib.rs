//! Finite-dimensional laboratory for positive contractive projections on
//! Schatten spaces.
//!
//! The crate builds the catalog of positively 1-complemented subspaces of
//! `S^p` (symmetric and antisymmetric twisted matrices, rectangular blocks,
//! Hilbertian Fock slices, and the two spinorial families), the explicit
//! projections onto them, and numerical checks of their defining properties.

pub mod error;
pub mod fock;
pub mod linalg;
pub mod projections;
pub mod random;
pub mod schatten;
pub mod spaces;
pub mod spin;
pub mod verify;

pub use error::{LabError, Result};
pub use linalg::{direct_sum, kron, CMatrix, Tolerances, C64};
pub use schatten::{BlockOperator, BlockShape, PIndex};
