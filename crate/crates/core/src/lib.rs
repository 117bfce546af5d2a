//! Radially symmetric random walks on constant- and variable-curvature
//! spaces, with Lamperti-type recurrence criteria.
//!
//! Points of hyperbolic space of curvature `−k²` live on the hyperboloid
//! `{x : B(x, x) = −1/k², x₀ > 0}` in `R^{d+1}`, where
//! `B(x, y) = −x₀y₀ + Σ xᵢyᵢ`. Euclidean space is the `k → 0` reference.

pub mod error;
pub mod geometry;
pub mod increments;
pub mod lamperti;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
