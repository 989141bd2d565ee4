//! High-order quadrature over implicitly defined curves, surfaces and
//! regions `{F = 0}`, `{F <= 0}` inside a box, in two and three dimensions.
//!
//! The box is split into a structured simplicial mesh whose vertices are
//! pushed off the level set; every simplex then meets `{F = 0}` in a shape
//! that a ray from one vertex parametrizes. Each piece is integrated with
//! tensor Gauss–Legendre rules pulled back through that parametrization,
//! so the only nonlinear solves are one-dimensional root finds.

pub mod assemble;
pub mod builtins;
pub mod curve;
pub mod error;
pub mod expr;
pub mod field;
pub mod geometry;
pub mod harness;
pub mod mesh;
pub mod region;
pub mod rootfind;
pub mod rules;
pub mod surface;

pub use error::{QuadError, Result};
