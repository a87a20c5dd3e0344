//! Numerical evaluation of trace, capacity, Hardy, and membership conditions
//! for Sobolev functions on rectilinear planar domains.

pub mod analysis;
pub mod capacity;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod grid;
pub mod membership;
pub mod quadrature;

pub use error::{Error, Result};
