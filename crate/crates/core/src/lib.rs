//! Exact constraint-matrix polytopes, conditioning problems and invariant
//! unions of polytopes for expanding piecewise affine maps.

pub mod catalog;
pub mod conditioning;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod maps;
pub mod orbit;
pub mod partition;
pub mod rational;
pub mod symmetry;

pub use error::{Error, Result};
pub use geometry::{CoefficientMatrix, ConstraintMatrix};
pub use rational::{Ext, Rational};
