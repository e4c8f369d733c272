//! Curve flows in constant-curvature spaces, the vector mKdV hierarchy and
//! its operators, the generalized Hasimoto gauge, and the so(n+1) Lax pair.

pub mod cli;
pub mod curveflow;
pub mod diffpoly;
pub mod error;
pub mod hasimoto;
pub mod laxpair;
pub mod operators;
pub mod report;
pub mod rng;

pub use error::{Error, Result};
