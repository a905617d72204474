//! Stress concentration between two closely spaced inclusions.
//!
//! The crate covers the whole pipeline for the Lamé system and its scalar
//! (perfect conductivity) analogue: elasticity tensors and rigid motions,
//! gap geometry, explicit auxiliary fields, asymptotic rate functions and
//! constants, gap integrals, a P1 finite element solver on graded meshes,
//! and the free-constant factor systems that expose the blow-up factors.
//!
//! Rigid-motion labels `alpha` are 1-based throughout (`1..=d(d+1)/2`),
//! matching the usual mathematical numbering. Array indices are 0-based.

pub mod aux_fields;
pub mod asympt;
pub mod elastic_core;
mod error;
pub mod experiments;
pub mod factors;
pub mod fem;
pub mod gap_integrals;
pub mod geometry;
pub mod jet;
pub mod quadrature;

pub use error::{Error, Result};
