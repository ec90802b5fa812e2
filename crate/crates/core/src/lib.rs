//! Numerical laboratory for the Allen-Cahn equation with a periodic,
//! gradient-dependent mobility coefficient.
//!
//! The crate computes standing waves and effective mobilities, solves the
//! one-dimensional and penalized cell problems, evaluates hyperplane
//! averaging diagnostics that separate rational from irrational directions,
//! and compares an explicit phase-field simulator with the homogenized
//! anisotropic curvature flow.

pub mod averaging;
pub mod corrector;
pub mod error;
pub mod grid;
pub mod initdyn;
pub mod levelset;
pub mod mobility;
pub mod numerics;
pub mod phasefield;
pub mod potential;

pub use error::{Error, Result};
pub use mobility::{Direction, Mobility, MobilityTable};
pub use potential::{PotentialW, StandingWaveProfile};
