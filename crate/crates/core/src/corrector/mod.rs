//! One-dimensional and penalized cell problems along a planar wave, the
//! approximate-corrector residual and the diagnostics that separate
//! irrational from lattice directions. Planar (`d = 2`) only.

mod diagnostics;
mod smoothing;
mod solve;

pub use diagnostics::{
    approximate_corrector_residual, delta_sweep, diophantine_integrability_diagnostic,
    rational_limit_modes, rational_limit_profile, synthesis_size, Integrability, RationalLimit,
    SweepRow, QDOT_GUARD,
};
pub use smoothing::{smooth_mobility, SmoothedMobility, CUTOFF_CAP};
pub use solve::{solve_1d_corrector, solve_penalized, CorrectorField, OneDCorrector};

#[cfg(test)]
mod tests;
