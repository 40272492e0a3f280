//! Shared fixtures for the benchmarks.

use itep_core::determinant::determinant_function;
use itep_core::{AngularOrder, DeterminantFunction, RadialProfile, Start};

/// Determinant of the unit ball with constant index `n0`.
pub fn ball_determinant(l: u32, n0: f64) -> DeterminantFunction {
    let p = RadialProfile::constant(n0, 1.0);
    determinant_function(AngularOrder::new(l).expect("order"), &p, 1.0, Start::Origin).expect("valid radius")
}
