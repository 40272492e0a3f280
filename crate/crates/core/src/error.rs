use num_complex::Complex64;
use thiserror::Error;

use crate::scaled::Scaled;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// `|Im z|` is too large for an unscaled value; the scaled value is attached.
    #[error("spherical Bessel overflow at z = {z}")]
    BesselOverflow { z: Complex64, scaled: Scaled },

    #[error("direction is not a unit vector (|d| = {0})")]
    Normalization(f64),

    #[error("crossing at r = {0} cannot be classified as transversal or tangent")]
    TangencyUnresolved(f64),

    #[error("ray crosses the boundary more than {0} times")]
    TooManyCrossings(usize),

    #[error("adaptive step underflow at r = {r} (h = {h:e})")]
    StepUnderflow { r: f64, h: f64 },

    #[error("wavenumber {0} outside the admissible range")]
    WavenumberOutOfRange(Complex64),

    #[error("non-finite value encountered at k = {0}")]
    NonFinite(Complex64),

    #[error("k = {0} lies within the pole-proximity radius of the alpha diagnostic")]
    PoleProximity(Complex64),

    #[error("zero on or near the contour (min modulus {min_modulus:e})")]
    BoundaryZero { min_modulus: f64 },

    #[error("argument change {0} is not close to an integer multiple of 2*pi")]
    NonIntegerWinding(f64),

    #[error("subdivision exhausted without isolating zeros")]
    MaxDepth,

    #[error("spectra are not comparable at this truncation ({0} vs {1} entries)")]
    IncompatibleTruncation(usize, usize),

    #[error("determinant vanishes identically on the probe grid")]
    Degenerate,
}
