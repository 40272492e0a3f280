//! Interior transmission eigenvalues of penetrable simple domains.
//!
//! Along each ray from a reference point the boundary splits the ray into
//! intervals; on every inside interval the problem reduces to a radial ODE
//! whose Wronskian-type determinant is an entire function of the wavenumber.
//! Its zeros are located with argument-principle contour methods.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod determinant;
pub mod error;
pub mod geometry;
pub mod inverse;
pub mod medium;
pub mod quadrature;
pub mod radial_ode;
pub mod scaled;
pub mod specialfn;
pub mod spectra;
mod spline;
pub mod tunneling;

pub use determinant::{DeterminantFunction, DeterminantValue};
pub use error::{Error, Result};
pub use geometry::{IntersectionSet, IntervalSpec, SimpleDomain};
pub use inverse::{FitResult, ProfileFamily, SpectrumSample};
pub use medium::{MediumField, RadialProfile, Vec3};
pub use num_complex::Complex64;
pub use radial_ode::{CoefficientPair, OdeOptions, RadialSolution, Start};
pub use scaled::Scaled;
pub use specialfn::{AngularOrder, SphericalIndex};
pub use spectra::{EigenvalueRecord, RootOptions, SearchRectangle};
pub use tunneling::{Anchoring, TunnelingChain, Verdict};
