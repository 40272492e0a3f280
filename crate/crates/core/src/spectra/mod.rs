//! Complex zeros of entire functions by the argument principle: winding
//! numbers, quadtree localization, sector counting, density and indicator
//! estimates.

mod moments;
mod quadtree;
mod sector;
mod winding;

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::determinant::DeterminantFunction;
use crate::error::{Error, Result};
use crate::scaled::Scaled;
use crate::specialfn::AngularOrder;
use crate::tunneling::Verdict;

pub use quadtree::find_zeros;
pub use sector::{count_zeros_sector, count_zeros_sector_multi, density_estimate, indicator_estimate, DensityReport};
pub use winding::winding_count;

type C = Complex64;

/// Function whose zeros are sought. Values are returned as mantissa plus a
/// real log-scale; only the mantissa's phase enters the winding number.
pub trait EntireFunction: Sync {
    fn eval(&self, k: C) -> Result<Scaled>;
}

impl<F> EntireFunction for F
where
    F: Fn(C) -> Result<Scaled> + Sync,
{
    fn eval(&self, k: C) -> Result<Scaled> {
        self(k)
    }
}

impl EntireFunction for DeterminantFunction {
    fn eval(&self, k: C) -> Result<Scaled> {
        DeterminantFunction::eval(self, k)
    }
}

/// Axis-aligned rectangle in the complex `k` plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct SearchRectangle {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl TryFrom<[f64; 4]> for SearchRectangle {
    type Error = Error;
    fn try_from(v: [f64; 4]) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

impl From<SearchRectangle> for [f64; 4] {
    fn from(r: SearchRectangle) -> Self {
        [r.re_min, r.re_max, r.im_min, r.im_max]
    }
}

impl SearchRectangle {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let finite = [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite());
        if !finite || re_min >= re_max || im_min >= im_max {
            return Err(Error::InvalidArgument(format!(
                "rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}] is empty or not finite"
            )));
        }
        Ok(Self { re_min, re_max, im_min, im_max })
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn max_side(&self) -> f64 {
        self.width().max(self.height())
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> C {
        C::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn contains(&self, k: C) -> bool {
        k.re > self.re_min && k.re < self.re_max && k.im > self.im_min && k.im < self.im_max
    }

    pub fn corners(&self) -> [C; 4] {
        [
            C::new(self.re_min, self.im_min),
            C::new(self.re_max, self.im_min),
            C::new(self.re_max, self.im_max),
            C::new(self.re_min, self.im_max),
        ]
    }

    /// Grows each side outward by the given amounts (left, right, bottom, top).
    pub fn expanded(&self, d: [f64; 4]) -> Self {
        Self {
            re_min: self.re_min - d[0],
            re_max: self.re_max + d[1],
            im_min: self.im_min - d[2],
            im_max: self.im_max + d[3],
        }
    }

    /// Distance from the origin to the nearest point of the rectangle.
    pub fn min_modulus(&self) -> f64 {
        let x = if self.re_min > 0.0 {
            self.re_min
        } else if self.re_max < 0.0 {
            -self.re_max
        } else {
            0.0
        };
        let y = if self.im_min > 0.0 {
            self.im_min
        } else if self.im_max < 0.0 {
            -self.im_max
        } else {
            0.0
        };
        x.hypot(y)
    }

    pub fn max_modulus(&self) -> f64 {
        self.corners().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Root-finder settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RootOptions {
    /// Newton stopping tolerance on `|dk|`.
    pub tol: f64,
    /// Largest accepted `|f(k)|` (normalized) at a reported zero.
    pub accept_tol: f64,
    /// Boxes smaller than this are reported as unresolved.
    pub min_side: f64,
    /// Side below which a box with winding >= 2 is tested as one multiple zero.
    pub cluster_box: f64,
    /// Largest winding reported as a single multiple zero.
    pub max_multiplicity: u32,
    /// Boundary modulus below which a zero is declared on the contour.
    pub min_modulus: f64,
    /// Initial contour samples per unit length.
    pub samples_per_unit: f64,
    /// Outward jitter retries when the outer contour hits a zero.
    pub max_jitter: u32,
    /// Seed for the split-ratio perturbations.
    pub seed: u64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            accept_tol: 1e-9,
            min_side: 1e-8,
            cluster_box: 1.0,
            max_multiplicity: 4,
            min_modulus: 1e-13,
            samples_per_unit: 4.0,
            max_jitter: 5,
            seed: 0,
        }
    }
}

/// A located zero. Annotation fields are filled by the multi-interval
/// pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueRecord {
    pub k: C,
    pub l: AngularOrder,
    pub multiplicity: u32,
    /// `|f(k)|`, normalized.
    pub residual: f64,
    /// Normalized `|D_l(k; r_j)|` at every interface of the chain.
    pub interface_residuals: Vec<f64>,
    pub verdict: Option<Verdict>,
    /// Indices of the intervals whose determinant produced this record.
    pub sources: Vec<usize>,
    /// True when intervals other than the first source produced the same k.
    pub collision: bool,
}

impl EigenvalueRecord {
    pub fn new(k: C, multiplicity: u32, residual: f64) -> Self {
        Self {
            k,
            l: AngularOrder::new(0).expect("0 is a valid order"),
            multiplicity,
            residual,
            interface_residuals: Vec::new(),
            verdict: None,
            sources: Vec::new(),
            collision: false,
        }
    }

    pub fn interface_residual_max(&self) -> f64 {
        self.interface_residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Box whose zeros could not be isolated or resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnresolvedBox {
    pub rect: SearchRectangle,
    pub winding: i64,
}

/// Output of [`find_zeros`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ZeroReport {
    pub records: Vec<EigenvalueRecord>,
    pub unresolved: Vec<UnresolvedBox>,
    /// Winding of the (possibly jittered) outer contour.
    pub total_winding: i64,
}

impl ZeroReport {
    /// Sum of multiplicities of the located zeros.
    pub fn located(&self) -> i64 {
        self.records.iter().map(|r| r.multiplicity as i64).sum()
    }
}

pub(crate) fn lex_order(a: C, b: C) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// True when `max |f|` over 32 probe points in `rect` is below `threshold`.
pub fn is_degenerate<F: EntireFunction + ?Sized>(f: &F, rect: &SearchRectangle, threshold: f64) -> Result<bool> {
    let mut max = 0.0f64;
    for i in 0..8 {
        for j in 0..4 {
            let k = C::new(
                rect.re_min + rect.width() * (i as f64 + 0.5) / 8.0,
                rect.im_min + rect.height() * (j as f64 + 0.37) / 4.0,
            );
            max = max.max(f.eval(k)?.value.norm());
        }
    }
    Ok(max < threshold)
}

/// Degeneracy threshold on the normalized determinant.
pub const DEGENERATE_THRESHOLD: f64 = 1e-10;

#[cfg(test)]
pub(crate) mod test_fns {
    use super::*;

    /// `sin(w k)` with overflow-free scaling.
    pub fn sin_scaled(w: f64) -> impl Fn(C) -> Result<Scaled> + Sync {
        move |k: C| {
            let z = w * k;
            Ok(Scaled::new(crate::specialfn::sin_scaled(z), z.im.abs()))
        }
    }
}
