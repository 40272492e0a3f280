//! Spherical Bessel functions of complex argument, associated Legendre
//! functions and spherical harmonics.
//!
//! The Bessel routines work internally with values scaled by
//! `exp(-|Im z|)`, which is the exact growth rate of `j_l` off the real
//! axis. The unscaled entry points refuse arguments whose exponent would
//! overflow and hand the scaled value back inside the error instead.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scaled::Scaled;

/// Default upper bound on the angular order.
pub const L_MAX_DEFAULT: u32 = 32;

/// Largest `|Im z|` for which the unscaled Bessel value is returned.
pub const IM_OVERFLOW_BOUND: f64 = 700.0;

const SERIES_CUTOFF_LOW_ORDER: f64 = 0.5;
// without it the recurrence defect reaches 4e-10 near |z| = 13..16
const MILLER_MARGIN: u32 = 10;

/// Angular order `l` of a spherical mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct AngularOrder(u32);

impl AngularOrder {
    pub fn new(l: u32) -> Result<Self> {
        Self::with_max(l, L_MAX_DEFAULT)
    }

    pub fn with_max(l: u32, l_max: u32) -> Result<Self> {
        if l > l_max {
            return Err(Error::InvalidArgument(format!("angular order {l} exceeds l_max = {l_max}")));
        }
        Ok(Self(l))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// `l (l + 1)`, the centrifugal coefficient.
    pub fn centrifugal(self) -> f64 {
        let l = self.0 as f64;
        l * (l + 1.0)
    }
}

impl TryFrom<u32> for AngularOrder {
    type Error = Error;
    fn try_from(l: u32) -> Result<Self> {
        Self::new(l)
    }
}

impl From<AngularOrder> for u32 {
    fn from(l: AngularOrder) -> u32 {
        l.0
    }
}

impl std::fmt::Display for AngularOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Index pair `(l, m)` of a spherical harmonic, `-l <= m <= l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SphericalIndex {
    l: u32,
    m: i32,
}

impl SphericalIndex {
    pub fn new(l: u32, m: i32) -> Result<Self> {
        if m.unsigned_abs() > l {
            return Err(Error::Domain(format!("|m| = {} exceeds l = {l}", m.abs())));
        }
        Ok(Self { l, m })
    }

    pub fn l(self) -> u32 {
        self.l
    }

    pub fn m(self) -> i32 {
        self.m
    }
}

/// `sin z * exp(-|Im z|)` without intermediate overflow.
pub fn sin_scaled(z: Complex64) -> Complex64 {
    let (c, s) = hyperbolic_scaled(z.im);
    Complex64::new(z.re.sin() * c, z.re.cos() * s)
}

/// `cos z * exp(-|Im z|)` without intermediate overflow.
pub fn cos_scaled(z: Complex64) -> Complex64 {
    let (c, s) = hyperbolic_scaled(z.im);
    Complex64::new(z.re.cos() * c, -z.re.sin() * s)
}

// (cosh b, sinh b) * exp(-|b|)
fn hyperbolic_scaled(b: f64) -> (f64, f64) {
    let e = (-2.0 * b.abs()).exp();
    (0.5 * (1.0 + e), b.signum() * 0.5 * (1.0 - e))
}

/// Scaled pair `(j_{l-1}(z), j_l(z)) * exp(-|Im z|)` for `l >= 1`.
fn adjacent_scaled(l: u32, z: Complex64) -> (Complex64, Complex64) {
    debug_assert!(l >= 1);
    let r = z.norm();
    if r == 0.0 {
        let prev = if l == 1 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
        return (prev, Complex64::new(0.0, 0.0));
    }
    let small_cutoff = if l <= 1 { SERIES_CUTOFF_LOW_ORDER } else { l as f64 };
    if r < small_cutoff {
        let damp = (-z.im.abs()).exp();
        return (series(l - 1, z) * damp, series(l, z) * damp);
    }
    if l == 1 {
        let (j0, j1) = low_order_scaled(z);
        return (j0, j1);
    }
    miller(l, z)
}

// j_0 and j_1 from the closed forms, scaled.
fn low_order_scaled(z: Complex64) -> (Complex64, Complex64) {
    let s = sin_scaled(z);
    let c = cos_scaled(z);
    let j0 = s / z;
    let j1 = s / (z * z) - c / z;
    (j0, j1)
}

/// Power series `z^l/(2l+1)!! * sum_m (-z^2/2)^m / (m! (2l+3)...(2l+2m+1))`.
fn series(l: u32, z: Complex64) -> Complex64 {
    let mut lead = Complex64::new(1.0, 0.0);
    for k in 1..=l {
        lead *= z / (2 * k + 1) as f64;
    }
    let w = -0.5 * z * z;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for m in 1..400u32 {
        term *= w / (m as f64 * (2 * l + 2 * m + 1) as f64);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    lead * sum
}

/// Downward recurrence from `L = l + max(20, ceil(1.5|z|)) + 10`, normalized by
/// the closed forms of `j_0` and `j_1`.
fn miller(l: u32, z: Complex64) -> (Complex64, Complex64) {
    let start = l + 20u32.max((1.5 * z.norm()).ceil() as u32) + MILLER_MARGIN;
    let zero = Complex64::new(0.0, 0.0);
    let mut upper = zero; // f_{n+1}
    let mut cur = Complex64::new(1e-30, 0.0); // f_n
    let mut keep_l = zero;
    let mut keep_lm1 = zero;
    let inv_z = z.inv();
    let mut n = start;
    while n > 0 {
        let lower = (2 * n + 1) as f64 * inv_z * cur - upper;
        upper = cur;
        cur = lower;
        n -= 1;
        // cur = f_n, upper = f_{n+1}
        if n == l {
            keep_l = cur;
        }
        if n + 1 == l {
            keep_lm1 = cur;
        }
        if cur.norm() > 1e250 {
            let s = 1e-250;
            cur *= s;
            upper *= s;
            keep_l *= s;
            keep_lm1 *= s;
        }
    }
    let f0 = cur;
    let f1 = upper;
    let (j0, j1) = low_order_scaled(z);
    let c = (f0.conj() * j0 + f1.conj() * j1) / (f0.norm_sqr() + f1.norm_sqr());
    (keep_lm1 * c, keep_l * c)
}

/// `j_l(z)` scaled by `exp(-|Im z|)`; the scale is carried in `log_scale`.
pub fn spherical_bessel_j_scaled(l: u32, z: Complex64) -> Scaled {
    let value = if l == 0 {
        if z.norm() < SERIES_CUTOFF_LOW_ORDER {
            series(0, z) * (-z.im.abs()).exp()
        } else {
            low_order_scaled(z).0
        }
    } else {
        adjacent_scaled(l, z).1
    };
    Scaled::new(value, z.im.abs())
}

/// `(j_l(z), j_l'(z))` both scaled by `exp(-|Im z|)`, plus the exponent `|Im z|`.
pub fn spherical_bessel_j_with_derivative_scaled(l: u32, z: Complex64) -> (Complex64, Complex64, f64) {
    let exponent = z.im.abs();
    if l == 0 {
        let (_, j1) = adjacent_scaled(1, z);
        let j0 = spherical_bessel_j_scaled(0, z).value;
        return (j0, -j1, exponent);
    }
    let (prev, cur) = adjacent_scaled(l, z);
    let deriv = if z.norm() == 0.0 {
        if l == 1 {
            Complex64::new(1.0 / 3.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    } else {
        prev - (l + 1) as f64 / z * cur
    };
    (cur, deriv, exponent)
}

/// Spherical Bessel function of the first kind `j_l(z)`.
///
/// Fails with [`Error::BesselOverflow`] (carrying the scaled value) when
/// `|Im z|` exceeds [`IM_OVERFLOW_BOUND`].
pub fn spherical_bessel_j(l: u32, z: Complex64) -> Result<Complex64> {
    let scaled = spherical_bessel_j_scaled(l, z);
    if z.im.abs() > IM_OVERFLOW_BOUND {
        return Err(Error::BesselOverflow { z, scaled });
    }
    Ok(scaled.to_complex())
}

/// `d/dz j_l(z)` via `j_l' = j_{l-1} - (l+1)/z j_l` (and `j_0' = -j_1`).
pub fn spherical_bessel_j_prime(l: u32, z: Complex64) -> Result<Complex64> {
    let (_, d, e) = spherical_bessel_j_with_derivative_scaled(l, z);
    if z.im.abs() > IM_OVERFLOW_BOUND {
        return Err(Error::BesselOverflow { z, scaled: Scaled::new(d, e) });
    }
    Ok(d * e.exp())
}

/// Associated Legendre function `P_l^m(t) = (1-t^2)^{m/2} d^m P_l/dt^m`
/// (no Condon-Shortley phase).
pub fn assoc_legendre(l: u32, m: u32, t: f64) -> Result<f64> {
    if m > l {
        return Err(Error::Domain(format!("m = {m} exceeds l = {l}")));
    }
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("|t| = {} exceeds 1", t.abs())));
    }
    let somx2 = ((1.0 - t) * (1.0 + t)).sqrt();
    let mut pmm = 1.0;
    let mut odd = 1.0;
    for _ in 0..m {
        pmm *= odd * somx2;
        odd += 2.0;
    }
    if l == m {
        return Ok(pmm);
    }
    let mut pm1 = t * (2 * m + 1) as f64 * pmm;
    if l == m + 1 {
        return Ok(pm1);
    }
    let mut pm0 = pmm;
    for ll in (m + 2)..=l {
        let next = (t * (2 * ll - 1) as f64 * pm1 - (ll + m - 1) as f64 * pm0) / (ll - m) as f64;
        pm0 = pm1;
        pm1 = next;
    }
    Ok(pm1)
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Orthonormal spherical harmonic `Y_l^m(theta, phi)`.
pub fn spherical_harmonic(idx: SphericalIndex, theta: f64, phi: f64) -> Complex64 {
    let l = idx.l();
    let m_abs = idx.m().unsigned_abs();
    let log_norm = 0.5 * (ln_factorial(l - m_abs) - ln_factorial(l + m_abs));
    let norm = ((2 * l + 1) as f64 / (4.0 * PI)).sqrt() * log_norm.exp();
    let p = assoc_legendre(l, m_abs, theta.cos().clamp(-1.0, 1.0)).expect("m <= l is guaranteed by SphericalIndex");
    Complex64::from_polar(norm * p, idx.m() as f64 * phi)
}
