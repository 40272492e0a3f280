//! Multiple zeros from contour moments of `log f`.
//!
//! On a circle `|k - c| = rho` enclosing `w` zeros `a_i`, the negative
//! Fourier modes of `log f(c + rho e^{it}) - i w t` are
//! `-sum_i ((a_i - c)/rho)^p / p`, so the power sums of the enclosed zeros
//! follow from an FFT-sized trapezoid sum.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use super::winding::Contour;
use super::EntireFunction;
use crate::error::Result;
use crate::scaled::Scaled;

type C = Complex64;

const MIN_NODES: usize = 256;
const MAX_NODES: usize = 4096;

/// Power sums `s_1..s_w` of the zeros inside the circle, relative to `c`.
/// `None` if the circle does not enclose exactly `w` zeros or its phase
/// cannot be resolved.
pub(crate) fn power_sums<F: EntireFunction + ?Sized>(
    contour: &Contour<F>,
    c: C,
    rho: f64,
    w: usize,
) -> Result<Option<Vec<C>>> {
    let mut n = MIN_NODES;
    while n <= MAX_NODES {
        let theta: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
        let vals = theta.par_iter().map(|&t| contour.sample(c + C::from_polar(rho, t))).collect::<Result<Vec<_>>>()?;
        if vals.iter().any(|v| v.value.norm() < contour.opts.min_modulus) {
            return Ok(None);
        }
        let Some(phase) = unwrapped_phase(&vals) else {
            n *= 2;
            continue;
        };
        let turns = (phase[n] - phase[0]) / (2.0 * PI);
        if (turns - w as f64).abs() > 0.25 {
            return Ok(None);
        }
        let h: Vec<C> = (0..n)
            .map(|j| C::new(vals[j].value.norm().ln() + vals[j].log_scale, phase[j] - w as f64 * theta[j]))
            .collect();
        let sums = (1..=w)
            .map(|p| {
                let a: C =
                    h.iter().zip(&theta).map(|(hj, &t)| hj * C::from_polar(1.0, p as f64 * t)).sum::<C>() / n as f64;
                -(p as f64) * rho.powi(p as i32) * a
            })
            .collect();
        return Ok(Some(sums));
    }
    Ok(None)
}

// continuous phase around the closed circle, or None if a step is too coarse
fn unwrapped_phase(vals: &[Scaled]) -> Option<Vec<f64>> {
    let n = vals.len();
    let mut phase = Vec::with_capacity(n + 1);
    phase.push(vals[0].value.arg());
    for j in 1..=n {
        let d = (vals[j % n].value / vals[j - 1].value).arg();
        if d.abs() >= FRAC_PI_2 {
            return None;
        }
        phase.push(phase[j - 1] + d);
    }
    Some(phase)
}

/// Roots of the monic polynomial whose roots have power sums `s`.
pub(crate) fn roots_from_power_sums(s: &[C]) -> Vec<C> {
    let w = s.len();
    // Newton's identities for the elementary symmetric polynomials
    let mut e = vec![C::new(1.0, 0.0)];
    for k in 1..=w {
        let mut acc = C::new(0.0, 0.0);
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[k - i] * s[i - 1];
        }
        e.push(acc / k as f64);
    }
    // z^w - e1 z^{w-1} + e2 z^{w-2} - ...
    let coeffs: Vec<C> = (0..=w).map(|j| if j % 2 == 0 { e[j] } else { -e[j] }).collect();
    durand_kerner(&coeffs)
}

fn durand_kerner(coeffs: &[C]) -> Vec<C> {
    let w = coeffs.len() - 1;
    let eval = |z: C| coeffs.iter().fold(C::new(0.0, 0.0), |acc, &c| acc * z + c);
    let bound = 1.0 + coeffs.iter().skip(1).map(|c| c.norm()).fold(0.0, f64::max);
    let seed = C::new(0.4, 0.9);
    let mut z: Vec<C> = (0..w).map(|i| seed.powu(i as u32) * bound * 0.5).collect();
    for _ in 0..500 {
        let mut delta = 0.0f64;
        for i in 0..w {
            let mut denom = C::new(1.0, 0.0);
            for j in 0..w {
                if i != j {
                    denom *= z[i] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                denom = C::new(1e-300, 0.0);
            }
            let step = eval(z[i]) / denom;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta <= 1e-15 * bound {
            break;
        }
    }
    z
}
