//! The functional determinant
//! `D_l(k; r) = -j_l(kr) y'/r + j_l(kr) y/r^2 + k j_l'(kr) y/r`
//! and the `alpha` diagnostic.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::medium::RadialProfile;
use crate::radial_ode::{end_state, OdeOptions, RadialState, Start};
use crate::scaled::Scaled;
use crate::specialfn::{spherical_bessel_j_with_derivative_scaled, AngularOrder};

type C = Complex64;

/// Distance in `k` below which the `alpha` diagnostic refuses to evaluate.
pub const POLE_PROXIMITY: f64 = 1e-6;

/// Normalized determinant: `value * exp(log_scale)` is `D_l(k; r)`.
pub type DeterminantValue = Scaled;

fn combine(l: u32, k: C, r: f64, y: &RadialState) -> (C, f64) {
    let (j, jp, e) = spherical_bessel_j_with_derivative_scaled(l, k * r);
    let d = -j * y.dy / r + j * y.y / (r * r) + k * jp * y.y / r;
    (d, e + y.log_scale)
}

/// `k -> D_l(k; r_hat)` for a fixed profile and start, normalized by the
/// exponential type of the determinant.
#[derive(Debug, Clone)]
pub struct DeterminantFunction {
    l: AngularOrder,
    profile: RadialProfile,
    r_hat: f64,
    start: Start,
    opts: OdeOptions,
    type_coefficient: f64,
}

impl DeterminantFunction {
    pub fn new(l: AngularOrder, profile: &RadialProfile, r_hat: f64, start: Start, opts: OdeOptions) -> Result<Self> {
        if !(r_hat > 0.0) {
            return Err(Error::InvalidArgument(format!("evaluation radius {r_hat} must be positive")));
        }
        let type_coefficient = match start {
            Start::Origin => r_hat + profile.travel_time(r_hat),
            Start::Interface(r0) => {
                if !(r0 > 0.0) || r0 == r_hat {
                    return Err(Error::InvalidArgument(format!("bad interface radius {r0}")));
                }
                r_hat + r0 + profile.travel_between(r0, r_hat).abs()
            }
        };
        Ok(Self { l, profile: profile.clone(), r_hat, start, opts, type_coefficient })
    }

    pub fn l(&self) -> AngularOrder {
        self.l
    }

    pub fn r_hat(&self) -> f64 {
        self.r_hat
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    /// Exponential type `tau`: the normalization divides by `exp(tau |Im k|)`.
    pub fn type_coefficient(&self) -> f64 {
        self.type_coefficient
    }

    pub fn eval(&self, k: C) -> Result<DeterminantValue> {
        let y = end_state(self.l, k, &self.profile, self.start, self.r_hat, &self.opts)?;
        let (d, log_raw) = combine(self.l.get(), k, self.r_hat, &y);
        let log_scale = self.type_coefficient * k.im.abs();
        let value = d * (log_raw - log_scale).exp();
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        Ok(Scaled::new(value, log_scale))
    }
}

/// Normalized `D_l(k; r_hat)` for the requested start.
pub fn determinant(
    l: AngularOrder,
    k: C,
    r_hat: f64,
    profile: &RadialProfile,
    start: Start,
) -> Result<DeterminantValue> {
    DeterminantFunction::new(l, profile, r_hat, start, OdeOptions::default())?.eval(k)
}

/// Packages the determinant as a function of `k`.
pub fn determinant_function(
    l: AngularOrder,
    profile: &RadialProfile,
    r_hat: f64,
    start: Start,
) -> Result<DeterminantFunction> {
    DeterminantFunction::new(l, profile, r_hat, start, OdeOptions::default())
}

// y(r_hat; k) scaled, origin start
fn y_at(l: AngularOrder, k: C, r_hat: f64, profile: &RadialProfile) -> Result<RadialState> {
    end_state(l, k, profile, Start::Origin, r_hat, &OdeOptions::default())
}

/// `alpha_l(k) = 1 - (j_l/(k j_l')) ((y/r)'/(y/r))` at `r_hat`, which vanishes
/// identically when `n = 1` along the ray.
pub fn alpha_diagnostic(l: AngularOrder, k: C, r_hat: f64, profile: &RadialProfile) -> Result<C> {
    let lv = l.get();
    let z = k * r_hat;
    let (j, jp, _) = spherical_bessel_j_with_derivative_scaled(lv, z);
    // d/dk j_l'(k r) = r j_l''(kr) from the Bessel equation
    let lf = lv as f64;
    let jpp = if z.norm() == 0.0 {
        C::new(f64::INFINITY, 0.0)
    } else {
        -2.0 / z * jp - (1.0 - lf * (lf + 1.0) / (z * z)) * j
    };
    if k.norm() == 0.0 || (jp / (r_hat * jpp)).norm() < POLE_PROXIMITY {
        return Err(Error::PoleProximity(k));
    }
    let y = y_at(l, k, r_hat, profile)?;
    let h = 1e-6 * k.norm().max(1.0);
    let yp = y_at(l, k + h, r_hat, profile)?;
    let ym = y_at(l, k - h, r_hat, profile)?;
    let rel = |s: &RadialState| s.y * (s.log_scale - y.log_scale).exp();
    let dy_dk = (rel(&yp) - rel(&ym)) / (2.0 * h);
    if dy_dk.norm() > 0.0 && (y.y / dy_dk).norm() < POLE_PROXIMITY {
        return Err(Error::PoleProximity(k));
    }
    let log_ratio = y.dy / y.y - 1.0 / r_hat;
    Ok(1.0 - j / (k * jp) * log_ratio)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(v: u32) -> AngularOrder {
        AngularOrder::new(v).unwrap()
    }

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    // closed-form substitution with y = sin(2kr)/(2k), j_0 = sin(kr)/(kr), r = 1
    fn oracle(k: C) -> C {
        let y = (2.0 * k).sin() / (2.0 * k);
        let dy = (2.0 * k).cos();
        let j = k.sin() / k;
        let jp = k.cos() / k - k.sin() / (k * k);
        -j * dy + j * y + k * jp * y
    }

    #[test]
    fn free_space_determinant_vanishes() {
        let bg = RadialProfile::background();
        for lv in 0..4 {
            for &k in &[c(0.7, 0.0), c(5.0, -2.0), c(17.0, 2.5)] {
                let d = determinant(l(lv), k, 1.3, &bg, Start::Origin).unwrap();
                assert!(d.value.norm() < 1e-10, "l={lv} k={k}: {}", d.value);
            }
        }
    }

    #[test]
    fn constant_ball_matches_oracle() {
        let p = RadialProfile::constant(4.0, 1.0);
        let f = determinant_function(l(0), &p, 1.0, Start::Origin).unwrap();
        for &k in &[c(0.5, 0.0), c(3.3, 1.2), c(12.0, -2.0), c(39.0, 0.5)] {
            let got = f.eval(k).unwrap().to_complex();
            let want = oracle(k);
            assert!((got - want).norm() < 1e-9 * want.norm(), "k={k}: {got} vs {want}");
        }
        // the closed form collapses to sin^3 k / k
        let k = c(2.2, 0.3);
        assert!((oracle(k) - k.sin().powu(3) / k).norm() < 1e-12);
    }

    #[test]
    fn conjugate_symmetry_and_determinism() {
        let p = RadialProfile::constant(2.25, 1.0);
        let f = determinant_function(l(1), &p, 1.0, Start::Origin).unwrap();
        let k = c(4.1, 0.9);
        let a = f.eval(k).unwrap();
        let b = f.eval(k.conj()).unwrap();
        assert!((a.value.conj() - b.value).norm() < 1e-12 * a.value.norm().max(1e-300));
        assert_eq!(f.eval(k).unwrap(), a);
    }

    #[test]
    fn zero_wavenumber_is_finite() {
        let p = RadialProfile::constant(4.0, 1.0);
        for lv in 0..3 {
            let d = determinant(l(lv), c(0.0, 0.0), 1.0, &p, Start::Origin).unwrap();
            assert!(d.value.norm().is_finite());
        }
        // sin^3 k / k ~ k^2 near zero
        let d = determinant(l(0), c(1e-3, 0.0), 1.0, &p, Start::Origin).unwrap();
        assert!((d.value.re - 1e-6).abs() < 1e-9);
    }

    #[test]
    fn interface_start_free_space_is_zero() {
        let bg = RadialProfile::background();
        let d = determinant(l(2), c(3.0, 1.0), 2.0, &bg, Start::Interface(0.7)).unwrap();
        assert!(d.value.norm() < 1e-10);
    }

    #[test]
    fn growth_along_imaginary_axis() {
        let p = RadialProfile::constant(4.0, 1.0);
        let f = determinant_function(l(0), &p, 1.0, Start::Origin).unwrap();
        let lg = |t: f64| f.eval(c(0.0, t)).unwrap().ln_abs();
        let slope = (lg(60.0) - lg(30.0)) / 30.0;
        assert!((slope - 3.0).abs() < 0.15, "{slope}");
    }

    #[test]
    fn alpha_vanishes_in_free_space() {
        let bg = RadialProfile::background();
        for &k in &[1.1, 2.7, 6.3] {
            let a = alpha_diagnostic(l(0), c(k, 0.0), 1.0, &bg).unwrap();
            assert!(a.norm() < 1e-8, "{a}");
        }
    }

    #[test]
    fn alpha_bounded_away_from_zero_for_constant_index() {
        let p = RadialProfile::constant(4.0, 1.0);
        let pi = std::f64::consts::PI;
        let mut k = 5.0;
        while k < 50.0 {
            // alpha is proportional to sin^3 k near its zeros at m pi
            let near_zero = (k / pi - (k / pi).round()).abs() * pi < 0.5;
            match alpha_diagnostic(l(0), c(k, 0.0), 1.0, &p) {
                Ok(a) if !near_zero => assert!(a.norm() > 0.01, "k={k}: {a}"),
                _ => {}
            }
            k += 0.37;
        }
    }

    #[test]
    fn alpha_conjugate_symmetric_and_pole_guard() {
        let p = RadialProfile::constant(4.0, 1.0);
        let k = c(7.3, 0.4);
        let a = alpha_diagnostic(l(0), k, 1.0, &p).unwrap();
        let b = alpha_diagnostic(l(0), k.conj(), 1.0, &p).unwrap();
        assert!((a.conj() - b).norm() < 1e-12 * a.norm());
        // j_0'(k) vanishes at the first root of tan k = k
        let root = 4.493_409_457_909_064;
        assert!(matches!(alpha_diagnostic(l(0), c(root, 0.0), 1.0, &p), Err(Error::PoleProximity(_))));
    }
}
