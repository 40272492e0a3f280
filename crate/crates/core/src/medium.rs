//! Index of refraction, its restriction to rays, travel time and the
//! Liouville change of variables.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::spline::Interpolant;

pub type Vec3 = [f64; 3];

/// Tolerance on `|d| - 1` for ray directions.
pub const DIRECTION_TOL: f64 = 1e-12;

const CONTINUITY_TOL: f64 = 1e-8;
const TRAVEL_TIME_TOL: f64 = 1e-10;

pub(crate) fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Rejects directions whose length differs from one by more than [`DIRECTION_TOL`].
pub fn check_direction(d: Vec3) -> Result<Vec3> {
    let len = norm(d);
    if !len.is_finite() || (len - 1.0).abs() > DIRECTION_TOL {
        return Err(Error::Normalization(len));
    }
    Ok(d)
}

/// Positive radii `r` where the ray `r d` meets the sphere `|x - c| = a`,
/// excluding tangential contact.
pub(crate) fn sphere_crossings(center: Vec3, radius: f64, d: Vec3) -> Vec<f64> {
    let b = dot(d, center);
    let c = dot(center, center) - radius * radius;
    let disc = b * b - c;
    if disc <= 1e-12 * radius * radius {
        return Vec::new();
    }
    let s = disc.sqrt();
    [b - s, b + s].into_iter().filter(|&r| r > 0.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallInclusion {
    pub center: Vec3,
    pub radius: f64,
    pub n0: f64,
}

/// Shell `[previous outer radius, outer_radius)` where `n(rho) = sum_i c_i rho^i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub outer_radius: f64,
    pub coefficients: Vec<f64>,
}

impl Layer {
    fn eval(&self, rho: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * rho + c)
    }
}

fn origin() -> Vec3 {
    [0.0; 3]
}

/// Index of refraction `n(x)`; equal to one outside the listed support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MediumField {
    UniformBall {
        #[serde(default = "origin")]
        center: Vec3,
        radius: f64,
        n0: f64,
    },
    RadiallyStratified {
        #[serde(default = "origin")]
        center: Vec3,
        layers: Vec<Layer>,
    },
    /// Overlaps resolve to the first listed ball containing the point.
    UnionOfBalls { balls: Vec<BallInclusion> },
    /// Radial table around `center`, interpolated by a cubic spline in `|x - center|`.
    #[serde(alias = "implicit_tabulated")]
    Tabulated {
        #[serde(default = "origin")]
        center: Vec3,
        radii: Vec<f64>,
        values: Vec<f64>,
    },
}

impl MediumField {
    /// Background medium `n = 1`.
    pub fn background() -> Self {
        MediumField::UnionOfBalls { balls: Vec::new() }
    }

    pub fn uniform_ball(center: Vec3, radius: f64, n0: f64) -> Self {
        MediumField::UniformBall { center, radius, n0 }
    }

    /// Checks positivity and shape constraints. Returns non-fatal warnings
    /// (discontinuities of smooth kinds, `n(0) != 1`).
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        let positive = |v: f64, what: &str| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{what} must be positive and finite, got {v}")))
            }
        };
        match self {
            MediumField::UniformBall { radius, n0, .. } => {
                positive(*radius, "radius")?;
                positive(*n0, "n0")?;
            }
            MediumField::UnionOfBalls { balls } => {
                for b in balls {
                    positive(b.radius, "radius")?;
                    positive(b.n0, "n0")?;
                }
            }
            MediumField::RadiallyStratified { layers, .. } => {
                if layers.is_empty() {
                    return bad("radially_stratified needs at least one layer".into());
                }
                let mut inner = 0.0;
                for (i, layer) in layers.iter().enumerate() {
                    positive(layer.outer_radius, "outer_radius")?;
                    if layer.outer_radius <= inner {
                        return bad("layer radii must be strictly increasing".into());
                    }
                    if layer.coefficients.is_empty() {
                        return bad(format!("layer {i} has no coefficients"));
                    }
                    for s in 0..=64 {
                        let rho = inner + (layer.outer_radius - inner) * s as f64 / 64.0;
                        positive(layer.eval(rho), "n")?;
                    }
                    if i > 0 {
                        let jump = (layers[i - 1].eval(inner) - layer.eval(inner)).abs();
                        if jump > CONTINUITY_TOL {
                            warnings.push(format!("n jumps by {jump:.3e} at rho = {inner}"));
                        }
                    }
                    inner = layer.outer_radius;
                }
                let jump = (layers.last().unwrap().eval(inner) - 1.0).abs();
                if jump > CONTINUITY_TOL {
                    warnings.push(format!("n jumps by {jump:.3e} at the support edge rho = {inner}"));
                }
            }
            MediumField::Tabulated { radii, values, .. } => {
                let spline = Interpolant::new(radii, values)?;
                if radii[0] < 0.0 {
                    return bad("table radii must be nonnegative".into());
                }
                let (lo, hi) = (radii[0], *radii.last().unwrap());
                for s in 0..=512 {
                    positive(spline.eval(lo + (hi - lo) * s as f64 / 512.0), "n")?;
                }
                let jump = (values.last().unwrap() - 1.0).abs();
                if jump > CONTINUITY_TOL {
                    warnings.push(format!("n jumps by {jump:.3e} at the table end rho = {hi}"));
                }
            }
        }
        let n_origin = self.eval_point(origin());
        if (n_origin - 1.0).abs() > CONTINUITY_TOL {
            warnings.push(format!("n(0) = {n_origin} differs from 1"));
        }
        Ok(warnings)
    }

    /// Pointwise evaluation of `n(x)`.
    pub fn eval_point(&self, x: Vec3) -> f64 {
        match self {
            MediumField::UniformBall { center, radius, n0 } => {
                if norm(sub(x, *center)) < *radius {
                    *n0
                } else {
                    1.0
                }
            }
            MediumField::UnionOfBalls { balls } => {
                balls.iter().find(|b| norm(sub(x, b.center)) < b.radius).map_or(1.0, |b| b.n0)
            }
            MediumField::RadiallyStratified { center, layers } => stratified_eval(layers, norm(sub(x, *center))),
            MediumField::Tabulated { center, radii, values } => {
                let spline = Interpolant::new(radii, values).expect("validated table");
                tabulated_eval(&spline, radii, values, norm(sub(x, *center)))
            }
        }
    }

    /// Restricts the field to the ray `r d`, `r >= 0`.
    pub fn restrict_to_ray(&self, direction: Vec3) -> Result<RadialProfile> {
        let d = check_direction(direction)?;
        let along = move |c: Vec3, r: f64| norm(sub(scale(d, r), c));
        let (eval, mut breaks): (Evaluator, Vec<f64>) = match self.clone() {
            MediumField::UniformBall { center, radius, n0 } => (
                Arc::new(move |r| if along(center, r) < radius { n0 } else { 1.0 }),
                sphere_crossings(center, radius, d),
            ),
            MediumField::UnionOfBalls { balls } => {
                let breaks = balls.iter().flat_map(|b| sphere_crossings(b.center, b.radius, d)).collect();
                (
                    Arc::new(move |r| {
                        let x = scale(d, r);
                        balls.iter().find(|b| norm(sub(x, b.center)) < b.radius).map_or(1.0, |b| b.n0)
                    }),
                    breaks,
                )
            }
            MediumField::RadiallyStratified { center, layers } => {
                let mut breaks: Vec<f64> =
                    layers.iter().flat_map(|l| sphere_crossings(center, l.outer_radius, d)).collect();
                breaks.extend(center_passage(center, d));
                (Arc::new(move |r| stratified_eval(&layers, along(center, r))), breaks)
            }
            MediumField::Tabulated { center, radii, values } => {
                let spline = Interpolant::new(&radii, &values)?;
                let mut breaks = sphere_crossings(center, *radii.last().unwrap(), d);
                breaks.extend(center_passage(center, d));
                (Arc::new(move |r| tabulated_eval(&spline, &radii, &values, along(center, r))), breaks)
            }
        };
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1.0));
        let support_end = self.support_end_along(d);
        Ok(RadialProfile { direction: d, eval, breakpoints: breaks, support_end })
    }

    fn support_end_along(&self, d: Vec3) -> f64 {
        let outer: Vec<(Vec3, f64)> = match self {
            MediumField::UniformBall { center, radius, .. } => vec![(*center, *radius)],
            MediumField::UnionOfBalls { balls } => balls.iter().map(|b| (b.center, b.radius)).collect(),
            MediumField::RadiallyStratified { center, layers } => {
                vec![(*center, layers.last().map_or(0.0, |l| l.outer_radius))]
            }
            MediumField::Tabulated { center, radii, .. } => vec![(*center, *radii.last().unwrap())],
        };
        let mut end: f64 = 0.0;
        for (c, a) in outer {
            let crossings = sphere_crossings(c, a, d);
            if let Some(&r) = crossings.last() {
                end = end.max(r);
            }
        }
        end
    }
}

fn center_passage(center: Vec3, d: Vec3) -> Option<f64> {
    let r = dot(d, center);
    let miss = norm(sub(scale(d, r), center));
    (r > 0.0 && miss <= 1e-14 * norm(center).max(1.0)).then_some(r)
}

fn stratified_eval(layers: &[Layer], rho: f64) -> f64 {
    layers.iter().find(|l| rho < l.outer_radius).map_or(1.0, |l| l.eval(rho))
}

fn tabulated_eval(spline: &Interpolant, radii: &[f64], values: &[f64], rho: f64) -> f64 {
    if rho >= *radii.last().unwrap() {
        1.0
    } else if rho <= radii[0] {
        values[0]
    } else {
        spline.eval(rho)
    }
}

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `r -> n(r d)` along one ray, with the radii where smoothness may fail.
#[derive(Clone)]
pub struct RadialProfile {
    direction: Vec3,
    eval: Evaluator,
    breakpoints: Vec<f64>,
    support_end: f64,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("direction", &self.direction)
            .field("breakpoints", &self.breakpoints)
            .field("support_end", &self.support_end)
            .finish()
    }
}

impl RadialProfile {
    /// Profile from an arbitrary evaluator. `n` must equal one beyond
    /// `support_end` and be positive everywhere.
    pub fn from_fn<F>(f: F, mut breakpoints: Vec<f64>, support_end: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        breakpoints.retain(|&b| b > 0.0);
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        Self { direction: [0.0, 0.0, 1.0], eval: Arc::new(f), breakpoints, support_end }
    }

    /// `n = n0` on `[0, radius)`, one beyond.
    pub fn constant(n0: f64, radius: f64) -> Self {
        Self::from_fn(move |r| if r < radius { n0 } else { 1.0 }, vec![radius], radius)
    }

    /// `n = 1` everywhere.
    pub fn background() -> Self {
        Self::from_fn(|_| 1.0, Vec::new(), 0.0)
    }

    pub fn n(&self, r: f64) -> f64 {
        (self.eval)(r)
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn support_end(&self) -> f64 {
        self.support_end
    }

    /// `rho -> n(a + rho)`, the profile seen from radius `a`.
    pub fn shifted(&self, a: f64) -> Self {
        if a == 0.0 {
            return self.clone();
        }
        let inner = self.eval.clone();
        let breakpoints = self.breakpoints.iter().map(|&b| b - a).filter(|&b| b > 1e-14 * a.abs().max(1.0)).collect();
        Self {
            direction: self.direction,
            eval: Arc::new(move |rho| inner(a + rho)),
            breakpoints,
            support_end: (self.support_end - a).max(0.0),
        }
    }

    /// Breakpoints strictly inside `(lo, hi)`.
    pub fn breakpoints_between(&self, lo: f64, hi: f64) -> impl Iterator<Item = f64> + '_ {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        self.breakpoints.iter().copied().filter(move |&b| b > lo && b < hi)
    }

    /// `integral_lo^hi sqrt(n)` (signed), split at breakpoints.
    pub fn travel_between(&self, lo: f64, hi: f64) -> f64 {
        if lo > hi {
            return -self.travel_between(hi, lo);
        }
        let mut nodes = vec![lo];
        nodes.extend(self.breakpoints_between(lo, hi));
        nodes.push(hi);
        let inner_end = self.support_end.clamp(lo, hi);
        let mut total = 0.0;
        let pieces = nodes.len() - 1;
        for w in nodes.windows(2) {
            let (a, b) = (w[0], w[1].min(inner_end.max(w[0])));
            if b > a {
                total += quadrature::integrate(|r| self.n(r).sqrt(), a, b, TRAVEL_TIME_TOL / pieces as f64);
            }
        }
        total + (hi - inner_end.max(lo))
    }

    /// Travel time `B(r) = integral_0^r sqrt(n(rho)) d rho`.
    pub fn travel_time(&self, r: f64) -> f64 {
        self.travel_between(0.0, r.max(0.0))
    }

    /// `(B(r), n(r)^{1/4} y)` for each sample.
    pub fn liouville_transform(&self, samples: &[(f64, Complex64)]) -> Vec<(f64, Complex64)> {
        let mut out = Vec::with_capacity(samples.len());
        let mut last_r = 0.0;
        let mut xi = 0.0;
        for &(r, y) in samples {
            xi += self.travel_between(last_r, r);
            last_r = r;
            out.push((xi, y * self.n(r).powf(0.25)));
        }
        out
    }
}

/// Free-function form of [`MediumField::restrict_to_ray`].
pub fn restrict_to_ray(field: &MediumField, direction: Vec3) -> Result<RadialProfile> {
    field.restrict_to_ray(direction)
}

/// Free-function form of [`RadialProfile::travel_time`].
pub fn travel_time(profile: &RadialProfile, r: f64) -> f64 {
    profile.travel_time(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    const X: Vec3 = [1.0, 0.0, 0.0];

    #[test]
    fn uniform_ball_restriction() {
        let f = MediumField::uniform_ball(origin(), 1.0, 4.0);
        let p = f.restrict_to_ray([0.0, 0.6, 0.8]).unwrap();
        assert_eq!(p.n(0.5), 4.0);
        assert_eq!(p.n(2.0), 1.0);
        assert_eq!(p.breakpoints(), &[1.0]);
        assert_eq!(p.support_end(), 1.0);
    }

    #[test]
    fn two_ball_breakpoints() {
        let f = MediumField::UnionOfBalls {
            balls: vec![
                BallInclusion { center: [2.0, 0.0, 0.0], radius: 1.0, n0: 2.25 },
                BallInclusion { center: [5.0, 0.0, 0.0], radius: 1.0, n0: 2.25 },
            ],
        };
        let p = f.restrict_to_ray(X).unwrap();
        assert_eq!(p.breakpoints(), &[1.0, 3.0, 4.0, 6.0]);
        assert_eq!(p.n(3.5), 1.0);
        assert_eq!(p.n(4.5), 2.25);
    }

    #[test]
    fn background_profile() {
        let p = MediumField::background().restrict_to_ray(X).unwrap();
        assert_eq!(p.support_end(), 0.0);
        assert_eq!(p.n(0.3), 1.0);
        assert!((p.travel_time(3.7) - 3.7).abs() < 1e-14);
    }

    #[test]
    fn bad_direction_rejected() {
        let f = MediumField::background();
        assert!(matches!(f.restrict_to_ray([1.0, 1e-5, 0.0]), Err(Error::Normalization(_))));
    }

    #[test]
    fn travel_time_constant_ball() {
        let p = MediumField::uniform_ball(origin(), 1.0, 4.0).restrict_to_ray(X).unwrap();
        assert!((p.travel_time(1.0) - 2.0).abs() < 1e-12);
        assert!((p.travel_time(2.5) - 3.5).abs() < 1e-12);
    }

    #[test]
    fn travel_time_tabulated_quadratic() {
        let radii: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let values: Vec<f64> = radii.iter().map(|r| (1.0 + r) * (1.0 + r)).collect();
        let f = MediumField::Tabulated { center: origin(), radii, values };
        f.validate().unwrap();
        let p = f.restrict_to_ray(X).unwrap();
        assert!((p.travel_time(1.0) - 1.5).abs() < 1e-9);
    }

    #[test]
    fn liouville_examples() {
        let p = RadialProfile::constant(4.0, 1.0);
        let out = p.liouville_transform(&[(0.5, Complex64::new(1.0, 0.0))]);
        assert!((out[0].0 - 1.0).abs() < 1e-12);
        assert!((out[0].1.re - 2f64.sqrt()).abs() < 1e-12);
        let bg = RadialProfile::background();
        let s = [(0.2, Complex64::new(0.1, 0.3)), (0.9, Complex64::new(-1.0, 2.0))];
        let out = bg.liouville_transform(&s);
        for (a, b) in out.iter().zip(&s) {
            assert!((a.0 - b.0).abs() < 1e-14 && a.1 == b.1);
        }
    }

    #[test]
    fn stratified_continuity_warnings() {
        let smooth = MediumField::RadiallyStratified {
            center: origin(),
            layers: vec![
                Layer { outer_radius: 0.5, coefficients: vec![1.0, 0.0, 1.0] },
                Layer { outer_radius: 1.0, coefficients: vec![1.5, -0.5] },
            ],
        };
        let w = smooth.validate().unwrap();
        assert!(w.is_empty(), "{w:?}");
        let ball = MediumField::uniform_ball(origin(), 1.0, 4.0);
        assert!(ball.validate().unwrap().iter().any(|s| s.contains("n(0)")));
    }

    #[test]
    fn negative_index_rejected() {
        let f = MediumField::uniform_ball(origin(), 1.0, -2.0);
        assert!(f.validate().is_err());
    }

    #[test]
    fn shifted_profile() {
        let p = RadialProfile::constant(4.0, 1.0).shifted(0.25);
        assert_eq!(p.breakpoints(), &[0.75]);
        assert_eq!(p.n(0.7), 4.0);
        assert_eq!(p.n(0.8), 1.0);
        assert_eq!(p.support_end(), 0.75);
    }

    #[test]
    fn config_round_trip() {
        let json = r#"{"kind":"uniform_ball","radius":1.0,"n0":4.0}"#;
        let f: MediumField = serde_json::from_str(json).unwrap();
        assert_eq!(f, MediumField::uniform_ball(origin(), 1.0, 4.0));
        let bad = r#"{"kind":"uniform_ball","radius":1.0,"n0":4.0,"typo":1}"#;
        assert!(serde_json::from_str::<MediumField>(bad).is_err());
        let alias = r#"{"kind":"implicit_tabulated","radii":[0,1],"values":[2,1]}"#;
        assert!(serde_json::from_str::<MediumField>(alias).is_ok());
    }
}
