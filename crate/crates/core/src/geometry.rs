//! Simple domains, ray intersection sets and the inside indicator.

use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::{check_direction, dot, norm, scale, sphere_crossings, sub, MediumField, Vec3};

/// Maximum number of boundary crossings accepted along one ray.
pub const MAX_CROSSINGS: usize = 64;

const BRACKET_CELLS: usize = 4096;
const BISECT_TOL: f64 = 1e-12;
const TANGENCY_RATIO: f64 = 1e-8;

/// Closed surface given as the zero set of `F`, with `F < 0` inside.
pub trait ImplicitShape: Debug + Send + Sync {
    fn value(&self, x: Vec3) -> f64;
    /// Upper bound on `|x|` over the shape.
    fn extent(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ball {
    pub center: Vec3,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ellipsoid {
    pub center: Vec3,
    pub semi_axes: Vec3,
}

impl ImplicitShape for Ellipsoid {
    fn value(&self, x: Vec3) -> f64 {
        let y = sub(x, self.center);
        (0..3).map(|i| (y[i] / self.semi_axes[i]).powi(2)).sum::<f64>() - 1.0
    }

    fn extent(&self) -> f64 {
        norm(self.center) + self.semi_axes.iter().fold(0.0f64, |m, &a| m.max(a))
    }
}

/// Torus with symmetry axis parallel to `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Torus {
    pub center: Vec3,
    pub major_radius: f64,
    pub minor_radius: f64,
}

impl ImplicitShape for Torus {
    fn value(&self, x: Vec3) -> f64 {
        let y = sub(x, self.center);
        let q = y[0].hypot(y[1]) - self.major_radius;
        q * q + y[2] * y[2] - self.minor_radius * self.minor_radius
    }

    fn extent(&self) -> f64 {
        norm(self.center) + self.major_radius + self.minor_radius
    }
}

/// Union of balls and implicit shapes.
#[derive(Debug, Clone)]
pub struct SimpleDomain {
    balls: Vec<Ball>,
    shapes: Vec<Arc<dyn ImplicitShape>>,
    bounding_radius: f64,
}

/// Interval `[lo, hi]` of a ray with its inside label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalSpec {
    pub j: usize,
    pub lo: f64,
    pub hi: f64,
    pub inside: bool,
}

impl IntervalSpec {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }
}

/// Boundary crossings `r_1 < ... < r_M` along a ray. The interval before
/// `r_1` starts at the origin and is labelled by `origin_inside`; labels
/// alternate from there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionSet {
    pub direction: Vec3,
    pub radii: Vec<f64>,
    pub origin_inside: bool,
}

impl IntersectionSet {
    pub fn empty(direction: Vec3) -> Self {
        Self { direction, radii: Vec::new(), origin_inside: false }
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Bounded intervals `[0, r_1], [r_1, r_2], ..., [r_{M-1}, r_M]`.
    pub fn intervals(&self) -> Vec<IntervalSpec> {
        let mut out = Vec::with_capacity(self.radii.len());
        let mut lo = 0.0;
        for (j, &hi) in self.radii.iter().enumerate() {
            out.push(IntervalSpec { j, lo, hi, inside: self.origin_inside ^ (j % 2 == 1) });
            lo = hi;
        }
        out
    }

    pub fn inside_intervals(&self) -> Vec<IntervalSpec> {
        self.intervals().into_iter().filter(|i| i.inside).collect()
    }

    pub fn covered_length(&self) -> f64 {
        self.inside_intervals().iter().map(IntervalSpec::len).sum()
    }
}

/// A candidate boundary point along a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub r: f64,
    pub tangent: bool,
}

impl SimpleDomain {
    pub fn new(balls: Vec<Ball>, shapes: Vec<Arc<dyn ImplicitShape>>) -> Result<Self> {
        for b in &balls {
            if !(b.radius > 0.0 && b.radius.is_finite()) {
                return Err(Error::InvalidArgument(format!("ball radius {} is not positive", b.radius)));
            }
        }
        let extent = balls
            .iter()
            .map(|b| norm(b.center) + b.radius)
            .chain(shapes.iter().map(|s| s.extent()))
            .fold(0.0f64, f64::max);
        Ok(Self { balls, shapes, bounding_radius: 1.05 * extent + 1e-6 })
    }

    pub fn from_balls(balls: Vec<Ball>) -> Result<Self> {
        Self::new(balls, Vec::new())
    }

    /// Support of a medium as a domain: the balls (or outer sphere) where `n` may differ from one.
    pub fn from_medium(field: &MediumField) -> Result<Self> {
        let balls = match field {
            MediumField::UniformBall { center, radius, .. } => vec![Ball { center: *center, radius: *radius }],
            MediumField::UnionOfBalls { balls } => {
                balls.iter().map(|b| Ball { center: b.center, radius: b.radius }).collect()
            }
            MediumField::RadiallyStratified { center, layers } => {
                layers.last().map(|l| Ball { center: *center, radius: l.outer_radius }).into_iter().collect()
            }
            MediumField::Tabulated { center, radii, .. } => {
                radii.last().map(|&r| Ball { center: *center, radius: r }).into_iter().collect()
            }
        };
        Self::from_balls(balls)
    }

    /// `R_0`, strictly larger than the extent of every primitive.
    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    /// `min` over primitives of their defining functions; negative inside.
    pub fn implicit_value(&self, x: Vec3) -> f64 {
        self.balls
            .iter()
            .map(|b| {
                let y = sub(x, b.center);
                dot(y, y) - b.radius * b.radius
            })
            .chain(self.shapes.iter().map(|s| s.value(x)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Open-set membership: boundary points are outside.
    pub fn inside_indicator(&self, x: Vec3) -> bool {
        self.balls.iter().any(|b| norm(sub(x, b.center)) < b.radius) || self.shapes.iter().any(|s| s.value(x) < 0.0)
    }

    /// Crossing candidates of every primitive, tangent contacts included and marked.
    pub fn crossing_candidates(&self, direction: Vec3) -> Result<Vec<Crossing>> {
        let d = check_direction(direction)?;
        let mut out = Vec::new();
        for b in &self.balls {
            let bc = dot(d, b.center);
            let miss = norm(sub(scale(d, bc), b.center));
            if bc > 0.0 && (miss - b.radius).abs() <= 1e-6 * b.radius {
                out.push(Crossing { r: bc, tangent: true });
            }
            out.extend(sphere_crossings(b.center, b.radius, d).into_iter().map(|r| Crossing { r, tangent: false }));
        }
        for s in &self.shapes {
            out.extend(implicit_crossings(s.as_ref(), d, self.bounding_radius)?);
        }
        out.sort_by(|a, b| a.r.total_cmp(&b.r));
        Ok(out)
    }

    /// Drops tangent points, labels each interval by its midpoint and merges
    /// neighbours with equal labels.
    pub fn filter_tangent(&self, direction: Vec3, candidates: &[Crossing]) -> Result<IntersectionSet> {
        let d = check_direction(direction)?;
        let mut cuts: Vec<f64> = candidates.iter().filter(|c| !c.tangent && c.r > 0.0).map(|c| c.r).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
        // label the first interval by its midpoint so an origin on the boundary is harmless
        let first_end = cuts.first().copied().unwrap_or(self.bounding_radius);
        let origin_inside = self.inside_indicator(scale(d, 0.5 * first_end));
        let mut radii = Vec::new();
        let mut label = origin_inside;
        for (i, &r) in cuts.iter().enumerate() {
            let hi = cuts.get(i + 1).copied().unwrap_or(self.bounding_radius.max(r) * 1.5 + 1.0);
            let next_label = self.inside_indicator(scale(d, 0.5 * (r + hi)));
            if next_label != label {
                radii.push(r);
                label = next_label;
            }
        }
        if radii.len() > MAX_CROSSINGS {
            return Err(Error::TooManyCrossings(MAX_CROSSINGS));
        }
        Ok(IntersectionSet { direction: d, radii, origin_inside })
    }

    pub fn intersect_ray(&self, direction: Vec3) -> Result<IntersectionSet> {
        let cands = self.crossing_candidates(direction)?;
        self.filter_tangent(direction, &cands)
    }

    /// Total length of the inside intervals along `direction`.
    pub fn covered_length(&self, direction: Vec3) -> Result<f64> {
        Ok(self.intersect_ray(direction)?.covered_length())
    }
}

fn implicit_crossings(shape: &dyn ImplicitShape, d: Vec3, r0: f64) -> Result<Vec<Crossing>> {
    let f = |r: f64| shape.value(scale(d, r));
    let h = r0 / BRACKET_CELLS as f64;
    let samples: Vec<f64> = (0..=BRACKET_CELLS).map(|i| f(i as f64 * h)).collect();
    let mut out = Vec::new();
    for i in 0..BRACKET_CELLS {
        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
        let (fa, fb) = (samples[i], samples[i + 1]);
        if fa == 0.0 && i > 0 {
            continue; // handled as the right end of the previous cell
        }
        if (fa < 0.0) != (fb < 0.0) || fb == 0.0 {
            let r = bisect(&f, a, b);
            out.push(classify(shape, d, r)?);
            continue;
        }
        // look for a dip inside the cell that the samples do not resolve
        let prev = if i > 0 { samples[i - 1] } else { f64::INFINITY };
        let next = samples.get(i + 2).copied().unwrap_or(f64::INFINITY);
        let local_min = fa.abs() <= prev.abs() || fb.abs() <= next.abs();
        if !local_min {
            continue;
        }
        let lo = if i > 0 { a - h } else { a };
        let hi = (b + h).min(r0);
        let (rm, fm) = golden_min(|r| f(r) * fa.signum(), lo, hi);
        let fm = fm * fa.signum();
        if (fm < 0.0) != (fa < 0.0) && rm > a && rm < b {
            let r1 = bisect(&f, a, rm);
            let r2 = bisect(&f, rm, b);
            out.push(classify(shape, d, r1)?);
            out.push(classify(shape, d, r2)?);
        } else if fm.abs() < 1e-10 && rm > a && rm < b {
            out.push(Crossing { r: rm, tangent: true });
        }
    }
    Ok(out)
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    if fa == 0.0 {
        return a;
    }
    while b - a > BISECT_TOL * b.abs().max(1.0) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn classify(shape: &dyn ImplicitShape, d: Vec3, r: f64) -> Result<Crossing> {
    let x = scale(d, r);
    let eps = 1e-6 * r.max(1.0);
    let mut grad = [0.0; 3];
    for (i, g) in grad.iter_mut().enumerate() {
        let mut xp = x;
        let mut xm = x;
        xp[i] += eps;
        xm[i] -= eps;
        *g = (shape.value(xp) - shape.value(xm)) / (2.0 * eps);
    }
    let directional = dot(grad, d);
    let scale_g = norm(grad);
    if scale_g == 0.0 || directional.abs() < TANGENCY_RATIO * scale_g {
        return Err(Error::TangencyUnresolved(r));
    }
    Ok(Crossing { r, tangent: false })
}

/// Free-function form of [`SimpleDomain::intersect_ray`].
pub fn intersect_ray(domain: &SimpleDomain, direction: Vec3) -> Result<IntersectionSet> {
    domain.intersect_ray(direction)
}

/// Free-function form of [`SimpleDomain::covered_length`].
pub fn covered_length(domain: &SimpleDomain, direction: Vec3) -> Result<f64> {
    domain.covered_length(direction)
}
