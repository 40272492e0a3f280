//! Radial equation `y'' + (k^2 n(r) - l(l+1)/r^2) y = 0` along one ray.
//!
//! Integration uses the Dormand-Prince 5(4) pair on `(y, y')`, with profile
//! breakpoints as mandatory step boundaries. Values carry a separate
//! logarithmic scale so that solutions growing like `exp(B(r)|Im k|)` stay
//! representable.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::RadialProfile;
use crate::specialfn::{
    spherical_bessel_j_scaled, spherical_bessel_j_with_derivative_scaled, spherical_harmonic, AngularOrder,
    SphericalIndex,
};

/// Default bound on `|k|`.
pub const K_MAX_DEFAULT: f64 = 1e3;

/// Starting radius of the regular-solution series for `l >= 1`.
pub const R_EPS: f64 = 1e-4;

const RESCALE_HIGH: f64 = 1e100;
const RESCALE_LOW: f64 = 1e-100;

type C = Complex64;

/// Solver settings. The defaults are the contract values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdeOptions {
    pub rtol: f64,
    pub k_max: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-11, k_max: K_MAX_DEFAULT }
    }
}

/// Validated complex wavenumber.
pub fn check_wavenumber(k: C, k_max: f64) -> Result<C> {
    if !(k.re.is_finite() && k.im.is_finite()) {
        return Err(Error::NonFinite(k));
    }
    if k.norm() > k_max {
        return Err(Error::WavenumberOutOfRange(k));
    }
    Ok(k)
}

/// Where the initial data is imposed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    /// Regular solution `y ~ r^{l+1}` at the origin.
    Origin,
    /// `y(r0) = r0 j_l(k r0)`, `y'(r0) = j_l(k r0) + k r0 j_l'(k r0)`.
    Interface(f64),
}

/// Mode amplitudes `(a, b)` of the free and the perturbed field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientPair {
    pub a: C,
    pub b: C,
}

/// State `(y, y') * exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialState {
    pub r: f64,
    pub y: C,
    pub dy: C,
    pub log_scale: f64,
}

impl RadialState {
    pub fn y_unscaled(&self) -> C {
        self.y * self.log_scale.exp()
    }

    pub fn dy_unscaled(&self) -> C {
        self.dy * self.log_scale.exp()
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    state: RadialState,
    seg_lo: f64,
    seg_hi: f64,
}

/// Solution on `[r_start, r_end]` (either orientation) with dense output.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    l: AngularOrder,
    k: C,
    start: Start,
    r_start: f64,
    r_end: f64,
    nodes: Vec<Node>,
    profile: RadialProfile,
    rtol: f64,
}

struct Rhs<'a> {
    k2: C,
    k_abs: f64,
    centrifugal: f64,
    profile: &'a RadialProfile,
}

impl Rhs<'_> {
    // n evaluated inside the closed segment, nudged off its ends to get one-sided limits
    fn n(&self, r: f64, lo: f64, hi: f64) -> f64 {
        let delta = 1e-12 * hi.abs().max(1.0);
        let (a, b) = (lo + delta, hi - delta);
        let rr = if a < b { r.clamp(a, b) } else { 0.5 * (lo + hi) };
        self.profile.n(rr)
    }

    fn eval(&self, r: f64, y: [C; 2], seg: (f64, f64)) -> [C; 2] {
        let q = if self.centrifugal == 0.0 { 0.0 } else { self.centrifugal / (r * r) };
        let coef = self.k2 * self.n(r, seg.0, seg.1) - q;
        [y[1], -coef * y[0]]
    }

    fn omega(&self, r: f64, seg: (f64, f64)) -> f64 {
        let wave = self.k_abs * self.n(r, seg.0, seg.1).sqrt();
        let cent = if self.centrifugal == 0.0 { 0.0 } else { self.centrifugal.sqrt() / r.abs() };
        1f64.max(wave).max(cent)
    }
}

// Dormand-Prince 5(4)
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const CN: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// One Dormand-Prince step; returns the new state, the error estimate and the
/// last stage (derivative at the new point).
fn dp_step(rhs: &Rhs, r: f64, y: [C; 2], k1: [C; 2], h: f64, seg: (f64, f64)) -> ([C; 2], [C; 2], [C; 2]) {
    let mut ks = [[C::new(0.0, 0.0); 2]; 7];
    ks[0] = k1;
    for s in 1..7 {
        let mut yi = y;
        for (j, kj) in ks.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                yi[0] += h * a * kj[0];
                yi[1] += h * a * kj[1];
            }
        }
        ks[s] = rhs.eval(r + CN[s] * h, yi, seg);
    }
    // the 7th stage input is the 5th order solution
    let mut ynew = y;
    for (j, kj) in ks.iter().enumerate().take(6) {
        let a = A[6][j];
        ynew[0] += h * a * kj[0];
        ynew[1] += h * a * kj[1];
    }
    let mut err = [C::new(0.0, 0.0); 2];
    for (j, kj) in ks.iter().enumerate() {
        err[0] += h * E[j] * kj[0];
        err[1] += h * E[j] * kj[1];
    }
    (ynew, err, ks[6])
}

fn segments(profile: &RadialProfile, from: f64, to: f64) -> Vec<(f64, f64)> {
    let mut pts: Vec<f64> = profile.breakpoints_between(from, to).collect();
    if to < from {
        pts.reverse();
    }
    let mut out = Vec::with_capacity(pts.len() + 1);
    let mut a = from;
    for b in pts {
        out.push((a, b));
        a = b;
    }
    out.push((a, to));
    out
}

/// Integrates from `init` to `r1`, storing nodes if `sink` is given.
fn integrate(
    rhs: &Rhs,
    init: RadialState,
    r1: f64,
    rtol: f64,
    mut sink: Option<&mut Vec<Node>>,
) -> Result<RadialState> {
    let span = init.r.abs().max(r1.abs());
    let h_min = 1e-14 * span;
    let mut y = [init.y, init.dy];
    let mut log_scale = init.log_scale;
    let mut r = init.r;
    let mut h_prev: Option<f64> = None;
    for (lo, hi) in segments(rhs.profile, init.r, r1) {
        let seg = (lo.min(hi), lo.max(hi));
        let dir = (hi - lo).signum();
        let mut k1 = rhs.eval(r, y, seg);
        let mut h = h_prev.unwrap_or(0.05 / rhs.omega(r, seg)).min((hi - lo).abs());
        if let Some(s) = sink.as_deref_mut() {
            s.push(Node { state: RadialState { r, y: y[0], dy: y[1], log_scale }, seg_lo: seg.0, seg_hi: seg.1 });
        }
        while (hi - r) * dir > 0.0 {
            let remaining = (hi - r).abs();
            let last = h >= remaining * (1.0 - 1e-12);
            let step = if last { remaining } else { h };
            let (ynew, err, k7) = dp_step(rhs, r, y, k1, dir * step, seg);
            let w = rhs.omega(r, seg);
            let scale_old = (w * y[0].norm()).max(y[1].norm());
            let scale_new = (w * ynew[0].norm()).max(ynew[1].norm());
            let tol = rtol * scale_old.max(scale_new) + 1e-300;
            let e = (w * err[0].norm()).max(err[1].norm()) / tol;
            if !e.is_finite() {
                return Err(Error::NonFinite(rhs.k2.sqrt()));
            }
            if e <= 1.0 {
                r = if last { hi } else { r + dir * step };
                y = ynew;
                k1 = k7;
                let mag = y[0].norm().max(y[1].norm());
                if mag > RESCALE_HIGH || (mag < RESCALE_LOW && mag > 0.0) {
                    y[0] /= mag;
                    y[1] /= mag;
                    k1[0] /= mag;
                    k1[1] /= mag;
                    log_scale += mag.ln();
                }
                if let Some(s) = sink.as_deref_mut() {
                    s.push(Node {
                        state: RadialState { r, y: y[0], dy: y[1], log_scale },
                        seg_lo: seg.0,
                        seg_hi: seg.1,
                    });
                }
                let grow = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    h = step * grow;
                    h_prev = Some(h);
                }
            } else {
                h = step * (0.9 * e.powf(-0.2)).clamp(0.1, 0.9);
                if h < h_min {
                    return Err(Error::StepUnderflow { r, h });
                }
            }
        }
    }
    Ok(RadialState { r: r1, y: y[0], dy: y[1], log_scale })
}

/// Regular solution near the origin: `y = sum_m c_m r^{l+1+2m}`, `c_0 = 1`.
pub fn frobenius_start(l: u32, k: C, n0: f64, r: f64) -> (C, C) {
    let k2n = k * k * n0;
    let lf = l as f64;
    let r2 = r * r;
    let mut c = C::new(1.0, 0.0);
    let mut y = c;
    let mut dy = C::new(lf + 1.0, 0.0);
    for m in 1..200u32 {
        let mf = m as f64;
        c *= -k2n * r2 / (2.0 * mf * (2.0 * lf + 2.0 * mf + 1.0));
        y += c;
        dy += (lf + 1.0 + 2.0 * mf) * c;
        if c.norm() <= 1e-17 * y.norm() {
            break;
        }
    }
    let rl = r.powi(l as i32);
    (y * rl * r, dy * rl)
}

/// Initial state for the requested start, placed at the first integration radius.
fn initial_state(l: u32, k: C, profile: &RadialProfile, start: Start, r_end: f64) -> Result<RadialState> {
    match start {
        Start::Origin => {
            if l == 0 {
                return Ok(RadialState { r: 0.0, y: C::new(0.0, 0.0), dy: C::new(1.0, 0.0), log_scale: 0.0 });
            }
            let r_eps = R_EPS.min(r_end);
            let (y, dy) = frobenius_start(l, k, profile.n(0.5 * r_eps), r_eps);
            Ok(RadialState { r: r_eps, y, dy, log_scale: 0.0 })
        }
        Start::Interface(r0) => {
            if !(r0 > 0.0) {
                return Err(Error::InvalidArgument(format!("interface radius {r0} must be positive")));
            }
            let z = k * r0;
            let (j, jp, e) = spherical_bessel_j_with_derivative_scaled(l, z);
            Ok(RadialState { r: r0, y: r0 * j, dy: j + z * jp, log_scale: e })
        }
    }
}

impl RadialSolution {
    /// Integrates with the requested start up to `r_end`.
    pub fn solve(
        l: AngularOrder,
        k: C,
        profile: &RadialProfile,
        start: Start,
        r_end: f64,
        opts: &OdeOptions,
    ) -> Result<Self> {
        let (init, nodes) = run(l, k, profile, start, r_end, opts, true)?;
        Ok(Self { l, k, start, r_start: init.r, r_end, nodes, profile: profile.clone(), rtol: opts.rtol })
    }

    pub fn l(&self) -> AngularOrder {
        self.l
    }

    pub fn k(&self) -> C {
        self.k
    }

    pub fn start(&self) -> Start {
        self.start
    }

    /// `(first, last)` radius of the integration (`first` is `R_EPS` for a
    /// Frobenius start).
    pub fn interval(&self) -> (f64, f64) {
        (self.r_start, self.r_end)
    }

    pub fn end_state(&self) -> RadialState {
        self.nodes.last().expect("at least one node").state
    }

    /// Dense output at `r` by re-stepping from the nearest stored node.
    pub fn eval(&self, r: f64) -> Result<RadialState> {
        let (lo, hi) = (self.r_start.min(self.r_end), self.r_start.max(self.r_end));
        if r < lo - 1e-12 * hi.max(1.0) || r > hi + 1e-12 * hi.max(1.0) {
            // series region below the Frobenius start
            if matches!(self.start, Start::Origin) && r >= 0.0 && r < lo {
                let l = self.l.get();
                let (y, dy) = frobenius_start(l, self.k, self.profile.n(0.5 * lo), r);
                return Ok(RadialState { r, y, dy, log_scale: 0.0 });
            }
            return Err(Error::Domain(format!("r = {r} outside the solution interval [{lo}, {hi}]")));
        }
        let forward = self.r_end >= self.r_start;
        let idx = if forward {
            self.nodes.partition_point(|n| n.state.r <= r)
        } else {
            self.nodes.partition_point(|n| n.state.r >= r)
        };
        let node = self.nodes[idx.saturating_sub(1)];
        let h = r - node.state.r;
        if h == 0.0 {
            return Ok(node.state);
        }
        let rhs = self.rhs();
        let seg = (node.seg_lo, node.seg_hi);
        let y0 = [node.state.y, node.state.dy];
        let k1 = rhs.eval(node.state.r, y0, seg);
        let (y, _, _) = dp_step(&rhs, node.state.r, y0, k1, h, seg);
        Ok(RadialState { r, y: y[0], dy: y[1], log_scale: node.state.log_scale })
    }

    fn rhs(&self) -> Rhs<'_> {
        Rhs { k2: self.k * self.k, k_abs: self.k.norm(), centrifugal: self.l.centrifugal(), profile: &self.profile }
    }

    pub fn rtol(&self) -> f64 {
        self.rtol
    }
}

fn run(
    l: AngularOrder,
    k: C,
    profile: &RadialProfile,
    start: Start,
    r_end: f64,
    opts: &OdeOptions,
    dense: bool,
) -> Result<(RadialState, Vec<Node>)> {
    let k = check_wavenumber(k, opts.k_max)?;
    if !(r_end > 0.0) {
        return Err(Error::InvalidArgument(format!("end radius {r_end} must be positive")));
    }
    if let Start::Interface(r0) = start {
        if r0 == r_end {
            return Err(Error::InvalidArgument("interface start equals end radius".into()));
        }
    }
    let init = initial_state(l.get(), k, profile, start, r_end)?;
    let rhs = Rhs { k2: k * k, k_abs: k.norm(), centrifugal: l.centrifugal(), profile };
    let mut nodes = Vec::new();
    if init.r == r_end {
        nodes.push(Node { state: init, seg_lo: r_end, seg_hi: r_end });
        return Ok((init, nodes));
    }
    let end = integrate(&rhs, init, r_end, opts.rtol, dense.then_some(&mut nodes))?;
    if !dense {
        nodes.push(Node { state: end, seg_lo: r_end, seg_hi: r_end });
    }
    Ok((init, nodes))
}

/// State at `r_end` without storing the trajectory.
pub fn end_state(
    l: AngularOrder,
    k: C,
    profile: &RadialProfile,
    start: Start,
    r_end: f64,
    opts: &OdeOptions,
) -> Result<RadialState> {
    let (_, nodes) = run(l, k, profile, start, r_end, opts, false)?;
    Ok(nodes[nodes.len() - 1].state)
}

/// Carries arbitrary data `init` (at `init.r > 0`) to `r_end`.
pub fn transfer(
    l: AngularOrder,
    k: C,
    profile: &RadialProfile,
    init: RadialState,
    r_end: f64,
    opts: &OdeOptions,
) -> Result<RadialState> {
    let k = check_wavenumber(k, opts.k_max)?;
    if !(init.r > 0.0) || !(r_end > 0.0) {
        return Err(Error::InvalidArgument(format!("radii {} and {r_end} must be positive", init.r)));
    }
    if init.r == r_end {
        return Ok(init);
    }
    let rhs = Rhs { k2: k * k, k_abs: k.norm(), centrifugal: l.centrifugal(), profile };
    integrate(&rhs, init, r_end, opts.rtol, None)
}

pub fn solve_from_origin(l: AngularOrder, k: C, profile: &RadialProfile, r_end: f64) -> Result<RadialSolution> {
    RadialSolution::solve(l, k, profile, Start::Origin, r_end, &OdeOptions::default())
}

pub fn solve_from_interface(
    l: AngularOrder,
    k: C,
    profile: &RadialProfile,
    r_start: f64,
    r_end: f64,
) -> Result<RadialSolution> {
    if !(r_start > 0.0) {
        return Err(Error::InvalidArgument(format!("interface radius {r_start} must be positive")));
    }
    RadialSolution::solve(l, k, profile, Start::Interface(r_start), r_end, &OdeOptions::default())
}

/// `(v, w) = (a j_l(kr) Y_l^m, b y_l(r)/r Y_l^m)` at `(r, theta, phi)`.
pub fn eval_mode_pair(
    idx: SphericalIndex,
    k: C,
    coeffs: CoefficientPair,
    sol: &RadialSolution,
    point: (f64, f64, f64),
) -> Result<(C, C)> {
    let (r, theta, phi) = point;
    let y = sol.eval(r)?;
    let angular = spherical_harmonic(idx, theta, phi);
    let j = spherical_bessel_j_scaled(idx.l(), k * r).to_complex();
    let v = coeffs.a * j * angular;
    let w = coeffs.b * y.y_unscaled() / r * angular;
    Ok((v, w))
}
