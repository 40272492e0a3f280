//! Spectral comparison of media along a ray and parametric profile recovery
//! from eigenvalues.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::determinant::DeterminantFunction;
use crate::error::{Error, Result};
use crate::geometry::SimpleDomain;
use crate::medium::{check_direction, MediumField, RadialProfile, Vec3};
use crate::radial_ode::Start;
use crate::specialfn::AngularOrder;
use crate::spectra::{find_zeros, EigenvalueRecord, SearchRectangle};
use crate::tunneling::{full_spectrum, TunnelOptions};

type C = Complex64;

const DEDUP_TOL: f64 = 1e-7;
const TRUNCATION_SLACK: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub k: C,
    pub l: AngularOrder,
    pub multiplicity: u32,
}

/// Eigenvalues of one medium along one direction, truncated to a rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSample {
    /// Sorted by `(|k|, arg k)`, then `l`.
    pub entries: Vec<SpectrumEntry>,
    pub direction: Vec3,
    pub rect: SearchRectangle,
}

fn modulus_order(a: &SpectrumEntry, b: &SpectrumEntry) -> Ordering {
    a.k.norm().total_cmp(&b.k.norm()).then(a.k.arg().total_cmp(&b.k.arg())).then(a.l.cmp(&b.l))
}

impl SpectrumSample {
    pub fn new(mut entries: Vec<SpectrumEntry>, direction: Vec3, rect: SearchRectangle) -> Self {
        entries.sort_by(modulus_order);
        let mut out: Vec<SpectrumEntry> = Vec::with_capacity(entries.len());
        for e in entries {
            if !out.iter().any(|o| o.l == e.l && (o.k - e.k).norm() <= DEDUP_TOL) {
                out.push(e);
            }
        }
        Self { entries: out, direction, rect }
    }

    pub fn from_records<'a>(
        records: impl IntoIterator<Item = &'a EigenvalueRecord>,
        direction: Vec3,
        rect: SearchRectangle,
    ) -> Self {
        let entries =
            records.into_iter().map(|r| SpectrumEntry { k: r.k, l: r.l, multiplicity: r.multiplicity }).collect();
        Self::new(entries, direction, rect)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn orders(&self) -> Vec<AngularOrder> {
        let mut ls: Vec<AngularOrder> = self.entries.iter().map(|e| e.l).collect();
        ls.sort();
        ls.dedup();
        ls
    }

    /// Eigenvalues of order `l` with `|k| <= k_cut`, repeated by multiplicity.
    fn of_order(&self, l: AngularOrder, k_cut: f64) -> Vec<C> {
        self.entries
            .iter()
            .filter(|e| e.l == l && e.k.norm() <= k_cut)
            .flat_map(|e| std::iter::repeat_n(e.k, e.multiplicity.max(1) as usize))
            .collect()
    }
}

/// Greedy pairing: repeatedly joins the closest remaining pair, ties broken
/// by modulus order. Returns index pairs and the unpaired indices of each side.
fn greedy_pairs(a: &[C], b: &[C]) -> (Vec<(usize, usize)>, Vec<usize>, Vec<usize>) {
    let mut cand: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            cand.push(((x - y).norm(), i, j));
        }
    }
    cand.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
    let (mut used_a, mut used_b) = (vec![false; a.len()], vec![false; b.len()]);
    let mut pairs = Vec::new();
    for (_, i, j) in cand {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            pairs.push((i, j));
        }
    }
    let free = |u: &[bool]| u.iter().enumerate().filter(|(_, x)| !**x).map(|(i, _)| i).collect();
    (pairs, free(&used_a), free(&used_b))
}

/// Root-mean-square matching distance between two truncated spectra.
///
/// Entries with `|k| <= k_cut`, counted with multiplicity, are paired within
/// each `l` by repeatedly joining the closest remaining pair; each unpaired
/// entry contributes `k_cut`. The result is symmetric and vanishes exactly
/// when every entry has a partner at distance 0.
pub fn spectral_distance(s1: &SpectrumSample, s2: &SpectrumSample, k_cut: f64) -> Result<f64> {
    let mut orders = s1.orders();
    orders.extend(s2.orders());
    orders.sort();
    orders.dedup();
    let (mut sum, mut terms) = (0.0, 0usize);
    let (mut n1, mut n2) = (0usize, 0usize);
    for l in orders {
        let (a, b) = (s1.of_order(l, k_cut), s2.of_order(l, k_cut));
        n1 += a.len();
        n2 += b.len();
        let (pairs, fa, fb) = greedy_pairs(&a, &b);
        for (i, j) in &pairs {
            sum += (a[*i] - b[*j]).norm_sqr();
        }
        sum += (fa.len() + fb.len()) as f64 * k_cut * k_cut;
        terms += pairs.len() + fa.len() + fb.len();
    }
    if n1.abs_diff(n2) as f64 > TRUNCATION_SLACK * n1.max(n2) as f64 {
        return Err(Error::IncompatibleTruncation(n1, n2));
    }
    if terms == 0 {
        return Ok(0.0);
    }
    Ok((sum / terms as f64).sqrt())
}

/// Eigenvalues of `field` along `direction` for each order, propagating
/// records only.
pub fn ray_spectrum(
    field: &MediumField,
    direction: Vec3,
    l_list: &[AngularOrder],
    rect: &SearchRectangle,
    opts: &TunnelOptions,
) -> Result<SpectrumSample> {
    let direction = check_direction(direction)?;
    let domain = SimpleDomain::from_medium(field)?;
    let set = domain.intersect_ray(direction)?;
    let profile = field.restrict_to_ray(direction)?;
    let mut records = Vec::new();
    for &l in l_list {
        let spec = full_spectrum(l, &profile, &set, rect, opts)?;
        records.extend(spec.propagating().into_iter().cloned());
    }
    Ok(SpectrumSample::from_records(&records, direction, *rect))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum ProbeVerdict {
    Distinct { l: AngularOrder, distance: f64 },
    IndistinguishableAtResolution { max_distance: f64 },
}

/// Compares the ray spectra of two media order by order.
#[allow(clippy::too_many_arguments)]
pub fn uniqueness_probe(
    field1: &MediumField,
    field2: &MediumField,
    direction: Vec3,
    l_list: &[AngularOrder],
    rect: &SearchRectangle,
    tol: f64,
    opts: &TunnelOptions,
) -> Result<ProbeVerdict> {
    let k_cut = rect.re_max.abs().max(rect.re_min.abs());
    let mut max_distance = 0.0f64;
    for &l in l_list {
        let (a, b) = rayon::join(
            || ray_spectrum(field1, direction, &[l], rect, opts),
            || ray_spectrum(field2, direction, &[l], rect, opts),
        );
        let d = match spectral_distance(&a?, &b?, k_cut) {
            Ok(d) => d,
            Err(Error::IncompatibleTruncation(n1, n2)) => {
                log::info!("order {}: {n1} vs {n2} eigenvalues", l.get());
                f64::INFINITY
            }
            Err(e) => return Err(e),
        };
        if d > tol {
            return Ok(ProbeVerdict::Distinct { l, distance: d });
        }
        max_distance = max_distance.max(d);
    }
    Ok(ProbeVerdict::IndistinguishableAtResolution { max_distance })
}

/// Radial profile families for the fit, parametrized by refractive indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileFamily {
    /// `n = p[0]` on `[0, radius)`.
    ConstantBall { radius: f64 },
    /// `n = p[0]` on `[0, inner_radius)`, `p[1]` on `[inner_radius, radius)`.
    TwoLayer { inner_radius: f64, radius: f64 },
}

impl ProfileFamily {
    pub fn dimension(&self) -> usize {
        match self {
            ProfileFamily::ConstantBall { .. } => 1,
            ProfileFamily::TwoLayer { .. } => 2,
        }
    }

    pub fn radius(&self) -> f64 {
        match *self {
            ProfileFamily::ConstantBall { radius } | ProfileFamily::TwoLayer { radius, .. } => radius,
        }
    }

    pub fn profile(&self, p: &[f64]) -> Result<RadialProfile> {
        if p.len() != self.dimension() || p.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidArgument(format!("bad parameters {p:?} for {self:?}")));
        }
        Ok(match *self {
            ProfileFamily::ConstantBall { radius } => RadialProfile::constant(p[0], radius),
            ProfileFamily::TwoLayer { inner_radius, radius } => {
                let (a, b) = (p[0], p[1]);
                RadialProfile::from_fn(
                    move |r| {
                        if r < inner_radius {
                            a
                        } else if r < radius {
                            b
                        } else {
                            1.0
                        }
                    },
                    vec![inner_radius, radius],
                    radius,
                )
            }
        })
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ProfileFamily::ConstantBall { radius } => radius > 0.0,
            ProfileFamily::TwoLayer { inner_radius, radius } => inner_radius > 0.0 && radius > inner_radius,
        };
        if !ok {
            return Err(Error::InvalidArgument(format!("bad family geometry {self:?}")));
        }
        Ok(())
    }
}

/// Zeros of the ball determinant of `profile` for each order in `orders`.
pub fn model_spectrum(
    profile: &RadialProfile,
    radius: f64,
    orders: &[AngularOrder],
    rect: &SearchRectangle,
    opts: &TunnelOptions,
) -> Result<Vec<SpectrumEntry>> {
    let mut out = Vec::new();
    for &l in orders {
        let f = DeterminantFunction::new(l, profile, radius, Start::Origin, opts.ode)?;
        let rep = find_zeros(&f, rect, &opts.roots)?;
        out.extend(rep.records.iter().map(|r| SpectrumEntry { k: r.k, l, multiplicity: r.multiplicity }));
    }
    Ok(out)
}

/// Squared mismatch of a model spectrum against the target.
///
/// Target and model are expanded by multiplicity and paired greedily within
/// each order; every target entry is compared through the centroid of the
/// model zeros paired with its copies, so a multiple zero that splits under
/// perturbation contributes a smooth term. Unpaired target copies cost
/// `penalty^2` each.
pub fn fit_mismatch(target: &[SpectrumEntry], model: &[SpectrumEntry], penalty: f64) -> f64 {
    let mut orders: Vec<AngularOrder> = target.iter().map(|e| e.l).collect();
    orders.sort();
    orders.dedup();
    let mut total = 0.0;
    for l in orders {
        let expand = |v: &[SpectrumEntry]| -> (Vec<C>, Vec<usize>) {
            let mut pts = Vec::new();
            let mut owner = Vec::new();
            for (i, e) in v.iter().enumerate().filter(|(_, e)| e.l == l) {
                for _ in 0..e.multiplicity.max(1) {
                    pts.push(e.k);
                    owner.push(i);
                }
            }
            (pts, owner)
        };
        let (tp, towner) = expand(target);
        let (mp, _) = expand(model);
        let (pairs, free_t, _) = greedy_pairs(&tp, &mp);
        let mut groups: std::collections::BTreeMap<usize, (C, C, f64)> = Default::default();
        for (i, j) in pairs {
            let g = groups.entry(towner[i]).or_insert((tp[i], C::new(0.0, 0.0), 0.0));
            g.1 += mp[j];
            g.2 += 1.0;
        }
        for (_, (kt, sum, n)) in groups {
            total += n * (sum / n - kt).norm_sqr();
        }
        total += free_t.len() as f64 * penalty * penalty;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Stop once the mismatch falls below this.
    pub mismatch_tol: f64,
    /// Initial trust radius, relative to the parameter bounds' width.
    pub initial_radius: f64,
    /// Stop once the trust radius falls below this (absolute).
    pub min_radius: f64,
    /// The model rectangle extends the target's by this on each side, so
    /// target entries near the edge keep their partners.
    pub margin: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iterations: 200, mismatch_tol: 1e-8, initial_radius: 0.1, min_radius: 1e-10, margin: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub parameters: Vec<f64>,
    pub mismatch: f64,
    pub iterations: usize,
    pub converged: bool,
    pub evaluations: usize,
    /// Mismatch after each accepted step, starting with the initial guess.
    pub history: Vec<f64>,
}

struct Objective<'a> {
    family: ProfileFamily,
    target: &'a SpectrumSample,
    orders: Vec<AngularOrder>,
    rect: SearchRectangle,
    penalty: f64,
    opts: &'a TunnelOptions,
}

impl Objective<'_> {
    fn eval(&self, p: &[f64]) -> Result<f64> {
        let profile = self.family.profile(p)?;
        let model = model_spectrum(&profile, self.family.radius(), &self.orders, &self.rect, self.opts)?;
        Ok(fit_mismatch(&self.target.entries, &model, self.penalty))
    }
}

fn vertex_of_parabola(x: [f64; 3], y: [f64; 3]) -> Option<f64> {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let curv = (d2 - d1) / (x[2] - x[0]);
    if !(curv > 0.0) {
        return None;
    }
    Some(0.5 * (x[0] + x[1]) - d1 / (2.0 * curv))
}

/// Fits the family parameters to the target spectrum.
///
/// Each iteration sweeps the coordinates: the mismatch is sampled at
/// `x_i +- delta`, a parabola through the three values proposes a step
/// limited to the trust radius, and the best of the sampled and proposed
/// points is accepted if it lowers the mismatch. The radius doubles after
/// an improving sweep and halves otherwise.
pub fn fit_profile(
    target: &SpectrumSample,
    family: ProfileFamily,
    init: &[f64],
    bounds: &[(f64, f64)],
    fit: &FitOptions,
    opts: &TunnelOptions,
) -> Result<FitResult> {
    family.validate()?;
    let dim = family.dimension();
    if init.len() != dim || bounds.len() != dim {
        return Err(Error::InvalidArgument(format!("family {family:?} takes {dim} parameters")));
    }
    for (i, (&x, &(lo, hi))) in init.iter().zip(bounds).enumerate() {
        if !(lo < hi) || !(lo > 0.0) || !(x >= lo && x <= hi) {
            return Err(Error::InvalidArgument(format!("parameter {i}: init {x} outside bounds [{lo}, {hi}]")));
        }
    }
    if target.len() < 3 * dim {
        return Err(Error::InvalidArgument(format!(
            "target has {} eigenvalues, at least {} needed",
            target.len(),
            3 * dim
        )));
    }
    let r = target.rect;
    let m = fit.margin;
    let objective = Objective {
        family,
        target,
        orders: target.orders(),
        rect: SearchRectangle::new((r.re_min - m).max(0.25 * r.re_min), r.re_max + m, r.im_min - m, r.im_max + m)?,
        penalty: r.re_max.abs().max(r.re_min.abs()),
        opts,
    };
    let mut x = init.to_vec();
    let mut fx = objective.eval(&x)?;
    let mut evaluations = 1;
    let mut history = vec![fx];
    let mut delta: Vec<f64> = bounds.iter().map(|(lo, hi)| fit.initial_radius * (hi - lo)).collect();
    let mut iterations = 0;
    while iterations < fit.max_iterations && fx >= fit.mismatch_tol && delta.iter().any(|d| *d >= fit.min_radius) {
        iterations += 1;
        let mut improved = false;
        for i in 0..dim {
            let (lo, hi) = bounds[i];
            let d = delta[i];
            let trial = |v: f64| {
                let mut p = x.clone();
                p[i] = v.clamp(lo, hi);
                p
            };
            let (xm, xp) = (trial(x[i] - d), trial(x[i] + d));
            let (fm, fp) = rayon::join(|| objective.eval(&xm), || objective.eval(&xp));
            let (fm, fp) = (fm?, fp?);
            evaluations += 2;
            let mut best = (fx, x.clone());
            for (f, p) in [(fm, xm.clone()), (fp, xp.clone())] {
                if f < best.0 {
                    best = (f, p);
                }
            }
            if xm[i] < x[i] && xp[i] > x[i] {
                if let Some(v) = vertex_of_parabola([xm[i], x[i], xp[i]], [fm, fx, fp]) {
                    let v = v.clamp(x[i] - 2.0 * d, x[i] + 2.0 * d);
                    let p = trial(v);
                    if p[i] != x[i] && p[i] != xm[i] && p[i] != xp[i] {
                        let f = objective.eval(&p)?;
                        evaluations += 1;
                        if f < best.0 {
                            best = (f, p);
                        }
                    }
                }
            }
            if best.0 < fx {
                let step = (best.1[i] - x[i]).abs();
                fx = best.0;
                x = best.1;
                history.push(fx);
                improved = true;
                delta[i] = if step >= 0.99 * d { 2.0 * d } else { step.max(0.5 * d) };
            } else {
                delta[i] = 0.25 * d;
            }
            log::debug!(
                "fit iteration {iterations}, coordinate {i}: x = {x:?}, mismatch = {fx:e}, radius = {}",
                delta[i]
            );
            if fx < fit.mismatch_tol {
                break;
            }
        }
        if !improved {
            log::debug!("sweep {iterations} without improvement");
        }
    }
    Ok(FitResult { parameters: x, mismatch: fx, iterations, converged: fx < fit.mismatch_tol, evaluations, history })
}
