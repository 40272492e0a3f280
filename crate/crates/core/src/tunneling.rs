//! Multi-interval eigenvalue pipeline: per-interval determinant zeros, their
//! propagation through every boundary radius of a ray, and the union over
//! all inside intervals.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::determinant::DeterminantFunction;
use crate::error::{Error, Result};
use crate::geometry::{IntersectionSet, IntervalSpec};
use crate::medium::RadialProfile;
use crate::radial_ode::{OdeOptions, Start};
use crate::specialfn::AngularOrder;
use crate::spectra::{
    find_zeros, is_degenerate, lex_order, EigenvalueRecord, RootOptions, SearchRectangle, UnresolvedBox,
    DEGENERATE_THRESHOLD,
};

type C = Complex64;

/// Normalized interface residual below which an eigenvalue propagates.
pub const PROPAGATION_TOL: f64 = 1e-7;
/// Records closer than this are merged in the union spectrum.
pub const DEDUP_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Propagates,
    /// Index into [`TunnelingChain::radii`] of the first failing interface.
    FailsAt(usize),
}

impl Verdict {
    pub fn propagates(&self) -> bool {
        matches!(self, Verdict::Propagates)
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Propagates => write!(f, "propagates"),
            Verdict::FailsAt(j) => write!(f, "fails_at({j})"),
        }
    }
}

/// Reference point of each interval's radial problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchoring {
    /// Radius measured from the interval's entry point; every interval is an
    /// origin-started problem for the shifted profile.
    #[default]
    Local,
    /// Radius measured from the ray origin; intervals not touching the origin
    /// start from free-space data at their entry radius.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TunnelOptions {
    pub anchoring: Anchoring,
    pub roots: RootOptions,
    pub ode: OdeOptions,
    pub propagation_tol: f64,
    pub dedup_tol: f64,
}

impl Default for TunnelOptions {
    fn default() -> Self {
        Self {
            anchoring: Anchoring::Local,
            roots: RootOptions::default(),
            ode: OdeOptions::default(),
            propagation_tol: PROPAGATION_TOL,
            dedup_tol: DEDUP_TOL,
        }
    }
}

/// Inside/outside intervals of one ray in chain order, starting at the
/// reference radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainLayout {
    intervals: Vec<IntervalSpec>,
}

impl ChainLayout {
    /// Sorts, merges neighbours with equal labels and drops everything before
    /// the first inside interval. Interval indices are renumbered.
    pub fn from_intervals(intervals: &[IntervalSpec]) -> Result<Self> {
        let mut v: Vec<IntervalSpec> = intervals.iter().copied().filter(|i| i.hi > i.lo).collect();
        v.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for w in v.windows(2) {
            if (w[1].lo - w[0].hi).abs() > 1e-12 * w[0].hi.max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "intervals [{}, {}] and [{}, {}] are not contiguous",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                )));
            }
        }
        let mut merged: Vec<IntervalSpec> = Vec::new();
        for i in v {
            let empty = merged.is_empty();
            match merged.last_mut() {
                Some(last) if last.inside == i.inside => last.hi = i.hi,
                _ if empty && !i.inside => {}
                _ => merged.push(i),
            }
        }
        for (j, i) in merged.iter_mut().enumerate() {
            i.j = j;
        }
        Ok(Self { intervals: merged })
    }

    pub fn from_intersections(set: &IntersectionSet) -> Self {
        Self::from_intervals(&set.intervals()).expect("intersection intervals are contiguous")
    }

    pub fn intervals(&self) -> &[IntervalSpec] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// `r_0 < r_1 < ... < r_M`: the reference radius and every interval end.
    pub fn radii(&self) -> Vec<f64> {
        match self.intervals.first() {
            None => Vec::new(),
            Some(first) => std::iter::once(first.lo).chain(self.intervals.iter().map(|i| i.hi)).collect(),
        }
    }
}

/// Determinant of one interval's radial problem, evaluated at its exit radius.
pub fn interval_determinant(
    l: AngularOrder,
    profile: &RadialProfile,
    interval: &IntervalSpec,
    opts: &TunnelOptions,
) -> Result<DeterminantFunction> {
    if !(interval.hi > interval.lo) || interval.lo < 0.0 {
        return Err(Error::InvalidArgument(format!("bad interval [{}, {}]", interval.lo, interval.hi)));
    }
    match (opts.anchoring, interval.lo == 0.0) {
        (_, true) => DeterminantFunction::new(l, profile, interval.hi, Start::Origin, opts.ode),
        (Anchoring::Local, false) => DeterminantFunction::new(
            l,
            &profile.shifted(interval.lo),
            interval.hi - interval.lo,
            Start::Origin,
            opts.ode,
        ),
        (Anchoring::Global, false) => {
            DeterminantFunction::new(l, profile, interval.hi, Start::Interface(interval.lo), opts.ode)
        }
    }
}

/// Zeros of one interval's determinant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSpectrum {
    pub interval: IntervalSpec,
    pub records: Vec<EigenvalueRecord>,
    pub unresolved: Vec<UnresolvedBox>,
    /// The determinant vanished on the probe grid; no zeros were sought.
    pub degenerate: bool,
}

pub fn interval_eigenvalues(
    l: AngularOrder,
    profile: &RadialProfile,
    interval: &IntervalSpec,
    rect: &SearchRectangle,
    opts: &TunnelOptions,
) -> Result<IntervalSpectrum> {
    let f = interval_determinant(l, profile, interval, opts)?;
    let mut out =
        IntervalSpectrum { interval: *interval, records: Vec::new(), unresolved: Vec::new(), degenerate: false };
    if is_degenerate(&f, rect, DEGENERATE_THRESHOLD)? {
        log::info!("interval [{}, {}] has a degenerate determinant", interval.lo, interval.hi);
        out.degenerate = true;
        return Ok(out);
    }
    let rep = find_zeros(&f, rect, &opts.roots)?;
    out.unresolved = rep.unresolved;
    out.records = rep
        .records
        .into_iter()
        .map(|mut r| {
            r.l = l;
            r.sources = vec![interval.j];
            r
        })
        .collect();
    Ok(out)
}

/// Residuals of one `k` at every radius of a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunnelingChain {
    pub l: AngularOrder,
    pub k: C,
    pub radii: Vec<f64>,
    /// Normalized `|D|` at each radius; the reference radius carries the
    /// starting data and has residual 0.
    pub interface_residuals: Vec<f64>,
    /// Per interval: the determinant is identically ~0 (free-space interval).
    pub interval_degenerate: Vec<bool>,
    pub verdict: Verdict,
}

impl TunnelingChain {
    pub fn max_residual(&self) -> f64 {
        self.interface_residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Every interval is free space, so every `k` propagates vacuously.
    pub fn degenerate(&self) -> bool {
        self.interval_degenerate.iter().all(|d| *d)
    }
}

fn is_free(profile: &RadialProfile, iv: &IntervalSpec) -> bool {
    (0..=64).all(|i| {
        let r = iv.lo + (iv.hi - iv.lo) * (i as f64 + 0.5) / 65.0;
        (profile.n(r) - 1.0).abs() < 1e-12
    })
}

pub fn propagate_layout(
    l: AngularOrder,
    k: C,
    profile: &RadialProfile,
    layout: &ChainLayout,
    opts: &TunnelOptions,
) -> Result<TunnelingChain> {
    let mut residuals = vec![0.0];
    let mut degenerate = Vec::new();
    for iv in layout.intervals() {
        let f = interval_determinant(l, profile, iv, opts)?;
        residuals.push(f.eval(k)?.value.norm());
        degenerate.push(is_free(profile, iv));
    }
    let verdict = match residuals.iter().position(|&r| !(r < opts.propagation_tol)) {
        None => Verdict::Propagates,
        Some(j) => Verdict::FailsAt(j),
    };
    if layout.is_empty() {
        residuals.clear();
    }
    Ok(TunnelingChain {
        l,
        k,
        radii: layout.radii(),
        interface_residuals: residuals,
        interval_degenerate: degenerate,
        verdict,
    })
}

/// Carries `k` through every interval of the ray and records the normalized
/// determinant at each boundary radius.
pub fn propagate(
    l: AngularOrder,
    k: C,
    profile: &RadialProfile,
    intersections: &IntersectionSet,
    opts: &TunnelOptions,
) -> Result<TunnelingChain> {
    propagate_layout(l, k, profile, &ChainLayout::from_intersections(intersections), opts)
}

/// Union of the interval spectra along one ray, annotated with propagation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub l: AngularOrder,
    pub radii: Vec<f64>,
    pub records: Vec<EigenvalueRecord>,
    pub unresolved: Vec<UnresolvedBox>,
    /// Indices of inside intervals whose determinant was degenerate.
    pub degenerate_intervals: Vec<usize>,
}

impl Spectrum {
    /// The records whose verdict is `propagates`.
    pub fn propagating(&self) -> Vec<&EigenvalueRecord> {
        self.records.iter().filter(|r| r.verdict.is_some_and(|v| v.propagates())).collect()
    }
}

fn dedup(mut records: Vec<EigenvalueRecord>, tol: f64) -> Vec<EigenvalueRecord> {
    records.sort_by(|a, b| lex_order(a.k, b.k));
    let mut out: Vec<EigenvalueRecord> = Vec::new();
    for r in records {
        let dup = out.iter_mut().rev().take_while(|o| r.k.re - o.k.re <= tol).find(|o| (o.k - r.k).norm() <= tol);
        match dup {
            Some(o) => {
                for s in r.sources {
                    if !o.sources.contains(&s) {
                        o.sources.push(s);
                    }
                }
                o.sources.sort_unstable();
                o.collision = o.sources.len() > 1;
            }
            None => out.push(r),
        }
    }
    out
}

pub fn full_spectrum_layout(
    l: AngularOrder,
    profile: &RadialProfile,
    layout: &ChainLayout,
    rect: &SearchRectangle,
    opts: &TunnelOptions,
) -> Result<Spectrum> {
    let inside: Vec<IntervalSpec> = layout.intervals().iter().copied().filter(|i| i.inside).collect();
    let parts =
        inside.par_iter().map(|iv| interval_eigenvalues(l, profile, iv, rect, opts)).collect::<Result<Vec<_>>>()?;
    let mut all = Vec::new();
    let mut unresolved = Vec::new();
    let mut degenerate_intervals = Vec::new();
    for p in parts {
        if p.degenerate {
            degenerate_intervals.push(p.interval.j);
        }
        all.extend(p.records);
        unresolved.extend(p.unresolved);
    }
    let mut records = dedup(all, opts.dedup_tol);
    let chains =
        records.par_iter().map(|r| propagate_layout(l, r.k, profile, layout, opts)).collect::<Result<Vec<_>>>()?;
    for (r, c) in records.iter_mut().zip(chains) {
        r.interface_residuals = c.interface_residuals;
        r.verdict = Some(c.verdict);
    }
    Ok(Spectrum { l, radii: layout.radii(), records, unresolved, degenerate_intervals })
}

/// Union over all inside intervals of their determinant zeros inside `rect`,
/// merged at `dedup_tol`, each with its propagation verdict.
pub fn full_spectrum(
    l: AngularOrder,
    profile: &RadialProfile,
    intersections: &IntersectionSet,
    rect: &SearchRectangle,
    opts: &TunnelOptions,
) -> Result<Spectrum> {
    full_spectrum_layout(l, profile, &ChainLayout::from_intersections(intersections), rect, opts)
}
