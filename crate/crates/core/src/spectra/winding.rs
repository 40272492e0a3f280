use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::Mutex;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{EntireFunction, RootOptions, SearchRectangle};
use crate::error::{Error, Result};
use crate::scaled::Scaled;

type C = Complex64;
type EdgeKey = (u64, u64, u64, u64);
type PointKey = (u64, u64);

/// Contour evaluator shared by the root finder and the sector counter.
///
/// Long axis-parallel edges are sampled on a global grid, and both point
/// values and edge totals are memoized, so nested boxes reuse the samples of
/// their parents and siblings.
pub(crate) struct Contour<'a, F: ?Sized> {
    pub f: &'a F,
    pub opts: &'a RootOptions,
    memo: Mutex<HashMap<EdgeKey, f64>>,
    points: Mutex<HashMap<PointKey, Scaled>>,
}

impl<'a, F: EntireFunction + ?Sized> Contour<'a, F> {
    pub fn new(f: &'a F, opts: &'a RootOptions) -> Self {
        Self { f, opts, memo: Mutex::new(HashMap::new()), points: Mutex::new(HashMap::new()) }
    }

    pub fn sample(&self, k: C) -> Result<Scaled> {
        let key = (k.re.to_bits(), k.im.to_bits());
        if let Some(&v) = self.points.lock().expect("point lock").get(&key) {
            return Ok(v);
        }
        let v = self.f.eval(k)?;
        if !v.is_finite() {
            return Err(Error::NonFinite(k));
        }
        self.points.lock().expect("point lock").insert(key, v);
        Ok(v)
    }

    /// Sample points of the segment `a -> b`, endpoints included.
    fn edge_points(&self, a: C, b: C) -> Vec<C> {
        let len = (b - a).norm();
        let grid = 1.0 / self.opts.samples_per_unit;
        let horizontal = a.im == b.im && b.re > a.re;
        let vertical = a.re == b.re && b.im > a.im;
        if len >= 16.0 * grid && (horizontal || vertical) {
            let (lo, hi) = if horizontal { (a.re, b.re) } else { (a.im, b.im) };
            let first = (lo / grid).floor() as i64 + 1;
            let last = (hi / grid).ceil() as i64 - 1;
            let mut pts = vec![a];
            for i in first..=last {
                let t = i as f64 * grid;
                if t > lo && t < hi {
                    pts.push(if horizontal { C::new(t, a.im) } else { C::new(a.re, t) });
                }
            }
            pts.push(b);
            return pts;
        }
        let n = 16usize.max((len * self.opts.samples_per_unit).ceil() as usize);
        (0..=n).map(|i| a + (b - a) * (i as f64 / n as f64)).collect()
    }

    fn check_modulus(&self, v: &Scaled) -> Result<()> {
        let m = v.value.norm();
        if m < self.opts.min_modulus {
            return Err(Error::BoundaryZero { min_modulus: m });
        }
        Ok(())
    }

    /// Argument change of `f` along the straight segment `a -> b`.
    pub fn edge_arg(&self, a: C, b: C) -> Result<f64> {
        let key = (a.re.to_bits(), a.im.to_bits(), b.re.to_bits(), b.im.to_bits());
        if let Some(&v) = self.memo.lock().expect("memo lock").get(&key) {
            return Ok(v);
        }
        let pts = self.edge_points(a, b);
        let n = pts.len() - 1;
        let vals: Vec<Scaled> = pts.par_iter().map(|&k| self.sample(k)).collect::<Result<_>>()?;
        for v in &vals {
            self.check_modulus(v)?;
        }
        let parts: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| self.refine(pts[i], pts[i + 1], vals[i].value, vals[i + 1].value))
            .collect::<Result<_>>()?;
        let total: f64 = parts.iter().sum();
        self.memo.lock().expect("memo lock").insert(key, total);
        Ok(total)
    }

    // The midpoint is always sampled: near a multiple zero the phase can turn
    // by more than 2pi across one segment and alias to a small increment.
    fn refine(&self, a: C, b: C, fa: C, fb: C) -> Result<f64> {
        let m = 0.5 * (a + b);
        let fm = self.sample(m)?;
        self.check_modulus(&fm)?;
        let (d1, d2) = ((fm.value / fa).arg(), (fb / fm.value).arg());
        if d1.abs() < FRAC_PI_4 && d2.abs() < FRAC_PI_4 {
            return Ok(d1 + d2);
        }
        if (b - a).norm() < 1e-13 * a.norm().max(1.0) {
            return Err(Error::BoundaryZero { min_modulus: fa.norm().min(fb.norm()) });
        }
        Ok(self.refine(a, m, fa, fm.value)? + self.refine(m, b, fm.value, fb)?)
    }

    /// Winding number of `f` along the boundary of `rect`, counterclockwise.
    pub fn rect_winding(&self, rect: &SearchRectangle) -> Result<i64> {
        let [ll, lr, ur, ul] = rect.corners();
        // edges are sampled in a canonical direction so shared cuts coincide
        let total = self.edge_arg(ll, lr)? + self.edge_arg(lr, ur)? - self.edge_arg(ul, ur)? - self.edge_arg(ll, ul)?;
        round_winding(total)
    }

    /// Winding with outward jitter on boundary zeros; returns the rectangle used.
    pub fn jittered_winding(&self, rect: SearchRectangle) -> Result<(i64, SearchRectangle)> {
        let mut r = rect;
        let diag = rect.diagonal();
        let mut attempt = 0;
        loop {
            match self.rect_winding(&r) {
                Ok(w) => return Ok((w, r)),
                Err(e @ (Error::BoundaryZero { .. } | Error::NonIntegerWinding(_))) => {
                    if attempt >= self.opts.max_jitter {
                        return Err(e);
                    }
                    // outward, uneven per side, growing tenfold per retry
                    let base = 1e-6 * diag * 10f64.powi(attempt as i32);
                    r = rect.expanded([base * 1.00, base * 1.13, base * 1.27, base * 1.41]);
                    attempt += 1;
                    log::debug!("boundary zero on contour, jitter {attempt} -> {r:?}");
                }
                Err(e) => return Err(e),
            }
        }
    }
}

pub(crate) fn round_winding(total: f64) -> Result<i64> {
    let w = total / (2.0 * PI);
    let r = w.round();
    if (w - r).abs() > 0.25 {
        return Err(Error::NonIntegerWinding(w));
    }
    Ok(r as i64)
}

/// Number of zeros (with multiplicity) of `f` inside `rect`.
///
/// Each contour segment is bisected until both halves turn the phase by less
/// than `pi/4`. Zeros on the contour raise [`Error::BoundaryZero`]; this
/// entry point does not jitter.
pub fn winding_count<F: EntireFunction + ?Sized>(f: &F, rect: &SearchRectangle, opts: &RootOptions) -> Result<i64> {
    Contour::new(f, opts).rect_winding(rect)
}
