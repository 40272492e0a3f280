use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::moments::{power_sums, roots_from_power_sums};
use super::winding::Contour;
use super::{lex_order, EigenvalueRecord, EntireFunction, RootOptions, SearchRectangle, UnresolvedBox, ZeroReport};
use crate::error::{Error, Result};

type C = Complex64;

const MAX_DEPTH: u32 = 64;
const NEWTON_ITERS: usize = 40;
// off-centre split so symmetric spectra do not sit on cut lines
const SPLIT_BIAS: f64 = 0.0137;
const SPLIT_RETRIES: u64 = 6;
const CLUSTER_SPREAD: f64 = 1e-2;

#[derive(Default)]
struct Found {
    records: Vec<EigenvalueRecord>,
    unresolved: Vec<UnresolvedBox>,
}

impl Found {
    fn merge(mut self, other: Found) -> Found {
        self.records.extend(other.records);
        self.unresolved.extend(other.unresolved);
        self
    }
}

pub(crate) struct Locator<'a, F: ?Sized> {
    pub contour: Contour<'a, F>,
}

impl<'a, F: EntireFunction + ?Sized> Locator<'a, F> {
    pub fn new(f: &'a F, opts: &'a RootOptions) -> Self {
        Self { contour: Contour::new(f, opts) }
    }

    fn opts(&self) -> &RootOptions {
        self.contour.opts
    }

    /// Logarithmic derivative `f'/f` by a real central difference; along a
    /// real step the normalization factor is constant and cancels.
    fn log_derivative(&self, k: C) -> Result<(C, f64)> {
        let h = 1e-7 * k.norm().max(1.0);
        let f0 = self.contour.sample(k)?;
        let (fp, fm) = rayon::join(|| self.contour.sample(k + h), || self.contour.sample(k - h));
        let (fp, fm) = (fp?, fm?);
        let rel = |v: &crate::scaled::Scaled| v.value * (v.log_scale - f0.log_scale).exp();
        let d = (rel(&fp) - rel(&fm)) / (2.0 * h);
        Ok((d / f0.value, f0.value.norm()))
    }

    fn newton(&self, rect: &SearchRectangle) -> Result<Option<EigenvalueRecord>> {
        let mut k = rect.center();
        let slack = 0.25 * rect.max_side();
        let mut last_step = f64::INFINITY;
        for _ in 0..NEWTON_ITERS {
            let (ld, modulus) = self.log_derivative(k)?;
            if modulus == 0.0 {
                last_step = 0.0;
                break;
            }
            if !(ld.re.is_finite() && ld.im.is_finite()) || ld.norm() == 0.0 {
                return Ok(None);
            }
            let step = -ld.inv();
            k += step;
            last_step = step.norm();
            let out = k.re < rect.re_min - slack
                || k.re > rect.re_max + slack
                || k.im < rect.im_min - slack
                || k.im > rect.im_max + slack;
            if out {
                return Ok(None);
            }
            if last_step < self.opts().tol {
                break;
            }
        }
        let residual = self.contour.sample(k)?.value.norm();
        let converged = last_step < self.opts().tol.max(1e-13 * k.norm()) * 1e2;
        if !rect.contains(k) || residual >= self.opts().accept_tol || !converged {
            return Ok(None);
        }
        Ok(Some(EigenvalueRecord::new(k, 1, residual)))
    }

    fn cluster(&self, rect: &SearchRectangle, w: i64) -> Result<Option<EigenvalueRecord>> {
        let wu = w as usize;
        let c = rect.center();
        let rho = 0.55 * rect.diagonal();
        let Some(s) = power_sums(&self.contour, c, rho, wu)? else {
            return Ok(None);
        };
        let mean = s[0] / w as f64;
        let spread = roots_from_power_sums(&s).iter().map(|r| (r - mean).norm()).fold(0.0, f64::max);
        if spread > CLUSTER_SPREAD * rho {
            return Ok(None);
        }
        // re-centre on the cluster for a cleaner centroid
        let c2 = c + mean;
        let k = match power_sums(&self.contour, c2, rho, wu)? {
            Some(s2) => c2 + s2[0] / w as f64,
            None => c2,
        };
        if !rect.contains(k) {
            return Ok(None);
        }
        let residual = self.contour.sample(k)?.value.norm();
        if residual >= self.opts().accept_tol {
            return Ok(None);
        }
        Ok(Some(EigenvalueRecord::new(k, w as u32, residual)))
    }

    fn children(&self, rect: &SearchRectangle, attempt: u64) -> Vec<SearchRectangle> {
        let mut jitter = (0.0, 0.0);
        if attempt > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(
                self.opts().seed
                    ^ rect.re_min.to_bits().rotate_left(7)
                    ^ rect.im_min.to_bits().rotate_left(29)
                    ^ attempt,
            );
            jitter = (rng.random_range(-0.12..0.12), rng.random_range(-0.12..0.12));
        }
        let xs = rect.re_min + rect.width() * (0.5 + SPLIT_BIAS + jitter.0);
        let ys = rect.im_min + rect.height() * (0.5 + SPLIT_BIAS * 1.7 + jitter.1);
        let (w, h) = (rect.width(), rect.height());
        let mk = |a, b, c, d| SearchRectangle { re_min: a, re_max: b, im_min: c, im_max: d };
        if w > 2.0 * h {
            vec![mk(rect.re_min, xs, rect.im_min, rect.im_max), mk(xs, rect.re_max, rect.im_min, rect.im_max)]
        } else if h > 2.0 * w {
            vec![mk(rect.re_min, rect.re_max, rect.im_min, ys), mk(rect.re_min, rect.re_max, ys, rect.im_max)]
        } else {
            vec![
                mk(rect.re_min, xs, rect.im_min, ys),
                mk(xs, rect.re_max, rect.im_min, ys),
                mk(rect.re_min, xs, ys, rect.im_max),
                mk(xs, rect.re_max, ys, rect.im_max),
            ]
        }
    }

    /// Splits `rect` into children whose windings add up to `w`.
    pub fn split(&self, rect: &SearchRectangle, w: i64) -> Result<Option<Vec<(SearchRectangle, i64)>>> {
        for attempt in 0..SPLIT_RETRIES {
            let kids = self.children(rect, attempt);
            let windings: Vec<Result<i64>> = par_map(&kids, |r| self.contour.rect_winding(r));
            let mut ok = Vec::with_capacity(kids.len());
            let mut failed = false;
            for (r, wr) in kids.iter().zip(windings) {
                match wr {
                    Ok(v) => ok.push((*r, v)),
                    Err(Error::BoundaryZero { .. } | Error::NonIntegerWinding(_)) => failed = true,
                    Err(e) => return Err(e),
                }
            }
            if !failed && ok.iter().map(|x| x.1).sum::<i64>() == w {
                return Ok(Some(ok));
            }
            log::debug!("split of {rect:?} inconsistent on attempt {attempt}");
        }
        Ok(None)
    }

    fn process(&self, rect: SearchRectangle, w: i64, depth: u32) -> Result<Found> {
        let mut found = Found::default();
        if w == 0 {
            return Ok(found);
        }
        if w < 0 {
            return Err(Error::NonIntegerWinding(w as f64));
        }
        let side = rect.max_side();
        if w == 1 {
            if let Some(rec) = self.newton(&rect)? {
                found.records.push(rec);
                return Ok(found);
            }
        } else if w as u32 <= self.opts().max_multiplicity && side <= self.opts().cluster_box {
            if let Some(rec) = self.cluster(&rect, w)? {
                found.records.push(rec);
                return Ok(found);
            }
        }
        if side < self.opts().min_side || depth >= MAX_DEPTH {
            found.unresolved.push(UnresolvedBox { rect, winding: w });
            return Ok(found);
        }
        let Some(kids) = self.split(&rect, w)? else {
            found.unresolved.push(UnresolvedBox { rect, winding: w });
            return Ok(found);
        };
        let parts: Vec<Result<Found>> = par_map(&kids, |&(r, wr)| self.process(r, wr, depth + 1));
        for p in parts {
            found = found.merge(p?);
        }
        Ok(found)
    }

    pub fn locate(&self, rect: SearchRectangle, w: i64) -> Result<(Vec<EigenvalueRecord>, Vec<UnresolvedBox>)> {
        let mut found = self.process(rect, w, 0)?;
        found.records.sort_by(|a, b| lex_order(a.k, b.k));
        found.unresolved.sort_by(|a, b| lex_order(a.rect.center(), b.rect.center()));
        Ok((found.records, found.unresolved))
    }
}

fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Zeros of `f` inside `rect`, with multiplicities.
///
/// Boxes are subdivided until each holds a single zero that Newton's method
/// converges to, or a small cluster that contour moments identify as one
/// multiple zero. Boxes that cannot be resolved down to `min_side` are listed
/// in [`ZeroReport::unresolved`].
pub fn find_zeros<F: EntireFunction + ?Sized>(f: &F, rect: &SearchRectangle, opts: &RootOptions) -> Result<ZeroReport> {
    let loc = Locator::new(f, opts);
    let (w, used) = loc.contour.jittered_winding(*rect)?;
    let (records, unresolved) = loc.locate(used, w)?;
    Ok(ZeroReport { records, unresolved, total_winding: w })
}

#[cfg(test)]
mod tests {
    use super::super::test_fns::sin_scaled;
    use super::*;
    use crate::scaled::Scaled;
    use std::f64::consts::PI;

    #[test]
    fn sine_zeros() {
        let rect = SearchRectangle::new(0.5, 10.0, -1.0, 1.0).unwrap();
        let rep = find_zeros(&sin_scaled(1.0), &rect, &RootOptions::default()).unwrap();
        assert_eq!(rep.records.len(), 3);
        for (i, r) in rep.records.iter().enumerate() {
            assert!((r.k - C::new(PI * (i + 1) as f64, 0.0)).norm() < 1e-10, "{:?}", r.k);
            assert_eq!(r.multiplicity, 1);
        }
        assert!(rep.unresolved.is_empty());
    }

    #[test]
    fn empty_rectangle() {
        let rect = SearchRectangle::new(0.5, 3.0, 0.5, 1.0).unwrap();
        let rep = find_zeros(&sin_scaled(1.0), &rect, &RootOptions::default()).unwrap();
        assert!(rep.records.is_empty() && rep.total_winding == 0);
    }

    #[test]
    fn triple_zero_is_one_record() {
        let f = |k: C| {
            let s = crate::specialfn::sin_scaled(k);
            Ok(Scaled::new(s * s * s / k, 3.0 * k.im.abs()))
        };
        let rect = SearchRectangle::new(0.5, 10.0, -2.0, 2.0).unwrap();
        let rep = find_zeros(&f, &rect, &RootOptions::default()).unwrap();
        assert_eq!(rep.records.len(), 3, "{:?}", rep);
        for (i, r) in rep.records.iter().enumerate() {
            assert_eq!(r.multiplicity, 3);
            assert!((r.k.re - PI * (i + 1) as f64).abs() < 1e-8, "{:?}", r.k);
            assert!(r.k.im.abs() < 1e-8);
        }
    }

    #[test]
    fn complex_pair_and_determinism() {
        // zeros at 2 +- 0.5i and 3
        let f = |k: C| {
            let v = (k - C::new(2.0, 0.5)) * (k - C::new(2.0, -0.5)) * (k - 3.0);
            Ok(Scaled::unscaled(v))
        };
        let rect = SearchRectangle::new(0.0, 5.0, -1.0, 1.0).unwrap();
        let a = find_zeros(&f, &rect, &RootOptions::default()).unwrap();
        let b = find_zeros(&f, &rect, &RootOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 3);
        assert!((a.records[0].k - C::new(2.0, -0.5)).norm() < 1e-10);
        assert!((a.records[1].k - C::new(2.0, 0.5)).norm() < 1e-10);
    }
}
