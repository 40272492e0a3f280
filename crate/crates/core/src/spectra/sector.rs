use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quadtree::Locator;
use super::{is_degenerate, EntireFunction, RootOptions, SearchRectangle, DEGENERATE_THRESHOLD};
use crate::error::{Error, Result};

type C = Complex64;

// boxes straddling a sector edge or an arc are handed to the locator below this side
const LOCATE_SIDE: f64 = 0.5;
const MAX_DEPTH: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Class {
    Inside,
    Outside,
    Straddle,
}

struct Sector {
    alpha: f64,
    beta: f64,
    radii: Vec<f64>,
    apex: f64,
}

impl Sector {
    fn new(alpha: f64, beta: f64, radii: &[f64]) -> Result<Self> {
        if !(alpha < beta) || beta - alpha > 2.0 * PI || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "sector ({alpha}, {beta}) must satisfy alpha < beta <= alpha + 2 pi"
            )));
        }
        if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidArgument("sector radii must be positive".into()));
        }
        let r_max = radii.iter().copied().fold(0.0, f64::max);
        Ok(Self { alpha, beta, radii: radii.to_vec(), apex: 1e-6 * r_max.max(1.0) })
    }

    fn width(&self) -> f64 {
        self.beta - self.alpha
    }

    fn contains_angle(&self, k: C) -> bool {
        let t = (k * C::from_polar(1.0, -self.alpha)).arg().rem_euclid(2.0 * PI);
        t <= self.width() || (self.width() >= 2.0 * PI)
    }

    // signed distances to the two bounding lines; positive on the sector side
    fn side(&self, k: C) -> (f64, f64) {
        ((k * C::from_polar(1.0, -self.alpha)).im, -(k * C::from_polar(1.0, -self.beta)).im)
    }

    fn classify_box(&self, rect: &SearchRectangle) -> Class {
        if rect.min_modulus() <= self.apex {
            return Class::Straddle;
        }
        let corners = rect.corners();
        let sides: Vec<(f64, f64)> = corners.iter().map(|&c| self.side(c)).collect();
        if self.width() <= PI {
            if sides.iter().all(|s| s.0 >= 0.0 && s.1 >= 0.0) {
                return Class::Inside;
            }
            if sides.iter().all(|s| s.0 < 0.0) || sides.iter().all(|s| s.1 < 0.0) {
                return Class::Outside;
            }
            let mid = C::from_polar(1.0, 0.5 * (self.alpha + self.beta));
            if corners.iter().all(|c| (c * mid.conj()).re < 0.0) {
                return Class::Outside;
            }
        } else if sides.iter().all(|s| s.0 < 0.0 && s.1 < 0.0) {
            return Class::Outside;
        }
        Class::Straddle
    }

    fn counts_point(&self, k: C) -> Vec<bool> {
        let ok = k.norm() > self.apex && self.contains_angle(k);
        self.radii.iter().map(|&r| ok && k.norm() <= r).collect()
    }

    fn bounding_box(&self) -> Result<SearchRectangle> {
        let r = self.radii.iter().copied().fold(0.0, f64::max);
        let mut pts = vec![C::new(0.0, 0.0), C::from_polar(r, self.alpha), C::from_polar(r, self.beta)];
        let first = (self.alpha / FRAC_PI_2).ceil() as i64;
        let last = (self.beta / FRAC_PI_2).floor() as i64;
        for q in first..=last {
            pts.push(C::from_polar(r, q as f64 * FRAC_PI_2));
        }
        let re_min = pts.iter().map(|p| p.re).fold(f64::INFINITY, f64::min);
        let re_max = pts.iter().map(|p| p.re).fold(f64::NEG_INFINITY, f64::max);
        let im_min = pts.iter().map(|p| p.im).fold(f64::INFINITY, f64::min);
        let im_max = pts.iter().map(|p| p.im).fold(f64::NEG_INFINITY, f64::max);
        // uneven padding keeps the outer contour off lattices of zeros
        let pad = 0.02 * r + 0.1;
        Ok(SearchRectangle::new(re_min, re_max, im_min, im_max)?.expanded([
            pad * 1.07,
            pad * 0.93,
            pad * 1.19,
            pad * 0.87,
        ]))
    }
}

struct Counter<'a, F: ?Sized> {
    loc: Locator<'a, F>,
    sector: Sector,
}

impl<'a, F: EntireFunction + ?Sized> Counter<'a, F> {
    fn radius_class(&self, rect: &SearchRectangle) -> Vec<Class> {
        let (lo, hi) = (rect.min_modulus(), rect.max_modulus());
        self.sector
            .radii
            .iter()
            .map(|&r| {
                if hi <= r {
                    Class::Inside
                } else if lo > r {
                    Class::Outside
                } else {
                    Class::Straddle
                }
            })
            .collect()
    }

    fn add_located(&self, rect: SearchRectangle, w: i64, counts: &mut [i64]) -> Result<()> {
        let (records, unresolved) = self.loc.locate(rect, w)?;
        for rec in &records {
            for (c, hit) in counts.iter_mut().zip(self.sector.counts_point(rec.k)) {
                if hit {
                    *c += rec.multiplicity as i64;
                }
            }
        }
        for u in &unresolved {
            log::warn!("unresolved box {:?} (winding {}) counted at its centre", u.rect, u.winding);
            for (c, hit) in counts.iter_mut().zip(self.sector.counts_point(u.rect.center())) {
                if hit {
                    *c += u.winding;
                }
            }
        }
        Ok(())
    }

    fn process(&self, rect: SearchRectangle, w: i64, depth: u32) -> Result<Vec<i64>> {
        let mut counts = vec![0; self.sector.radii.len()];
        if w == 0 {
            return Ok(counts);
        }
        let sc = self.sector.classify_box(&rect);
        if sc == Class::Outside {
            return Ok(counts);
        }
        let rc = self.radius_class(&rect);
        if rc.iter().all(|c| *c == Class::Outside) {
            return Ok(counts);
        }
        if sc == Class::Inside && rc.iter().all(|c| *c != Class::Straddle) {
            for (n, c) in counts.iter_mut().zip(&rc) {
                if *c == Class::Inside {
                    *n = w;
                }
            }
            return Ok(counts);
        }
        if rect.max_side() <= LOCATE_SIDE || depth >= MAX_DEPTH {
            self.add_located(rect, w, &mut counts)?;
            return Ok(counts);
        }
        let Some(kids) = self.loc.split(&rect, w)? else {
            self.add_located(rect, w, &mut counts)?;
            return Ok(counts);
        };
        use rayon::prelude::*;
        let parts: Vec<Result<Vec<i64>>> = kids.par_iter().map(|&(r, wr)| self.process(r, wr, depth + 1)).collect();
        for p in parts {
            for (n, v) in counts.iter_mut().zip(p?) {
                *n += v;
            }
        }
        Ok(counts)
    }
}

/// Zero counts `N(f, alpha, beta, R)` for several radii in one sweep.
///
/// The closed sector `alpha <= arg k <= beta`, `|k| <= R` is covered by a
/// quadtree; boxes fully inside contribute their winding number, boxes that
/// straddle an edge or arc have their zeros located and classified one by
/// one. A zero at the apex `k = 0` is never counted.
pub fn count_zeros_sector_multi<F: EntireFunction + ?Sized>(
    f: &F,
    alpha: f64,
    beta: f64,
    radii: &[f64],
    opts: &RootOptions,
) -> Result<Vec<i64>> {
    let sector = Sector::new(alpha, beta, radii)?;
    let outer = sector.bounding_box()?;
    let counter = Counter { loc: Locator::new(f, opts), sector };
    let (w, used) = counter.loc.contour.jittered_winding(outer)?;
    counter.process(used, w, 0)
}

pub fn count_zeros_sector<F: EntireFunction + ?Sized>(
    f: &F,
    alpha: f64,
    beta: f64,
    r: f64,
    opts: &RootOptions,
) -> Result<i64> {
    Ok(count_zeros_sector_multi(f, alpha, beta, &[r], opts)?[0])
}

/// Zero counts against radius and their density slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub alpha: f64,
    pub beta: f64,
    pub radii: Vec<f64>,
    pub counts: Vec<i64>,
    /// Least-squares slope of `N(R)` against `R`.
    pub slope: f64,
    pub theoretical: f64,
    pub relative_deviation: f64,
    /// The function vanished (to the degeneracy threshold) on a probe box;
    /// counts are empty and the slope is NaN.
    pub degenerate: bool,
}

fn lsq_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn check_radii(radii: &[f64], min_len: usize) -> Result<()> {
    if radii.len() < min_len || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(format!(
            "radius list must be strictly increasing with at least {min_len} entries"
        )));
    }
    Ok(())
}

pub fn density_estimate<F: EntireFunction + ?Sized>(
    f: &F,
    alpha: f64,
    beta: f64,
    radii: &[f64],
    theoretical: f64,
    opts: &RootOptions,
) -> Result<DensityReport> {
    check_radii(radii, 3)?;
    let dir = C::from_polar(radii[0], 0.5 * (alpha + beta));
    let probe = SearchRectangle::new(dir.re - 1.0, dir.re + 1.0, dir.im - 1.0, dir.im + 1.0)?;
    let mut report = DensityReport {
        alpha,
        beta,
        radii: radii.to_vec(),
        counts: Vec::new(),
        slope: f64::NAN,
        theoretical,
        relative_deviation: f64::NAN,
        degenerate: false,
    };
    if is_degenerate(f, &probe, DEGENERATE_THRESHOLD)? {
        report.degenerate = true;
        return Ok(report);
    }
    report.counts = count_zeros_sector_multi(f, alpha, beta, radii, opts)?;
    let y: Vec<f64> = report.counts.iter().map(|&c| c as f64).collect();
    report.slope = lsq_slope(radii, &y);
    report.relative_deviation = (report.slope - theoretical).abs() / theoretical.abs();
    Ok(report)
}

/// Growth rate of `ln |f(R e^{i theta})|` in `R`, fitted over the largest
/// half of `radii`.
pub fn indicator_estimate<F: EntireFunction + ?Sized>(f: &F, theta: f64, radii: &[f64]) -> Result<f64> {
    check_radii(radii, 2)?;
    let tail = &radii[radii.len() / 2..];
    let tail = if tail.len() < 2 { &radii[radii.len() - 2..] } else { tail };
    let y = tail
        .iter()
        .map(|&r| {
            let v = f.eval(C::from_polar(r, theta))?;
            let l = v.ln_abs();
            if !l.is_finite() {
                return Err(Error::NonFinite(C::from_polar(r, theta)));
            }
            Ok(l)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(lsq_slope(tail, &y))
}

#[cfg(test)]
mod tests {
    use super::super::test_fns::sin_scaled;
    use super::*;
    use crate::scaled::Scaled;

    #[test]
    fn sine_sector_counts() {
        let o = RootOptions::default();
        assert_eq!(count_zeros_sector(&sin_scaled(1.0), -0.1, 0.1, 10.0, &o).unwrap(), 3);
        assert_eq!(count_zeros_sector(&sin_scaled(1.0), -0.1, 0.1, 1.0, &o).unwrap(), 0);
        // the left half-line holds -pi, -2pi, -3pi
        assert_eq!(count_zeros_sector(&sin_scaled(1.0), 3.0, 3.3, 10.0, &o).unwrap(), 3);
    }

    #[test]
    fn arc_through_a_zero() {
        let o = RootOptions::default();
        let n = count_zeros_sector_multi(&sin_scaled(1.0), -0.1, 0.1, &[PI, 2.0 * PI - 1e-3, 10.0], &o).unwrap();
        assert_eq!(n, vec![1, 1, 3]);
    }

    #[test]
    fn sine_density_slope() {
        let rep = density_estimate(
            &sin_scaled(2.0),
            -0.1,
            0.1,
            &[25.0, 50.0, 75.0, 100.0],
            2.0 / PI,
            &RootOptions::default(),
        )
        .unwrap();
        assert!(rep.relative_deviation < 0.02, "{rep:?}");
        assert!(rep.counts.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn degenerate_function_flagged() {
        let zero = |_k: C| Ok(Scaled::unscaled(C::new(0.0, 0.0)));
        let rep = density_estimate(&zero, -0.1, 0.1, &[10.0, 20.0, 30.0], 1.0, &RootOptions::default()).unwrap();
        assert!(rep.degenerate && rep.counts.is_empty());
    }

    #[test]
    fn sine_indicator() {
        let f = sin_scaled(1.0);
        let radii: Vec<f64> = (1..=8).map(|i| 10.0 * i as f64).collect();
        let up = indicator_estimate(&f, FRAC_PI_2, &radii).unwrap();
        assert!((up - 1.0).abs() < 0.02, "{up}");
        // bounded but oscillating on the real axis, so a long list is needed
        let long: Vec<f64> = (1..=60).map(|i| 10.0 * i as f64 + 0.3).collect();
        let flat = indicator_estimate(&f, 0.0, &long).unwrap();
        assert!(flat.abs() < 0.05, "{flat}");
    }
}
