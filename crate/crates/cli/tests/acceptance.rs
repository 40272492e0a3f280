//! Acceptance checks, one line per criterion. Exits non-zero if any fails.

use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use itep_cli::{cmd_eig, RunConfig};
use itep_core::determinant::determinant_function;
use itep_core::geometry::IntervalSpec;
use itep_core::inverse::{fit_profile, model_spectrum, spectral_distance, FitOptions, SpectrumSample};
use itep_core::quadrature::gauss_legendre;
use itep_core::specialfn::{spherical_bessel_j, spherical_bessel_j_prime, spherical_harmonic};
use itep_core::spectra::{density_estimate, find_zeros};
use itep_core::tunneling::{interval_eigenvalues, propagate_layout, ChainLayout, TunnelOptions};
use itep_core::{
    AngularOrder, Complex64 as C, MediumField, ProfileFamily, RadialProfile, RootOptions, SearchRectangle,
    SimpleDomain, SphericalIndex, Start,
};

type Check = Result<(bool, String), Box<dyn std::error::Error>>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn order(l: u32) -> AngularOrder {
    AngularOrder::new(l).expect("small order")
}

fn grid(re: (f64, f64), im: (f64, f64), n: usize) -> Vec<C> {
    let mut v = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let x = re.0 + (re.1 - re.0) * (i as f64 + 0.5) / n as f64;
            let y = im.0 + (im.1 - im.0) * (j as f64 + 0.5) / n as f64;
            v.push(C::new(x, y));
        }
    }
    v
}

fn degenerate_identity() -> Check {
    let bg = RadialProfile::background();
    let mut worst = 0.0f64;
    for l in 0..=3 {
        let f = determinant_function(order(l), &bg, 1.0, Start::Origin)?;
        for k in grid((0.5, 30.0), (-3.0, 3.0), 20) {
            worst = worst.max(f.eval(k)?.value.norm());
        }
    }
    Ok((worst < 1e-10, format!("max normalized |D| = {worst:.2e} over 1600 points")))
}

// n0 = 4 on the unit ball, l = 0: y = sin(2k)/(2k), j_0 = sin k / k
fn oracle(k: C) -> C {
    let y = (2.0 * k).sin() / (2.0 * k);
    let dy = (2.0 * k).cos();
    let j = k.sin() / k;
    let jp = k.cos() / k - k.sin() / (k * k);
    -j * dy + j * y + k * jp * y
}

fn oracle_equivalence() -> Check {
    let p = RadialProfile::constant(4.0, 1.0);
    let f = determinant_function(order(0), &p, 1.0, Start::Origin)?;
    let mut rel = 0.0f64;
    for k in grid((0.5, 30.0), (-3.0, 3.0), 20) {
        let got = f.eval(k)?.to_complex();
        let want = oracle(k);
        rel = rel.max((got - want).norm() / want.norm());
    }
    let rect = SearchRectangle::new(0.5, 25.0, -3.0, 3.0)?;
    let rep = find_zeros(&f, &rect, &RootOptions::default())?;
    let want: Vec<f64> = (1..).map(|m| PI * m as f64).take_while(|k| *k < 25.0).collect();
    let located: Vec<C> = rep.records.iter().map(|r| r.k).collect();
    let root_err = if located.len() == want.len() {
        located.iter().zip(&want).map(|(k, w)| (k - w).norm()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let ok = rel < 1e-9 && root_err < 1e-8 && rep.unresolved.is_empty();
    Ok((ok, format!("max rel err {rel:.2e}; {} of {} roots, max err {root_err:.2e}", located.len(), want.len())))
}

fn density_law() -> Check {
    let p = RadialProfile::constant(4.0, 1.0);
    let f = determinant_function(order(0), &p, 1.0, Start::Origin)?;
    let rep = density_estimate(&f, -0.1, 0.1, &[50.0, 100.0, 150.0, 200.0], 3.0 / PI, &RootOptions::default())?;
    Ok((
        !rep.degenerate && rep.relative_deviation < 0.05,
        format!(
            "counts {:?}, slope {:.5} vs {:.5}, deviation {:.2e}",
            rep.counts, rep.slope, rep.theoretical, rep.relative_deviation
        ),
    ))
}

fn indicator_law() -> Check {
    let p = RadialProfile::constant(4.0, 1.0);
    let f = determinant_function(order(0), &p, 1.0, Start::Origin)?;
    let t: Vec<f64> = (0..=30).map(|i| 30.0 + i as f64).collect();
    let y = t.iter().map(|&s| f.eval(C::new(0.0, s)).map(|v| v.ln_abs())).collect::<Result<Vec<_>, _>>()?;
    let n = t.len() as f64;
    let (mt, my) = (t.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = t.iter().zip(&y).map(|(a, b)| (a - mt) * (b - my)).sum();
    let sxx: f64 = t.iter().map(|a| (a - mt) * (a - mt)).sum();
    let slope = sxy / sxx;
    Ok(((slope - 3.0).abs() < 0.15, format!("slope {slope:.5}, expected 3")))
}

fn two_balls() -> Result<(MediumField, ChainLayout), Box<dyn std::error::Error>> {
    let m: MediumField = serde_json::from_str(
        r#"{"kind": "union_of_balls", "balls": [
            {"center": [2.0, 0.0, 0.0], "radius": 1.0, "n0": 2.25},
            {"center": [5.0, 0.0, 0.0], "radius": 1.0, "n0": 2.25}]}"#,
    )?;
    let set = SimpleDomain::from_medium(&m)?.intersect_ray([1.0, 0.0, 0.0])?;
    Ok((m, ChainLayout::from_intersections(&set)))
}

fn tunneling_soundness() -> Check {
    let (m, layout) = two_balls()?;
    let profile = m.restrict_to_ray([1.0, 0.0, 0.0])?;
    let radii = layout.radii();
    if radii != [1.0, 3.0, 4.0, 6.0] {
        return Ok((false, format!("chain radii {radii:?}")));
    }
    let opts = TunnelOptions::default();
    let rect = SearchRectangle::new(0.5, 15.0, -2.0, 2.0)?;
    let first = layout.intervals()[0];
    let (mut found, mut worst, mut probe_min) = (0, 0.0f64, f64::INFINITY);
    let mut all_fail = true;
    for l in 0..=1 {
        let spec = interval_eigenvalues(order(l), &profile, &first, &rect, &opts)?;
        let ks: Vec<C> = spec.records.iter().map(|r| r.k).collect();
        found += ks.len();
        for &k in &ks {
            let chain = propagate_layout(order(l), k, &profile, &layout, &opts)?;
            worst = worst.max(chain.max_residual());
        }
        let mut reals: Vec<C> = ks.iter().copied().filter(|k| k.im.abs() < 1e-8).collect();
        reals.sort_by(|a, b| a.re.total_cmp(&b.re));
        for w in reals.windows(2) {
            let chain = propagate_layout(order(l), 0.5 * (w[0] + w[1]), &profile, &layout, &opts)?;
            probe_min = probe_min.min(chain.max_residual());
            all_fail &= !chain.verdict.propagates();
        }
    }
    let ok = found > 0 && worst < 1e-7 && probe_min > 1e-3 && all_fail;
    Ok((ok, format!("{found} eigenvalues, max residual {worst:.2e}; smallest probe residual {probe_min:.2e}")))
}

fn exterior_interval() -> Check {
    let (m, _) = two_balls()?;
    let profile = m.restrict_to_ray([1.0, 0.0, 0.0])?;
    let gap = IntervalSpec { j: 1, lo: 3.0, hi: 4.0, inside: false };
    let rect = SearchRectangle::new(0.5, 15.0, -2.0, 2.0)?;
    let spec = interval_eigenvalues(order(0), &profile, &gap, &rect, &TunnelOptions::default())?;
    Ok((spec.records.is_empty(), format!("{} records, degenerate = {}", spec.records.len(), spec.degenerate)))
}

fn ball_sample(n0: f64, rect: SearchRectangle) -> Result<SpectrumSample, Box<dyn std::error::Error>> {
    let fam = ProfileFamily::ConstantBall { radius: 1.0 };
    let e = model_spectrum(&fam.profile(&[n0])?, 1.0, &[order(0)], &rect, &TunnelOptions::default())?;
    Ok(SpectrumSample::new(e, [0.0, 0.0, 1.0], rect))
}

fn inverse_round_trip() -> Check {
    let rect = SearchRectangle::new(0.5, 25.0, -3.0, 3.0)?;
    let target = ball_sample(4.0, rect)?;
    let fam = ProfileFamily::ConstantBall { radius: 1.0 };
    let res = fit_profile(&target, fam, &[3.0], &[(1.5, 6.0)], &FitOptions::default(), &TunnelOptions::default())?;
    let err = (res.parameters[0] - 4.0).abs();
    Ok((
        err < 1e-4 && res.iterations <= 200,
        format!("n0 = {:.8} after {} iterations ({} evaluations)", res.parameters[0], res.iterations, res.evaluations),
    ))
}

fn distinguishability() -> Check {
    let rect = SearchRectangle::new(0.5, 25.0, -3.0, 3.0)?;
    let d = spectral_distance(&ball_sample(4.0, rect)?, &ball_sample(4.41, rect)?, 25.0)?;
    Ok((d > 0.05, format!("distance {d:.4}")))
}

fn special_functions() -> Check {
    let mut rec = 0.0f64;
    let mut deriv = 0.0f64;
    for z in grid((0.1, 100.0), (-10.0, 10.0), 12) {
        for l in 1..=20u32 {
            let (jm, j, jp) = (spherical_bessel_j(l - 1, z)?, spherical_bessel_j(l, z)?, spherical_bessel_j(l + 1, z)?);
            let defect = (jm + jp - (2.0 * l as f64 + 1.0) / z * j).norm() / j.norm().max(1.0);
            rec = rec.max(defect);
        }
    }
    for z in grid((0.2, 30.0), (-3.0, 3.0), 12) {
        for l in 0..=10u32 {
            let h = 1e-6;
            let fd = (spherical_bessel_j(l, z + h)? - spherical_bessel_j(l, z - h)?) / (2.0 * h);
            let d = spherical_bessel_j_prime(l, z)?;
            deriv = deriv.max((fd - d).norm() / d.norm().max(1.0));
        }
    }
    let (t, w) = gauss_legendre(24);
    let nphi = 32;
    let idx: Vec<SphericalIndex> = (0..=4u32)
        .flat_map(|l| (-(l as i32)..=l as i32).map(move |m| SphericalIndex::new(l, m).expect("index")))
        .collect();
    let mut gram = vec![vec![C::new(0.0, 0.0); idx.len()]; idx.len()];
    for (ti, wi) in t.iter().zip(&w) {
        for p in 0..nphi {
            let phi = TAU * p as f64 / nphi as f64;
            let vals: Vec<C> = idx.iter().map(|&i| spherical_harmonic(i, ti.acos(), phi)).collect();
            for a in 0..idx.len() {
                for b in 0..idx.len() {
                    gram[a][b] += vals[a] * vals[b].conj() * wi * TAU / nphi as f64;
                }
            }
        }
    }
    let mut gerr = 0.0f64;
    for (a, row) in gram.iter().enumerate() {
        for (b, g) in row.iter().enumerate() {
            gerr = gerr.max((g - if a == b { 1.0 } else { 0.0 }).norm());
        }
    }
    Ok((
        rec < 1e-10 && deriv < 1e-6 && gerr < 1e-8,
        format!("recurrence {rec:.2e}, derivative {deriv:.2e}, Gram {gerr:.2e}"),
    ))
}

fn determinism() -> Check {
    let cfg = RunConfig::from_json(
        r#"{"medium": {"kind": "uniform_ball", "radius": 1.0, "n0": 2.25},
            "directions": [[0.0, 0.0, 1.0], [0.6, 0.0, 0.8]],
            "l_range": [0, 2], "rectangle": [0.5, 12.0, -2.0, 2.0],
            "tolerances": {"roots": {"seed": 11}}}"#,
    )?;
    let (a, b) = (cmd_eig(&cfg)?, cmd_eig(&cfg)?);
    let mut same = a.tables.len() == b.tables.len() && !a.tables.is_empty();
    let mut rows = 0;
    for (x, y) in a.tables.iter().zip(&b.tables) {
        same &= x.to_csv()?.as_bytes() == y.to_csv()?.as_bytes();
        rows += x.rows.len();
    }
    Ok((same && rows > 0, format!("{} tables, {rows} rows, identical = {same}", a.tables.len())))
}

fn main() {
    let _ = env_logger::builder().is_test(true).try_init();
    let criteria: [Criterion; 10] = [
        ("degenerate-medium identity", Duration::from_secs(30), degenerate_identity),
        ("closed-form oracle equivalence", Duration::from_secs(120), oracle_equivalence),
        ("zero density law", Duration::from_secs(600), density_law),
        ("indicator law", Duration::from_secs(60), indicator_law),
        ("tunneling soundness", Duration::from_secs(600), tunneling_soundness),
        ("exterior-interval triviality", Duration::from_secs(600), exterior_interval),
        ("inverse round trip", Duration::from_secs(900), inverse_round_trip),
        ("distinguishability", Duration::from_secs(900), distinguishability),
        ("special-function suite", Duration::from_secs(60), special_functions),
        ("determinism", Duration::from_secs(900), determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = check();
        let el = t.elapsed();
        let (ok, detail) = match out {
            Ok((ok, d)) => (ok && el <= *limit, d),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!(
            "criterion {:2} {verdict} {name}: {detail} [{:.1} s, limit {} s]",
            i + 1,
            el.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
