//! The five pipelines. Each returns a [`Report`]; nothing is written here.

use std::f64::consts::PI;

use itep_core::inverse::{fit_profile, ray_spectrum, SpectrumSample};
use itep_core::radial_ode::RadialSolution;
use itep_core::specialfn::{sin_scaled, spherical_bessel_j, spherical_bessel_j_prime};
use itep_core::spectra::{density_estimate, EntireFunction};
use itep_core::tunneling::{full_spectrum_layout, ChainLayout};
use itep_core::{AngularOrder, Complex64, DeterminantFunction, IntersectionSet, RadialProfile, Scaled, Start, Vec3};
use serde_json::json;

use crate::config::{Coefficients, RunConfig};
use crate::report::{fmt_f64, per_direction, Report, Status, Table};
use crate::CliError;

type C = Complex64;

struct Ray {
    index: usize,
    direction: Vec3,
    set: IntersectionSet,
    profile: RadialProfile,
}

fn rays(cfg: &RunConfig) -> Result<Vec<Ray>, CliError> {
    let domain = cfg.domain()?;
    cfg.directions()?
        .into_iter()
        .enumerate()
        .map(|(index, direction)| {
            let set = domain.intersect_ray(direction)?;
            let profile = cfg.medium.restrict_to_ray(direction)?;
            Ok(Ray { index, direction, set, profile })
        })
        .collect()
}

fn medium_warnings(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    for w in cfg.medium.validate()? {
        report.warn(w);
    }
    Ok(())
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    s.as_ref().ok_or_else(|| CliError::Config(format!("the config has no \"{name}\" section")))
}

pub fn cmd_eig(cfg: &RunConfig) -> Result<Report, CliError> {
    let mut report = Report::new("eig");
    medium_warnings(cfg, &mut report)?;
    let opts = cfg.tolerances.tunnel();
    let orders = cfg.orders()?;
    let rays = rays(cfg)?;
    let mut results = Vec::new();
    for ray in &rays {
        log::info!("eig: direction {} {:?}", ray.index, ray.direction);
        let layout = ChainLayout::from_intersections(&ray.set);
        let mut t = Table::new(
            per_direction("eigenvalues", ray.index, rays.len()),
            &["l", "re_k", "im_k", "multiplicity", "residual", "verdict", "interface_residual_max"],
        );
        let mut per_l = Vec::new();
        if layout.is_empty() {
            report.note(format!("direction {}: the ray does not enter the domain", ray.index));
        }
        for &l in &orders {
            if layout.is_empty() {
                break;
            }
            let spec = full_spectrum_layout(l, &ray.profile, &layout, &cfg.rectangle, &opts)?;
            for &j in &spec.degenerate_intervals {
                report.warn(format!(
                    "direction {}, l = {}: interval {j} is degenerate (n = 1 there), no eigenvalues from it",
                    ray.index,
                    l.get()
                ));
            }
            if !spec.unresolved.is_empty() {
                report.warn(format!(
                    "direction {}, l = {}: {} unresolved boxes",
                    ray.index,
                    l.get(),
                    spec.unresolved.len()
                ));
            }
            for r in &spec.records {
                t.push(vec![
                    l.get().to_string(),
                    fmt_f64(r.k.re),
                    fmt_f64(r.k.im),
                    r.multiplicity.to_string(),
                    fmt_f64(r.residual),
                    r.verdict.map_or("none".to_string(), |v| v.to_string()),
                    fmt_f64(r.interface_residual_max()),
                ]);
            }
            per_l.push(json!({
                "l": l.get(),
                "records": spec.records.len(),
                "propagating": spec.propagating().len(),
                "unresolved": spec.unresolved,
                "degenerate_intervals": spec.degenerate_intervals,
            }));
        }
        results.push(json!({
            "direction": ray.direction,
            "table": t.name,
            "radii": layout.radii(),
            "orders": per_l,
        }));
        report.tables.push(t);
    }
    report.results = json!({ "directions": results });
    Ok(report)
}

/// Running least-squares slope of `n` against `r` over the first `m` rows.
fn running_slope(r: &[f64], n: &[f64], m: usize) -> f64 {
    if m == 1 {
        return n[0] / r[0];
    }
    let (x, y) = (&r[..m], &n[..m]);
    let mx = x.iter().sum::<f64>() / m as f64;
    let my = y.iter().sum::<f64>() / m as f64;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn density_with<F: EntireFunction + ?Sized>(
    f: &F,
    theoretical: f64,
    cfg: &RunConfig,
    report: &mut Report,
) -> Result<(), CliError> {
    let d = section(&cfg.density, "density")?;
    let [alpha, beta] = d.sector;
    let rep = density_estimate(f, alpha, beta, &d.radii, theoretical, &cfg.tolerances.roots)?;
    let mut t = Table::new("density.csv", &["R", "N", "theoretical", "estimate", "deviation"]);
    if rep.degenerate {
        report.warn("the determinant vanishes identically (n = 1 along the ray); no counts".to_string());
    } else {
        let n: Vec<f64> = rep.counts.iter().map(|&c| c as f64).collect();
        for (i, (&r, &c)) in rep.radii.iter().zip(&rep.counts).enumerate() {
            let est = running_slope(&rep.radii, &n, i + 1);
            t.push(vec![
                fmt_f64(r),
                c.to_string(),
                fmt_f64(theoretical),
                fmt_f64(est),
                fmt_f64((est - theoretical).abs() / theoretical.abs()),
            ]);
        }
    }
    report.results = json!({
        "sector": [alpha, beta],
        "slope": rep.slope,
        "theoretical": theoretical,
        "relative_deviation": rep.relative_deviation,
        "degenerate": rep.degenerate,
    });
    report.tables.push(t);
    Ok(())
}

pub fn cmd_density(cfg: &RunConfig) -> Result<Report, CliError> {
    let mut report = Report::new("density");
    let d = section(&cfg.density, "density")?;
    if let Some(s) = d.synthetic {
        let w = s.frequency;
        report.note(format!("synthetic function sin({w} k) in place of the determinant"));
        let f = move |k: C| -> itep_core::Result<Scaled> {
            let z = w * k;
            Ok(Scaled::new(sin_scaled(z), z.im.abs()))
        };
        density_with(&f, w / PI, cfg, &mut report)?;
        return Ok(report);
    }
    medium_warnings(cfg, &mut report)?;
    let rays = rays(cfg)?;
    if rays.len() > 1 {
        report.note("density uses the first direction only".to_string());
    }
    let ray = &rays[0];
    let Some(&r_hat) = ChainLayout::from_intersections(&ray.set).radii().last() else {
        return Err(numeric("the first direction does not enter the domain"));
    };
    let l = AngularOrder::with_max(d.l.unwrap_or(cfg.l_range[0]), cfg.tolerances.l_max)?;
    let f = DeterminantFunction::new(l, &ray.profile, r_hat, Start::Origin, cfg.tolerances.ode)?;
    let theoretical = f.type_coefficient() / PI;
    report.note(format!("order {}, evaluation radius {r_hat}, exponential type {}", l.get(), f.type_coefficient()));
    density_with(&f, theoretical, cfg, &mut report)?;
    Ok(report)
}

fn numeric(msg: &str) -> CliError {
    CliError::Numeric(itep_core::Error::InvalidArgument(msg.to_string()))
}

pub fn cmd_tunnel(cfg: &RunConfig) -> Result<Report, CliError> {
    let mut report = Report::new("tunnel");
    medium_warnings(cfg, &mut report)?;
    let opts = cfg.tolerances.tunnel();
    let orders = cfg.orders()?;
    let rays = rays(cfg)?;
    let mut results = Vec::new();
    for ray in &rays {
        log::info!("tunnel: direction {} {:?}", ray.index, ray.direction);
        let layout = ChainLayout::from_intersections(&ray.set);
        let radii = layout.radii();
        // the residual at an origin reference point is zero by construction
        let cols: Vec<usize> = (0..radii.len()).filter(|&j| !(j == 0 && radii[0] == 0.0)).collect();
        let mut header = vec!["l".to_string(), "re_k".into(), "im_k".into(), "verdict".into()];
        header.extend(cols.iter().map(|&j| format!("res_at_{}", radii[j])));
        let mut t = Table { name: per_direction("tunnel", ray.index, rays.len()), header, rows: Vec::new() };
        let mut worst = 0.0f64;
        let mut propagating = 0usize;
        if layout.is_empty() {
            report.note(format!("direction {}: no intersections, empty residual matrix", ray.index));
        } else {
            for &l in &orders {
                let spec = full_spectrum_layout(l, &ray.profile, &layout, &cfg.rectangle, &opts)?;
                for r in &spec.records {
                    let mut row = vec![
                        l.get().to_string(),
                        fmt_f64(r.k.re),
                        fmt_f64(r.k.im),
                        r.verdict.map_or("none".to_string(), |v| v.to_string()),
                    ];
                    row.extend(
                        cols.iter().map(|&j| fmt_f64(r.interface_residuals.get(j).copied().unwrap_or(f64::NAN))),
                    );
                    t.push(row);
                    if r.verdict.is_some_and(|v| v.propagates()) {
                        propagating += 1;
                        worst = worst.max(r.interface_residual_max());
                    }
                }
                if !spec.unresolved.is_empty() {
                    report.warn(format!(
                        "direction {}, l = {}: {} unresolved boxes",
                        ray.index,
                        l.get(),
                        spec.unresolved.len()
                    ));
                }
                if !spec.degenerate_intervals.is_empty() {
                    report.warn(format!(
                        "direction {}, l = {}: degenerate intervals {:?}",
                        ray.index,
                        l.get(),
                        spec.degenerate_intervals
                    ));
                }
            }
        }
        results.push(json!({
            "direction": ray.direction,
            "table": t.name,
            "radii": radii,
            "columns": cols.iter().map(|&j| radii[j]).collect::<Vec<_>>(),
            "propagating": propagating,
            "max_propagating_residual": worst,
        }));
        report.tables.push(t);
    }
    report.results = json!({ "directions": results });
    Ok(report)
}

pub fn cmd_fit(cfg: &RunConfig) -> Result<Report, CliError> {
    let mut report = Report::new("fit");
    let fc = section(&cfg.fit, "fit")?;
    let opts = cfg.tolerances.tunnel();
    let orders = match &fc.orders {
        Some(v) => {
            v.iter().map(|&l| AngularOrder::with_max(l, cfg.tolerances.l_max)).collect::<itep_core::Result<Vec<_>>>()?
        }
        None => cfg.orders()?,
    };
    let direction = cfg.directions()?[0];
    let target = match cfg.fit_targets() {
        Some(entries) => SpectrumSample::new(entries, direction, cfg.rectangle),
        None => {
            medium_warnings(cfg, &mut report)?;
            log::info!("fit: computing the target spectrum of the medium");
            ray_spectrum(&cfg.medium, direction, &orders, &cfg.rectangle, &opts)?
        }
    };
    report.note(format!("target has {} eigenvalues", target.len()));
    let bounds: Vec<(f64, f64)> = fc.bounds.iter().map(|b| (b[0], b[1])).collect();
    let res = fit_profile(&target, fc.family, &fc.init, &bounds, &fc.options, &opts)?;
    if !res.converged {
        report.status = Status::NotConverged;
        report.warn(format!("fit stopped after {} iterations without converging", res.iterations));
    }
    let mut t = Table::new("fit_history.csv", &["step", "mismatch"]);
    for (i, m) in res.history.iter().enumerate() {
        t.push(vec![i.to_string(), fmt_f64(*m)]);
    }
    report.tables.push(t);
    let doc = serde_json::to_value(&res).map_err(|e| CliError::Io(e.to_string()))?;
    report.documents.push(("fit.json".to_string(), doc.clone()));
    report.results = json!({ "target_eigenvalues": target.len(), "fit": doc });
    Ok(report)
}

fn double_factorial_odd(l: u32) -> f64 {
    (1..=l).map(|i| (2 * i + 1) as f64).product()
}

pub fn cmd_field(cfg: &RunConfig) -> Result<Report, CliError> {
    let mut report = Report::new("field");
    medium_warnings(cfg, &mut report)?;
    let fc = section(&cfg.field, "field")?;
    let k = C::new(fc.k[0], fc.k[1]);
    let l = AngularOrder::with_max(fc.l, cfg.tolerances.l_max)?;
    let rays = rays(cfg)?;
    let ray = &rays[fc.direction];
    let layout = ChainLayout::from_intersections(&ray.set);
    let inside: Vec<_> = layout.intervals().iter().filter(|i| i.inside).copied().collect();
    if inside.is_empty() {
        return Err(numeric("the selected direction does not enter the domain"));
    }
    let ode = cfg.tolerances.ode;
    // y from the origin start behaves like r^{l+1}; this makes c y / r = j_l(k r) in free space
    let c_norm = k.powu(l.get()) / double_factorial_odd(l.get());
    let total: f64 = inside.iter().map(|i| i.len()).sum();
    let mut t = Table::new("field.csv", &["interval", "r", "re_v", "im_v", "re_w", "im_w", "mismatch"]);
    let mut interfaces = Vec::new();
    for iv in &inside {
        let len = iv.len();
        let sol = RadialSolution::solve(l, k, &ray.profile.shifted(iv.lo), Start::Origin, len, &ode)?;
        let eval = |rho: f64, a: C, b: C| -> Result<(C, C, f64), CliError> {
            let st = sol.eval(rho.min(len))?;
            let (y, dy) = (st.y_unscaled(), st.dy_unscaled());
            let w = b * c_norm * y / rho;
            let dw = b * c_norm * (dy / rho - y / (rho * rho));
            let v = a * spherical_bessel_j(l.get(), k * rho)?;
            let dv = a * k * spherical_bessel_j_prime(l.get(), k * rho)?;
            Ok((v, w, (v - w).norm() + (dv - dw).norm()))
        };
        let (a, b) = match fc.coefficients {
            Coefficients::Fixed { a, b } => (C::new(a[0], a[1]), C::new(b[0], b[1])),
            Coefficients::Auto => {
                let (v, w, _) = eval(len, C::new(1.0, 0.0), C::new(1.0, 0.0))?;
                if w.norm() == 0.0 || !w.norm().is_finite() {
                    report.warn(format!("interval [{}, {}]: w vanishes at the exit, b = 1", iv.lo, iv.hi));
                    (C::new(1.0, 0.0), C::new(1.0, 0.0))
                } else {
                    (C::new(1.0, 0.0), v / w)
                }
            }
        };
        let m = ((fc.samples as f64 * len / total).ceil() as usize).max(2);
        for i in 1..=m {
            let rho = len * i as f64 / m as f64;
            let (v, w, mis) = eval(rho, a, b)?;
            let r = if i == m { iv.hi } else { iv.lo + rho };
            t.push(vec![
                iv.j.to_string(),
                fmt_f64(r),
                fmt_f64(v.re),
                fmt_f64(v.im),
                fmt_f64(w.re),
                fmt_f64(w.im),
                fmt_f64(mis),
            ]);
            if i == m {
                interfaces.push(json!({ "radius": iv.hi, "mismatch": mis, "a": [a.re, a.im], "b": [b.re, b.im] }));
            }
        }
    }
    report.tables.push(t);
    report.results = json!({ "k": fc.k, "l": l.get(), "interfaces": interfaces });
    Ok(report)
}
