use itep_core::quadrature::gauss_legendre;
use itep_core::specialfn::{spherical_bessel_j, spherical_bessel_j_prime, spherical_harmonic};
use itep_core::{Complex64 as C, SphericalIndex};
use proptest::prelude::*;

proptest! {
    #[test]
    fn three_term_recurrence(l in 1u32..=20, re in 0.1f64..100.0, im in -10.0f64..10.0) {
        let z = C::new(re, im);
        let jm = spherical_bessel_j(l - 1, z).unwrap();
        let j = spherical_bessel_j(l, z).unwrap();
        let jp = spherical_bessel_j(l + 1, z).unwrap();
        let defect = (jm + jp - (2.0 * l as f64 + 1.0) / z * j).norm();
        prop_assert!(defect < 1e-10 * j.norm().max(1.0), "defect {defect:e} at l={l} z={z}");
    }

    #[test]
    fn conjugate_symmetry(l in 0u32..=20, re in -60.0f64..60.0, im in -20.0f64..20.0) {
        let z = C::new(re, im);
        let a = spherical_bessel_j(l, z).unwrap();
        let b = spherical_bessel_j(l, z.conj()).unwrap();
        prop_assert!((a.conj() - b).norm() <= 1e-14 * a.norm().max(1e-300));
    }

    #[test]
    fn derivative_matches_central_difference(l in 0u32..=10, re in 0.2f64..30.0, im in -3.0f64..3.0) {
        let z = C::new(re, im);
        let h = 1e-6;
        let fd = (spherical_bessel_j(l, z + h).unwrap() - spherical_bessel_j(l, z - h).unwrap()) / (2.0 * h);
        let d = spherical_bessel_j_prime(l, z).unwrap();
        prop_assert!((fd - d).norm() < 1e-6 * d.norm().max(1.0), "{fd} vs {d}");
    }
}

#[test]
fn harmonics_gram_matrix_is_identity() {
    let (t, w) = gauss_legendre(24);
    let nphi = 32;
    let idx: Vec<SphericalIndex> =
        (0..=4u32).flat_map(|l| (-(l as i32)..=l as i32).map(move |m| SphericalIndex::new(l, m).unwrap())).collect();
    let mut gram = vec![vec![C::new(0.0, 0.0); idx.len()]; idx.len()];
    for (ti, wi) in t.iter().zip(&w) {
        let theta = ti.acos();
        for p in 0..nphi {
            let phi = 2.0 * std::f64::consts::PI * p as f64 / nphi as f64;
            let vals: Vec<C> = idx.iter().map(|&i| spherical_harmonic(i, theta, phi)).collect();
            for a in 0..idx.len() {
                for b in 0..idx.len() {
                    gram[a][b] += vals[a] * vals[b].conj() * wi * 2.0 * std::f64::consts::PI / nphi as f64;
                }
            }
        }
    }
    for (a, row) in gram.iter().enumerate() {
        for (b, g) in row.iter().enumerate() {
            let want = if a == b { 1.0 } else { 0.0 };
            assert!((g - want).norm() < 1e-8, "({a},{b}) = {g}");
        }
    }
}

#[test]
fn recurrence_on_a_dense_grid() {
    // random sampling missed a narrow band near |z| = 13..16
    let mut worst = 0.0f64;
    for i in 0..60 {
        for j in 0..60 {
            let z = C::new(0.1 + 99.9 * (i as f64 + 0.5) / 60.0, -10.0 + 20.0 * (j as f64 + 0.5) / 60.0);
            for l in 1..=20u32 {
                let (jm, jl, jp) = (
                    spherical_bessel_j(l - 1, z).unwrap(),
                    spherical_bessel_j(l, z).unwrap(),
                    spherical_bessel_j(l + 1, z).unwrap(),
                );
                worst = worst.max((jm + jp - (2.0 * l as f64 + 1.0) / z * jl).norm() / jl.norm().max(1.0));
            }
        }
    }
    assert!(worst < 1e-10, "{worst:e}");
}
