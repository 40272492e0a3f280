use std::sync::Arc;

use itep_core::geometry::{Ball, ImplicitShape, Torus};
use itep_core::SimpleDomain;
use proptest::prelude::*;

fn domain() -> SimpleDomain {
    let torus: Arc<dyn ImplicitShape> =
        Arc::new(Torus { center: [0.5, 0.0, 0.3], major_radius: 2.0, minor_radius: 0.5 });
    SimpleDomain::new(
        vec![Ball { center: [2.0, 0.0, 0.0], radius: 1.0 }, Ball { center: [-1.0, 2.5, 0.0], radius: 0.7 }],
        vec![torus],
    )
    .unwrap()
}

fn direction() -> impl Strategy<Value = [f64; 3]> {
    (-1.0f64..1.0, -1.0f64..1.0, -0.4f64..0.4).prop_filter("nonzero", |v| v.0.abs() + v.1.abs() > 0.1).prop_map(|v| {
        let n = (v.0 * v.0 + v.1 * v.1 + v.2 * v.2).sqrt();
        [v.0 / n, v.1 / n, v.2 / n]
    })
}

fn at(d: [f64; 3], r: f64) -> [f64; 3] {
    [r * d[0], r * d[1], r * d[2]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn crossings_are_roots(d in direction()) {
        let dom = domain();
        let set = dom.intersect_ray(d).unwrap();
        for &r in &set.radii {
            prop_assert!(dom.implicit_value(at(d, r)).abs() < 1e-10, "F = {:e} at r = {r}", dom.implicit_value(at(d, r)));
        }
    }

    #[test]
    fn labels_alternate_with_indicator(d in direction()) {
        let dom = domain();
        let set = dom.intersect_ray(d).unwrap();
        for iv in set.intervals() {
            let mid = 0.5 * (iv.lo + iv.hi);
            prop_assert_eq!(dom.inside_indicator(at(d, mid)), iv.inside, "interval {:?}", iv);
        }
        let after = set.radii.last().copied().unwrap_or(0.0) + 1e-3;
        prop_assert!(!dom.inside_indicator(at(d, after.max(dom.bounding_radius()))));
    }

    #[test]
    fn covered_length_matches_sampling(d in direction()) {
        let dom = domain();
        let set = dom.intersect_ray(d).unwrap();
        let r0 = dom.bounding_radius();
        let n = 200_000;
        let h = r0 / n as f64;
        let sampled = (0..n).filter(|&i| dom.inside_indicator(at(d, (i as f64 + 0.5) * h))).count() as f64 * h;
        prop_assert!((set.covered_length() - sampled).abs() < 1e-3, "{} vs {sampled}", set.covered_length());
    }
}
