use itep_core::medium::{BallInclusion, Layer};
use itep_core::{MediumField, RadialProfile};
use proptest::prelude::*;

fn stratified() -> MediumField {
    MediumField::RadiallyStratified {
        center: [0.0; 3],
        layers: vec![
            Layer { outer_radius: 0.6, coefficients: vec![3.0, 0.0, -1.0] },
            Layer { outer_radius: 1.2, coefficients: vec![2.0, -0.5] },
        ],
    }
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn direction() -> impl Strategy<Value = [f64; 3]> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("nonzero", |v| v.0.abs() + v.1.abs() + v.2.abs() > 0.1)
        .prop_map(|v| unit([v.0, v.1, v.2]))
}

proptest! {
    #[test]
    fn travel_time_derivative_is_sqrt_n(r in 0.05f64..1.6) {
        let p = stratified().restrict_to_ray([0.0, 0.0, 1.0]).unwrap();
        // stay clear of the breakpoints, where B is only one-sided differentiable
        prop_assume!((r - 0.6).abs() > 1e-3 && (r - 1.2).abs() > 1e-3);
        let h = 1e-5;
        let fd = (p.travel_time(r + h) - p.travel_time(r - h)) / (2.0 * h);
        prop_assert!((fd - p.n(r).sqrt()).abs() < 1e-6, "{fd} vs {}", p.n(r).sqrt());
        prop_assert!(fd > 0.0);
    }

    #[test]
    fn travel_time_is_additive(a in 0.0f64..2.0, b in 0.0f64..2.0) {
        let p = stratified().restrict_to_ray([1.0, 0.0, 0.0]).unwrap();
        let (r1, r2) = if a < b { (a, b) } else { (b, a) };
        let lhs = p.travel_time(r2);
        let rhs = p.travel_time(r1) + p.travel_between(r1, r2);
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn restriction_is_pointwise(d in direction(), r in 0.0f64..8.0) {
        let field = MediumField::UnionOfBalls {
            balls: vec![
                BallInclusion { center: [2.0, 0.0, 0.0], radius: 1.0, n0: 2.25 },
                BallInclusion { center: [0.0, 1.5, 0.5], radius: 0.8, n0: 3.0 },
            ],
        };
        let p: RadialProfile = field.restrict_to_ray(d).unwrap();
        let x = [r * d[0], r * d[1], r * d[2]];
        prop_assert!((p.n(r) - field.eval_point(x)).abs() < 1e-14);
    }
}

#[test]
fn constant_ball_travel_time() {
    let p = RadialProfile::constant(4.0, 1.0);
    assert!((p.travel_time(1.0) - 2.0).abs() < 1e-14);
    assert!((p.travel_time(3.0) - 4.0).abs() < 1e-14);
}
