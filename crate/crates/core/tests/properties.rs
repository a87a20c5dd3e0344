mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use trace_lab::capacity::{estimate_capacity, CapacityProblem, GridSpecDef};
use trace_lab::geometry::{ball_domain_area, density, Rect, RectDomain};

#[test]
fn kernel_integrates_to_one() {
    let c = common::kernel_mass();
    assert!(c.passed, "{}", c.detail);
}

#[test]
fn capacity_is_monotone_and_subadditive() {
    let c = common::capacity_monotone_subadditive(50, 7);
    assert!(c.passed, "{}", c.detail);
}

#[test]
fn ball_area_agrees_with_randomized_qmc() {
    let c = common::ball_area_vs_qmc(20, 11);
    assert!(c.passed, "{}", c.detail);
}

#[test]
fn segment_is_one_regular() {
    let c = common::ahlfors_bounds(20, 13);
    assert!(c.passed, "{}", c.detail);
}

/// Points have zero 2-capacity in the plane, so the single-point estimate
/// must fall as the grid resolves the logarithmic singularity.
#[test]
fn single_point_capacity_decays_with_h() {
    let vals: Vec<f64> = [0.25, 0.125, 0.0625]
        .iter()
        .map(|&h| {
            estimate_capacity(&CapacityProblem::new(vec![[0.0, 0.0]], 2.0, h))
                .unwrap()
                .value
        })
        .collect();
    assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
}

#[test]
fn far_points_are_nearly_additive() {
    let grid = GridSpecDef {
        origin: [-4.0, -4.0],
        h: 0.25,
        nx: 112,
        ny: 32,
    };
    let run = |pts: Vec<[f64; 2]>| {
        let mut prob = CapacityProblem::new(pts, 2.0, 0.25);
        prob.grid = Some(grid);
        estimate_capacity(&prob).unwrap().value
    };
    let one = run(vec![[0.0, 0.0]]);
    let two = run(vec![[0.0, 0.0], [20.0, 0.0]]);
    assert!((two / (2.0 * one) - 1.0).abs() < 1e-2, "{one} {two}");
}

fn square() -> RectDomain {
    RectDomain::new(vec![Rect::new([0.0, 0.0], [1.0, 1.0]).unwrap()]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn density_is_a_fraction(x0 in -0.5f64..1.5, x1 in -0.5f64..1.5, r in 0.01f64..1.0) {
        let (d, _) = density(&square(), [x0, x1], r, 1e-6).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn ball_area_is_monotone_in_r(x0 in 0.0f64..1.0, x1 in 0.0f64..1.0, r in 0.01f64..0.8, s in 1.0f64..2.0) {
        let dom = square();
        let a = ball_domain_area(&dom, [x0, x1], r, 1e-9).unwrap().value;
        let b = ball_domain_area(&dom, [x0, x1], r * s, 1e-9).unwrap().value;
        prop_assert!(a <= b + 2e-9);
        prop_assert!(b <= PI * r * r * s * s + 1e-9);
    }

    #[test]
    fn interior_ball_has_full_area(x0 in 0.3f64..0.7, x1 in 0.3f64..0.7, r in 0.01f64..0.3) {
        let a = ball_domain_area(&square(), [x0, x1], r, 1e-10).unwrap();
        prop_assert!((a.value - PI * r * r).abs() <= 1e-9);
    }
}
