//! The ±1 witness across the slice stays away from the test space, and so
//! does its absolute value.

use std::sync::Arc;

use trace_lab::experiments::{sliced_rectangle, sweep_verdict, truncation_check, SweepVerdict};
use trace_lab::grid::{CellMask, GridFunction, GridSpec};
use trace_lab::membership::{membership_sweep, MembershipProblem};
use trace_lab::quadrature::PlaneFunction;

#[test]
fn witness_and_its_modulus_are_floored() {
    let (dom, d, v) = sliced_rectangle().unwrap();
    let h = 1.0 / 64.0;
    let spec = GridSpec::covering(&dom.bbox(), h, 0).unwrap();
    let mask = Arc::new(CellMask::from_domain(&dom, spec));
    let u = GridFunction::from_fn(mask, |y| v.eval(y)).unwrap();
    let deltas = [0.25, 0.125, 0.0625];

    let prob = MembershipProblem::new(dom.clone(), d.clone(), u.clone(), 2.0, deltas[0]);
    let sweep = membership_sweep(&prob, &deltas).unwrap();
    assert!(sweep[0].distance > 0.0);
    assert_eq!(
        sweep_verdict(&sweep, 0.2, 0.5),
        SweepVerdict::Floored,
        "{sweep:?}"
    );

    let rep = truncation_check(&u, &dom, &d, 2.0, &deltas, 1e-6).unwrap();
    assert_eq!(
        rep.clause_passed("same_verdict"),
        Some(true),
        "{:?}",
        rep.clauses
    );
}
