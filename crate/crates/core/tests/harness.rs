use std::f64::consts::PI;

use cgolab::field::{dx, dy, Arc, BoundaryPartition, Grid2D, GridField, MatrixField, ScalarField, VectorField};
use cgolab::forward::CoefficientTriple;
use cgolab::harness::gauge::max_on_band;
use cgolab::harness::{
    carleman_probe, check_relations, corollary_pipeline, dirichlet_test_family, gauge_equivalence_experiment,
    gauge_transform, CarlemanProbe, CorollaryCase, EtaProfile, GaugeSpec, QBump, TripleRecipe,
};
use cgolab::weight::CarlemanConvexWeight;
use cgolab::{Complex64, LabError};
use proptest::prelude::*;

const TAUS: [f64; 4] = [8.0, 16.0, 32.0, 64.0];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn top_bottom_part(n: usize) -> BoundaryPartition {
    BoundaryPartition::top_bottom(Grid2D::unit_square(n).unwrap())
}

fn top_bottom_arcs() -> Vec<Arc> {
    top_bottom_part(9).arcs().to_vec()
}

const Y_BUMP: EtaProfile = EtaProfile::YBump { lo: 0.1, hi: 0.9 };

#[test]
fn trivial_gauges_are_the_identity() {
    let part = top_bottom_part(33);
    let t = CoefficientTriple::random_smooth(*part.grid(), 2, 4, 1.0);
    let s0 = GaugeSpec::new(0.0, Y_BUMP, &part).unwrap();
    assert_eq!(gauge_transform(&t, &s0), t);
    let flat = GaugeSpec::new(3.0, EtaProfile::Zero, &part).unwrap();
    assert_eq!(gauge_transform(&t, &flat), t);
}

#[test]
fn windowed_sin_squared_matches_hand_expansion() {
    let part = top_bottom_part(65);
    let g = *part.grid();
    let band = 0.1;
    let s = 1.3;
    let gauge = GaugeSpec::new(s, EtaProfile::WindowedSinSquared { band }, &part).unwrap();
    assert!(gauge.flat_on_gamma_tilde);
    let out = gauge_transform(&CoefficientTriple::zeros(g, 1), &gauge);
    // η depends on x_2 only: A = i s η', B = -i s η', Q = s η'' + s^2 η'^2
    let eta = |y: f64| gauge.profile.eval(c(0.5, y)).eta;
    let step = 1e-4;
    for k in 0..g.len() {
        let y = g.z_at(k).im;
        let (d1, d2) = if y >= 2.0 * band && y <= 1.0 - 2.0 * band {
            (PI * (2.0 * PI * y).sin(), 2.0 * PI * PI * (2.0 * PI * y).cos())
        } else {
            (
                (eta(y + step) - eta(y - step)) / (2.0 * step),
                (eta(y + step) - 2.0 * eta(y) + eta(y - step)) / (step * step),
            )
        };
        let tol = if y >= 2.0 * band && y <= 1.0 - 2.0 * band { 1e-12 } else { 1e-4 };
        assert!((out.a().entry(k, 0, 0) - c(0.0, s * d1)).norm() < tol, "A at y={y}");
        assert!((out.b().entry(k, 0, 0) - c(0.0, -s * d1)).norm() < tol, "B at y={y}");
        assert!((out.q().entry(k, 0, 0) - c(s * d2 + s * s * d1 * d1, 0.0)).norm() < 1e3 * tol, "Q at y={y}");
        if y <= band || y >= 1.0 - band {
            assert_eq!(out.a().entry(k, 0, 0), c(0.0, 0.0));
            assert_eq!(out.q().entry(k, 0, 0), c(0.0, 0.0));
        }
    }
    assert_eq!(max_on_band(&gauge, &part, 0.09), 0.0);
}

#[test]
fn non_flat_profile_is_flagged() {
    let part = top_bottom_part(33);
    let gauge = GaugeSpec::new(1.0, EtaProfile::RadialBump { center: [0.5, 0.9], radius: 0.3 }, &part).unwrap();
    assert!(!gauge.flat_on_gamma_tilde);
    assert!(GaugeSpec::new(1.0, EtaProfile::YBump { lo: 0.9, hi: 0.1 }, &part).is_err());
    let res = gauge_equivalence_experiment(
        &TripleRecipe::Zero { n_sys: 1 },
        1.0,
        EtaProfile::RadialBump { center: [0.5, 0.9], radius: 0.3 },
        &top_bottom_arcs(),
        4,
        &[17],
        None,
    );
    assert!(matches!(res, Err(LabError::Precondition(_))));
}

#[test]
fn relations_vanish_for_identical_triples() {
    let part = top_bottom_part(33);
    let t = CoefficientTriple::random_smooth(*part.grid(), 2, 6, 1.0);
    let r = check_relations(&t, &t, &part).unwrap();
    assert_eq!(r.a1.max, 0.0);
    assert_eq!(r.a2.max, 0.0);
    assert_eq!(r.boundary_gap, 0.0);
    for case in [CorollaryCase::QKnown, CorollaryCase::BKnown, CorollaryCase::AKnown] {
        assert_eq!(corollary_pipeline(case, &t, &t).unwrap().max_l2(), 0.0);
    }
}

#[test]
fn q_perturbation_survives_as_the_only_term() {
    let part = top_bottom_part(33);
    let g = *part.grid();
    let t1 = CoefficientTriple::random_smooth(g, 2, 6, 1.0);
    let pert = QBump { center: [0.4, 0.6], radius: 0.25, amplitude: [3.0, -1.0] };
    let t2 = pert.apply(&t1);
    let dq = t1.q().sub(t2.q());
    let r = check_relations(&t1, &t2, &part).unwrap();
    assert_eq!(r.a1.l2, dq.l2_norm());
    assert_eq!(r.a2.l2, dq.l2_norm());
    assert_eq!(r.a1.max, dq.max_abs());
    assert_eq!(r.boundary_gap, 0.0);
}

#[test]
fn gauge_pairs_satisfy_the_relations_under_refinement() {
    let l2: Vec<f64> = [65, 129, 257]
        .iter()
        .map(|&n| {
            let part = top_bottom_part(n);
            let t1 = CoefficientTriple::random_smooth(*part.grid(), 2, 3, 0.5);
            let gauge = GaugeSpec::new(1.0, Y_BUMP, &part).unwrap();
            let r = check_relations(&t1, &gauge_transform(&t1, &gauge), &part).unwrap();
            assert_eq!(r.boundary_gap, 0.0);
            r.a1.l2.max(r.a2.l2)
        })
        .collect();
    for w in l2.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.8, "{l2:?}");
    }
}

#[test]
fn shared_b_reduces_to_the_closed_form() {
    let g = Grid2D::unit_square(65).unwrap();
    let t1 = CoefficientTriple::random_smooth(g, 1, 8, 0.5);
    // A2 = A1 - δ with δ = sin x cos y, Q2 from the substitution identity
    let delta = ScalarField::from_real_fn(g, |x, y| x.sin() * y.cos()).times_identity(1);
    let a2 = t1.a().sub(&delta);
    let q2 = t1.q().sub(&delta.matmul(t1.b()));
    let t2 = CoefficientTriple::new(a2, t1.b().clone(), q2).unwrap();
    let rep = corollary_pipeline(CorollaryCase::BKnown, &t1, &t2).unwrap();
    assert_eq!(rep.residuals[0].name, "substitution");
    assert!(rep.residuals[0].norms.max < 1e-14);
    // 2∂_z δ = cos x cos y + i sin x sin y; the commutator term vanishes for N = 1
    let exact = ScalarField::from_real_fn(g, |x, y| x.cos() * y.cos())
        .add(&ScalarField::from_fn(g, |z| c(0.0, z.re.sin() * z.im.sin())))
        .times_identity(1);
    let err = rep.residuals[1].field.sub(&exact).max_abs();
    assert!(err < 1e-4, "{err}");
    // same residual through x/y stencils
    let alt = dx(&delta).sub(&dy(&delta).scale(c(0.0, 1.0)));
    assert!(rep.residuals[1].field.sub(&alt).max_abs() < 1e-12);
}

#[test]
fn case_preconditions_are_enforced() {
    let part = top_bottom_part(33);
    let t1 = CoefficientTriple::random_smooth(*part.grid(), 1, 2, 0.5);
    let gauge = GaugeSpec::new(1.0, Y_BUMP, &part).unwrap();
    let t2 = gauge_transform(&t1, &gauge);
    for case in [CorollaryCase::QKnown, CorollaryCase::BKnown, CorollaryCase::AKnown] {
        assert!(matches!(corollary_pipeline(case, &t1, &t2), Err(LabError::Precondition(_))));
    }
}

#[test]
fn zero_strength_gauge_experiment_is_exact() {
    let rep = gauge_equivalence_experiment(&TripleRecipe::Zero { n_sys: 1 }, 0.0, Y_BUMP, &top_bottom_arcs(), 3, &[17, 33], None)
        .unwrap();
    for row in &rep.rows {
        assert_eq!(row.distance, 0.0);
        assert_eq!(row.coefficient_gap, 0.0);
    }
}

#[test]
fn gauge_pair_separates_from_off_gauge_data() {
    let pert = QBump { center: [0.5, 0.5], radius: 0.3, amplitude: [10.0, 0.0] };
    let rep = gauge_equivalence_experiment(
        &TripleRecipe::Zero { n_sys: 1 },
        1.0,
        Y_BUMP,
        &top_bottom_arcs(),
        4,
        &[65, 129, 257],
        Some(&pert),
    )
    .unwrap();
    let rows = &rep.rows;
    assert!(rows[0].distance / rows[1].distance >= 3.0, "{rows:?}");
    assert!(rows.iter().all(|r| r.coefficient_gap >= 0.5));
    assert!(rep.orders.iter().all(|&o| o >= 1.5), "{:?}", rep.orders);
    let last = rows.last().unwrap();
    assert!(last.off_gauge_distance.unwrap() >= 100.0 * last.distance, "{last:?}");
    // the off-gauge distance plateaus instead of refining away
    let off: Vec<f64> = rows.iter().map(|r| r.off_gauge_distance.unwrap()).collect();
    assert!(off[2] > 0.5 * off[1], "{off:?}");
}

fn convex(n: usize) -> CarlemanConvexWeight {
    CarlemanConvexWeight::new(Grid2D::unit_square(n).unwrap(), |x, y| x + 0.1 * y, 2.0).unwrap()
}

#[test]
fn first_order_ratios_do_not_grow() {
    let w = convex(129);
    let g = *w.grid();
    let family = vec![ScalarField::from_real_fn(g, |x, y| (PI * x).sin() * (PI * y).sin()).to_vector()];
    for probe in [CarlemanProbe::FirstOrderDz(w.clone()), CarlemanProbe::FirstOrderDzbar(w.clone())] {
        let rep = carleman_probe(&probe, &TAUS, &family).unwrap();
        let r: Vec<f64> = rep.sup_ratios.iter().map(|r| r.unwrap()).collect();
        assert!(r.windows(2).all(|p| p[1] <= p[0] * 1.0001), "{r:?}");
        assert!(rep.pass);
    }
}

#[test]
fn zero_order_system_ratio_is_bounded() {
    let w = convex(129);
    let g = *w.grid();
    let b1 = MatrixField::constant(g, 2, &[c(0.3, 0.1), c(-0.5, 0.2), c(0.4, 0.0), c(0.1, -0.7)]);
    let b2 = MatrixField::constant(g, 2, &[c(-0.2, 0.6), c(0.3, 0.3), c(0.0, -0.4), c(0.8, 0.1)]);
    let family = dirichlet_test_family(&g, 4, 4, 3);
    let rep = carleman_probe(&CarlemanProbe::SystemZeroOrder { weight: w, b1, b2 }, &TAUS, &family).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!(rep.sup_ratios.iter().all(|r| r.unwrap().is_finite()));
}

#[test]
fn vacuous_family_passes() {
    let w = convex(33);
    let zero = VectorField::zeros(*w.grid(), 1);
    let rep = carleman_probe(&CarlemanProbe::FirstOrderDz(w.clone()), &TAUS, &[zero]).unwrap();
    assert!(rep.sup_ratios.iter().all(Option::is_none));
    assert!(rep.pass);
    assert!(carleman_probe(&CarlemanProbe::FirstOrderDz(w.clone()), &[8.0], &[]).is_err());
    let not_h0 = ScalarField::constant(*w.grid(), c(1.0, 0.0)).to_vector();
    assert!(carleman_probe(&CarlemanProbe::FirstOrderDz(w), &TAUS, &[not_h0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn gauge_transforms_compose_additively(s1 in -1.5f64..1.5, s2 in -1.5f64..1.5, seed in 0u64..100) {
        let part = top_bottom_part(17);
        let t = CoefficientTriple::random_smooth(*part.grid(), 2, seed, 1.0);
        let g1 = GaugeSpec::new(s1, Y_BUMP, &part).unwrap();
        let g2 = GaugeSpec::new(s2, Y_BUMP, &part).unwrap();
        let g12 = GaugeSpec::new(s1 + s2, Y_BUMP, &part).unwrap();
        let twice = gauge_transform(&gauge_transform(&t, &g1), &g2);
        let once = gauge_transform(&t, &g12);
        let scale = 1.0 + once.q().max_abs();
        prop_assert!(twice.gap(&once) < 1e-12 * scale);
    }

    #[test]
    fn inverse_gauge_undoes_the_transform(s in -2.0f64..2.0, r in 0.15f64..0.4) {
        let part = top_bottom_part(17);
        let t = CoefficientTriple::random_smooth(*part.grid(), 1, 1, 1.0);
        let profile = EtaProfile::RadialBump { center: [0.5, 0.5], radius: r };
        let fwd = GaugeSpec::new(s, profile, &part).unwrap();
        let back = GaugeSpec::new(-s, profile, &part).unwrap();
        let round = gauge_transform(&gauge_transform(&t, &fwd), &back);
        prop_assert!(round.gap(&t) < 1e-12 * (1.0 + t.q().max_abs() + s * s * 1e3));
    }
}
