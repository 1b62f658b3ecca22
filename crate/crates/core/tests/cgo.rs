use cgolab::cauchy::TransformPlan;
use cgolab::cgo::{
    build_amplitude, build_amplitude_with, cgo_residual, factorization_check, gauge_conjugated_cgo, source_free_q,
    AmplitudePath, CgoDecayRecord, CgoSolution,
};
use cgolab::field::{BoundaryPartition, Grid2D, GridField, MatrixField, VectorField};
use cgolab::fixtures::{random_smooth_matrix, rng};
use cgolab::forward::CoefficientTriple;
use cgolab::harness::{EtaProfile, GaugeSpec};
use cgolab::weight::{weight_catalog, HolomorphicWeight, WeightSpec};
use cgolab::{Complex64, LabError};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn quadratic(g: Grid2D) -> HolomorphicWeight {
    weight_catalog(WeightSpec::Quadratic { center: [0.5, 0.5] }, &BoundaryPartition::top_bottom(g)).unwrap()
}

fn smooth_seed(g: Grid2D) -> VectorField {
    VectorField::from_fn(g, 2, |z| vec![z * z + 1.0, (z * c(0.5, 0.0)).exp()])
}

#[test]
fn zero_coefficient_keeps_constant_and_linear_seeds() {
    let g = Grid2D::unit_square(33).unwrap();
    let t = CoefficientTriple::zeros(g, 2);
    for seed in [
        VectorField::from_fn(g, 2, |_| vec![c(1.0, 0.0), c(0.0, 0.0)]),
        VectorField::from_fn(g, 2, |z| vec![z, c(0.0, 0.0)]),
    ] {
        let amp = build_amplitude(&t, &seed, None).unwrap();
        assert_eq!(amp.w0, seed);
        assert_eq!(amp.w0_tilde, seed.conj());
        assert_eq!(amp.residual, 0.0);
    }
}

#[test]
fn random_system_amplitude_converges() {
    let g = Grid2D::unit_square(65).unwrap();
    let t = CoefficientTriple::random_smooth(g, 2, 11, 1.0);
    let amp = build_amplitude(&t, &smooth_seed(g), None).unwrap();
    assert!(amp.residual < 1e-8, "{}", amp.residual);
    assert!(amp.stencil_residual < 1e-3, "{}", amp.stencil_residual);
    assert!(amp.w0.is_finite() && amp.w0_tilde.is_finite());
}

#[test]
fn stencil_residual_refines_at_second_order() {
    let res: Vec<f64> = [33, 65, 129]
        .iter()
        .map(|&n| {
            let g = Grid2D::unit_square(n).unwrap();
            let t = CoefficientTriple::random_smooth(g, 2, 11, 1.0);
            build_amplitude(&t, &smooth_seed(g), None).unwrap().stencil_residual
        })
        .collect();
    for w in res.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.8, "{res:?}");
    }
}

#[test]
fn explicit_mirror_seed_is_used() {
    let g = Grid2D::unit_square(33).unwrap();
    let t = CoefficientTriple::zeros(g, 1);
    let seed = VectorField::from_fn(g, 1, |z| vec![z]);
    let mirror = VectorField::from_fn(g, 1, |z| vec![z.conj() * z.conj()]);
    let amp = build_amplitude(&t, &seed, Some(&mirror)).unwrap();
    assert_eq!(amp.w0_tilde, mirror);
    // a holomorphic field is not a valid mirror seed
    assert!(build_amplitude(&t, &seed, Some(&seed)).is_err());
}

#[test]
fn shape_mismatch_is_reported() {
    let g = Grid2D::unit_square(17).unwrap();
    let t = CoefficientTriple::zeros(g, 2);
    let seed = VectorField::from_fn(g, 1, |z| vec![z]);
    assert!(matches!(build_amplitude(&t, &seed, None), Err(LabError::ShapeMismatch(_))));
}

#[test]
fn constant_coefficients_factorize_to_round_off() {
    let g = Grid2D::unit_square(65).unwrap();
    let t = CoefficientTriple::new(
        MatrixField::constant(g, 1, &[c(0.7, -0.2)]),
        MatrixField::constant(g, 1, &[c(-0.3, 0.4)]),
        MatrixField::constant(g, 1, &[c(1.5, 0.1)]),
    )
    .unwrap();
    let v = VectorField::from_fn(g, 1, |z| vec![(z * c(1.0, 2.0)).sin() + z.conj() * z]);
    let rep = factorization_check(&t, &v).unwrap();
    assert!(rep.first_form < 1e-10 && rep.second_form < 1e-10, "{rep:?}");
    // zero coefficients: the check compares two Laplacian stencils
    let rep0 = factorization_check(&CoefficientTriple::zeros(g, 1), &v).unwrap();
    assert!(rep0.first_form < 1e-10 && rep0.second_form < 1e-10);
    assert!(rep0.five_point > 1e-8 && rep0.five_point < 1e-2 * rep0.scale);
}

#[test]
fn variable_coefficients_factorize_under_refinement() {
    let reps: Vec<_> = [33, 65, 129]
        .iter()
        .map(|&n| {
            let g = Grid2D::unit_square(n).unwrap();
            let t = CoefficientTriple::random_smooth(g, 2, 5, 1.0);
            let v = VectorField::from_fn(g, 2, |z| vec![(z * 2.0).sin(), z.conj() * z.exp()]);
            factorization_check(&t, &v).unwrap()
        })
        .collect();
    for w in reps.windows(2) {
        for (a, b) in [(w[0].first_form, w[1].first_form), (w[0].second_form, w[1].second_form)] {
            assert!((a / b).log2() >= 1.8, "{reps:?}");
        }
        assert!((w[0].five_point / w[1].five_point).log2() >= 1.8, "{reps:?}");
    }
}

fn cgo_at(n: usize, tau: f64, t: impl Fn(Grid2D) -> CoefficientTriple) -> (CoefficientTriple, CgoSolution) {
    let g = Grid2D::unit_square(n).unwrap();
    let t = t(g);
    let amp = build_amplitude(&t, &smooth_seed(g), None).unwrap();
    let sol = CgoSolution::new(amp, quadratic(g), tau, &t).unwrap();
    (t, sol)
}

#[test]
fn source_free_case_is_pure_discretization_error() {
    let coefs = |g: Grid2D| {
        let mut r = rng(3);
        let a = random_smooth_matrix(g, 2, &mut r, 1.0);
        let b = MatrixField::zeros(g, 2);
        let q = source_free_q(&a, &b);
        CoefficientTriple::new(a, b, q).unwrap()
    };
    let res: Vec<f64> = [65, 129]
        .iter()
        .map(|&n| cgo_at(n, 4.0, coefs).1.weighted_residual)
        .collect();
    let (_, sol) = cgo_at(65, 4.0, coefs);
    let rec = cgo_residual(&sol, &coefs(Grid2D::unit_square(65).unwrap())).unwrap();
    assert!(rec.weighted_halves[0] < 1e-2, "{rec:?}");
    assert!(res[0] / res[1] > 3.0, "{res:?}");
}

#[test]
fn zero_tau_residual_is_second_order() {
    let res: Vec<CgoDecayRecord> = [65, 129, 257]
        .iter()
        .map(|&n| {
            let (t, sol) = cgo_at(n, 0.0, |g| CoefficientTriple::random_smooth(g, 2, 11, 1.0));
            cgo_residual(&sol, &t).unwrap()
        })
        .collect();
    for w in res.windows(2) {
        assert!((w[0].residual_weighted / w[1].residual_weighted).log2() >= 1.8, "{res:?}");
        // at τ = 0 the weighted and raw residuals are the same quantity
        assert!((w[0].residual_weighted - w[0].residual_raw).abs() < 1e-10);
    }
}

#[test]
fn both_halves_refine_at_fixed_tau() {
    let recs: Vec<CgoDecayRecord> = [65, 129]
        .iter()
        .map(|&n| {
            let (t, sol) = cgo_at(n, 8.0, |g| CoefficientTriple::random_smooth(g, 2, 11, 1.0));
            cgo_residual(&sol, &t).unwrap()
        })
        .collect();
    for half in 0..2 {
        let ratio = recs[0].weighted_halves[half] / recs[1].weighted_halves[half];
        assert!(ratio > 3.0, "{recs:?}");
    }
    assert_eq!(recs[0].csv_row().split(',').count(), CgoDecayRecord::CSV_HEADER.split(',').count());
    assert!(recs[0].csv_row().starts_with("8,65,"));
}

#[test]
fn weight_overflow_is_guarded() {
    let g = Grid2D::unit_square(17).unwrap();
    let t = CoefficientTriple::zeros(g, 2);
    let amp = build_amplitude(&t, &smooth_seed(g), None).unwrap();
    let err = CgoSolution::new(amp, quadratic(g), 1e4, &t).unwrap_err();
    assert!(matches!(err, LabError::WeightOverflow { .. }));
}

#[test]
fn trivial_gauges_leave_the_solution_alone() {
    let (t, sol) = cgo_at(33, 4.0, |g| CoefficientTriple::random_smooth(g, 2, 2, 0.5));
    let part = BoundaryPartition::top_bottom(*t.grid());
    let bump = EtaProfile::RadialBump { center: [0.5, 0.5], radius: 0.3 };
    for gauge in [
        GaugeSpec::new(0.0, bump, &part).unwrap(),
        GaugeSpec::new(2.0, EtaProfile::Zero, &part).unwrap(),
    ] {
        let out = gauge_conjugated_cgo(&sol, &t, &gauge).unwrap();
        assert_eq!(out.solution.u, sol.u);
        assert_eq!(out.coefficients, t);
    }
}

#[test]
fn bump_gauge_conjugates_the_amplitude_system() {
    let (t, sol) = cgo_at(257, 4.0, |g| CoefficientTriple::random_smooth(g, 2, 2, 0.5));
    let part = BoundaryPartition::top_bottom(*t.grid());
    let gauge = GaugeSpec::new(1.0, EtaProfile::RadialBump { center: [0.5, 0.5], radius: 0.45 }, &part).unwrap();
    let out = gauge_conjugated_cgo(&sol, &t, &gauge).unwrap();
    assert!(out.transformed_residual < 10.0 * out.original_residual, "{} vs {}", out.transformed_residual, out.original_residual);
    assert!(out.solution.weighted_residual.is_finite());
    // outside the bump nothing changes
    let g = *t.grid();
    let k = g.index(10, 10);
    assert_eq!(out.solution.u.node(k), sol.u.node(k));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn amplitude_is_linear_in_the_seed(a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let g = Grid2D::unit_square(33).unwrap();
        let t = CoefficientTriple::random_smooth(g, 2, 9, 1.0);
        let plan = TransformPlan::new(g).unwrap();
        let s1 = smooth_seed(g);
        let s2 = VectorField::from_fn(g, 2, |z| vec![c(1.0, 0.0), z * z * z]);
        let alpha = c(a, b);
        let build = |s: &VectorField| build_amplitude_with(&plan, &t, s, None, AmplitudePath::Direct).unwrap().w0;
        let combo = build(&s1.lin_comb(alpha, &s2, c(1.0, 0.0)));
        let lin = build(&s1).lin_comb(alpha, &build(&s2), c(1.0, 0.0));
        prop_assert!(combo.sub(&lin).max_abs() < 1e-8 * (1.0 + lin.max_abs()));
    }
}
