//! Leading-order complex geometric optics solutions `w0 e^{τΦ} + w~0 e^{τ conj Φ}`.
//!
//! The amplitudes solve `(2∂_zbar + A) w0 = 0` and `(2∂_z + B) w~0 = 0`. They are
//! built from a holomorphic (resp. antiholomorphic) seed through the integral
//! equation `w0 = seed - ½ ∂_zbar^{-1}(A w0)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cauchy::{Side, TransformPlan};
use crate::error::{LabError, Result};
use crate::field::{wirtinger_dz, wirtinger_dzbar, Grid2D, GridField, MatrixField, ScalarField, VectorField};
use crate::forward::CoefficientTriple;
use crate::harness::gauge::{gauge_transform, GaugeSpec};
use crate::linalg::gmres;
use crate::weight::HolomorphicWeight;

/// Factorization and amplitude residuals skip this many boundary layers of nodes.
pub const RESIDUAL_MARGIN: usize = 4;
/// CGO residuals are measured at distance at least this fraction of the
/// domain width from the boundary.
pub const CGO_BAND: f64 = 0.125;
/// Relative fixed-point update at which the amplitude iteration stops.
pub const AMPLITUDE_TOL: f64 = 1e-10;
const MAX_FIXED_POINT: usize = 500;
const HOLOMORPHY_TOL: f64 = 1e-4;

const HALF: Complex64 = Complex64 { re: 0.5, im: 0.0 };
const TWO: Complex64 = Complex64 { re: 2.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudePath {
    FixedPoint,
    Direct,
    /// Fixed point, falling back to the direct solve when it diverges.
    Auto,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CgoAmplitude {
    pub w0: VectorField,
    pub w0_tilde: VectorField,
    pub seed: VectorField,
    pub seed_tilde: VectorField,
    /// Relative residual of the integral equations (max over both amplitudes).
    pub residual: f64,
    /// Relative finite-difference residual of `2∂_zbar w0 + A w0` and
    /// `2∂_z w~0 + B w~0` on inner nodes (max over both), O(h^2).
    pub stencil_residual: f64,
    /// Path that produced each amplitude.
    pub paths: [AmplitudePath; 2],
}

fn rel(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// `w + ½ ∂_side^{-1}(C w)`.
fn integral_lhs(plan: &TransformPlan, coef: &MatrixField, side: Side, w: &VectorField) -> VectorField {
    w.add(&plan.apply(side, &coef.apply(w)).scale(HALF))
}

fn fixed_point(plan: &TransformPlan, coef: &MatrixField, side: Side, seed: &VectorField) -> Result<VectorField> {
    let mut w = seed.clone();
    let mut prev_update = f64::INFINITY;
    let mut growing = 0;
    for _ in 0..MAX_FIXED_POINT {
        let next = seed.sub(&plan.apply(side, &coef.apply(&w)).scale(HALF));
        let update = next.sub(&w).l2_norm();
        let scale = next.l2_norm();
        w = next;
        if update <= AMPLITUDE_TOL * scale || update == 0.0 {
            return Ok(w);
        }
        if update >= prev_update {
            growing += 1;
            if growing >= 3 {
                return Err(LabError::SeriesDiverged {
                    ratio: update / prev_update,
                });
            }
        } else {
            growing = 0;
        }
        prev_update = update;
    }
    Err(LabError::NotConverged {
        method: "amplitude fixed point",
        iterations: MAX_FIXED_POINT,
        residual: prev_update,
    })
}

fn direct(plan: &TransformPlan, coef: &MatrixField, side: Side, seed: &VectorField) -> Result<VectorField> {
    let template = seed.zeros_like();
    let mut apply = |x: &[Complex64], y: &mut [Complex64]| {
        let v = template.with_data(x.to_vec());
        y.copy_from_slice(integral_lhs(plan, coef, side, &v).data());
    };
    let (x, _) = gmres(seed.data().len(), &mut apply, seed.data(), 0.1 * AMPLITUDE_TOL, 60, 1200)?;
    Ok(seed.with_data(x))
}

fn solve_amplitude(
    plan: &TransformPlan,
    coef: &MatrixField,
    side: Side,
    seed: &VectorField,
    path: AmplitudePath,
) -> Result<(VectorField, AmplitudePath)> {
    match path {
        AmplitudePath::FixedPoint => fixed_point(plan, coef, side, seed)
            .map(|w| (w, AmplitudePath::FixedPoint))
            .map_err(|e| match e {
                LabError::SeriesDiverged { ratio } => LabError::InvalidParameter(format!(
                    "amplitude fixed point diverged (update ratio {ratio:.3}); use the direct path"
                )),
                other => other,
            }),
        AmplitudePath::Direct => direct(plan, coef, side, seed).map(|w| (w, AmplitudePath::Direct)),
        AmplitudePath::Auto => match fixed_point(plan, coef, side, seed) {
            Ok(w) => Ok((w, AmplitudePath::FixedPoint)),
            Err(first) => {
                log::info!("amplitude fixed point failed ({first}); trying the direct solve");
                direct(plan, coef, side, seed)
                    .map(|w| (w, AmplitudePath::Direct))
                    .map_err(|second| {
                        LabError::InvalidParameter(format!(
                            "both amplitude paths failed: fixed point: {first}; direct: {second}"
                        ))
                    })
            }
        },
    }
}

/// Errors when `∂_side seed` is not negligible next to `∂_other seed` and `seed`.
fn check_seed(seed: &VectorField, side: Side, what: &str) -> Result<()> {
    let (killed, kept) = match side {
        Side::Zbar => (wirtinger_dzbar(seed), wirtinger_dz(seed)),
        Side::Z => (wirtinger_dz(seed), wirtinger_dzbar(seed)),
    };
    let defect = killed.inner_max_abs(2);
    let scale = kept.inner_max_abs(2) + seed.inner_max_abs(2);
    if !seed.is_finite() {
        return Err(LabError::NonFinite("amplitude seed"));
    }
    if defect > HOLOMORPHY_TOL * scale.max(f64::MIN_POSITIVE) && defect > 0.0 {
        return Err(LabError::InvalidParameter(format!(
            "{what} seed is not {}: max |∂ seed| = {defect:.3e} against scale {scale:.3e}",
            if side == Side::Zbar { "holomorphic" } else { "antiholomorphic" }
        )));
    }
    Ok(())
}

/// `2∂_side w + C w`.
fn first_order(coef: &MatrixField, side: Side, w: &VectorField) -> VectorField {
    side.derivative(w).scale(TWO).add(&coef.apply(w))
}

/// Build both amplitudes. `seed_tilde` defaults to `conj(seed)`.
pub fn build_amplitude(
    coefs: &CoefficientTriple,
    seed: &VectorField,
    seed_tilde: Option<&VectorField>,
) -> Result<CgoAmplitude> {
    let plan = TransformPlan::new(*coefs.grid())?;
    build_amplitude_with(&plan, coefs, seed, seed_tilde, AmplitudePath::Auto)
}

pub fn build_amplitude_with(
    plan: &TransformPlan,
    coefs: &CoefficientTriple,
    seed: &VectorField,
    seed_tilde: Option<&VectorField>,
    path: AmplitudePath,
) -> Result<CgoAmplitude> {
    let seed_tilde = seed_tilde.cloned().unwrap_or_else(|| seed.conj());
    for s in [seed, &seed_tilde] {
        if s.grid() != coefs.grid() || s.grid() != plan.grid() || s.n_sys() != coefs.n_sys() {
            return Err(LabError::ShapeMismatch("seed does not match the coefficients".into()));
        }
    }
    check_seed(seed, Side::Zbar, "w0")?;
    check_seed(&seed_tilde, Side::Z, "w~0")?;
    let (w0, p0) = solve_amplitude(plan, coefs.a(), Side::Zbar, seed, path)?;
    let (w1, p1) = solve_amplitude(plan, coefs.b(), Side::Z, &seed_tilde, path)?;
    let ires = |w: &VectorField, coef: &MatrixField, side: Side, s: &VectorField| {
        rel(integral_lhs(plan, coef, side, w).sub(s).l2_norm(), s.l2_norm())
    };
    let residual = ires(&w0, coefs.a(), Side::Zbar, seed).max(ires(&w1, coefs.b(), Side::Z, &seed_tilde));
    let stencil_residual = stencil_residual(coefs, &w0, &w1);
    Ok(CgoAmplitude {
        w0,
        w0_tilde: w1,
        seed: seed.clone(),
        seed_tilde,
        residual,
        stencil_residual,
        paths: [p0, p1],
    })
}

fn stencil_residual(coefs: &CoefficientTriple, w0: &VectorField, w1: &VectorField) -> f64 {
    let m = RESIDUAL_MARGIN;
    let r0 = rel(
        first_order(coefs.a(), Side::Zbar, w0).inner_l2_norm(m),
        side_scale(coefs.a(), Side::Zbar, w0, m),
    );
    let r1 = rel(
        first_order(coefs.b(), Side::Z, w1).inner_l2_norm(m),
        side_scale(coefs.b(), Side::Z, w1, m),
    );
    r0.max(r1)
}

// the two terms that cancel, so the residual is relative to their size
fn side_scale(coef: &MatrixField, side: Side, w: &VectorField, m: usize) -> f64 {
    side.derivative(w).scale(TWO).inner_l2_norm(m) + coef.apply(w).inner_l2_norm(m)
}

/// Discrepancies between `L v` and its two factorized forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub nx: usize,
    /// `max |L_c v - [(2∂_z + B)(2∂_zbar + A) + Q - 2∂_z A - BA] v|`, where
    /// `L_c` uses the composed Laplacian `4∂_z∂_zbar`.
    pub first_form: f64,
    /// Same for `(2∂_zbar + A)(2∂_z + B) + Q - 2∂_zbar B - AB`.
    pub second_form: f64,
    /// First form against the solver's 5-point operator instead of `L_c`.
    pub five_point: f64,
    /// `max |L_c v|`, for scale.
    pub scale: f64,
}

/// Compare `L v` with both factorizations on nodes at least
/// [`RESIDUAL_MARGIN`] from the boundary. With constant coefficients the
/// first two discrepancies vanish to round-off.
pub fn factorization_check(coefs: &CoefficientTriple, v: &VectorField) -> Result<FactorizationReport> {
    if v.grid() != coefs.grid() || v.n_sys() != coefs.n_sys() {
        return Err(LabError::ShapeMismatch("test field does not match the coefficients".into()));
    }
    let (a, b, q) = (coefs.a(), coefs.b(), coefs.q());
    let vz = wirtinger_dz(v);
    let vzb = wirtinger_dzbar(v);
    let composed = wirtinger_dz(&vzb)
        .scale(Complex64::new(4.0, 0.0))
        .add(&a.apply(&vz).scale(TWO))
        .add(&b.apply(&vzb).scale(TWO))
        .add(&q.apply(v));

    let inner1 = vzb.scale(TWO).add(&a.apply(v));
    let src1 = q.sub(&wirtinger_dz(a).scale(TWO)).sub(&b.matmul(a));
    let f1 = wirtinger_dz(&inner1)
        .scale(TWO)
        .add(&b.apply(&inner1))
        .add(&src1.apply(v));

    let inner2 = vz.scale(TWO).add(&b.apply(v));
    let src2 = q.sub(&wirtinger_dzbar(b).scale(TWO)).sub(&a.matmul(b));
    let f2 = wirtinger_dzbar(&inner2)
        .scale(TWO)
        .add(&a.apply(&inner2))
        .add(&src2.apply(v));

    let m = RESIDUAL_MARGIN;
    Ok(FactorizationReport {
        nx: v.grid().nx,
        first_form: composed.sub(&f1).inner_max_abs(m),
        second_form: composed.sub(&f2).inner_max_abs(m),
        five_point: coefs.apply_operator(v).sub(&f1).inner_max_abs(m),
        scale: composed.inner_max_abs(m),
    })
}

/// One row of a CGO decay table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgoDecayRecord {
    pub tau: f64,
    pub nx: usize,
    /// Max over both halves of the relative `e^{-τφ}`-weighted residual.
    pub residual_weighted: f64,
    /// Same, with `L` applied by finite differences to the full product.
    pub residual_raw: f64,
    pub weighted_halves: [f64; 2],
    pub raw_halves: [f64; 2],
}

impl CgoDecayRecord {
    pub const CSV_HEADER: &'static str = "tau,nx,residual_weighted,residual_raw";

    pub fn csv_row(&self) -> String {
        format!("{},{},{:e},{:e}", self.tau, self.nx, self.residual_weighted, self.residual_raw)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CgoSolution {
    pub amplitude: CgoAmplitude,
    pub weight: HolomorphicWeight,
    pub tau: f64,
    /// `max φ` over the grid; `u` uses `e^{τ(Φ - phi_shift)}`.
    pub phi_shift: f64,
    pub u: VectorField,
    pub weighted_residual: f64,
    pub raw_residual: f64,
}

fn check_overflow(weight: &HolomorphicWeight, grid: &Grid2D, tau: f64) -> Result<f64> {
    if !tau.is_finite() {
        return Err(LabError::InvalidParameter(format!("tau must be finite, got {tau}")));
    }
    let (lo, hi) = (0..grid.len())
        .map(|k| weight.phi(grid.z_at(k)))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p), hi.max(p)));
    let exponent = tau.abs() * (hi - lo);
    if exponent > 700.0 {
        return Err(LabError::WeightOverflow { exponent });
    }
    Ok(if tau >= 0.0 { hi } else { lo })
}

/// `e^{τ(Φ - shift)}` for `Side::Zbar`, `e^{τ(conj Φ - shift)}` for `Side::Z`.
fn exponential(weight: &HolomorphicWeight, grid: &Grid2D, tau: f64, shift: f64, side: Side) -> ScalarField {
    ScalarField::from_fn(*grid, |z| {
        let p = weight.value(z);
        let p = if side == Side::Z { p.conj() } else { p };
        (tau * (p - shift)).exp()
    })
}

impl CgoSolution {
    pub fn new(amplitude: CgoAmplitude, weight: HolomorphicWeight, tau: f64, coefs: &CoefficientTriple) -> Result<Self> {
        let grid = *amplitude.w0.grid();
        if coefs.grid() != &grid || coefs.n_sys() != amplitude.w0.n_sys() {
            return Err(LabError::ShapeMismatch("amplitude does not match the coefficients".into()));
        }
        let shift = check_overflow(&weight, &grid, tau)?;
        weight.check_resolution(&grid, tau);
        let u = amplitude
            .w0
            .mul_scalar(&exponential(&weight, &grid, tau, shift, Side::Zbar))
            .add(&amplitude.w0_tilde.mul_scalar(&exponential(&weight, &grid, tau, shift, Side::Z)));
        let mut sol = Self {
            amplitude,
            weight,
            tau,
            phi_shift: shift,
            u,
            weighted_residual: 0.0,
            raw_residual: 0.0,
        };
        let rec = cgo_residual(&sol, coefs)?;
        sol.weighted_residual = rec.residual_weighted;
        sol.raw_residual = rec.residual_raw;
        Ok(sol)
    }
}

/// Zero-order source `Q - 2∂_z A - BA` (Zbar half) or `Q - 2∂_zbar B - AB` (Z half).
fn source_coefficient(coefs: &CoefficientTriple, side: Side) -> MatrixField {
    let (a, b, q) = (coefs.a(), coefs.b(), coefs.q());
    match side {
        Side::Zbar => q.sub(&wirtinger_dz(a).scale(TWO)).sub(&b.matmul(a)),
        Side::Z => q.sub(&wirtinger_dzbar(b).scale(TWO)).sub(&a.matmul(b)),
    }
}

/// Weighted and raw relative residuals of one half.
fn half_residual(sol: &CgoSolution, coefs: &CoefficientTriple, side: Side) -> (f64, f64) {
    let grid = *coefs.grid();
    let (w, coef) = match side {
        Side::Zbar => (&sol.amplitude.w0, coefs.a()),
        Side::Z => (&sol.amplitude.w0_tilde, coefs.b()),
    };
    let m = ((grid.nx.min(grid.ny) - 1) as f64 * CGO_BAND).round() as usize;
    let tau = sol.tau;
    let src = source_coefficient(coefs, side).apply(w);
    let den = {
        let s = src.inner_l2_norm(m);
        // source-free configurations are measured against the amplitude
        if s > 1e-12 * w.inner_l2_norm(m) {
            s
        } else {
            w.inner_l2_norm(m)
        }
    };
    // e^{-τΦ} L(w e^{τΦ}) = L w + 2τΦ'(2∂_zbar w + A w), and mirrored
    let dphi = match side {
        Side::Zbar => sol.weight.sample_dz(&grid),
        Side::Z => sol.weight.sample_dz(&grid).conj(),
    };
    let weighted = coefs
        .apply_operator(w)
        .add(&first_order(coef, side, w).mul_scalar(&dphi).scale(Complex64::new(2.0 * tau, 0.0)))
        .sub(&src);
    let e = exponential(&sol.weight, &grid, tau, sol.phi_shift, side);
    let v = w.mul_scalar(&e);
    let inv_mod = ScalarField::from_fn(grid, |z| {
        Complex64::new((-tau * (sol.weight.phi(z) - sol.phi_shift)).exp(), 0.0)
    });
    let raw = coefs.apply_operator(&v).sub(&src.mul_scalar(&e)).mul_scalar(&inv_mod);
    (rel(weighted.inner_l2_norm(m), den), rel(raw.inner_l2_norm(m), den))
}

/// `e^{-τφ}`-weighted discrepancy between `L(w0 e^{τΦ})` and its zero-order
/// source, for both halves of the solution.
pub fn cgo_residual(sol: &CgoSolution, coefs: &CoefficientTriple) -> Result<CgoDecayRecord> {
    let grid = *sol.amplitude.w0.grid();
    if coefs.grid() != &grid {
        return Err(LabError::ShapeMismatch("solution and coefficients live on different grids".into()));
    }
    check_overflow(&sol.weight, &grid, sol.tau)?;
    let (w0, r0) = half_residual(sol, coefs, Side::Zbar);
    let (w1, r1) = half_residual(sol, coefs, Side::Z);
    Ok(CgoDecayRecord {
        tau: sol.tau,
        nx: grid.nx,
        residual_weighted: w0.max(w1),
        residual_raw: r0.max(r1),
        weighted_halves: [w0, w1],
        raw_halves: [r0, r1],
    })
}

/// Output of [`gauge_conjugated_cgo`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaugedCgo {
    pub solution: CgoSolution,
    pub coefficients: CoefficientTriple,
    /// Stencil residual of the original amplitude system.
    pub original_residual: f64,
    /// Stencil residual of the conjugated amplitudes in the transformed system.
    pub transformed_residual: f64,
}

/// Transport a CGO solution of `L` to the gauge-transformed operator
/// `e^{-sη} L e^{sη}`: amplitudes and `u` are multiplied by `e^{-sη}`.
pub fn gauge_conjugated_cgo(sol: &CgoSolution, coefs: &CoefficientTriple, gauge: &GaugeSpec) -> Result<GaugedCgo> {
    let grid = *coefs.grid();
    let factor = gauge.factor(&grid, -1.0)?;
    let transformed = gauge_transform(coefs, gauge);
    let amp = &sol.amplitude;
    let w0 = amp.w0.mul_scalar(&factor);
    let w1 = amp.w0_tilde.mul_scalar(&factor);
    let transformed_residual = stencil_residual(&transformed, &w0, &w1);
    let amplitude = CgoAmplitude {
        w0,
        w0_tilde: w1,
        seed: amp.seed.clone(),
        seed_tilde: amp.seed_tilde.clone(),
        residual: transformed_residual,
        stencil_residual: transformed_residual,
        paths: amp.paths,
    };
    let solution = CgoSolution::new(amplitude, sol.weight.clone(), sol.tau, &transformed)?;
    Ok(GaugedCgo {
        solution,
        coefficients: transformed,
        original_residual: amp.stencil_residual,
        transformed_residual,
    })
}

/// `Q = 2∂_z A + BA`: the coefficients for which the first half is source-free.
pub fn source_free_q(a: &MatrixField, b: &MatrixField) -> MatrixField {
    wirtinger_dz(a).scale(TWO).add(&b.matmul(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{random_smooth_matrix, rng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_coefficient_reproduces_the_seed() {
        let g = Grid2D::unit_square(33).unwrap();
        let t = CoefficientTriple::zeros(g, 2);
        let seed = VectorField::from_fn(g, 2, |z| vec![z, c(1.0, 0.0)]);
        let amp = build_amplitude(&t, &seed, None).unwrap();
        assert_eq!(amp.w0, seed);
        assert_eq!(amp.w0_tilde, seed.conj());
    }

    #[test]
    fn non_holomorphic_seed_is_rejected() {
        let g = Grid2D::unit_square(33).unwrap();
        let t = CoefficientTriple::zeros(g, 1);
        let seed = VectorField::from_fn(g, 1, |z| vec![z.conj()]);
        assert!(build_amplitude(&t, &seed, None).is_err());
    }

    #[test]
    fn fixed_point_and_direct_agree() {
        let g = Grid2D::unit_square(33).unwrap();
        let mut r = rng(4);
        let a = random_smooth_matrix(g, 2, &mut r, 1.0);
        let b = random_smooth_matrix(g, 2, &mut r, 1.0);
        let t = CoefficientTriple::new(a, b, MatrixField::zeros(g, 2)).unwrap();
        let plan = TransformPlan::new(g).unwrap();
        let seed = VectorField::from_fn(g, 2, |z| vec![z.exp(), c(1.0, 0.5)]);
        let fp = build_amplitude_with(&plan, &t, &seed, None, AmplitudePath::FixedPoint).unwrap();
        let dr = build_amplitude_with(&plan, &t, &seed, None, AmplitudePath::Direct).unwrap();
        assert!(fp.w0.sub(&dr.w0).max_abs() < 1e-9);
        assert!(fp.residual < 1e-9 && dr.residual < 1e-9);
    }

    #[test]
    fn strong_coefficient_falls_back_to_the_direct_path() {
        let g = Grid2D::unit_square(17).unwrap();
        let a = MatrixField::constant(g, 1, &[c(40.0, 0.0)]);
        let t = CoefficientTriple::new(a.clone(), a, MatrixField::zeros(g, 1)).unwrap();
        let plan = TransformPlan::new(g).unwrap();
        let seed = VectorField::from_fn(g, 1, |_| vec![c(1.0, 0.0)]);
        assert!(build_amplitude_with(&plan, &t, &seed, None, AmplitudePath::FixedPoint).is_err());
        let amp = build_amplitude_with(&plan, &t, &seed, None, AmplitudePath::Auto).unwrap();
        assert_eq!(amp.paths[0], AmplitudePath::Direct);
        assert!(amp.residual < 1e-10);
    }
}
