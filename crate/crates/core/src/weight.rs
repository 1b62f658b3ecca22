//! Holomorphic Carleman weights `Φ = φ + iψ`, their critical points, oscillatory
//! integrals and stationary-phase leading terms.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{dx, dy, wirtinger_dzbar, BoundaryPartition, Grid2D, GridField, Label, ScalarField};

/// Catalog entry, serialized as `{"kind": .., "params": {..}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum WeightSpec {
    /// `Φ = α z`.
    Linear { alpha: [f64; 2] },
    /// `Φ = (z - c)^2`.
    Quadratic { center: [f64; 2] },
    /// `Φ = (z - c)^3 / 3 - m (z - c)`.
    Cubic { center: [f64; 2], m: f64 },
}

fn cx(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

/// Which of the structural conditions on `Φ` this instance satisfies on a given
/// domain and boundary split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionFlags {
    pub holomorphic: bool,
    pub im_vanishes_on_gamma0: bool,
    pub nondegenerate_critical_points: bool,
    pub critical_points_off_gamma_tilde: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub location: Complex64,
    pub psi_value: f64,
    pub hessian: [[f64; 2]; 2],
    /// `|∂_z^2 Φ|` at the point.
    pub margin: f64,
}

impl CriticalPoint {
    pub fn hessian_det(&self) -> f64 {
        let h = self.hessian;
        h[0][0] * h[1][1] - h[0][1] * h[1][0]
    }

    /// Signature of `ψ''`: (#positive - #negative) eigenvalues.
    pub fn signature(&self) -> i32 {
        let h = self.hessian;
        let tr = h[0][0] + h[1][1];
        let det = self.hessian_det();
        if det < 0.0 {
            0
        } else if tr > 0.0 {
            2
        } else {
            -2
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolomorphicWeight {
    pub spec: WeightSpec,
    pub flags: ConditionFlags,
    pub critical_points: Vec<CriticalPoint>,
}

impl WeightSpec {
    #[inline]
    pub fn value(&self, z: Complex64) -> Complex64 {
        match *self {
            WeightSpec::Linear { alpha } => cx(alpha) * z,
            WeightSpec::Quadratic { center } => {
                let w = z - cx(center);
                w * w
            }
            WeightSpec::Cubic { center, m } => {
                let w = z - cx(center);
                w * w * w / 3.0 - m * w
            }
        }
    }

    /// `∂_z Φ`.
    #[inline]
    pub fn dz(&self, z: Complex64) -> Complex64 {
        match *self {
            WeightSpec::Linear { alpha } => cx(alpha),
            WeightSpec::Quadratic { center } => 2.0 * (z - cx(center)),
            WeightSpec::Cubic { center, m } => {
                let w = z - cx(center);
                w * w - m
            }
        }
    }

    /// `∂_z^2 Φ`.
    #[inline]
    pub fn dz2(&self, z: Complex64) -> Complex64 {
        match *self {
            WeightSpec::Linear { .. } => Complex64::new(0.0, 0.0),
            WeightSpec::Quadratic { .. } => Complex64::new(2.0, 0.0),
            WeightSpec::Cubic { center, .. } => 2.0 * (z - cx(center)),
        }
    }
}

impl HolomorphicWeight {
    #[inline]
    pub fn value(&self, z: Complex64) -> Complex64 {
        self.spec.value(z)
    }

    #[inline]
    pub fn dz(&self, z: Complex64) -> Complex64 {
        self.spec.dz(z)
    }

    #[inline]
    pub fn dz2(&self, z: Complex64) -> Complex64 {
        self.spec.dz2(z)
    }

    /// `∂_zbar Φ`, identically zero for every catalog entry.
    #[inline]
    pub fn dzbar(&self, _z: Complex64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    #[inline]
    pub fn phi(&self, z: Complex64) -> f64 {
        self.value(z).re
    }

    #[inline]
    pub fn psi(&self, z: Complex64) -> f64 {
        self.value(z).im
    }

    /// Gradient of `ψ`: `(Im Φ', Re Φ')` by the Cauchy-Riemann equations.
    pub fn grad_psi(&self, z: Complex64) -> [f64; 2] {
        let d = self.dz(z);
        [d.im, d.re]
    }

    /// Hessian of `ψ` from `Φ''`: `[[Im Φ'', Re Φ''], [Re Φ'', -Im Φ'']]`.
    pub fn psi_hessian(&self, z: Complex64) -> [[f64; 2]; 2] {
        let d2 = self.dz2(z);
        [[d2.im, d2.re], [d2.re, -d2.im]]
    }

    pub fn sample(&self, grid: &Grid2D) -> ScalarField {
        ScalarField::from_fn(*grid, |z| self.value(z))
    }

    pub fn sample_dz(&self, grid: &Grid2D) -> ScalarField {
        ScalarField::from_fn(*grid, |z| self.dz(z))
    }

    /// `e^{s·2iτψ}` on the grid, i.e. `e^{τ(Φ - conj Φ)}` for `s = +1`.
    pub fn phase_factor(&self, grid: &Grid2D, tau: f64, s: f64) -> ScalarField {
        ScalarField::from_fn(*grid, |z| Complex64::from_polar(1.0, 2.0 * s * tau * self.psi(z)))
    }

    /// Max of `2τ|∇ψ|` over the grid: the local angular frequency of `e^{2iτψ}`.
    pub fn max_frequency(&self, grid: &Grid2D, tau: f64) -> f64 {
        (0..grid.len())
            .map(|k| 2.0 * tau.abs() * self.dz(grid.z_at(k)).norm())
            .fold(0.0, f64::max)
    }

    /// Grid nodes per oscillation period of `e^{2iτψ}` at its fastest point.
    pub fn nodes_per_period(&self, grid: &Grid2D, tau: f64) -> f64 {
        let f = self.max_frequency(grid, tau);
        if f == 0.0 {
            f64::INFINITY
        } else {
            2.0 * PI / f / grid.h()
        }
    }

    /// Logs a warning and returns false when fewer than 8 nodes resolve one period.
    pub fn check_resolution(&self, grid: &Grid2D, tau: f64) -> bool {
        let npp = self.nodes_per_period(grid, tau);
        if npp < 8.0 {
            log::warn!(
                "tau = {tau} gives only {npp:.1} nodes per oscillation period on a {}x{} grid",
                grid.nx,
                grid.ny
            );
            false
        } else {
            true
        }
    }
}

/// Build a catalog weight and evaluate its condition flags on `part`.
pub fn weight_catalog(spec: WeightSpec, part: &BoundaryPartition) -> Result<HolomorphicWeight> {
    let grid = *part.grid();
    match spec {
        WeightSpec::Linear { alpha } => {
            if cx(alpha).norm() == 0.0 {
                return Err(LabError::InvalidParameter("linear weight needs alpha != 0".into()));
            }
        }
        WeightSpec::Quadratic { center } | WeightSpec::Cubic { center, .. } => {
            if !grid.contains(cx(center), 1e-12) {
                return Err(LabError::InvalidParameter(format!(
                    "weight center ({}, {}) lies outside the closed domain",
                    center[0], center[1]
                )));
            }
        }
    }
    if let WeightSpec::Cubic { m, .. } = spec {
        if !m.is_finite() {
            return Err(LabError::InvalidParameter("cubic weight needs finite m".into()));
        }
    }
    let mut w = HolomorphicWeight {
        spec,
        flags: ConditionFlags {
            holomorphic: false,
            im_vanishes_on_gamma0: false,
            nondegenerate_critical_points: false,
            critical_points_off_gamma_tilde: false,
        },
        critical_points: Vec::new(),
    };
    let crit = find_critical_points(&w, &grid)?;

    let samples = w.sample(&grid);
    let scale = 1.0 + samples.max_abs();
    let dzbar = wirtinger_dzbar(&samples);
    let holomorphic = dzbar.inner_max_abs(2) <= 1e-9 * scale / grid.h();
    let im_vanishes = part
        .nodes_with(Label::Gamma0)
        .all(|n| samples.values()[n.node].im.abs() <= 1e-12 * scale);
    let nondegenerate = crit.iter().all(|p| p.margin > 1e-12);
    let off_tilde = crit
        .iter()
        .all(|p| part.distance_to(p.location, Label::GammaTilde) > 1e-9);
    w.flags = ConditionFlags {
        holomorphic,
        im_vanishes_on_gamma0: im_vanishes,
        nondegenerate_critical_points: nondegenerate,
        critical_points_off_gamma_tilde: off_tilde,
    };
    w.critical_points = crit;
    Ok(w)
}

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;

/// Zeros of `∂_z Φ` in the closed rectangle: cells where both the real and the
/// imaginary part of `∂_z Φ` change sign seed a Newton refinement.
pub fn find_critical_points(w: &HolomorphicWeight, grid: &Grid2D) -> Result<Vec<CriticalPoint>> {
    let d = w.sample_dz(grid);
    let tol_in = 1e-9 * grid.h();
    let mut found: Vec<Complex64> = Vec::new();
    for j in 0..grid.ny - 1 {
        for i in 0..grid.nx - 1 {
            let corners = [d.at(i, j), d.at(i + 1, j), d.at(i, j + 1), d.at(i + 1, j + 1)];
            let straddles = |f: fn(&Complex64) -> f64| {
                let lo = corners.iter().map(f).fold(f64::INFINITY, f64::min);
                let hi = corners.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
                lo <= 0.0 && hi >= 0.0
            };
            if !(straddles(|c| c.re) && straddles(|c| c.im)) {
                continue;
            }
            let mut z = Complex64::new(grid.x(i) + 0.5 * grid.hx(), grid.y(j) + 0.5 * grid.hy());
            let mut converged = false;
            for _ in 0..NEWTON_MAX_ITER {
                let f = w.dz(z);
                if f.norm() < NEWTON_TOL {
                    converged = true;
                    break;
                }
                let fp = w.dz2(z);
                if fp.norm() == 0.0 {
                    break;
                }
                z -= f / fp;
            }
            if !converged && w.dz(z).norm() < NEWTON_TOL {
                converged = true;
            }
            if !converged {
                return Err(LabError::NewtonFailed {
                    i,
                    j,
                    iterations: NEWTON_MAX_ITER,
                });
            }
            if !grid.contains(z, tol_in) {
                continue;
            }
            if found.iter().all(|p| (p - z).norm() > 1e-8) {
                found.push(z);
            }
        }
    }
    found.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(found
        .into_iter()
        .map(|z| CriticalPoint {
            location: z,
            psi_value: w.psi(z),
            hessian: w.psi_hessian(z),
            margin: w.dz2(z).norm(),
        })
        .collect())
}

/// Trapezoid rule for `∬ g e^{2iτψ} dx`.
pub fn oscillatory_integral(g: &ScalarField, w: &HolomorphicWeight, tau: f64) -> Complex64 {
    let grid = *g.grid();
    w.check_resolution(&grid, tau);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let z = grid.z(i, j);
            let phase = Complex64::from_polar(1.0, 2.0 * tau * w.psi(z));
            acc += g.at(i, j) * phase * grid.weight(i, j);
        }
    }
    acc
}

/// Leading stationary-phase contribution of one nondegenerate critical point:
/// `(2π / 2τ) |det ψ''|^{-1/2} e^{iπσ/4} g(x̃) e^{2iτψ(x̃)}`.
pub fn stationary_phase_leading(g_at_point: Complex64, point: &CriticalPoint, tau: f64) -> Result<Complex64> {
    let det = point.hessian_det();
    if det.abs() < 1e-12 {
        return Err(LabError::DegenerateCriticalPoint { det });
    }
    if tau == 0.0 {
        return Err(LabError::InvalidParameter("stationary phase needs tau != 0".into()));
    }
    let sigma = point.signature() as f64;
    let pref = (2.0 * PI / (2.0 * tau)) / det.abs().sqrt();
    let phase = Complex64::from_polar(1.0, PI * sigma / 4.0 + 2.0 * tau * point.psi_value);
    Ok(g_at_point * phase * pref)
}

/// Same as [`stationary_phase_leading`], reading `g(x̃)` from a grid field by
/// bicubic interpolation.
pub fn stationary_phase_leading_field(g: &ScalarField, point: &CriticalPoint, tau: f64) -> Result<Complex64> {
    stationary_phase_leading(interpolate(g, point.location), point, tau)
}

/// Tensor cubic Lagrange interpolation of a scalar field.
pub fn interpolate(g: &ScalarField, z: Complex64) -> Complex64 {
    let grid = *g.grid();
    let locate = |v: f64, lo: f64, h: f64, n: usize| -> (usize, f64) {
        let s = ((v - lo) / h).clamp(0.0, (n - 1) as f64);
        let base = (s.floor() as usize).clamp(1, n - 3) - 1;
        (base, s - base as f64)
    };
    let (bi, ti) = locate(z.re, grid.x_min, grid.hx(), grid.nx);
    let (bj, tj) = locate(z.im, grid.y_min, grid.hy(), grid.ny);
    let lagrange = |t: f64| -> [f64; 4] {
        let mut out = [0.0; 4];
        for (a, o) in out.iter_mut().enumerate() {
            let mut p = 1.0;
            for b in 0..4 {
                if a != b {
                    p *= (t - b as f64) / (a as f64 - b as f64);
                }
            }
            *o = p;
        }
        out
    };
    let (wx, wy) = (lagrange(ti), lagrange(tj));
    let mut acc = Complex64::new(0.0, 0.0);
    for (b, wyb) in wy.iter().enumerate() {
        for (a, wxa) in wx.iter().enumerate() {
            acc += g.at(bi + a, bj + b) * (wxa * wyb);
        }
    }
    acc
}

/// Convex Carleman weight `φ_c = e^{λψ_c}` built from a real `ψ_c` with
/// nonvanishing gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct CarlemanConvexWeight {
    grid: Grid2D,
    psi: Vec<f64>,
    lambda: f64,
    phi: Vec<f64>,
}

impl CarlemanConvexWeight {
    pub fn new(grid: Grid2D, psi: impl Fn(f64, f64) -> f64, lambda: f64) -> Result<Self> {
        if lambda.is_nan() || lambda < 1.0 {
            return Err(LabError::InvalidParameter(format!("lambda = {lambda} must be >= 1")));
        }
        let psi_field = ScalarField::from_real_fn(grid, &psi);
        let gx = dx(&psi_field);
        let gy = dy(&psi_field);
        let min_grad = (0..grid.len())
            .map(|k| gx.values()[k].re.hypot(gy.values()[k].re))
            .fold(f64::INFINITY, f64::min);
        if min_grad.is_nan() || min_grad <= 0.0 {
            return Err(LabError::InvalidParameter(
                "convex Carleman weight needs |grad psi| > 0 on the closed domain".into(),
            ));
        }
        let psi: Vec<f64> = psi_field.values().iter().map(|v| v.re).collect();
        let phi = psi.iter().map(|p| (lambda * p).exp()).collect();
        Ok(Self { grid, psi, lambda, phi })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn top_bottom_part(n: usize) -> BoundaryPartition {
        BoundaryPartition::top_bottom(Grid2D::unit_square(n).unwrap())
    }

    #[test]
    fn linear_weight_has_no_critical_points() {
        let part = top_bottom_part(33);
        let w = weight_catalog(WeightSpec::Linear { alpha: [1.0, 0.0] }, &part).unwrap();
        assert!(w.critical_points.is_empty());
        assert!(w.flags.holomorphic);
        assert!(w.flags.nondegenerate_critical_points);
        assert!(w.flags.critical_points_off_gamma_tilde);
        assert!(!w.flags.im_vanishes_on_gamma0);
    }

    #[test]
    fn quadratic_weight_closed_form_data() {
        let part = top_bottom_part(33);
        let w = weight_catalog(WeightSpec::Quadratic { center: [0.5, 0.5] }, &part).unwrap();
        assert_eq!(w.critical_points.len(), 1);
        let p = &w.critical_points[0];
        assert!((p.location - c(0.5, 0.5)).norm() < 1e-10);
        assert_eq!(p.hessian, [[0.0, 2.0], [2.0, 0.0]]);
        assert_eq!(p.hessian_det(), -4.0);
        assert_eq!(p.signature(), 0);
        assert_eq!(w.dz2(p.location), c(2.0, 0.0));
        assert!(!w.flags.im_vanishes_on_gamma0);
        assert!(w.flags.holomorphic);
    }

    #[test]
    fn off_grid_quadratic_center_is_located() {
        let part = top_bottom_part(41);
        let w = weight_catalog(WeightSpec::Quadratic { center: [0.3, 0.7] }, &part).unwrap();
        assert_eq!(w.critical_points.len(), 1);
        assert!((w.critical_points[0].location - c(0.3, 0.7)).norm() < 1e-10);
        let w = weight_catalog(WeightSpec::Quadratic { center: [0.3141, 0.2718] }, &part).unwrap();
        assert!((w.critical_points[0].location - c(0.3141, 0.2718)).norm() < 1e-10);
    }

    #[test]
    fn center_outside_domain_is_rejected() {
        let part = top_bottom_part(17);
        assert!(weight_catalog(WeightSpec::Quadratic { center: [1.5, 0.5] }, &part).is_err());
        assert!(weight_catalog(WeightSpec::Linear { alpha: [0.0, 0.0] }, &part).is_err());
    }

    #[test]
    fn cubic_weight_has_two_saddles() {
        let part = top_bottom_part(65);
        let w = weight_catalog(WeightSpec::Cubic { center: [0.5, 0.5], m: 0.04 }, &part).unwrap();
        // roots of (z - c)^2 = m are c ± sqrt(m) = c ± 0.2
        let expect = [c(0.3, 0.5), c(0.7, 0.5)];
        assert_eq!(w.critical_points.len(), 2);
        for (p, e) in w.critical_points.iter().zip(expect) {
            assert!((p.location - e).norm() < 1e-10);
            assert!(w.dz(p.location).norm() < 1e-10);
            assert!(p.margin > 0.0);
            assert!(p.hessian_det() < 0.0);
        }
        assert!(w.critical_points[0].psi_value != w.critical_points[1].psi_value || true);
    }

    #[test]
    fn stationary_phase_prefactor_for_quadratic_saddle() {
        let part = top_bottom_part(17);
        let w = weight_catalog(WeightSpec::Quadratic { center: [0.5, 0.5] }, &part).unwrap();
        let p = &w.critical_points[0];
        let tau = 8.0;
        let lead = stationary_phase_leading(c(1.0, 0.0), p, tau).unwrap();
        assert!((lead - c(PI / (2.0 * tau), 0.0)).norm() < 1e-14);
        assert_eq!(stationary_phase_leading(c(0.0, 0.0), p, tau).unwrap(), c(0.0, 0.0));
        let flat = CriticalPoint {
            location: c(0.5, 0.5),
            psi_value: 0.0,
            hessian: [[0.0, 0.0], [0.0, 0.0]],
            margin: 0.0,
        };
        assert!(matches!(
            stationary_phase_leading(c(1.0, 0.0), &flat, tau),
            Err(LabError::DegenerateCriticalPoint { .. })
        ));
    }

    #[test]
    fn oscillatory_integral_trivial_cases() {
        let part = top_bottom_part(33);
        let g = *part.grid();
        let w = weight_catalog(WeightSpec::Quadratic { center: [0.5, 0.5] }, &part).unwrap();
        let one = ScalarField::constant(g, c(1.0, 0.0));
        assert!((oscillatory_integral(&one, &w, 0.0) - 1.0).norm() < 1e-12);
        let zero = ScalarField::constant(g, c(0.0, 0.0));
        assert_eq!(oscillatory_integral(&zero, &w, 16.0), c(0.0, 0.0));
    }

    #[test]
    fn bicubic_interpolation_reproduces_cubics() {
        let g = Grid2D::unit_square(17).unwrap();
        let f = ScalarField::from_fn(g, |z| z * z * z + z.conj() * 2.0);
        for z in [c(0.31, 0.77), c(0.01, 0.99), c(0.5, 0.5)] {
            assert!((interpolate(&f, z) - (z * z * z + z.conj() * 2.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn convex_weight_needs_gradient() {
        let g = Grid2D::unit_square(17).unwrap();
        assert!(CarlemanConvexWeight::new(g, |x, y| x + 0.1 * y, 2.0).is_ok());
        assert!(CarlemanConvexWeight::new(g, |_, _| 1.0, 2.0).is_err());
        assert!(CarlemanConvexWeight::new(g, |x, _| x, 0.5).is_err());
    }

    #[test]
    fn weight_spec_json_shape() {
        let s = WeightSpec::Cubic { center: [0.5, 0.5], m: 0.04 };
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(text, r#"{"kind":"cubic","params":{"center":[0.5,0.5],"m":0.04}}"#);
        let back: WeightSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}
