//! Scalar gauge profiles `η` with closed-form derivatives, and the coefficient
//! map induced by the conjugation `L ↦ e^{-sη} L e^{sη}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{LabError, Result};
use crate::field::{BoundaryPartition, Grid2D, GridField, Label, ScalarField};
use crate::forward::CoefficientTriple;

/// Closed-form real profiles. Coordinates are absolute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EtaProfile {
    Zero,
    /// `exp(1 - 1/(1 - t^2))` in `t = (2y - lo - hi)/(hi - lo)`; depends on `x_2` only.
    YBump { lo: f64, hi: f64 },
    /// `sin^2(π y)` times a C∞ window vanishing for `y <= band` and `y >= 1 - band`.
    WindowedSinSquared { band: f64 },
    /// Radial `exp(1 - 1/(1 - r^2/R^2))`.
    RadialBump { center: [f64; 2], radius: f64 },
}

/// `η` and its derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaSample {
    pub eta: f64,
    pub dx: f64,
    pub dy: f64,
    pub laplacian: f64,
}

impl EtaSample {
    const ZERO: EtaSample = EtaSample {
        eta: 0.0,
        dx: 0.0,
        dy: 0.0,
        laplacian: 0.0,
    };

    pub fn dz(&self) -> Complex64 {
        Complex64::new(0.5 * self.dx, -0.5 * self.dy)
    }

    pub fn dzbar(&self) -> Complex64 {
        Complex64::new(0.5 * self.dx, 0.5 * self.dy)
    }

    pub fn grad_sq(&self) -> f64 {
        self.dx * self.dx + self.dy * self.dy
    }
}

/// `(S, S', S'')` of the smooth step `e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)})`.
fn smooth_step_derivs(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    // p(t) = e^{-1/t}; evaluating p/t^k as one exponential keeps tiny t finite
    let pk = |t: f64, k: f64| (-1.0 / t - k * t.ln()).exp();
    let p = (-1.0 / t).exp();
    let dp = pk(t, 2.0);
    let d2p = pk(t, 4.0) - 2.0 * pk(t, 3.0);
    let s = 1.0 - t;
    let q = (-1.0 / s).exp();
    let dq = -pk(s, 2.0);
    let d2q = pk(s, 4.0) - 2.0 * pk(s, 3.0);
    let d = p + q;
    let dd = dp + dq;
    let n = dp * q - p * dq;
    let dn = d2p * q - p * d2q;
    (p / d, n / (d * d), dn / (d * d) - 2.0 * n * dd / (d * d * d))
}

/// `exp(1 - 1/u)` with `u = 1 - t^2`, and its first two `t` derivatives.
fn bump_1d(t: f64) -> (f64, f64, f64) {
    let u = 1.0 - t * t;
    if u <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let f = (1.0 - 1.0 / u).exp();
    let d1 = f * (-2.0 * t / (u * u));
    let d2 = f * (4.0 * t * t / u.powi(4) - 2.0 / (u * u) - 8.0 * t * t / u.powi(3));
    (f, d1, d2)
}

impl EtaProfile {
    pub fn eval(&self, z: Complex64) -> EtaSample {
        let (x, y) = (z.re, z.im);
        match *self {
            EtaProfile::Zero => EtaSample::ZERO,
            EtaProfile::YBump { lo, hi } => {
                let k = 2.0 / (hi - lo);
                let (f, d1, d2) = bump_1d((2.0 * y - lo - hi) / (hi - lo));
                EtaSample {
                    eta: f,
                    dx: 0.0,
                    dy: d1 * k,
                    laplacian: d2 * k * k,
                }
            }
            EtaProfile::WindowedSinSquared { band } => {
                let (sa, da, d2a) = smooth_step_derivs((y - band) / band);
                let (sb, db, d2b) = smooth_step_derivs((1.0 - band - y) / band);
                let w = sa * sb;
                if w == 0.0 {
                    return EtaSample::ZERO;
                }
                let w1 = (da * sb - sa * db) / band;
                let w2 = (d2a * sb - 2.0 * da * db + sa * d2b) / (band * band);
                let g = (PI * y).sin().powi(2);
                let g1 = PI * (2.0 * PI * y).sin();
                let g2 = 2.0 * PI * PI * (2.0 * PI * y).cos();
                EtaSample {
                    eta: g * w,
                    dx: 0.0,
                    dy: g1 * w + g * w1,
                    laplacian: g2 * w + 2.0 * g1 * w1 + g * w2,
                }
            }
            EtaProfile::RadialBump { center, radius } => {
                let (dxc, dyc) = (x - center[0], y - center[1]);
                let r2 = radius * radius;
                let s = (dxc * dxc + dyc * dyc) / r2;
                if s >= 1.0 {
                    return EtaSample::ZERO;
                }
                let m = 1.0 - s;
                let f = (1.0 - 1.0 / m).exp();
                let fs = -f / (m * m);
                let fss = f * (1.0 / m.powi(4) - 2.0 / m.powi(3));
                EtaSample {
                    eta: f,
                    dx: fs * 2.0 * dxc / r2,
                    dy: fs * 2.0 * dyc / r2,
                    laplacian: fss * 4.0 * s / r2 + fs * 4.0 / r2,
                }
            }
        }
    }

    /// Distance from `z` to the closed support of the profile.
    pub fn support_distance(&self, z: Complex64) -> f64 {
        let interval = |v: f64, lo: f64, hi: f64| (lo - v).max(v - hi).max(0.0);
        match *self {
            EtaProfile::Zero => f64::INFINITY,
            EtaProfile::YBump { lo, hi } => interval(z.im, lo, hi),
            EtaProfile::WindowedSinSquared { band } => interval(z.im, band, 1.0 - band),
            EtaProfile::RadialBump { center, radius } => {
                ((z - Complex64::new(center[0], center[1])).norm() - radius).max(0.0)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            EtaProfile::Zero => true,
            EtaProfile::YBump { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            EtaProfile::WindowedSinSquared { band } => band > 0.0 && band < 0.5,
            EtaProfile::RadialBump { center, radius } => {
                center.iter().all(|c| c.is_finite()) && radius > 0.0 && radius.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(LabError::InvalidParameter(format!("malformed gauge profile {self:?}")))
        }
    }
}

/// Gauge strength and profile, with the flatness of `η` on `Γ~` recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeSpec {
    pub s: f64,
    pub profile: EtaProfile,
    /// `η` and `∇η` vanish on a band around `Γ~`.
    pub flat_on_gamma_tilde: bool,
    /// Width of the band around `Γ~` where `η ≡ 0` (measured over the `Γ~` nodes).
    pub zero_band: f64,
}

impl GaugeSpec {
    pub fn new(s: f64, profile: EtaProfile, part: &BoundaryPartition) -> Result<Self> {
        if !s.is_finite() {
            return Err(LabError::InvalidParameter("gauge strength must be finite".into()));
        }
        profile.validate()?;
        let grid = part.grid();
        let zero_band = part
            .nodes_with(Label::GammaTilde)
            .map(|n| profile.support_distance(grid.z_at(n.node)))
            .fold(f64::INFINITY, f64::min);
        Ok(Self {
            s,
            profile,
            flat_on_gamma_tilde: zero_band > 0.0,
            zero_band,
        })
    }

    pub fn eta(&self, grid: &Grid2D) -> ScalarField {
        ScalarField::from_fn(*grid, |z| Complex64::new(self.profile.eval(z).eta, 0.0))
    }

    /// `e^{sign·s·η}` on the grid; errors when the exponent leaves double range.
    pub fn factor(&self, grid: &Grid2D, sign: f64) -> Result<ScalarField> {
        let exps: Vec<f64> = (0..grid.len())
            .map(|k| sign * self.s * self.profile.eval(grid.z_at(k)).eta)
            .collect();
        let worst = exps.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        let f = ScalarField::new(*grid, exps.iter().map(|e| Complex64::new(e.exp(), 0.0)).collect());
        if worst > 700.0 {
            return Err(LabError::WeightOverflow { exponent: worst });
        }
        f
    }
}

/// Coefficients of `e^{-sη} L e^{sη}`:
/// `(A + 2sη_zbar, B + 2sη_z, Q + (sΔη + s^2|∇η|^2) + 2sη_z A + 2sη_zbar B)`.
pub fn gauge_transform(coefs: &CoefficientTriple, gauge: &GaugeSpec) -> CoefficientTriple {
    let grid = *coefs.grid();
    let n = coefs.n_sys();
    let s = gauge.s;
    let samples: Vec<EtaSample> = (0..grid.len()).map(|k| gauge.profile.eval(grid.z_at(k))).collect();
    let scalar = |f: &dyn Fn(&EtaSample) -> Complex64| {
        ScalarField::new(grid, samples.iter().map(f).collect()).expect("closed-form profile is finite")
    };
    let ezb = scalar(&|e| 2.0 * s * e.dzbar());
    let ez = scalar(&|e| 2.0 * s * e.dz());
    let zero_order = scalar(&|e| Complex64::new(s * e.laplacian + s * s * e.grad_sq(), 0.0));
    let a = coefs.a().add(&ezb.times_identity(n));
    let b = coefs.b().add(&ez.times_identity(n));
    let q = coefs
        .q()
        .add(&zero_order.times_identity(n))
        .add(&coefs.a().mul_scalar(&ez))
        .add(&coefs.b().mul_scalar(&ezb));
    CoefficientTriple::new(a, b, q).expect("shapes are preserved")
}

/// Max of `|η| + |∇η|` over the nodes within `band` of `Γ~`.
pub fn max_on_band(gauge: &GaugeSpec, part: &BoundaryPartition, band: f64) -> f64 {
    let g = part.grid();
    (0..g.len())
        .filter(|&k| part.distance_to(g.z_at(k), Label::GammaTilde) <= band)
        .map(|k| {
            let e = gauge.profile.eval(g.z_at(k));
            e.eta.abs() + e.grad_sq().sqrt()
        })
        .fold(0.0, f64::max)
}
