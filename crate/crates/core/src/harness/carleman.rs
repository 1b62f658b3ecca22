//! Empirical ratios for weighted a-priori estimates with weight `e^{τφ}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{dx, dy, wirtinger_dz, wirtinger_dzbar, BoundaryPartition, Grid2D, GridField, Label, MatrixField, ScalarField, VectorField};
use crate::forward::{neumann_trace, CoefficientTriple};
use crate::weight::{CarlemanConvexWeight, HolomorphicWeight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CarlemanKind {
    /// `τ^{1/2}‖w e^{τφ}‖ / ‖(∂_z w) e^{τφ}‖`.
    FirstOrderDz,
    /// Same with `∂_zbar`.
    FirstOrderDzbar,
    /// `τ^{1/2}‖w e^{τφ}‖ / ‖f e^{τφ}‖` with `f = 2∂_z w + B2 w - w B1`, `w` an N x N matrix.
    SystemZeroOrder,
    /// Left side over right side of the squared estimate for the full operator.
    FullOperator,
}

#[derive(Debug, Clone)]
pub enum CarlemanProbe {
    FirstOrderDz(CarlemanConvexWeight),
    FirstOrderDzbar(CarlemanConvexWeight),
    SystemZeroOrder {
        weight: CarlemanConvexWeight,
        b1: MatrixField,
        b2: MatrixField,
    },
    /// The boundary term on the right is taken over `Γ~`.
    FullOperator {
        weight: HolomorphicWeight,
        coefs: CoefficientTriple,
        part: BoundaryPartition,
    },
}

impl CarlemanProbe {
    pub fn kind(&self) -> CarlemanKind {
        match self {
            CarlemanProbe::FirstOrderDz(_) => CarlemanKind::FirstOrderDz,
            CarlemanProbe::FirstOrderDzbar(_) => CarlemanKind::FirstOrderDzbar,
            CarlemanProbe::SystemZeroOrder { .. } => CarlemanKind::SystemZeroOrder,
            CarlemanProbe::FullOperator { .. } => CarlemanKind::FullOperator,
        }
    }

    fn grid(&self) -> Grid2D {
        match self {
            CarlemanProbe::FirstOrderDz(w) | CarlemanProbe::FirstOrderDzbar(w) => *w.grid(),
            CarlemanProbe::SystemZeroOrder { weight, .. } => *weight.grid(),
            CarlemanProbe::FullOperator { coefs, .. } => *coefs.grid(),
        }
    }

    fn phi(&self) -> Vec<f64> {
        match self {
            CarlemanProbe::FirstOrderDz(w) | CarlemanProbe::FirstOrderDzbar(w) => w.phi().to_vec(),
            CarlemanProbe::SystemZeroOrder { weight, .. } => weight.phi().to_vec(),
            CarlemanProbe::FullOperator { weight, coefs, .. } => {
                let g = coefs.grid();
                (0..g.len()).map(|k| weight.phi(g.z_at(k))).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlemanReport {
    pub kind: CarlemanKind,
    pub taus: Vec<f64>,
    /// Sup over the test family per τ; `None` when every member is vacuous (0/0).
    pub sup_ratios: Vec<Option<f64>>,
    /// Sup over the lower and the upper half of the ladder.
    pub lower_sup: Option<f64>,
    pub upper_sup: Option<f64>,
    pub pass: bool,
}

/// `e^{τ(φ - max φ)}` as a real scalar field.
fn weight_factor(grid: &Grid2D, phi: &[f64], tau: f64) -> Result<ScalarField> {
    let (lo, hi) = phi
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    let exponent = tau.abs() * (hi - lo);
    if exponent > 700.0 {
        return Err(LabError::WeightOverflow { exponent });
    }
    Ok(ScalarField::from_real_values(*grid, &phi.iter().map(|p| (tau * (p - hi)).exp()).collect::<Vec<_>>()))
}

fn check_family(family: &[VectorField], grid: &Grid2D, block: usize) -> Result<()> {
    for (q, w) in family.iter().enumerate() {
        if w.grid() != grid || w.n_sys() != block {
            return Err(LabError::ShapeMismatch(format!("test field {q} has the wrong grid or size")));
        }
        let scale = w.max_abs();
        let edge = (0..grid.len())
            .filter(|&k| {
                let (i, j) = grid.coords(k);
                grid.is_boundary(i, j)
            })
            .flat_map(|k| w.node(k).iter().map(|v| v.norm()))
            .fold(0.0, f64::max);
        if edge > 1e-12 * scale {
            return Err(LabError::InvalidParameter(format!(
                "test field {q} does not vanish on the boundary (max {edge:.3e})"
            )));
        }
    }
    Ok(())
}

fn to_matrix(w: &VectorField, n: usize) -> MatrixField {
    MatrixField::new(*w.grid(), n, w.data().to_vec()).expect("block is n*n")
}

/// `Σ_Γ weight · |v|^2 e^{2τφ}` over the nodes of one label.
fn boundary_energy(u: &VectorField, part: &BoundaryPartition, label: Label, e: &ScalarField) -> Result<f64> {
    if part.nodes_with(label).next().is_none() {
        return Ok(0.0);
    }
    let tr = neumann_trace(u, part, label)?;
    let n = tr.n_sys;
    Ok(tr
        .nodes
        .iter()
        .enumerate()
        .map(|(q, &node)| {
            let ev = e.values()[node].re;
            tr.weights[q] * ev * ev * tr.values[q * n..(q + 1) * n].iter().map(|v| v.norm_sqr()).sum::<f64>()
        })
        .sum())
}

/// Ratio for one field at one τ; `None` when both sides vanish.
fn ratio(probe: &CarlemanProbe, w: &VectorField, e: &ScalarField, tau: f64) -> Result<Option<f64>> {
    let (num, den) = match probe {
        CarlemanProbe::FirstOrderDz(_) => (tau.sqrt() * w.mul_scalar(e).l2_norm(), wirtinger_dz(w).mul_scalar(e).l2_norm()),
        CarlemanProbe::FirstOrderDzbar(_) => {
            (tau.sqrt() * w.mul_scalar(e).l2_norm(), wirtinger_dzbar(w).mul_scalar(e).l2_norm())
        }
        CarlemanProbe::SystemZeroOrder { b1, b2, .. } => {
            let m = to_matrix(w, b1.n_sys());
            let f = wirtinger_dz(&m)
                .scale(Complex64::new(2.0, 0.0))
                .add(&b2.matmul(&m))
                .sub(&m.matmul(b1));
            (tau.sqrt() * m.mul_scalar(e).l2_norm(), f.mul_scalar(e).l2_norm())
        }
        CarlemanProbe::FullOperator { weight, coefs, part } => {
            let g = *coefs.grid();
            let ue = w.mul_scalar(e);
            let l2 = ue.l2_norm().powi(2);
            // ∇(u e^{τφ}) = e^{τφ}(∇u + τ u ∇φ), with ∇φ = (Re Φ', -Im Φ')
            let dphi = weight.sample_dz(&g);
            let phx = dphi.map(|v| Complex64::new(v.re, 0.0));
            let phy = dphi.map(|v| Complex64::new(-v.im, 0.0));
            let tau_c = Complex64::new(tau, 0.0);
            let gx = dx(w).add(&w.mul_scalar(&phx).scale(tau_c)).mul_scalar(e);
            let gy = dy(w).add(&w.mul_scalar(&phy).scale(tau_c)).mul_scalar(e);
            let h1 = l2 + gx.l2_norm().powi(2) + gy.l2_norm().powi(2);
            let dmod = dphi.map(|v| Complex64::new(v.norm(), 0.0));
            let crit = ue.mul_scalar(&dmod).l2_norm().powi(2);
            let left = tau * l2 + h1 + boundary_energy(w, part, Label::Gamma0, e)? + tau * tau * crit;
            let right = coefs.apply_operator(w).mul_scalar(e).l2_norm().powi(2)
                + tau * boundary_energy(w, part, Label::GammaTilde, e)?;
            (left, right)
        }
    };
    if num == 0.0 && den == 0.0 {
        return Ok(None);
    }
    Ok(Some(num / den))
}

fn sup(values: &[Option<f64>]) -> Option<f64> {
    values.iter().flatten().copied().reduce(f64::max)
}

/// Ratios over a τ ladder. PASS when the sup over the upper half of the
/// ladder does not exceed the sup over the lower half; vacuous ladders pass.
pub fn carleman_probe(probe: &CarlemanProbe, taus: &[f64], family: &[VectorField]) -> Result<CarlemanReport> {
    if taus.len() < 2 || taus.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(LabError::InvalidParameter("the τ ladder needs at least two positive values".into()));
    }
    let grid = probe.grid();
    let block = match probe {
        CarlemanProbe::SystemZeroOrder { b1, b2, .. } => {
            if b1.grid() != &grid || b2.grid() != &grid || b1.n_sys() != b2.n_sys() {
                return Err(LabError::ShapeMismatch("B1 and B2 must share grid and size".into()));
            }
            b1.n_sys() * b1.n_sys()
        }
        CarlemanProbe::FullOperator { coefs, part, .. } => {
            if part.grid() != &grid {
                return Err(LabError::ShapeMismatch("partition lives on another grid".into()));
            }
            coefs.n_sys()
        }
        _ => family.first().map(|w| w.n_sys()).unwrap_or(1),
    };
    check_family(family, &grid, block)?;
    let phi = probe.phi();
    let mut sup_ratios = Vec::with_capacity(taus.len());
    for &tau in taus {
        let e = weight_factor(&grid, &phi, tau)?;
        let mut best: Option<f64> = None;
        for w in family {
            if let Some(r) = ratio(probe, w, &e, tau)? {
                best = Some(best.map_or(r, |b| b.max(r)));
            }
        }
        sup_ratios.push(best);
    }
    let half = taus.len() / 2;
    let lower_sup = sup(&sup_ratios[..half]);
    let upper_sup = sup(&sup_ratios[taus.len() - half..]);
    let pass = match (lower_sup, upper_sup) {
        (_, None) => true,
        (Some(lo), Some(up)) => up <= lo,
        (None, Some(_)) => false,
    };
    Ok(CarlemanReport {
        kind: probe.kind(),
        taus: taus.to_vec(),
        sup_ratios,
        lower_sup,
        upper_sup,
        pass,
    })
}

/// Products of sines and polynomial bubbles that vanish on `∂Ω`, one per
/// component pattern; `n_fields` members with `block` components each.
pub fn dirichlet_test_family(grid: &Grid2D, block: usize, n_fields: usize, seed: u64) -> Vec<VectorField> {
    use rand::Rng;
    let mut rng = crate::fixtures::rng(seed);
    let (x0, x1, y0, y1) = (grid.x_min, grid.x_max, grid.y_min, grid.y_max);
    (0..n_fields)
        .map(|q| {
            let coeffs: Vec<(Complex64, f64, f64)> = (0..block)
                .map(|_| {
                    (
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                        rng.gen_range(0.0..2.0),
                        rng.gen_range(0.0..2.0),
                    )
                })
                .collect();
            let kx = (q % 2 + 1) as f64;
            let ky = (q / 2 % 2 + 1) as f64;
            VectorField::from_fn(*grid, block, |z| {
                let sx = (z.re - x0) / (x1 - x0);
                let sy = (z.im - y0) / (y1 - y0);
                let base = (std::f64::consts::PI * kx * sx).sin() * (std::f64::consts::PI * ky * sy).sin();
                coeffs
                    .iter()
                    .map(|&(c, a, b)| c * base * (1.0 + 0.5 * (a * sx).cos() * (b * sy).sin()))
                    .collect()
            })
        })
        .collect()
}
