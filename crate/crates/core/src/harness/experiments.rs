//! Ladder experiments on the gauge family: vanishing Cauchy-data distance
//! under refinement, and separation from off-gauge perturbations.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{Arc, BoundaryPartition, Grid2D, GridField};
use crate::fit::refinement_orders;
use crate::fixtures::{bump, rng};
use crate::forward::{cauchy_data, cauchy_distance, CoefficientTriple};
use crate::harness::gauge::{gauge_transform, EtaProfile, GaugeSpec};

/// Coefficient triple rebuilt on every grid of a ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TripleRecipe {
    Zero { n_sys: usize },
    RandomSmooth { n_sys: usize, seed: u64, amplitude: f64 },
}

impl TripleRecipe {
    pub fn build(&self, grid: Grid2D) -> CoefficientTriple {
        match *self {
            TripleRecipe::Zero { n_sys } => CoefficientTriple::zeros(grid, n_sys),
            TripleRecipe::RandomSmooth { n_sys, seed, amplitude } => {
                CoefficientTriple::random_smooth(grid, n_sys, seed, amplitude)
            }
        }
    }

    pub fn n_sys(&self) -> usize {
        match *self {
            TripleRecipe::Zero { n_sys } | TripleRecipe::RandomSmooth { n_sys, .. } => n_sys,
        }
    }
}

/// `Q += amplitude · bump(center, radius) · I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QBump {
    pub center: [f64; 2],
    pub radius: f64,
    pub amplitude: [f64; 2],
}

impl QBump {
    pub fn apply(&self, t: &CoefficientTriple) -> CoefficientTriple {
        let g = *t.grid();
        let b = bump(g, Complex64::new(self.center[0], self.center[1]), self.radius)
            .scale(Complex64::new(self.amplitude[0], self.amplitude[1]))
            .times_identity(t.n_sys());
        CoefficientTriple::new(t.a().clone(), t.b().clone(), t.q().add(&b)).expect("same shapes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeLadderRow {
    pub nx: usize,
    pub h: f64,
    pub distance: f64,
    pub coefficient_gap: f64,
    pub off_gauge_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeExperimentReport {
    pub rows: Vec<GaugeLadderRow>,
    /// Refinement orders of the gauge-pair distance between successive grids.
    pub orders: Vec<f64>,
}

pub fn unit_partition(nx: usize, arcs: &[Arc]) -> Result<BoundaryPartition> {
    BoundaryPartition::new(Grid2D::unit_square(nx)?, arcs.to_vec())
}

/// Cauchy-data distance between a triple and its gauge transform on each grid
/// of `ladder`, optionally also against the transform with `Q` perturbed.
pub fn gauge_equivalence_experiment(
    recipe: &TripleRecipe,
    s: f64,
    profile: EtaProfile,
    arcs: &[Arc],
    m: usize,
    ladder: &[usize],
    off_gauge: Option<&QBump>,
) -> Result<GaugeExperimentReport> {
    let mut rows = Vec::with_capacity(ladder.len());
    for &nx in ladder {
        let part = unit_partition(nx, arcs)?;
        let gauge = GaugeSpec::new(s, profile, &part)?;
        if s != 0.0 && !gauge.flat_on_gamma_tilde {
            return Err(LabError::Precondition("the gauge profile must vanish on a band around Γ~".into()));
        }
        let t1 = recipe.build(*part.grid());
        let t2 = gauge_transform(&t1, &gauge);
        let d1 = cauchy_data(&t1, &part, m)?;
        let distance = cauchy_distance(&d1, &cauchy_data(&t2, &part, m)?)?;
        let off_gauge_distance = match off_gauge {
            Some(p) => Some(cauchy_distance(&d1, &cauchy_data(&p.apply(&t2), &part, m)?)?),
            None => None,
        };
        rows.push(GaugeLadderRow {
            nx,
            h: part.grid().h(),
            distance,
            coefficient_gap: t1.gap(&t2),
            off_gauge_distance,
        });
    }
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let d: Vec<f64> = rows.iter().map(|r| r.distance).collect();
    Ok(GaugeExperimentReport {
        orders: refinement_orders(&h, &d),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub nx: usize,
    pub gauge_distances: Vec<f64>,
    pub off_gauge_distances: Vec<f64>,
    pub max_gauge: f64,
    pub min_off_gauge: f64,
    /// `min_off_gauge / max_gauge`.
    pub ratio: f64,
}

/// Seeded family of `samples` gauge pairs and `samples` off-gauge perturbations
/// of the same base triple.
///
/// Gauge pairs draw `s` in [0.5, 1] and an `x_2` bump supported in
/// `[lo, hi]`, `lo` in [0.05, 0.15], `hi` in [0.85, 0.95]; their coefficient gaps
/// exceed 50. Off-gauge perturbations add a `Q` bump of radius [0.2, 0.3],
/// center in [0.3, 0.7]^2 and modulus [5, 10] with a random phase.
pub fn separation_experiment(
    recipe: &TripleRecipe,
    arcs: &[Arc],
    m: usize,
    nx: usize,
    samples: usize,
    seed: u64,
) -> Result<SeparationReport> {
    let part = unit_partition(nx, arcs)?;
    let t1 = recipe.build(*part.grid());
    let base = cauchy_data(&t1, &part, m)?;
    let mut r = rng(seed);
    let mut gauge_distances = Vec::with_capacity(samples);
    let mut off_gauge_distances = Vec::with_capacity(samples);
    for _ in 0..samples {
        let profile = EtaProfile::YBump {
            lo: r.gen_range(0.05..0.15),
            hi: r.gen_range(0.85..0.95),
        };
        let gauge = GaugeSpec::new(r.gen_range(0.5..1.0), profile, &part)?;
        let t2 = gauge_transform(&t1, &gauge);
        gauge_distances.push(cauchy_distance(&base, &cauchy_data(&t2, &part, m)?)?);

        let modulus = r.gen_range(5.0..10.0);
        let angle = r.gen_range(0.0..std::f64::consts::TAU);
        let pert = QBump {
            center: [r.gen_range(0.3..0.7), r.gen_range(0.3..0.7)],
            radius: r.gen_range(0.2..0.3),
            amplitude: [modulus * angle.cos(), modulus * angle.sin()],
        };
        off_gauge_distances.push(cauchy_distance(&base, &cauchy_data(&pert.apply(&t1), &part, m)?)?);
    }
    let max_gauge = gauge_distances.iter().copied().fold(0.0, f64::max);
    let min_off_gauge = off_gauge_distances.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SeparationReport {
        nx,
        ratio: if max_gauge == 0.0 { f64::INFINITY } else { min_off_gauge / max_gauge },
        gauge_distances,
        off_gauge_distances,
        max_gauge,
        min_off_gauge,
    })
}
