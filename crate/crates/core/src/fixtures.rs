//! Deterministic test-function families shared by the tests, the harness and
//! the scenario runner.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::field::{Grid2D, GridField, MatrixField, ScalarField, VectorField};
use crate::forward::{solve_dirichlet, CoefficientTriple};

/// C∞ bump `exp(-1/(1 - s))`, `s = |z - c|^2 / r^2`, zero for `s >= 1`.
pub fn bump_value(z: Complex64, center: Complex64, radius: f64) -> f64 {
    let s = (z - center).norm_sqr() / (radius * radius);
    if s < 1.0 {
        (-1.0 / (1.0 - s)).exp()
    } else {
        0.0
    }
}

pub fn bump(grid: Grid2D, center: Complex64, radius: f64) -> ScalarField {
    ScalarField::from_fn(grid, |z| Complex64::new(bump_value(z, center, radius), 0.0))
}

/// Indicator of the open disk `|z - c| < r`.
pub fn disk_indicator(grid: Grid2D, center: Complex64, radius: f64) -> ScalarField {
    ScalarField::from_fn(grid, |z| {
        if (z - center).norm() < radius {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// A smooth function given by a few random low-frequency modes,
/// `Σ a_k exp(i(p_k x + q_k y))`, drawn from a seed.
#[derive(Debug, Clone)]
pub struct SmoothRandom {
    modes: Vec<(Complex64, f64, f64)>,
}

impl SmoothRandom {
    pub fn new(rng: &mut ChaCha8Rng, n_modes: usize, max_freq: f64, amplitude: f64) -> Self {
        let modes = (0..n_modes)
            .map(|_| {
                let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amplitude / n_modes as f64;
                (a, rng.gen_range(-max_freq..max_freq), rng.gen_range(-max_freq..max_freq))
            })
            .collect();
        Self { modes }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.modes
            .iter()
            .map(|&(a, p, q)| a * Complex64::from_polar(1.0, p * z.re + q * z.im))
            .sum()
    }

    pub fn sample(&self, grid: Grid2D) -> ScalarField {
        ScalarField::from_fn(grid, |z| self.eval(z))
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random smooth vector field with `n_sys` components.
pub fn random_smooth_vector(grid: Grid2D, n_sys: usize, rng: &mut ChaCha8Rng, amplitude: f64) -> VectorField {
    let comps: Vec<SmoothRandom> = (0..n_sys).map(|_| SmoothRandom::new(rng, 4, 3.0, amplitude)).collect();
    VectorField::from_fn(grid, n_sys, |z| comps.iter().map(|c| c.eval(z)).collect())
}

/// Random smooth matrix field with `n_sys × n_sys` entries.
pub fn random_smooth_matrix(grid: Grid2D, n_sys: usize, rng: &mut ChaCha8Rng, amplitude: f64) -> MatrixField {
    let entries: Vec<SmoothRandom> = (0..n_sys * n_sys)
        .map(|_| SmoothRandom::new(rng, 3, 2.5, amplitude))
        .collect();
    MatrixField::from_fn(grid, n_sys, |z| entries.iter().map(|c| c.eval(z)).collect())
}

/// Max nodal error of the Dirichlet solve for the manufactured solution
/// `sin(πx) sin(πy) v` with random smooth coefficients and a random vector `v`.
pub fn manufactured_dirichlet_error(nx: usize, n_sys: usize, seed: u64) -> Result<f64> {
    use std::f64::consts::PI;
    let g = Grid2D::unit_square(nx)?;
    let t = CoefficientTriple::random_smooth(g, n_sys, seed, 1.0);
    let mut r = rng(seed + 1000);
    let v: Vec<Complex64> = (0..n_sys)
        .map(|_| Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
        .collect();
    let s = |z: Complex64| (PI * z.re).sin() * (PI * z.im).sin();
    let sx = |z: Complex64| PI * (PI * z.re).cos() * (PI * z.im).sin();
    let sy = |z: Complex64| PI * (PI * z.re).sin() * (PI * z.im).cos();
    let exact = VectorField::from_fn(g, n_sys, |z| v.iter().map(|vi| vi * s(z)).collect());
    let i = Complex64::new(0.0, 1.0);
    let mut rhs = vec![Complex64::new(0.0, 0.0); g.len() * n_sys];
    for k in 0..g.len() {
        let z = g.z_at(k);
        for row in 0..n_sys {
            let mut acc = v[row] * (-2.0 * PI * PI * s(z));
            for (col, vc) in v.iter().enumerate() {
                let a = t.a().entry(k, row, col);
                let b = t.b().entry(k, row, col);
                let q = t.q().entry(k, row, col);
                acc += ((a + b) * sx(z) + i * (b - a) * sy(z) + q * s(z)) * vc;
            }
            rhs[k * n_sys + row] = acc;
        }
    }
    let rhs = VectorField::new(g, n_sys, rhs)?;
    let u = solve_dirichlet(&t, &exact, Some(&rhs))?;
    Ok(u.sub(&exact).max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_is_compactly_supported() {
        let c = Complex64::new(0.5, 0.5);
        assert_eq!(bump_value(Complex64::new(0.9, 0.5), c, 0.3), 0.0);
        assert!((bump_value(c, c, 0.3) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn same_seed_same_field() {
        let g = Grid2D::unit_square(9).unwrap();
        let a = random_smooth_vector(g, 2, &mut rng(7), 1.0);
        let b = random_smooth_vector(g, 2, &mut rng(7), 1.0);
        assert_eq!(a, b);
    }
}
