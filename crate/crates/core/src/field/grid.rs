use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Uniform tensor grid on the rectangle `[x_min, x_max] x [y_min, y_max]`.
///
/// Node `(i, j)` sits at `z = x_min + i*h_x + i*(y_min + j*h_y)` and is stored at
/// linear index `j * nx + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid2D {
    /// Smallest node count per axis that fits every stencil used in the crate.
    pub const MIN_NODES: usize = 9;

    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx < Self::MIN_NODES || ny < Self::MIN_NODES {
            return Err(LabError::GridTooSmall {
                nx,
                ny,
                min: Self::MIN_NODES,
            });
        }
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || x_max <= x_min || y_max <= y_min {
            return Err(LabError::InvalidGrid(format!(
                "corners ({x_min}, {y_min}) .. ({x_max}, {y_max}) do not span a rectangle"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
            nx,
            ny,
        })
    }

    /// `(0,1)^2` with `n` nodes per axis.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(0.0, 1.0, 0.0, 1.0, n, n)
    }

    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(lo, hi, lo, hi, n, n)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        Self::new(self.x_min, self.x_max, self.y_min, self.y_max, self.nx, self.ny).map(|_| ())
    }

    #[inline]
    pub fn hx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    #[inline]
    pub fn hy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    /// Largest spacing, used as the refinement parameter in convergence fits.
    pub fn h(&self) -> f64 {
        self.hx().max(self.hy())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.hx()
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y_min + j as f64 * self.hy()
    }

    #[inline]
    pub fn z(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.x(i), self.y(j))
    }

    #[inline]
    pub fn z_at(&self, k: usize) -> Complex64 {
        let (i, j) = self.coords(k);
        self.z(i, j)
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx - 1 || j == self.ny - 1
    }

    /// True when node `(i, j)` is at least `margin` nodes away from every edge.
    pub fn is_inner(&self, i: usize, j: usize, margin: usize) -> bool {
        i >= margin && j >= margin && i + margin < self.nx && j + margin < self.ny
    }

    /// Trapezoid (clipped midpoint-cell) weight of node `(i, j)`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let wx = if i == 0 || i == self.nx - 1 { 0.5 } else { 1.0 };
        let wy = if j == 0 || j == self.ny - 1 { 0.5 } else { 1.0 };
        wx * wy * self.hx() * self.hy()
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let (i, j) = self.coords(k);
                self.weight(i, j)
            })
            .collect()
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    /// Whether `z` lies in the closed rectangle, up to `tol`.
    pub fn contains(&self, z: Complex64, tol: f64) -> bool {
        z.re >= self.x_min - tol && z.re <= self.x_max + tol && z.im >= self.y_min - tol && z.im <= self.y_max + tol
    }

    /// Same rectangle with a different resolution; spacing ratios are preserved.
    pub fn with_nodes(&self, nx: usize, ny: usize) -> Result<Self> {
        Self::new(self.x_min, self.x_max, self.y_min, self.y_max, nx, ny)
    }

    /// Linear indices of nodes at least `margin` nodes away from the boundary.
    pub fn inner_nodes(&self, margin: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| {
                let (i, j) = self.coords(k);
                self.is_inner(i, j, margin)
            })
            .collect()
    }
}
