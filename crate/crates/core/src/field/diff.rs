//! Finite-difference Wirtinger calculus on the tensor grid.
//!
//! First derivatives use the centered fourth-order stencil wherever two
//! neighbours exist on each side, the centered second-order stencil one node in
//! from an edge, and the one-sided second-order stencil on the edge itself.
//! The Laplacian is the 5-point stencil, with one-sided second-order second
//! differences on boundary rows. The elliptic solver assembles its matrix from
//! the same stencil tables, so applying these operators to a discrete solution
//! reproduces the assembled system exactly.

use num_complex::Complex64;

use super::GridField;

const D1_INNER: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
const D1_NEAR_EDGE: [f64; 3] = [-0.5, 0.0, 0.5];
const D1_FIRST: [f64; 3] = [-1.5, 2.0, -0.5];
const D1_LAST: [f64; 3] = [0.5, -2.0, 1.5];

const D2_INNER: [f64; 3] = [1.0, -2.0, 1.0];
const D2_FIRST: [f64; 4] = [2.0, -5.0, 4.0, -1.0];
const D2_LAST: [f64; 4] = [-1.0, 4.0, -5.0, 2.0];

/// First-derivative stencil at position `i` of an `n`-point axis: returns the
/// index of the first tap and the coefficients (to be divided by the spacing).
pub(crate) fn d1_stencil(i: usize, n: usize) -> (usize, &'static [f64]) {
    if i == 0 {
        (0, &D1_FIRST)
    } else if i == n - 1 {
        (n - 3, &D1_LAST)
    } else if i == 1 || i == n - 2 {
        (i - 1, &D1_NEAR_EDGE)
    } else {
        (i - 2, &D1_INNER)
    }
}

/// Second-derivative stencil, same convention (divide by spacing squared).
pub(crate) fn d2_stencil(i: usize, n: usize) -> (usize, &'static [f64]) {
    if i == 0 {
        (0, &D2_FIRST)
    } else if i == n - 1 {
        (n - 4, &D2_LAST)
    } else {
        (i - 1, &D2_INNER)
    }
}

#[derive(Clone, Copy)]
enum Axis {
    X,
    Y,
}

fn apply_axis<F: GridField>(
    f: &F,
    axis: Axis,
    stencil: fn(usize, usize) -> (usize, &'static [f64]),
    scale: f64,
) -> Vec<Complex64> {
    let g = *f.grid();
    let b = f.block();
    let data = f.data();
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (pos, n) = match axis {
                Axis::X => (i, g.nx),
                Axis::Y => (j, g.ny),
            };
            let (start, coeffs) = stencil(pos, n);
            let k = g.index(i, j);
            for comp in 0..b {
                let mut acc = Complex64::new(0.0, 0.0);
                for (t, &w) in coeffs.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let src = match axis {
                        Axis::X => g.index(start + t, j),
                        Axis::Y => g.index(i, start + t),
                    };
                    acc += data[src * b + comp] * w;
                }
                out[k * b + comp] = acc * scale;
            }
        }
    }
    out
}

/// Partial derivative in `x_1`.
pub fn dx<F: GridField>(f: &F) -> F {
    let s = 1.0 / f.grid().hx();
    f.with_data(apply_axis(f, Axis::X, d1_stencil, s))
}

/// Partial derivative in `x_2`.
pub fn dy<F: GridField>(f: &F) -> F {
    let s = 1.0 / f.grid().hy();
    f.with_data(apply_axis(f, Axis::Y, d1_stencil, s))
}

/// `d_z = (d_x1 - i d_x2) / 2`.
pub fn wirtinger_dz<F: GridField>(f: &F) -> F {
    let fx = dx(f);
    let fy = dy(f);
    fx.lin_comb(Complex64::new(0.5, 0.0), &fy, Complex64::new(0.0, -0.5))
}

/// `d_zbar = (d_x1 + i d_x2) / 2`.
pub fn wirtinger_dzbar<F: GridField>(f: &F) -> F {
    let fx = dx(f);
    let fy = dy(f);
    fx.lin_comb(Complex64::new(0.5, 0.0), &fy, Complex64::new(0.0, 0.5))
}

/// 5-point Laplacian (one-sided second differences on boundary rows).
pub fn laplacian<F: GridField>(f: &F) -> F {
    let g = *f.grid();
    let xx = apply_axis(f, Axis::X, d2_stencil, 1.0 / (g.hx() * g.hx()));
    let yy = apply_axis(f, Axis::Y, d2_stencil, 1.0 / (g.hy() * g.hy()));
    f.with_data(xx.into_iter().zip(yy).map(|(a, b)| a + b).collect())
}
