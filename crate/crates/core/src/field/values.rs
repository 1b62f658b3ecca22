use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Grid2D;
use crate::error::{LabError, Result};

/// Common storage contract for per-node complex samples.
///
/// Every field stores `block()` complex numbers per node, node-major, so that the
/// derivative operators and the Cauchy transforms act component-wise without
/// caring whether a node holds a scalar, an N-vector or an N x N matrix.
pub trait GridField: Clone {
    fn grid(&self) -> &Grid2D;
    fn block(&self) -> usize;
    fn data(&self) -> &[Complex64];
    /// A field with the same grid and shape but new samples.
    fn with_data(&self, data: Vec<Complex64>) -> Self;

    fn zeros_like(&self) -> Self {
        self.with_data(vec![Complex64::new(0.0, 0.0); self.data().len()])
    }

    fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        self.with_data(self.data().iter().map(|&v| f(v)).collect())
    }

    fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    fn scale(&self, s: Complex64) -> Self {
        self.map(|v| v * s)
    }

    fn add(&self, other: &Self) -> Self {
        assert_same_shape(self, other);
        self.with_data(self.data().iter().zip(other.data()).map(|(a, b)| a + b).collect())
    }

    fn sub(&self, other: &Self) -> Self {
        assert_same_shape(self, other);
        self.with_data(self.data().iter().zip(other.data()).map(|(a, b)| a - b).collect())
    }

    /// `alpha * self + beta * other`.
    fn lin_comb(&self, alpha: Complex64, other: &Self, beta: Complex64) -> Self {
        assert_same_shape(self, other);
        self.with_data(
            self.data()
                .iter()
                .zip(other.data())
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        )
    }

    /// Multiply every component at node `k` by `s[k]`.
    fn mul_scalar(&self, s: &ScalarField) -> Self {
        assert_eq!(s.grid(), self.grid(), "scalar weight lives on another grid");
        let b = self.block();
        self.with_data(
            self.data()
                .iter()
                .enumerate()
                .map(|(idx, v)| v * s.values[idx / b])
                .collect(),
        )
    }

    fn max_abs(&self) -> f64 {
        self.data().iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Max modulus over nodes at least `margin` nodes away from the boundary.
    fn inner_max_abs(&self, margin: usize) -> f64 {
        let g = self.grid();
        let b = self.block();
        let mut m: f64 = 0.0;
        for k in g.inner_nodes(margin) {
            for v in &self.data()[k * b..(k + 1) * b] {
                m = m.max(v.norm());
            }
        }
        m
    }

    /// Trapezoid-weighted L2(Omega) norm (Euclidean across components).
    fn l2_norm(&self) -> f64 {
        let g = self.grid();
        let b = self.block();
        let mut acc = 0.0;
        for k in 0..g.len() {
            let (i, j) = g.coords(k);
            let w = g.weight(i, j);
            acc += w * self.data()[k * b..(k + 1) * b].iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
        acc.sqrt()
    }

    /// Weighted L2 norm restricted to nodes at least `margin` away from the boundary.
    fn inner_l2_norm(&self, margin: usize) -> f64 {
        let g = self.grid();
        let b = self.block();
        let acc: f64 = g
            .inner_nodes(margin)
            .into_iter()
            .map(|k| {
                let (i, j) = g.coords(k);
                g.weight(i, j) * self.data()[k * b..(k + 1) * b].iter().map(|v| v.norm_sqr()).sum::<f64>()
            })
            .sum();
        acc.sqrt()
    }

    /// Plain Euclidean norm of the sample vector.
    fn euclid_norm(&self) -> f64 {
        self.data().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    fn is_finite(&self) -> bool {
        self.data().iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

fn assert_same_shape<F: GridField>(a: &F, b: &F) {
    assert_eq!(a.grid(), b.grid(), "fields live on different grids");
    assert_eq!(a.block(), b.block(), "fields have different block sizes");
}

fn check_finite(data: &[Complex64], what: &'static str) -> Result<()> {
    if data.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Ok(())
    } else {
        Err(LabError::NonFinite(what))
    }
}

/// One complex number per node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    grid: Grid2D,
    pub(crate) values: Vec<Complex64>,
}

impl ScalarField {
    pub fn new(grid: Grid2D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::ShapeMismatch(format!(
                "scalar field needs {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        check_finite(&values, "scalar field")?;
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(Complex64) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.z_at(k))).collect();
        Self { grid, values }
    }

    pub fn from_real_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_fn(grid, |z| Complex64::new(f(z.re, z.im), 0.0))
    }

    /// Real samples in grid order.
    pub fn from_real_values(grid: Grid2D, v: &[f64]) -> Self {
        assert_eq!(v.len(), grid.len(), "sample count does not match the grid");
        Self {
            grid,
            values: v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn constant(grid: Grid2D, c: Complex64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.index(i, j)]
    }

    /// Treat as a one-component vector field.
    pub fn to_vector(&self) -> VectorField {
        VectorField {
            grid: self.grid,
            n_sys: 1,
            data: self.values.clone(),
        }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        assert_eq!(self.grid, other.grid);
        self.with_data(self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect())
    }

    /// Scalar multiple of the identity matrix at every node.
    pub fn times_identity(&self, n: usize) -> MatrixField {
        let mut data = vec![Complex64::new(0.0, 0.0); self.grid.len() * n * n];
        for (k, v) in self.values.iter().enumerate() {
            for r in 0..n {
                data[k * n * n + r * n + r] = *v;
            }
        }
        MatrixField {
            grid: self.grid,
            n_sys: n,
            data,
        }
    }
}

impl GridField for ScalarField {
    fn grid(&self) -> &Grid2D {
        &self.grid
    }
    fn block(&self) -> usize {
        1
    }
    fn data(&self) -> &[Complex64] {
        &self.values
    }
    fn with_data(&self, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), self.values.len());
        Self { grid: self.grid, values: data }
    }
}

/// A complex N-vector per node: the unknown `u`, sources, amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorField {
    grid: Grid2D,
    n_sys: usize,
    data: Vec<Complex64>,
}

impl VectorField {
    pub fn new(grid: Grid2D, n_sys: usize, data: Vec<Complex64>) -> Result<Self> {
        if n_sys == 0 {
            return Err(LabError::ShapeMismatch("system dimension must be >= 1".into()));
        }
        if data.len() != grid.len() * n_sys {
            return Err(LabError::ShapeMismatch(format!(
                "vector field needs {} samples, got {}",
                grid.len() * n_sys,
                data.len()
            )));
        }
        check_finite(&data, "vector field")?;
        Ok(Self { grid, n_sys, data })
    }

    pub fn zeros(grid: Grid2D, n_sys: usize) -> Self {
        Self {
            grid,
            n_sys,
            data: vec![Complex64::new(0.0, 0.0); grid.len() * n_sys],
        }
    }

    /// Samples `f(z)` at each node; `f` must return exactly `n_sys` entries.
    pub fn from_fn(grid: Grid2D, n_sys: usize, f: impl Fn(Complex64) -> Vec<Complex64>) -> Self {
        let mut data = Vec::with_capacity(grid.len() * n_sys);
        for k in 0..grid.len() {
            let v = f(grid.z_at(k));
            assert_eq!(v.len(), n_sys, "closure returned the wrong number of components");
            data.extend(v);
        }
        Self { grid, n_sys, data }
    }

    /// `s(z) * v` for a constant vector `v`.
    pub fn from_scalar(s: &ScalarField, v: &[Complex64]) -> Self {
        let n = v.len();
        let mut data = Vec::with_capacity(s.grid.len() * n);
        for sv in &s.values {
            data.extend(v.iter().map(|c| sv * c));
        }
        Self {
            grid: s.grid,
            n_sys: n,
            data,
        }
    }

    pub fn n_sys(&self) -> usize {
        self.n_sys
    }

    pub fn node(&self, k: usize) -> &[Complex64] {
        &self.data[k * self.n_sys..(k + 1) * self.n_sys]
    }

    pub fn at(&self, i: usize, j: usize, c: usize) -> Complex64 {
        self.data[self.grid.index(i, j) * self.n_sys + c]
    }

    /// Extract component `c` as a scalar field.
    pub fn component(&self, c: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: (0..self.grid.len()).map(|k| self.data[k * self.n_sys + c]).collect(),
        }
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }
}

impl GridField for VectorField {
    fn grid(&self) -> &Grid2D {
        &self.grid
    }
    fn block(&self) -> usize {
        self.n_sys
    }
    fn data(&self) -> &[Complex64] {
        &self.data
    }
    fn with_data(&self, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self {
            grid: self.grid,
            n_sys: self.n_sys,
            data,
        }
    }
}

/// A complex N x N matrix per node (row-major within a node): the coefficients A, B, Q.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixField {
    grid: Grid2D,
    n_sys: usize,
    data: Vec<Complex64>,
}

impl MatrixField {
    pub fn new(grid: Grid2D, n_sys: usize, data: Vec<Complex64>) -> Result<Self> {
        if n_sys == 0 {
            return Err(LabError::ShapeMismatch("system dimension must be >= 1".into()));
        }
        if data.len() != grid.len() * n_sys * n_sys {
            return Err(LabError::ShapeMismatch(format!(
                "matrix field needs {} samples, got {}",
                grid.len() * n_sys * n_sys,
                data.len()
            )));
        }
        check_finite(&data, "matrix field")?;
        Ok(Self { grid, n_sys, data })
    }

    pub fn zeros(grid: Grid2D, n_sys: usize) -> Self {
        Self {
            grid,
            n_sys,
            data: vec![Complex64::new(0.0, 0.0); grid.len() * n_sys * n_sys],
        }
    }

    pub fn identity(grid: Grid2D, n_sys: usize) -> Self {
        ScalarField::constant(grid, Complex64::new(1.0, 0.0)).times_identity(n_sys)
    }

    /// Constant matrix `m` (row-major, length N^2) at every node.
    pub fn constant(grid: Grid2D, n_sys: usize, m: &[Complex64]) -> Self {
        assert_eq!(m.len(), n_sys * n_sys);
        let mut data = Vec::with_capacity(grid.len() * m.len());
        for _ in 0..grid.len() {
            data.extend_from_slice(m);
        }
        Self { grid, n_sys, data }
    }

    /// `f(z)` must return the N^2 row-major entries.
    pub fn from_fn(grid: Grid2D, n_sys: usize, f: impl Fn(Complex64) -> Vec<Complex64>) -> Self {
        let mut data = Vec::with_capacity(grid.len() * n_sys * n_sys);
        for k in 0..grid.len() {
            let v = f(grid.z_at(k));
            assert_eq!(v.len(), n_sys * n_sys, "closure returned the wrong number of entries");
            data.extend(v);
        }
        Self { grid, n_sys, data }
    }

    pub fn n_sys(&self) -> usize {
        self.n_sys
    }

    pub fn node(&self, k: usize) -> &[Complex64] {
        let b = self.n_sys * self.n_sys;
        &self.data[k * b..(k + 1) * b]
    }

    pub fn entry(&self, k: usize, r: usize, c: usize) -> Complex64 {
        self.data[k * self.n_sys * self.n_sys + r * self.n_sys + c]
    }

    /// Node-wise matrix-vector product.
    pub fn apply(&self, v: &VectorField) -> VectorField {
        assert_eq!(self.grid, *v.grid());
        assert_eq!(self.n_sys, v.n_sys());
        let n = self.n_sys;
        let mut out = vec![Complex64::new(0.0, 0.0); v.data().len()];
        for k in 0..self.grid.len() {
            let m = self.node(k);
            let x = v.node(k);
            for r in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..n {
                    acc += m[r * n + c] * x[c];
                }
                out[k * n + r] = acc;
            }
        }
        v.with_data(out)
    }

    /// Node-wise product `self * other`.
    pub fn matmul(&self, other: &MatrixField) -> MatrixField {
        assert_eq!(self.grid, other.grid);
        assert_eq!(self.n_sys, other.n_sys);
        let n = self.n_sys;
        let b = n * n;
        let mut out = vec![Complex64::new(0.0, 0.0); self.data.len()];
        for k in 0..self.grid.len() {
            let a = self.node(k);
            let c = other.node(k);
            for r in 0..n {
                for col in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for t in 0..n {
                        acc += a[r * n + t] * c[t * n + col];
                    }
                    out[k * b + r * n + col] = acc;
                }
            }
        }
        self.with_data(out)
    }

    /// Frobenius modulus per node, as a real-valued scalar field.
    pub fn frobenius(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: (0..self.grid.len())
                .map(|k| Complex64::new(self.node(k).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt(), 0.0))
                .collect(),
        }
    }
}

impl GridField for MatrixField {
    fn grid(&self) -> &Grid2D {
        &self.grid
    }
    fn block(&self) -> usize {
        self.n_sys * self.n_sys
    }
    fn data(&self) -> &[Complex64] {
        &self.data
    }
    fn with_data(&self, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Self {
            grid: self.grid,
            n_sys: self.n_sys,
            data,
        }
    }
}
