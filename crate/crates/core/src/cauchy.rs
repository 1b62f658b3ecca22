//! Solid Cauchy transforms on a rectangle, Vekua-type inverses of perturbed
//! Cauchy-Riemann operators, and the τ-conjugated transforms built from them.
//!
//! The quadrature is a tensor midpoint rule over the trapezoid cells of the grid
//! with the singular cell integrated in closed form. The discrete sum is a
//! Toeplitz-block convolution; it is evaluated by zero-padded FFT, which gives
//! the same numbers as the direct double loop (see [`TransformPlan::apply_direct`])
//! up to round-off.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{wirtinger_dz, wirtinger_dzbar, CutoffFunction, Grid2D, GridField, MatrixField, ScalarField, VectorField};
use crate::linalg::gmres;
use crate::weight::HolomorphicWeight;

/// Which Wirtinger derivative an operator inverts or perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `∂_z`, kernel `1/(ζ̄ - z̄)`.
    Z,
    /// `∂_zbar`, kernel `1/(ζ - z)`.
    Zbar,
}

impl Side {
    pub fn derivative<F: GridField>(self, f: &F) -> F {
        match self {
            Side::Z => wirtinger_dz(f),
            Side::Zbar => wirtinger_dzbar(f),
        }
    }
}

/// `∫_0^a ∫_0^b dy dx / (x + iy)` for `a, b > 0`.
pub fn quarter_cell_integral(a: f64, b: f64) -> Complex64 {
    let t0 = b.atan2(a);
    Complex64::new(a * t0 - b * t0.sin().ln(), a * t0.cos().ln() - b * (PI / 2.0 - t0))
}

/// `∫ dA / (ζ - z_p)` over the (possibly clipped) cell of node `(i, j)`.
pub fn self_cell_integral(grid: &Grid2D, i: usize, j: usize) -> Complex64 {
    let half = |edge: bool, h: f64| if edge { 0.0 } else { 0.5 * h };
    let l = half(i == 0, grid.hx());
    let r = half(i == grid.nx - 1, grid.hx());
    let d = half(j == 0, grid.hy());
    let u = half(j == grid.ny - 1, grid.hy());
    let mut s = Complex64::new(0.0, 0.0);
    if r > 0.0 && u > 0.0 {
        s += quarter_cell_integral(r, u);
    }
    if l > 0.0 && u > 0.0 {
        s -= quarter_cell_integral(l, u).conj();
    }
    if l > 0.0 && d > 0.0 {
        s -= quarter_cell_integral(l, d);
    }
    if r > 0.0 && d > 0.0 {
        s += quarter_cell_integral(r, d).conj();
    }
    s
}

/// Smallest integer `>= n` whose only prime factors are 2, 3 and 5.
fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Precomputed quadrature data for both solid Cauchy transforms on one grid.
pub struct TransformPlan {
    grid: Grid2D,
    mx: usize,
    my: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    /// Kernel spectra in transposed layout `[i * my + j]`, `∂_zbar` then `∂_z`.
    kernel_hat: [Vec<Complex64>; 2],
    self_cell: Vec<Complex64>,
}

impl std::fmt::Debug for TransformPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransformPlan")
            .field("grid", &self.grid)
            .field("fft", &(self.mx, self.my))
            .finish()
    }
}

impl TransformPlan {
    pub const QUADRATURE: &'static str = "tensor-midpoint-desingularized";

    pub fn new(grid: Grid2D) -> Result<Self> {
        grid.validate()?;
        let mx = smooth_size(2 * grid.nx - 1);
        let my = smooth_size(2 * grid.ny - 1);
        let mut planner = FftPlanner::<f64>::new();
        let row_fwd = planner.plan_fft_forward(mx);
        let row_inv = planner.plan_fft_inverse(mx);
        let col_fwd = planner.plan_fft_forward(my);
        let col_inv = planner.plan_fft_inverse(my);
        let self_cell = (0..grid.len())
            .map(|k| {
                let (i, j) = grid.coords(k);
                self_cell_integral(&grid, i, j)
            })
            .collect();
        let mut plan = Self {
            grid,
            mx,
            my,
            row_fwd,
            row_inv,
            col_fwd,
            col_inv,
            kernel_hat: [Vec::new(), Vec::new()],
            self_cell,
        };
        plan.kernel_hat = [plan.kernel_spectrum(Side::Zbar), plan.kernel_spectrum(Side::Z)];
        Ok(plan)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn quadrature(&self) -> &'static str {
        Self::QUADRATURE
    }

    /// Singular-cell integrals `∫_{cell p} dA/(ζ - z_p)`, one per node.
    pub fn self_cell_constants(&self) -> &[Complex64] {
        &self.self_cell
    }

    fn kernel(&self, side: Side, di: isize, dj: isize) -> Complex64 {
        if di == 0 && dj == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let k = Complex64::new(di as f64 * self.grid.hx(), dj as f64 * self.grid.hy()).inv();
        match side {
            Side::Zbar => k,
            Side::Z => k.conj(),
        }
    }

    fn kernel_spectrum(&self, side: Side) -> Vec<Complex64> {
        let (mx, my) = (self.mx, self.my);
        let (nx, ny) = (self.grid.nx as isize, self.grid.ny as isize);
        let mut buf = vec![Complex64::new(0.0, 0.0); mx * my];
        // out[p] = Σ_q src[q] K(q - p), written as a convolution with k[d] = K(-d)
        for dj in -(ny - 1)..ny {
            for di in -(nx - 1)..nx {
                let r = dj.rem_euclid(my as isize) as usize;
                let c = di.rem_euclid(mx as isize) as usize;
                buf[r * mx + c] = self.kernel(side, -di, -dj);
            }
        }
        self.row_fwd.process(&mut buf);
        let mut t = transpose(&buf, my, mx);
        self.col_fwd.process(&mut t);
        t
    }

    /// Quadrature sum `Σ_{q≠p} w_q f_q K(q - p)` for one component, by FFT.
    fn convolve(&self, side: Side, f: &[Complex64]) -> Vec<Complex64> {
        let g = &self.grid;
        let (mx, my) = (self.mx, self.my);
        let zero = Complex64::new(0.0, 0.0);
        let mut rows = vec![zero; my * mx];
        for j in 0..g.ny {
            for i in 0..g.nx {
                rows[j * mx + i] = f[g.index(i, j)] * g.weight(i, j);
            }
        }
        self.row_fwd.process(&mut rows[..g.ny * mx]);
        let mut t = transpose(&rows, my, mx);
        self.col_fwd.process(&mut t);
        let kh = match side {
            Side::Zbar => &self.kernel_hat[0],
            Side::Z => &self.kernel_hat[1],
        };
        for (a, b) in t.iter_mut().zip(kh) {
            *a *= b;
        }
        self.col_inv.process(&mut t);
        let mut back = vec![zero; g.ny * mx];
        for j in 0..g.ny {
            for i in 0..mx {
                back[j * mx + i] = t[i * my + j];
            }
        }
        self.row_inv.process(&mut back);
        let scale = 1.0 / (mx * my) as f64;
        let mut out = vec![zero; g.len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                out[g.index(i, j)] = back[j * mx + i] * scale;
            }
        }
        out
    }

    fn finish(&self, side: Side, f: &[Complex64], mut sum: Vec<Complex64>) -> Vec<Complex64> {
        for ((s, fv), sc) in sum.iter_mut().zip(f).zip(&self.self_cell) {
            let cell = match side {
                Side::Zbar => *sc,
                Side::Z => sc.conj(),
            };
            *s = -(*s + fv * cell) / PI;
        }
        sum
    }

    /// Transform of one scalar component given as node values.
    pub fn apply_values(&self, side: Side, f: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(f.len(), self.grid.len(), "values do not match the plan grid");
        let sum = self.convolve(side, f);
        self.finish(side, f, sum)
    }

    /// Same quadrature evaluated as an explicit double loop, O(n^2).
    pub fn apply_values_direct(&self, side: Side, f: &[Complex64]) -> Vec<Complex64> {
        let g = &self.grid;
        let mut sum = vec![Complex64::new(0.0, 0.0); g.len()];
        for (p, s) in sum.iter_mut().enumerate() {
            let (ip, jp) = g.coords(p);
            let mut acc = Complex64::new(0.0, 0.0);
            for (q, fq) in f.iter().enumerate() {
                let (iq, jq) = g.coords(q);
                let k = self.kernel(side, iq as isize - ip as isize, jq as isize - jp as isize);
                acc += fq * g.weight(iq, jq) * k;
            }
            *s = acc;
        }
        self.finish(side, f, sum)
    }

    fn apply_blocks<F: GridField>(&self, f: &F, one: impl Fn(&[Complex64]) -> Vec<Complex64>) -> F {
        assert_eq!(f.grid(), &self.grid, "field does not live on the plan grid");
        let b = f.block();
        let n = self.grid.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n * b];
        let mut comp = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..b {
            for (k, v) in comp.iter_mut().enumerate() {
                *v = f.data()[k * b + c];
            }
            for (k, v) in one(&comp).into_iter().enumerate() {
                out[k * b + c] = v;
            }
        }
        f.with_data(out)
    }

    /// Componentwise `∂_side^{-1}` of any field kind.
    pub fn apply<F: GridField>(&self, side: Side, f: &F) -> F {
        self.apply_blocks(f, |v| self.apply_values(side, v))
    }

    pub fn apply_direct<F: GridField>(&self, side: Side, f: &F) -> F {
        self.apply_blocks(f, |v| self.apply_values_direct(side, v))
    }

    pub fn dzbar_inv<F: GridField>(&self, f: &F) -> F {
        self.apply(Side::Zbar, f)
    }

    pub fn dz_inv<F: GridField>(&self, f: &F) -> F {
        self.apply(Side::Z, f)
    }
}

fn transpose(a: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut t = vec![Complex64::new(0.0, 0.0); a.len()];
    for r in 0..rows {
        for c in 0..cols {
            t[c * rows + r] = a[r * cols + c];
        }
    }
    t
}

/// `∂_zbar^{-1} g = -(1/π) ∫ g(ζ)/(ζ - z) dA`.
pub fn dzbar_inv<F: GridField>(g: &F, plan: &TransformPlan) -> F {
    plan.dzbar_inv(g)
}

/// `∂_z^{-1} g = -(1/π) ∫ g(ζ)/(ζ̄ - z̄) dA`.
pub fn dz_inv<F: GridField>(g: &F, plan: &TransformPlan) -> F {
    plan.dz_inv(g)
}

/// How [`vekua_solve`] inverts `I + ½∂^{-1}eB`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolvePath {
    NeumannSeries,
    LinearSolve,
}

/// Inverse of `2∂_side + eB`, in the integral-equation form
/// `(I + ½ ∂_side^{-1} eB) w = ½ ∂_side^{-1} g`.
#[derive(Debug, Clone)]
pub struct VekuaOperator {
    plan: Arc<TransformPlan>,
    b_coef: MatrixField,
    eb: MatrixField,
    side: Side,
    cutoff: CutoffFunction,
    series_cap: usize,
    tolerance: f64,
    contraction_estimate: f64,
}

/// Series selected below this contraction estimate.
pub const SERIES_THRESHOLD: f64 = 0.8;
const POWER_ITERATIONS: usize = 20;
const POWER_SEED: u64 = 0x5eed_cafe;

impl VekuaOperator {
    pub fn new(plan: Arc<TransformPlan>, b_coef: MatrixField, side: Side, cutoff: CutoffFunction) -> Result<Self> {
        if b_coef.grid() != plan.grid() || cutoff.grid() != plan.grid() {
            return Err(LabError::ShapeMismatch("coefficient, cutoff and plan grids differ".into()));
        }
        if !b_coef.is_finite() {
            return Err(LabError::NonFinite("B"));
        }
        let e = ScalarField::from_real_values(*plan.grid(), cutoff.values());
        let eb = b_coef.mul_scalar(&e);
        let mut op = Self {
            plan,
            b_coef,
            eb,
            side,
            cutoff,
            series_cap: 200,
            tolerance: 1e-8,
            contraction_estimate: 0.0,
        };
        op.contraction_estimate = op.measure_contraction();
        Ok(op)
    }

    pub fn with_series_cap(mut self, cap: usize) -> Self {
        self.series_cap = cap;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn plan(&self) -> &TransformPlan {
        &self.plan
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn b_coef(&self) -> &MatrixField {
        &self.b_coef
    }

    pub fn cutoff(&self) -> &CutoffFunction {
        &self.cutoff
    }

    pub fn series_cap(&self) -> usize {
        self.series_cap
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn n_sys(&self) -> usize {
        self.b_coef.n_sys()
    }

    /// Power-iteration surrogate for the norm of `∂_side^{-1} eB` in L2(Ω).
    pub fn contraction_estimate(&self) -> f64 {
        self.contraction_estimate
    }

    pub fn default_path(&self) -> SolvePath {
        if self.contraction_estimate < SERIES_THRESHOLD {
            SolvePath::NeumannSeries
        } else {
            SolvePath::LinearSolve
        }
    }

    /// `∂_side^{-1}(eB v)`.
    fn kernel_apply(&self, v: &VectorField) -> VectorField {
        self.plan.apply(self.side, &self.eb.apply(v))
    }

    fn measure_contraction(&self) -> f64 {
        let grid = *self.plan.grid();
        let n = self.n_sys();
        let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
        let data = (0..grid.len() * n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut v = VectorField::new(grid, n, data).expect("finite random field");
        let mut best: f64 = 0.0;
        for _ in 0..POWER_ITERATIONS {
            let nv = v.l2_norm();
            if nv == 0.0 {
                break;
            }
            let w = self.kernel_apply(&v);
            let nw = w.l2_norm();
            best = best.max(nw / nv);
            if nw == 0.0 {
                break;
            }
            v = w.scale(Complex64::new(1.0 / nw, 0.0));
        }
        best
    }

    fn check_rhs(&self, g: &VectorField) -> Result<()> {
        if g.grid() != self.plan.grid() || g.n_sys() != self.n_sys() {
            return Err(LabError::ShapeMismatch("right-hand side does not match the operator".into()));
        }
        if !g.is_finite() {
            return Err(LabError::NonFinite("right-hand side"));
        }
        Ok(())
    }

    /// Relative residual of the integral equation.
    pub fn integral_residual(&self, w: &VectorField, g: &VectorField) -> f64 {
        let rhs = self.plan.apply(self.side, g).scale(Complex64::new(0.5, 0.0));
        let lhs = w.add(&self.kernel_apply(w).scale(Complex64::new(0.5, 0.0)));
        let d = lhs.sub(&rhs).l2_norm();
        let r = rhs.l2_norm();
        if r == 0.0 {
            d
        } else {
            d / r
        }
    }

    /// Relative residual of `2∂_side w + eB w = g` by finite differences on
    /// nodes at least `margin` away from the boundary.
    pub fn differential_residual(&self, w: &VectorField, g: &VectorField, margin: usize) -> f64 {
        let r = self
            .side
            .derivative(w)
            .scale(Complex64::new(2.0, 0.0))
            .add(&self.eb.apply(w))
            .sub(g);
        let gn = g.inner_l2_norm(margin);
        if gn == 0.0 {
            r.inner_l2_norm(margin)
        } else {
            r.inner_l2_norm(margin) / gn
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    /// L2 norms of the successive terms `½(-½∂^{-1}eB)^j ∂^{-1}g`.
    pub term_norms: Vec<f64>,
}

impl SeriesReport {
    pub fn ratios(&self) -> Vec<f64> {
        self.term_norms
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect()
    }

    pub fn max_ratio(&self) -> f64 {
        self.ratios().into_iter().fold(0.0, f64::max)
    }
}

fn track_divergence(ratios_ge_one: &mut usize, prev: f64, next: f64) -> Result<()> {
    if prev > 0.0 && next / prev >= 1.0 {
        *ratios_ge_one += 1;
        if *ratios_ge_one >= 3 {
            return Err(LabError::SeriesDiverged { ratio: next / prev });
        }
    } else {
        *ratios_ge_one = 0;
    }
    Ok(())
}

/// Partial sum `½ Σ_{j<terms} (-½ ∂^{-1} eB)^j ∂^{-1} g`.
pub fn neumann_series_apply(op: &VekuaOperator, g: &VectorField, terms: usize) -> Result<(VectorField, SeriesReport)> {
    op.check_rhs(g)?;
    let mut term = op.plan.apply(op.side, g).scale(Complex64::new(0.5, 0.0));
    let mut sum = term.zeros_like();
    let mut norms = Vec::with_capacity(terms);
    let mut run = 0;
    for j in 0..terms {
        let n = term.l2_norm();
        if let Some(&prev) = norms.last() {
            track_divergence(&mut run, prev, n)?;
        }
        norms.push(n);
        sum = sum.add(&term);
        if n == 0.0 {
            break;
        }
        if j + 1 < terms {
            term = op.kernel_apply(&term).scale(Complex64::new(-0.5, 0.0));
        }
    }
    Ok((sum, SeriesReport { term_norms: norms }))
}

#[derive(Debug, Clone)]
pub struct VekuaSolution {
    pub field: VectorField,
    pub path: SolvePath,
    pub iterations: usize,
    /// Relative residual of the integral equation.
    pub residual: f64,
    pub series: Option<SeriesReport>,
}

/// Solve `(2∂_side + eB) w = g` along the default path.
pub fn vekua_solve(op: &VekuaOperator, g: &VectorField) -> Result<VekuaSolution> {
    vekua_solve_with(op, g, op.default_path())
}

pub fn vekua_solve_with(op: &VekuaOperator, g: &VectorField, path: SolvePath) -> Result<VekuaSolution> {
    op.check_rhs(g)?;
    match path {
        SolvePath::NeumannSeries => solve_series(op, g),
        SolvePath::LinearSolve => solve_linear(op, g),
    }
}

fn solve_series(op: &VekuaOperator, g: &VectorField) -> Result<VekuaSolution> {
    let half = Complex64::new(0.5, 0.0);
    let mut term = op.plan.apply(op.side, g).scale(half);
    let t0 = term.l2_norm();
    let mut sum = term.zeros_like();
    let mut norms = vec![t0];
    let mut run = 0;
    if t0 == 0.0 {
        return Ok(VekuaSolution {
            field: sum,
            path: SolvePath::NeumannSeries,
            iterations: 0,
            residual: 0.0,
            series: Some(SeriesReport { term_norms: norms }),
        });
    }
    for j in 1..=op.series_cap {
        sum = sum.add(&term);
        term = op.kernel_apply(&term).scale(-half);
        let n = term.l2_norm();
        track_divergence(&mut run, *norms.last().unwrap(), n)?;
        norms.push(n);
        // (I + K) S_j - t_0 = -t_j, so the next term is the exact residual
        let residual = n / t0;
        if residual <= op.tolerance {
            return Ok(VekuaSolution {
                field: sum,
                path: SolvePath::NeumannSeries,
                iterations: j,
                residual,
                series: Some(SeriesReport { term_norms: norms }),
            });
        }
    }
    Err(LabError::NotConverged {
        method: "Neumann series",
        iterations: op.series_cap,
        residual: norms.last().copied().unwrap_or(f64::NAN) / t0,
    })
}

fn solve_linear(op: &VekuaOperator, g: &VectorField) -> Result<VekuaSolution> {
    let grid = *op.plan.grid();
    let n_sys = op.n_sys();
    let rhs = op.plan.apply(op.side, g).scale(Complex64::new(0.5, 0.0));
    let n = rhs.data().len();
    let mut apply = |v: &[Complex64], out: &mut [Complex64]| {
        let vf = VectorField::new(grid, n_sys, v.to_vec()).expect("GMRES iterate has the field shape");
        let kv = op.kernel_apply(&vf);
        for ((o, a), b) in out.iter_mut().zip(v).zip(kv.data()) {
            *o = a + 0.5 * b;
        }
    };
    let (x, report) = gmres(n, &mut apply, rhs.data(), op.tolerance * 0.1, 60, 600)?;
    let field = VectorField::new(grid, n_sys, x)?;
    let residual = op.integral_residual(&field, g);
    if residual > op.tolerance {
        return Err(LabError::NotConverged {
            method: "GMRES",
            iterations: report.iterations,
            residual,
        });
    }
    Ok(VekuaSolution {
        field,
        path: SolvePath::LinearSolve,
        iterations: report.iterations,
        residual,
        series: None,
    })
}

/// Composite inverse of `2∂_side + B` from a cut-off operator and the full one:
/// `𝔗 g - T((1-e) B 𝔗 g)`.
pub fn composite_apply(cut: &VekuaOperator, full: &VekuaOperator, g: &VectorField) -> Result<VectorField> {
    if cut.side != full.side || cut.plan.grid() != full.plan.grid() {
        return Err(LabError::ShapeMismatch("composite needs operators on the same side and grid".into()));
    }
    let v1 = vekua_solve(cut, g)?.field;
    let one_minus_e = ScalarField::from_real_values(*cut.plan.grid(), &cut.cutoff.complement());
    let src = cut.b_coef.apply(&v1).mul_scalar(&one_minus_e);
    let v2 = vekua_solve(full, &src)?.field;
    Ok(v1.sub(&v2))
}

/// `e^{s·2iτψ}` as a node-wise factor.
fn phase(weight: &HolomorphicWeight, grid: &Grid2D, tau: f64, s: f64) -> ScalarField {
    weight.phase_factor(grid, tau, s)
}

fn check_tau(tau: f64) -> Result<()> {
    if tau == 0.0 || !tau.is_finite() {
        return Err(LabError::InvalidParameter(format!("tau = {tau} must be finite and nonzero")));
    }
    Ok(())
}

/// `R_τ g = ½ E ∂_zbar^{-1}(g/E)` on the `Zbar` side and
/// `R̃_τ g = ½ E^{-1} ∂_z^{-1}(g E)` on the `Z` side, with `E = e^{τ(Φ - Φ̄)}`.
pub fn r_tau<F: GridField>(plan: &TransformPlan, g: &F, weight: &HolomorphicWeight, tau: f64, side: Side) -> Result<F> {
    check_tau(tau)?;
    weight.check_resolution(plan.grid(), tau);
    let s = match side {
        Side::Zbar => 1.0,
        Side::Z => -1.0,
    };
    let e_out = phase(weight, plan.grid(), tau, s);
    let e_in = phase(weight, plan.grid(), tau, -s);
    Ok(plan
        .apply(side, &g.mul_scalar(&e_in))
        .mul_scalar(&e_out)
        .scale(Complex64::new(0.5, 0.0)))
}

/// The conjugated right inverse `R_{τ,B}` (or `R̃_{τ,B}` on the `Z` side):
/// `(2∂_zbar + 2τ ∂_zbar Φ̄ + B) R_{τ,B} g = g`.
///
/// Holds the cut-off and the full Vekua operators so a τ ladder reuses them.
#[derive(Debug, Clone)]
pub struct ConjugatedInverse {
    cut: VekuaOperator,
    full: VekuaOperator,
}

impl ConjugatedInverse {
    pub fn new(plan: Arc<TransformPlan>, b_coef: MatrixField, cutoff: CutoffFunction, side: Side) -> Result<Self> {
        let ones = CutoffFunction::ones(*plan.grid());
        let full = VekuaOperator::new(plan.clone(), b_coef.clone(), side, ones)?;
        let cut = VekuaOperator::new(plan, b_coef, side, cutoff)?;
        Ok(Self { cut, full })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.cut = self.cut.with_tolerance(tol);
        self.full = self.full.with_tolerance(tol);
        self
    }

    pub fn side(&self) -> Side {
        self.cut.side
    }

    pub fn cut(&self) -> &VekuaOperator {
        &self.cut
    }

    pub fn full(&self) -> &VekuaOperator {
        &self.full
    }

    pub fn apply(&self, g: &VectorField, weight: &HolomorphicWeight, tau: f64) -> Result<VectorField> {
        check_tau(tau)?;
        let grid = *self.cut.plan.grid();
        weight.check_resolution(&grid, tau);
        let s = match self.side() {
            Side::Zbar => 1.0,
            Side::Z => -1.0,
        };
        let inner = g.mul_scalar(&phase(weight, &grid, tau, -s));
        let v = composite_apply(&self.cut, &self.full, &inner)?;
        Ok(v.mul_scalar(&phase(weight, &grid, tau, s)))
    }

    /// `2τ ∂_zbar Φ̄` (or `2τ ∂_z Φ`) on the grid.
    pub fn weight_coefficient(&self, weight: &HolomorphicWeight, tau: f64) -> ScalarField {
        let side = self.side();
        ScalarField::from_fn(*self.cut.plan.grid(), |z| {
            let d = weight.dz(z);
            2.0 * tau
                * match side {
                    Side::Zbar => d.conj(),
                    Side::Z => d,
                }
        })
    }

    /// `(2∂ + 2τ∂Φ + B) w - g` by finite differences.
    pub fn identity_defect(&self, w: &VectorField, g: &VectorField, weight: &HolomorphicWeight, tau: f64) -> VectorField {
        self.side()
            .derivative(w)
            .scale(Complex64::new(2.0, 0.0))
            .add(&w.mul_scalar(&self.weight_coefficient(weight, tau)))
            .add(&self.cut.b_coef.apply(w))
            .sub(g)
    }

    /// The leading-order profile `g / (2τ ∂Φ)`, set to zero where `g` vanishes.
    pub fn leading_profile(&self, g: &VectorField, weight: &HolomorphicWeight, tau: f64) -> VectorField {
        let c = self.weight_coefficient(weight, tau);
        let n = g.n_sys();
        let data = g
            .data()
            .iter()
            .enumerate()
            .map(|(idx, v)| {
                let d = c.values()[idx / n];
                if v.norm() == 0.0 || d.norm() == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    v / d
                }
            })
            .collect();
        g.with_data(data)
    }
}

/// One-shot form of [`ConjugatedInverse::apply`].
#[allow(clippy::too_many_arguments)]
pub fn r_tau_b(
    plan: Arc<TransformPlan>,
    g: &VectorField,
    weight: &HolomorphicWeight,
    tau: f64,
    b_coef: &MatrixField,
    cutoff: &CutoffFunction,
    side: Side,
) -> Result<VectorField> {
    ConjugatedInverse::new(plan, b_coef.clone(), cutoff.clone(), side)?.apply(g, weight, tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(17), 18);
        assert_eq!(smooth_size(513), 540);
        assert_eq!(smooth_size(129), 135);
        assert_eq!(smooth_size(64), 64);
    }

    #[test]
    fn quarter_cell_matches_numerical_integration() {
        // inner integral in y done in closed form, outer by Gauss-Legendre after x = a t^6
        let nodes = gauss_legendre(64);
        for (a, b) in [(0.5, 0.5), (0.01, 0.03), (1.0, 0.2), (0.3, 2.0)] {
            let mut acc = c(0.0, 0.0);
            for &(t, w) in &nodes {
                let tt = 0.5 * (t + 1.0);
                let x = a * tt.powi(6);
                let jac = 6.0 * a * tt.powi(5) * 0.5;
                let inner = c((b / x).atan(), -((x * x + b * b).sqrt() / x).ln());
                acc += inner * (w * jac);
            }
            let closed = quarter_cell_integral(a, b);
            assert!((closed - acc).norm() < 1e-12 * (1.0 + acc.norm()), "{a} {b}: {closed} vs {acc}");
        }
    }

    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|k| {
                let mut x = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
                let mut dp = 0.0;
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, x);
                    for m in 2..=n {
                        let p2 = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let dx = p1 / dp;
                    x -= dx;
                    if dx.abs() < 1e-16 {
                        break;
                    }
                }
                (x, 2.0 / ((1.0 - x * x) * dp * dp))
            })
            .collect()
    }

    #[test]
    fn interior_self_cell_vanishes_by_symmetry() {
        let g = Grid2D::unit_square(9).unwrap();
        assert!(self_cell_integral(&g, 4, 4).norm() < 1e-15);
        assert!(self_cell_integral(&g, 0, 4).norm() > 0.0);
    }

    #[test]
    fn fft_sum_equals_direct_sum() {
        let g = Grid2D::new(-0.5, 1.0, 0.0, 0.8, 13, 10).unwrap();
        let plan = TransformPlan::new(g).unwrap();
        let f = ScalarField::from_fn(g, |z| (z * c(0.3, 1.1)).exp() + z.conj());
        for side in [Side::Zbar, Side::Z] {
            let a = plan.apply(side, &f);
            let b = plan.apply_direct(side, &f);
            assert!(a.sub(&b).max_abs() < 1e-13 * (1.0 + b.max_abs()));
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let g = Grid2D::unit_square(17).unwrap();
        let plan = TransformPlan::new(g).unwrap();
        let f = ScalarField::constant(g, c(0.0, 0.0));
        assert_eq!(plan.dzbar_inv(&f).max_abs(), 0.0);
        assert_eq!(plan.dz_inv(&f).max_abs(), 0.0);
    }

    #[test]
    fn tau_zero_is_rejected() {
        let g = Grid2D::unit_square(17).unwrap();
        let plan = TransformPlan::new(g).unwrap();
        let part = crate::field::BoundaryPartition::top_bottom(g);
        let w = crate::weight::weight_catalog(crate::weight::WeightSpec::Quadratic { center: [0.5, 0.5] }, &part).unwrap();
        let f = ScalarField::constant(g, c(1.0, 0.0));
        assert!(r_tau(&plan, &f, &w, 0.0, Side::Zbar).is_err());
    }
}
