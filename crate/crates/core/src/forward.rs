//! Sparse direct solver for `Δu + 2A∂_z u + 2B∂_zbar u + Qu = f` with Dirichlet
//! data, Neumann traces, and the Γ̃-restricted Dirichlet-to-Neumann surrogate of
//! the partial Cauchy data.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{
    d1_stencil, d2_stencil, dx, dy, laplacian, trace_boundary, BoundaryPartition, BoundaryTrace, Grid2D, GridField,
    GridSpec, Label, MatrixField, VectorField,
};
use crate::fixtures::random_smooth_matrix;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Coefficients `(A, B, Q)` of the system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TripleRecord", into = "TripleRecord")]
pub struct CoefficientTriple {
    a_coef: MatrixField,
    b_coef: MatrixField,
    q_coef: MatrixField,
}

#[derive(Serialize, Deserialize)]
struct TripleRecord {
    a: MatrixField,
    b: MatrixField,
    q: MatrixField,
}

impl TryFrom<TripleRecord> for CoefficientTriple {
    type Error = LabError;
    fn try_from(r: TripleRecord) -> Result<Self> {
        for (m, name) in [(&r.a, "A"), (&r.b, "B"), (&r.q, "Q")] {
            MatrixField::new(*m.grid(), m.n_sys(), m.data().to_vec()).map_err(|e| match e {
                LabError::NonFinite(_) => LabError::NonFinite(name),
                other => other,
            })?;
        }
        CoefficientTriple::new(r.a, r.b, r.q)
    }
}

impl From<CoefficientTriple> for TripleRecord {
    fn from(t: CoefficientTriple) -> Self {
        TripleRecord {
            a: t.a_coef,
            b: t.b_coef,
            q: t.q_coef,
        }
    }
}

impl CoefficientTriple {
    pub fn new(a_coef: MatrixField, b_coef: MatrixField, q_coef: MatrixField) -> Result<Self> {
        if a_coef.grid() != b_coef.grid() || a_coef.grid() != q_coef.grid() {
            return Err(LabError::ShapeMismatch("A, B, Q live on different grids".into()));
        }
        if a_coef.n_sys() != b_coef.n_sys() || a_coef.n_sys() != q_coef.n_sys() {
            return Err(LabError::ShapeMismatch("A, B, Q have different system sizes".into()));
        }
        for (m, name) in [(&a_coef, "A"), (&b_coef, "B"), (&q_coef, "Q")] {
            if !m.is_finite() {
                return Err(LabError::NonFinite(name));
            }
        }
        Ok(Self { a_coef, b_coef, q_coef })
    }

    pub fn zeros(grid: Grid2D, n_sys: usize) -> Self {
        let z = MatrixField::zeros(grid, n_sys);
        Self {
            a_coef: z.clone(),
            b_coef: z.clone(),
            q_coef: z,
        }
    }

    /// Random smooth coefficients drawn from `seed`.
    pub fn random_smooth(grid: Grid2D, n_sys: usize, seed: u64, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_smooth_matrix(grid, n_sys, &mut rng, amplitude);
        let b = random_smooth_matrix(grid, n_sys, &mut rng, amplitude);
        let q = random_smooth_matrix(grid, n_sys, &mut rng, amplitude);
        Self {
            a_coef: a,
            b_coef: b,
            q_coef: q,
        }
    }

    pub fn a(&self) -> &MatrixField {
        &self.a_coef
    }

    pub fn b(&self) -> &MatrixField {
        &self.b_coef
    }

    pub fn q(&self) -> &MatrixField {
        &self.q_coef
    }

    pub fn grid(&self) -> &Grid2D {
        self.a_coef.grid()
    }

    pub fn n_sys(&self) -> usize {
        self.a_coef.n_sys()
    }

    pub fn into_parts(self) -> (MatrixField, MatrixField, MatrixField) {
        (self.a_coef, self.b_coef, self.q_coef)
    }

    fn form(&self) -> FirstOrderForm {
        // 2A∂_z + 2B∂_zbar = (A + B)∂_x + i(B - A)∂_y
        FirstOrderForm {
            cx: self.a_coef.add(&self.b_coef),
            cy: self.b_coef.sub(&self.a_coef).scale(I),
            q: self.q_coef.clone(),
        }
    }

    /// Discrete `L u` with the stencils used by the solver.
    pub fn apply_operator(&self, u: &VectorField) -> VectorField {
        self.form().apply(u)
    }

    /// Largest coefficient difference `max(|A1-A2|, |B1-B2|, |Q1-Q2|)` over the grid.
    pub fn gap(&self, other: &CoefficientTriple) -> f64 {
        [
            self.a_coef.sub(&other.a_coef).max_abs(),
            self.b_coef.sub(&other.b_coef).max_abs(),
            self.q_coef.sub(&other.q_coef).max_abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// `Δ + C_x ∂_x + C_y ∂_y + Q`.
struct FirstOrderForm {
    cx: MatrixField,
    cy: MatrixField,
    q: MatrixField,
}

impl FirstOrderForm {
    fn apply(&self, u: &VectorField) -> VectorField {
        laplacian(u)
            .add(&self.cx.apply(&dx(u)))
            .add(&self.cy.apply(&dy(u)))
            .add(&self.q.apply(u))
    }
}

/// Real-direction form `Δ + 𝒜∂_x + ℬ∂_y + Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealFormCoefficients {
    pub a_real: MatrixField,
    pub b_real: MatrixField,
}

impl RealFormCoefficients {
    pub fn new(a_real: MatrixField, b_real: MatrixField) -> Result<Self> {
        if a_real.grid() != b_real.grid() || a_real.n_sys() != b_real.n_sys() {
            return Err(LabError::ShapeMismatch("real-form coefficients differ in grid or size".into()));
        }
        Ok(Self { a_real, b_real })
    }

    /// Inverse of [`real_form_to_complex`]: `𝒜 = (A + B)/2`, `ℬ = (A - B)/(2i)`.
    pub fn from_complex(a: &MatrixField, b: &MatrixField) -> Result<Self> {
        Self::new(
            a.add(b).scale(Complex64::new(0.5, 0.0)),
            a.sub(b).scale(Complex64::new(0.0, -0.5)),
        )
    }

    /// The same operator written with `2A∂_z + 2B∂_zbar`; halves the pair
    /// returned by [`real_form_to_complex`].
    pub fn to_triple(&self, q: MatrixField) -> Result<CoefficientTriple> {
        let (a, b) = real_form_to_complex(self);
        let half = Complex64::new(0.5, 0.0);
        CoefficientTriple::new(a.scale(half), b.scale(half), q)
    }

    fn form(&self, q: &MatrixField) -> FirstOrderForm {
        FirstOrderForm {
            cx: self.a_real.clone(),
            cy: self.b_real.clone(),
            q: q.clone(),
        }
    }
}

/// `A = 𝒜 + iℬ`, `B = 𝒜 - iℬ`, so that `𝒜∂_x + ℬ∂_y = A∂_z + B∂_zbar`.
pub fn real_form_to_complex(rf: &RealFormCoefficients) -> (MatrixField, MatrixField) {
    let ib = rf.b_real.scale(I);
    (rf.a_real.add(&ib), rf.a_real.sub(&ib))
}

/// Condition estimates above this are treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;
const RESIDUAL_TOL: f64 = 1e-10;

/// LU factorization of the interior system, reusable across boundary data.
pub struct ForwardSolver {
    grid: Grid2D,
    n_sys: usize,
    cx: MatrixField,
    cy: MatrixField,
    q: MatrixField,
    rows: Vec<Vec<(usize, Complex64)>>,
    lu: faer::sparse::linalg::solvers::Lu<usize, Complex64>,
    condition: f64,
}

impl std::fmt::Debug for ForwardSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ForwardSolver")
            .field("grid", &self.grid)
            .field("n_sys", &self.n_sys)
            .field("condition", &self.condition)
            .finish()
    }
}

#[derive(Debug, Clone, Copy)]
enum Tap {
    Unknown(usize),
    Boundary(usize),
}

impl ForwardSolver {
    pub fn new(coefs: &CoefficientTriple) -> Result<Self> {
        Self::from_form(coefs.form(), coefs.n_sys())
    }

    pub fn from_real_form(rf: &RealFormCoefficients, q: &MatrixField) -> Result<Self> {
        if rf.a_real.grid() != q.grid() || rf.a_real.n_sys() != q.n_sys() {
            return Err(LabError::ShapeMismatch("Q does not match the real-form coefficients".into()));
        }
        Self::from_form(rf.form(q), q.n_sys())
    }

    fn from_form(form: FirstOrderForm, n_sys: usize) -> Result<Self> {
        let grid = *form.q.grid();
        grid.validate()?;
        let mut solver = Self {
            grid,
            n_sys,
            cx: form.cx,
            cy: form.cy,
            q: form.q,
            rows: Vec::new(),
            lu: placeholder_lu()?,
            condition: 0.0,
        };
        solver.rows = solver.assemble_rows();
        let n = solver.unknowns();
        let mut triplets = Vec::new();
        for (r, row) in solver.rows.iter().enumerate() {
            for &(c, v) in row {
                triplets.push(Triplet::new(r, c, v));
            }
        }
        let mat = SparseColMat::<usize, Complex64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| LabError::InvalidGrid(format!("sparse assembly failed: {e:?}")))?;
        solver.lu = mat.sp_lu().map_err(|_| LabError::Singular {
            condition: f64::INFINITY,
        })?;
        solver.condition = solver.estimate_condition();
        if solver.condition.is_nan() || solver.condition > SINGULAR_CONDITION {
            return Err(LabError::Singular {
                condition: solver.condition,
            });
        }
        Ok(solver)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn n_sys(&self) -> usize {
        self.n_sys
    }

    /// Estimated 1-norm condition number of the interior matrix.
    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    fn unknowns(&self) -> usize {
        (self.grid.nx - 2) * (self.grid.ny - 2) * self.n_sys
    }

    fn unknown_index(&self, i: usize, j: usize) -> usize {
        ((j - 1) * (self.grid.nx - 2) + (i - 1)) * self.n_sys
    }

    fn tap(&self, i: usize, j: usize) -> Tap {
        if self.grid.is_boundary(i, j) {
            Tap::Boundary(self.grid.index(i, j))
        } else {
            Tap::Unknown(self.unknown_index(i, j))
        }
    }

    /// Interior rows: for each tap, the node and the N x N block it multiplies.
    fn row_blocks(&self, i: usize, j: usize) -> Vec<(Tap, Vec<Complex64>)> {
        let g = &self.grid;
        let n = self.n_sys;
        let k = g.index(i, j);
        let mut out: Vec<(Tap, Vec<Complex64>)> = Vec::new();
        let mut push = |tap: Tap, block: Vec<Complex64>| out.push((tap, block));
        let ident = |s: f64| -> Vec<Complex64> {
            let mut b = vec![Complex64::new(0.0, 0.0); n * n];
            for r in 0..n {
                b[r * n + r] = Complex64::new(s, 0.0);
            }
            b
        };
        let (sx, wx) = d2_stencil(i, g.nx);
        for (t, &w) in wx.iter().enumerate() {
            push(self.tap(sx + t, j), ident(w / (g.hx() * g.hx())));
        }
        let (sy, wy) = d2_stencil(j, g.ny);
        for (t, &w) in wy.iter().enumerate() {
            push(self.tap(i, sy + t), ident(w / (g.hy() * g.hy())));
        }
        let cx = self.cx.node(k);
        let (sx, wx) = d1_stencil(i, g.nx);
        for (t, &w) in wx.iter().enumerate() {
            if w != 0.0 {
                push(self.tap(sx + t, j), cx.iter().map(|c| c * (w / g.hx())).collect());
            }
        }
        let cy = self.cy.node(k);
        let (sy, wy) = d1_stencil(j, g.ny);
        for (t, &w) in wy.iter().enumerate() {
            if w != 0.0 {
                push(self.tap(i, sy + t), cy.iter().map(|c| c * (w / g.hy())).collect());
            }
        }
        push(self.tap(i, j), self.q.node(k).to_vec());
        out
    }

    fn assemble_rows(&self) -> Vec<Vec<(usize, Complex64)>> {
        let g = self.grid;
        let n = self.n_sys;
        let mut rows = vec![Vec::new(); self.unknowns()];
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                let base = self.unknown_index(i, j);
                for (tap, block) in self.row_blocks(i, j) {
                    if let Tap::Unknown(col) = tap {
                        for r in 0..n {
                            for c in 0..n {
                                let v = block[r * n + c];
                                if v != Complex64::new(0.0, 0.0) {
                                    rows[base + r].push((col + c, v));
                                }
                            }
                        }
                    }
                }
            }
        }
        for row in &mut rows {
            row.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, Complex64)> = Vec::with_capacity(row.len());
            for &(c, v) in row.iter() {
                match merged.last_mut() {
                    Some(last) if last.0 == c => last.1 += v,
                    _ => merged.push((c, v)),
                }
            }
            *row = merged;
        }
        rows
    }

    /// Right-hand side of the interior system for boundary data and source.
    fn load_vector(&self, boundary: &VectorField, rhs: Option<&VectorField>) -> Vec<Complex64> {
        let g = self.grid;
        let n = self.n_sys;
        let mut b = vec![Complex64::new(0.0, 0.0); self.unknowns()];
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                let base = self.unknown_index(i, j);
                if let Some(f) = rhs {
                    let k = g.index(i, j);
                    b[base..base + n].copy_from_slice(&f.node(k)[..n]);
                }
                for (tap, block) in self.row_blocks(i, j) {
                    if let Tap::Boundary(node) = tap {
                        let gv = boundary.node(node);
                        for r in 0..n {
                            for c in 0..n {
                                b[base + r] -= block[r * n + c] * gv[c];
                            }
                        }
                    }
                }
            }
        }
        b
    }

    fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * x[c]).sum())
            .collect()
    }

    fn lu_solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let rhs = Mat::<Complex64>::from_fn(b.len(), 1, |r, _| b[r]);
        let x = self.lu.solve(&rhs);
        (0..b.len()).map(|r| x[(r, 0)]).collect()
    }

    fn estimate_condition(&self) -> f64 {
        let n = self.unknowns();
        let mut col_sums = vec![0.0; n];
        for row in &self.rows {
            for &(c, v) in row {
                col_sums[c] += v.norm();
            }
        }
        let norm1 = col_sums.into_iter().fold(0.0, f64::max);
        let mut rng = ChaCha8Rng::seed_from_u64(0x0c0d);
        let mut best: f64 = 0.0;
        for _ in 0..2 {
            let x: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let y = self.lu_solve(&x);
            let ny: f64 = y.iter().map(|v| v.norm()).sum();
            let nx: f64 = x.iter().map(|v| v.norm()).sum();
            if !ny.is_finite() {
                return f64::INFINITY;
            }
            best = best.max(ny / nx);
        }
        norm1 * best
    }

    /// Solve `L u = rhs` in the interior with `u = boundary` on every boundary node.
    pub fn solve(&self, boundary: &VectorField, rhs: Option<&VectorField>) -> Result<VectorField> {
        if boundary.grid() != &self.grid || boundary.n_sys() != self.n_sys {
            return Err(LabError::ShapeMismatch("boundary data does not match the solver".into()));
        }
        if let Some(f) = rhs {
            if f.grid() != &self.grid || f.n_sys() != self.n_sys {
                return Err(LabError::ShapeMismatch("source does not match the solver".into()));
            }
            if !f.is_finite() {
                return Err(LabError::NonFinite("source"));
            }
        }
        if !boundary.is_finite() {
            return Err(LabError::NonFinite("boundary data"));
        }
        let b = self.load_vector(boundary, rhs);
        let bn = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let mut x = self.lu_solve(&b);
        let mut rel = 0.0;
        for _ in 0..3 {
            let r: Vec<Complex64> = self.matvec(&x).iter().zip(&b).map(|(a, bb)| bb - a).collect();
            let rn = r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            rel = if bn == 0.0 { rn } else { rn / bn };
            if rel <= RESIDUAL_TOL {
                break;
            }
            let dx = self.lu_solve(&r);
            for (xi, di) in x.iter_mut().zip(dx) {
                *xi += di;
            }
        }
        if rel > RESIDUAL_TOL {
            return Err(LabError::NotConverged {
                method: "sparse LU with refinement",
                iterations: 3,
                residual: rel,
            });
        }
        let g = self.grid;
        let n = self.n_sys;
        let mut data = boundary.data().to_vec();
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                let base = self.unknown_index(i, j);
                let k = g.index(i, j);
                data[k * n..(k + 1) * n].copy_from_slice(&x[base..base + n]);
            }
        }
        VectorField::new(g, n, data)
    }
}

fn placeholder_lu() -> Result<faer::sparse::linalg::solvers::Lu<usize, Complex64>> {
    let one = [Triplet::new(0usize, 0usize, Complex64::new(1.0, 0.0))];
    SparseColMat::<usize, Complex64>::try_new_from_triplets(1, 1, &one)
        .map_err(|e| LabError::InvalidGrid(format!("{e:?}")))?
        .sp_lu()
        .map_err(|_| LabError::Singular { condition: f64::INFINITY })
}

/// One-shot solve; only the boundary samples of `boundary` are used.
pub fn solve_dirichlet(coefs: &CoefficientTriple, boundary: &VectorField, rhs: Option<&VectorField>) -> Result<VectorField> {
    ForwardSolver::new(coefs)?.solve(boundary, rhs)
}

/// Outward normal derivative at the nodes of `label`, second order one-sided.
/// Corner nodes use the bisecting normal.
pub fn neumann_trace(u: &VectorField, part: &BoundaryPartition, label: Label) -> Result<BoundaryTrace> {
    let mut tr = trace_boundary(u, part, label)?;
    let g = *part.grid();
    let n = u.n_sys();
    let labeled: Vec<_> = part.nodes_with(label).copied().collect();
    for (q, bn) in labeled.iter().enumerate() {
        for c in 0..n {
            let mut d = Complex64::new(0.0, 0.0);
            if bn.normal[0] != 0.0 {
                let (s, w) = d1_stencil(bn.i, g.nx);
                let v: Complex64 = w.iter().enumerate().map(|(t, wt)| u.at(s + t, bn.j, c) * *wt).sum();
                d += v * (bn.normal[0] / g.hx());
            }
            if bn.normal[1] != 0.0 {
                let (s, w) = d1_stencil(bn.j, g.ny);
                let v: Complex64 = w.iter().enumerate().map(|(t, wt)| u.at(bn.i, s + t, c) * *wt).sum();
                d += v * (bn.normal[1] / g.hy());
            }
            tr.values[q * n + c] = d;
        }
    }
    Ok(tr)
}

/// Γ̃-restricted Dirichlet-to-Neumann samples for a fixed Dirichlet basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialCauchyData {
    pub partition: GridSpec,
    pub basis_id: String,
    pub entries: Vec<CauchyEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyEntry {
    pub dirichlet: BoundaryTrace,
    pub neumann: BoundaryTrace,
}

/// Piecewise-linear hats on the Γ̃ edges: `m` hats spread over the Γ̃ arcs
/// (earlier arcs take the remainder), each centered at `(q+1)/(k+1)` of its arc
/// with half-width `1/(k+1)`, so every hat vanishes at the arc ends.
pub fn hat_basis(part: &BoundaryPartition, m: usize) -> Vec<Vec<f64>> {
    let g = *part.grid();
    let arcs: Vec<_> = part.arcs().iter().filter(|a| a.label == Label::GammaTilde).collect();
    if arcs.is_empty() || m == 0 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(m);
    for (a, arc) in arcs.iter().enumerate() {
        let k = m / arcs.len() + usize::from(a < m % arcs.len());
        for q in 0..k {
            let center = (q + 1) as f64 / (k + 1) as f64;
            let width = 1.0 / (k + 1) as f64;
            let mut prof = vec![0.0; g.len()];
            for bn in part.nodes().iter().filter(|bn| bn.edge == arc.edge && bn.label == Label::GammaTilde) {
                prof[bn.node] = (1.0 - (bn.t - center).abs() / width).max(0.0);
            }
            out.push(prof);
        }
    }
    out
}

pub fn basis_id(part: &BoundaryPartition, m: usize, n_sys: usize) -> String {
    let g = part.grid();
    format!("hat:m={m}:n_sys={n_sys}:grid={}x{}", g.nx, g.ny)
}

/// Partial Cauchy data from `m` hats per component: entry `q·N + r` is driven by
/// hat `q` in component `r`.
pub fn cauchy_data(coefs: &CoefficientTriple, part: &BoundaryPartition, m: usize) -> Result<PartialCauchyData> {
    if coefs.grid() != part.grid() {
        return Err(LabError::ShapeMismatch("coefficients and partition use different grids".into()));
    }
    let n = coefs.n_sys();
    let id = basis_id(part, m, n);
    let spec = GridSpec::from_parts(part);
    if m == 0 {
        return Ok(PartialCauchyData {
            partition: spec,
            basis_id: id,
            entries: Vec::new(),
        });
    }
    let solver = ForwardSolver::new(coefs)?;
    let g = *part.grid();
    let hats = hat_basis(part, m);
    let mut entries = Vec::with_capacity(hats.len() * n);
    for (q, hat) in hats.iter().enumerate() {
        for r in 0..n {
            let index = q * n + r;
            let mut data = vec![Complex64::new(0.0, 0.0); g.len() * n];
            for (k, h) in hat.iter().enumerate() {
                data[k * n + r] = Complex64::new(*h, 0.0);
            }
            let bdry = VectorField::new(g, n, data)?;
            let u = solver.solve(&bdry, None).map_err(|e| LabError::BasisElement {
                index,
                source: Box::new(e),
            })?;
            entries.push(CauchyEntry {
                dirichlet: trace_boundary(&u, part, Label::GammaTilde)?,
                neumann: neumann_trace(&u, part, Label::GammaTilde)?,
            });
        }
    }
    Ok(PartialCauchyData {
        partition: spec,
        basis_id: id,
        entries,
    })
}

/// Max over entries of `‖N1 - N2‖_{L2(Γ̃)} / ‖D‖_{L2(Γ̃)}`.
pub fn cauchy_distance(c1: &PartialCauchyData, c2: &PartialCauchyData) -> Result<f64> {
    if c1.partition != c2.partition {
        return Err(LabError::CauchyDataMismatch("different partitions".into()));
    }
    if c1.basis_id != c2.basis_id || c1.entries.len() != c2.entries.len() {
        return Err(LabError::CauchyDataMismatch(format!(
            "bases differ: {} vs {}",
            c1.basis_id, c2.basis_id
        )));
    }
    let mut best: f64 = 0.0;
    for (e1, e2) in c1.entries.iter().zip(&c2.entries) {
        if e1.dirichlet != e2.dirichlet {
            return Err(LabError::CauchyDataMismatch("Dirichlet traces differ".into()));
        }
        let d = e1.dirichlet.l2_norm();
        let diff = e1.neumann.sub(&e2.neumann)?.l2_norm();
        best = best.max(if d == 0.0 { diff } else { diff / d });
    }
    Ok(best)
}
