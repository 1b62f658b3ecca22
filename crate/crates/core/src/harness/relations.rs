//! Residuals of the two coefficient relations satisfied by any pair of
//! triples with equal partial Cauchy data, and their case reductions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::field::{wirtinger_dz, wirtinger_dzbar, BoundaryPartition, GridField, Label, MatrixField};
use crate::forward::CoefficientTriple;

const TWO: Complex64 = Complex64 { re: 2.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldNorms {
    /// Trapezoid L2(Ω) norm, Frobenius across entries.
    pub l2: f64,
    pub max: f64,
}

impl FieldNorms {
    pub fn of<F: GridField>(f: &F) -> Self {
        Self {
            l2: f.l2_norm(),
            max: f.max_abs(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelationResidual {
    /// `2∂_z(A1-A2) + B2(A1-A2) + (B1-B2)A1 - (Q1-Q2)`.
    pub r_a1: MatrixField,
    /// `2∂_zbar(B1-B2) + A2(B1-B2) + (A1-A2)B1 - (Q1-Q2)`.
    pub r_a2: MatrixField,
    /// Max over `Γ~` nodes of `|A1-A2| + |B1-B2|`.
    pub boundary_gap: f64,
    pub a1: FieldNorms,
    pub a2: FieldNorms,
}

fn check_pair(t1: &CoefficientTriple, t2: &CoefficientTriple) -> Result<()> {
    if t1.grid() != t2.grid() || t1.n_sys() != t2.n_sys() {
        return Err(LabError::ShapeMismatch("triples live on different grids or sizes".into()));
    }
    Ok(())
}

pub fn check_relations(t1: &CoefficientTriple, t2: &CoefficientTriple, part: &BoundaryPartition) -> Result<RelationResidual> {
    check_pair(t1, t2)?;
    if part.grid() != t1.grid() {
        return Err(LabError::ShapeMismatch("partition lives on another grid".into()));
    }
    let da = t1.a().sub(t2.a());
    let db = t1.b().sub(t2.b());
    let dq = t1.q().sub(t2.q());
    let r_a1 = wirtinger_dz(&da)
        .scale(TWO)
        .add(&t2.b().matmul(&da))
        .add(&db.matmul(t1.a()))
        .sub(&dq);
    let r_a2 = wirtinger_dzbar(&db)
        .scale(TWO)
        .add(&t2.a().matmul(&db))
        .add(&da.matmul(t1.b()))
        .sub(&dq);
    let (fa, fb) = (da.frobenius(), db.frobenius());
    let boundary_gap = part
        .nodes_with(Label::GammaTilde)
        .map(|n| fa.values()[n.node].re + fb.values()[n.node].re)
        .fold(0.0, f64::max);
    Ok(RelationResidual {
        a1: FieldNorms::of(&r_a1),
        a2: FieldNorms::of(&r_a2),
        r_a1,
        r_a2,
        boundary_gap,
    })
}

/// Which coefficient the two triples are known to share.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorollaryCase {
    QKnown,
    BKnown,
    AKnown,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedResidual {
    pub name: String,
    pub field: MatrixField,
    pub norms: FieldNorms,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub case: CorollaryCase,
    pub residuals: Vec<NamedResidual>,
}

impl CorollaryReport {
    pub fn max_l2(&self) -> f64 {
        self.residuals.iter().map(|r| r.norms.l2).fold(0.0, f64::max)
    }
}

fn named(name: &str, field: MatrixField) -> NamedResidual {
    NamedResidual {
        name: name.to_string(),
        norms: FieldNorms::of(&field),
        field,
    }
}

/// Relative tolerance for "the shared coefficient is equal".
const SHARED_TOL: f64 = 1e-12;

fn require_equal(x: &MatrixField, y: &MatrixField, what: &str) -> Result<()> {
    let gap = x.sub(y).max_abs();
    let scale = 1.0 + x.max_abs().max(y.max_abs());
    if gap > SHARED_TOL * scale {
        return Err(LabError::Precondition(format!(
            "{what}_1 and {what}_2 differ by {gap:.3e}; the case needs them equal"
        )));
    }
    Ok(())
}

/// Evaluate the case-reduced forms of the two relations.
///
/// * `QKnown`: both relations lose their zero-order difference, leaving
///   `2∂_z(A1-A2) + B2(A1-A2) + (B1-B2)A1` and its mirror.
/// * `BKnown`: the second relation becomes `(A1-A2)B1 - (Q1-Q2)`; substituting it into
///   the first leaves `2∂_z(A1-A2) + B2(A1-A2) - (A1-A2)B1`.
/// * `AKnown`: the mirror image, `(B1-B2)A1 - (Q1-Q2)` and
///   `2∂_zbar(B1-B2) + A2(B1-B2) - (B1-B2)A1`.
pub fn corollary_pipeline(case: CorollaryCase, t1: &CoefficientTriple, t2: &CoefficientTriple) -> Result<CorollaryReport> {
    check_pair(t1, t2)?;
    let da = t1.a().sub(t2.a());
    let db = t1.b().sub(t2.b());
    let dq = t1.q().sub(t2.q());
    let residuals = match case {
        CorollaryCase::QKnown => {
            require_equal(t1.q(), t2.q(), "Q")?;
            vec![
                named(
                    "first_relation_q_known",
                    wirtinger_dz(&da).scale(TWO).add(&t2.b().matmul(&da)).add(&db.matmul(t1.a())),
                ),
                named(
                    "second_relation_q_known",
                    wirtinger_dzbar(&db).scale(TWO).add(&t2.a().matmul(&db)).add(&da.matmul(t1.b())),
                ),
            ]
        }
        CorollaryCase::BKnown => {
            require_equal(t1.b(), t2.b(), "B")?;
            vec![
                named("substitution", da.matmul(t1.b()).sub(&dq)),
                named(
                    "reduced_first_relation",
                    wirtinger_dz(&da).scale(TWO).add(&t2.b().matmul(&da)).sub(&da.matmul(t1.b())),
                ),
            ]
        }
        CorollaryCase::AKnown => {
            require_equal(t1.a(), t2.a(), "A")?;
            vec![
                named("substitution", db.matmul(t1.a()).sub(&dq)),
                named(
                    "reduced_second_relation",
                    wirtinger_dzbar(&db).scale(TWO).add(&t2.a().matmul(&db)).sub(&db.matmul(t1.a())),
                ),
            ]
        }
    };
    Ok(CorollaryReport { case, residuals })
}
