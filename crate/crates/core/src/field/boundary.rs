use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

use super::{Grid2D, GridField, VectorField};
use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Bottom,
    Right,
    Top,
    Left,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Bottom, Edge::Right, Edge::Top, Edge::Left];

    pub fn normal(self) -> [f64; 2] {
        match self {
            Edge::Bottom => [0.0, -1.0],
            Edge::Right => [1.0, 0.0],
            Edge::Top => [0.0, 1.0],
            Edge::Left => [-1.0, 0.0],
        }
    }

    fn prev(self) -> Edge {
        match self {
            Edge::Bottom => Edge::Left,
            Edge::Right => Edge::Bottom,
            Edge::Top => Edge::Right,
            Edge::Left => Edge::Top,
        }
    }

    /// Nodes of this edge in counter-clockwise order, starting at (and owning)
    /// its first corner and stopping before the next edge's corner.
    fn nodes(self, g: &Grid2D) -> Vec<(usize, usize)> {
        let (nx, ny) = (g.nx, g.ny);
        match self {
            Edge::Bottom => (0..nx - 1).map(|i| (i, 0)).collect(),
            Edge::Right => (0..ny - 1).map(|j| (nx - 1, j)).collect(),
            Edge::Top => (1..nx).rev().map(|i| (i, ny - 1)).collect(),
            Edge::Left => (1..ny).rev().map(|j| (0, j)).collect(),
        }
    }

    fn spacing(self, g: &Grid2D) -> f64 {
        match self {
            Edge::Bottom | Edge::Top => g.hx(),
            Edge::Left | Edge::Right => g.hy(),
        }
    }
}

/// Boundary label: the Dirichlet-zero part `Gamma_0` or the observed part `Gamma~`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "gamma0")]
    Gamma0,
    #[serde(rename = "gamma_tilde")]
    GammaTilde,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Gamma0 => write!(f, "Gamma_0"),
            Label::GammaTilde => write!(f, "Gamma~"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub edge: Edge,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryNode {
    pub node: usize,
    pub i: usize,
    pub j: usize,
    pub edge: Edge,
    pub is_corner: bool,
    pub label: Label,
    pub normal: [f64; 2],
    pub tangent: [f64; 2],
    /// Normalized position along `edge` in counter-clockwise direction, in `[0, 1)`.
    pub t: f64,
    /// Boundary quadrature weight (arc length represented by the node).
    pub weight: f64,
}

/// Split of the rectangle boundary into labeled edges.
///
/// Corner nodes belong to `Gamma~` only when both adjacent edges do; otherwise
/// they are part of `Gamma_0`. A corner carries half a cell of each adjacent
/// edge: its weight times its normal equals `(h_a n_a + h_b n_b) / 2`, so
/// boundary flux sums agree with the edge-wise trapezoid rule.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPartition {
    grid: Grid2D,
    arcs: Vec<Arc>,
    nodes: Vec<BoundaryNode>,
}

impl BoundaryPartition {
    pub fn new(grid: Grid2D, arcs: Vec<Arc>) -> Result<Self> {
        for e in Edge::ALL {
            let count = arcs.iter().filter(|a| a.edge == e).count();
            if count != 1 {
                return Err(LabError::InvalidPartition(format!(
                    "edge {e:?} appears {count} times; every edge needs exactly one label"
                )));
            }
        }
        let label_of = |e: Edge| arcs.iter().find(|a| a.edge == e).map(|a| a.label).unwrap();
        let mut nodes = Vec::with_capacity(2 * (grid.nx + grid.ny));
        for arc in &arcs {
            let h = arc.edge.spacing(&grid);
            let pts = arc.edge.nodes(&grid);
            let len = h * pts.len() as f64;
            for (q, &(i, j)) in pts.iter().enumerate() {
                let is_corner = q == 0;
                let (label, normal, weight) = if is_corner {
                    let prev = arc.edge.prev();
                    let both = label_of(prev) == Label::GammaTilde && arc.label == Label::GammaTilde;
                    // half of each adjacent edge cell, as a vector area element
                    let (a, b) = (arc.edge.normal(), prev.normal());
                    let hp = prev.spacing(&grid);
                    let v = [h * a[0] + hp * b[0], h * a[1] + hp * b[1]];
                    let len = v[0].hypot(v[1]);
                    let label = if both { Label::GammaTilde } else { Label::Gamma0 };
                    (label, [v[0] / len, v[1] / len], 0.5 * len)
                } else {
                    (arc.label, arc.edge.normal(), h)
                };
                nodes.push(BoundaryNode {
                    node: grid.index(i, j),
                    i,
                    j,
                    edge: arc.edge,
                    is_corner,
                    label,
                    normal,
                    tangent: [-normal[1], normal[0]],
                    t: q as f64 * h / len,
                    weight,
                });
            }
        }
        Ok(Self { grid, arcs, nodes })
    }

    /// Square with `Gamma~` = bottom and top edges and `Gamma_0` = the two sides.
    pub fn top_bottom(grid: Grid2D) -> Self {
        Self::new(
            grid,
            vec![
                Arc { edge: Edge::Bottom, label: Label::GammaTilde },
                Arc { edge: Edge::Right, label: Label::Gamma0 },
                Arc { edge: Edge::Top, label: Label::GammaTilde },
                Arc { edge: Edge::Left, label: Label::Gamma0 },
            ],
        )
        .expect("static partition is valid")
    }

    /// Every edge labeled the same.
    pub fn uniform(grid: Grid2D, label: Label) -> Self {
        Self::new(grid, Edge::ALL.iter().map(|&edge| Arc { edge, label }).collect())
            .expect("static partition is valid")
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn nodes(&self) -> &[BoundaryNode] {
        &self.nodes
    }

    pub fn nodes_with(&self, label: Label) -> impl Iterator<Item = &BoundaryNode> {
        self.nodes.iter().filter(move |n| n.label == label)
    }

    pub fn edge_label(&self, edge: Edge) -> Label {
        self.arcs.iter().find(|a| a.edge == edge).map(|a| a.label).unwrap()
    }

    /// Label per grid node (`None` for interior nodes).
    pub fn node_labels(&self) -> Vec<Option<Label>> {
        let mut out = vec![None; self.grid.len()];
        for n in &self.nodes {
            out[n.node] = Some(n.label);
        }
        out
    }

    /// Distance from `z` to the closest point of any `Gamma~` edge.
    pub fn distance_to(&self, z: Complex64, label: Label) -> f64 {
        let g = &self.grid;
        let mut best = f64::INFINITY;
        for arc in self.arcs.iter().filter(|a| a.label == label) {
            let d = match arc.edge {
                Edge::Bottom => seg_dist(z.re, z.im, g.x_min, g.x_max, g.y_min, true),
                Edge::Top => seg_dist(z.re, z.im, g.x_min, g.x_max, g.y_max, true),
                Edge::Left => seg_dist(z.im, z.re, g.y_min, g.y_max, g.x_min, true),
                Edge::Right => seg_dist(z.im, z.re, g.y_min, g.y_max, g.x_max, true),
            };
            best = best.min(d);
        }
        best
    }
}

// distance from (along, across) to the segment {along in [a, b], across = c}
fn seg_dist(along: f64, across: f64, a: f64, b: f64, c: f64, _closed: bool) -> f64 {
    let da = if along < a {
        a - along
    } else if along > b {
        along - b
    } else {
        0.0
    };
    da.hypot(across - c)
}

/// Samples of a vector field at the nodes of one label, in arc order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTrace {
    pub label: Label,
    pub nodes: Vec<usize>,
    pub weights: Vec<f64>,
    pub n_sys: usize,
    pub values: Vec<Complex64>,
}

impl BoundaryTrace {
    /// Discrete L2 norm on the labeled boundary part.
    pub fn l2_norm(&self) -> f64 {
        let n = self.n_sys;
        self.weights
            .iter()
            .enumerate()
            .map(|(q, w)| w * self.values[q * n..(q + 1) * n].iter().map(|v| v.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn same_support(&self, other: &BoundaryTrace) -> bool {
        self.label == other.label && self.nodes == other.nodes && self.n_sys == other.n_sys
    }

    pub fn sub(&self, other: &BoundaryTrace) -> Result<BoundaryTrace> {
        if !self.same_support(other) {
            return Err(LabError::ShapeMismatch("traces sampled on different node sets".into()));
        }
        Ok(BoundaryTrace {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
            ..self.clone()
        })
    }
}

/// Restriction of `f` to the nodes carrying `label`.
pub fn trace_boundary(f: &VectorField, part: &BoundaryPartition, label: Label) -> Result<BoundaryTrace> {
    if f.grid() != part.grid() {
        return Err(LabError::ShapeMismatch("field and partition use different grids".into()));
    }
    let n = f.n_sys();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut values = Vec::new();
    for bn in part.nodes_with(label) {
        nodes.push(bn.node);
        weights.push(bn.weight);
        values.extend_from_slice(f.node(bn.node));
    }
    if nodes.is_empty() {
        return Err(LabError::EmptyLabel(label.to_string()));
    }
    Ok(BoundaryTrace {
        label,
        nodes,
        weights,
        n_sys: n,
        values,
    })
}

/// JSON form of a grid with its boundary split:
/// `{"corners": [[x_min, y_min], [x_max, y_max]], "nx": .., "ny": .., "arcs": [{"edge": .., "label": ..}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub corners: [[f64; 2]; 2],
    pub nx: usize,
    pub ny: usize,
    pub arcs: Vec<Arc>,
}

impl GridSpec {
    pub fn from_parts(part: &BoundaryPartition) -> Self {
        let g = part.grid();
        Self {
            corners: [[g.x_min, g.y_min], [g.x_max, g.y_max]],
            nx: g.nx,
            ny: g.ny,
            arcs: part.arcs().to_vec(),
        }
    }

    pub fn build(&self) -> Result<(Grid2D, BoundaryPartition)> {
        let [[x0, y0], [x1, y1]] = self.corners;
        let grid = Grid2D::new(x0, x1, y0, y1, self.nx, self.ny)?;
        let part = BoundaryPartition::new(grid, self.arcs.clone())?;
        Ok((grid, part))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;

    #[test]
    fn every_boundary_node_is_labeled_once() {
        let g = Grid2D::new(0.0, 2.0, 0.0, 1.0, 13, 9).unwrap();
        let p = BoundaryPartition::top_bottom(g);
        assert_eq!(p.nodes().len(), 2 * (g.nx - 1) + 2 * (g.ny - 1));
        let mut seen = vec![0; g.len()];
        for n in p.nodes() {
            seen[n.node] += 1;
            assert!(g.is_boundary(n.i, n.j));
            assert!(((n.normal[0].powi(2) + n.normal[1].powi(2)).sqrt() - 1.0).abs() < 1e-15);
        }
        for (k, &count) in seen.iter().enumerate() {
            let (i, j) = g.coords(k);
            assert_eq!(count, usize::from(g.is_boundary(i, j)));
        }
        // corners touch a side edge, so they belong to Gamma_0
        for n in p.nodes().iter().filter(|n| n.is_corner) {
            assert_eq!(n.label, Label::Gamma0);
        }
    }

    #[test]
    fn traces_follow_arc_order() {
        let g = Grid2D::unit_square(9).unwrap();
        let p = BoundaryPartition::top_bottom(g);
        let x2 = ScalarField::from_real_fn(g, |_, y| y).to_vector();
        let bottom_only = BoundaryPartition::new(
            g,
            vec![
                Arc { edge: Edge::Bottom, label: Label::GammaTilde },
                Arc { edge: Edge::Right, label: Label::Gamma0 },
                Arc { edge: Edge::Top, label: Label::Gamma0 },
                Arc { edge: Edge::Left, label: Label::Gamma0 },
            ],
        )
        .unwrap();
        let tr = trace_boundary(&x2, &bottom_only, Label::GammaTilde).unwrap();
        assert!(tr.values.iter().all(|v| v.norm() == 0.0));

        let x1 = ScalarField::from_real_fn(g, |x, _| x).to_vector();
        let top_only = BoundaryPartition::new(
            g,
            vec![
                Arc { edge: Edge::Bottom, label: Label::Gamma0 },
                Arc { edge: Edge::Right, label: Label::Gamma0 },
                Arc { edge: Edge::Top, label: Label::GammaTilde },
                Arc { edge: Edge::Left, label: Label::Gamma0 },
            ],
        )
        .unwrap();
        let tr = trace_boundary(&x1, &top_only, Label::GammaTilde).unwrap();
        let expect: Vec<f64> = (1..g.nx - 1).rev().map(|i| g.x(i)).collect();
        let got: Vec<f64> = tr.values.iter().map(|v| v.re).collect();
        assert_eq!(got, expect);
        assert!(trace_boundary(&x1, &p, Label::Gamma0).is_ok());
    }

    #[test]
    fn empty_label_is_an_error() {
        let g = Grid2D::unit_square(9).unwrap();
        let p = BoundaryPartition::uniform(g, Label::GammaTilde);
        let f = VectorField::zeros(g, 1);
        assert!(matches!(trace_boundary(&f, &p, Label::Gamma0), Err(LabError::EmptyLabel(_))));
        let t = trace_boundary(&f, &p, Label::GammaTilde).unwrap();
        assert_eq!(t.max_abs(), 0.0);
    }

    #[test]
    fn duplicate_edges_are_rejected() {
        let g = Grid2D::unit_square(9).unwrap();
        let arcs = vec![
            Arc { edge: Edge::Bottom, label: Label::GammaTilde },
            Arc { edge: Edge::Bottom, label: Label::Gamma0 },
            Arc { edge: Edge::Top, label: Label::GammaTilde },
            Arc { edge: Edge::Left, label: Label::Gamma0 },
        ];
        assert!(BoundaryPartition::new(g, arcs).is_err());
    }

    #[test]
    fn grid_spec_json_round_trip() {
        let g = Grid2D::new(0.0, 1.0, -1.0, 1.0, 9, 17).unwrap();
        let p = BoundaryPartition::top_bottom(g);
        let spec = GridSpec::from_parts(&p);
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"gamma_tilde\""));
        let back: GridSpec = serde_json::from_str(&text).unwrap();
        let (g2, p2) = back.build().unwrap();
        assert_eq!(g2, g);
        assert_eq!(p2, p);
    }
}
