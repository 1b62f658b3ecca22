//! Grids, boundary geometry, field containers and Wirtinger finite differences.

mod boundary;
mod cutoff;
mod diff;
mod grid;
mod values;

pub use boundary::{trace_boundary, Arc, BoundaryNode, BoundaryPartition, BoundaryTrace, Edge, GridSpec, Label};
pub use cutoff::{smooth_step, BoxRegion, CutoffFunction};
pub use diff::{dx, dy, laplacian, wirtinger_dz, wirtinger_dzbar};
pub(crate) use diff::{d1_stencil, d2_stencil};
pub use grid::Grid2D;
pub use values::{GridField, MatrixField, ScalarField, VectorField};
