//! Desk-scale laboratory for the partial Cauchy data problem of planar elliptic
//! N-systems `Δu + 2A ∂_z u + 2B ∂_zbar u + Qu = 0`.

pub mod cauchy;
pub mod cgo;
pub mod error;
pub mod field;
pub mod fit;
pub mod fixtures;
pub mod forward;
pub mod harness;
pub mod linalg;
pub mod weight;

pub use error::{LabError, Result};
pub use num_complex::Complex64;
