use serde::{Deserialize, Serialize};

use super::Grid2D;
use crate::error::{LabError, Result};

/// Axis-aligned box `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl BoxRegion {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    fn inside(&self, other: &BoxRegion) -> bool {
        self.x0 >= other.x0 && self.x1 <= other.x1 && self.y0 >= other.y0 && self.y1 <= other.y1
    }

    fn is_proper(&self) -> bool {
        self.x0 < self.x1 && self.y0 < self.y1
    }
}

/// C-infinity transition from 0 (t <= 0) to 1 (t >= 1).
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Real cutoff `e` with `0 <= e <= 1`, vanishing identically outside `support_box`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffFunction {
    grid: Grid2D,
    values: Vec<f64>,
    support_box: BoxRegion,
}

impl CutoffFunction {
    /// `e == 1` on the whole grid.
    pub fn ones(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![1.0; grid.len()],
            support_box: BoxRegion::new(grid.x_min, grid.x_max, grid.y_min, grid.y_max),
        }
    }

    /// `e == 0`; the support box degenerates to the lower-left corner.
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            support_box: BoxRegion::new(grid.x_min, grid.x_min, grid.y_min, grid.y_min),
        }
    }

    /// Tensor-product cutoff: exactly 1 on `plateau`, exactly 0 outside `support`,
    /// smooth in between.
    pub fn smooth_box(grid: Grid2D, plateau: BoxRegion, support: BoxRegion) -> Result<Self> {
        if !plateau.is_proper() || !support.is_proper() || !plateau.inside(&support) {
            return Err(LabError::InvalidParameter(format!(
                "cutoff plateau {plateau:?} must be a proper box inside the support {support:?}"
            )));
        }
        let ramp = |v: f64, lo_out: f64, lo_in: f64, hi_in: f64, hi_out: f64| -> f64 {
            if v <= lo_out || v >= hi_out {
                return 0.0;
            }
            let up = if lo_in > lo_out { smooth_step((v - lo_out) / (lo_in - lo_out)) } else { 1.0 };
            let down = if hi_out > hi_in { smooth_step((hi_out - v) / (hi_out - hi_in)) } else { 1.0 };
            up * down
        };
        let values = (0..grid.len())
            .map(|k| {
                let z = grid.z_at(k);
                ramp(z.re, support.x0, plateau.x0, plateau.x1, support.x1)
                    * ramp(z.im, support.y0, plateau.y0, plateau.y1, support.y1)
            })
            .collect();
        Ok(Self {
            grid,
            values,
            support_box: support,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support_box(&self) -> BoxRegion {
        self.support_box
    }

    /// `1 - e`.
    pub fn complement(&self) -> Vec<f64> {
        self.values.iter().map(|v| 1.0 - v).collect()
    }

    pub fn is_identically_one(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0)
    }

    /// Area of the support box.
    pub fn support_area(&self) -> f64 {
        (self.support_box.x1 - self.support_box.x0) * (self.support_box.y1 - self.support_box.y0)
    }
}
