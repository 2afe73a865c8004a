//! Uniform tensor-product grids in one and two dimensions.
//!
//! Nodes are addressed as `ix + nx * iy` (x fastest). In 1D the y extent is a
//! single layer (`n[1] == 1`) so the same indexing works everywhere. Periodic
//! topology identifies node `n_a` with node 0, so the domain length along axis
//! `a` is `n[a] * dx[a]`.

use crate::error::CoreError;
use serde::{Deserialize, Serialize};

/// Boundary handling for difference stencils and the wave solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Wrap-around topology; stencils index modulo n.
    Periodic,
    /// Displacement pinned to zero on the boundary layer.
    FixedDisplacement,
    /// Zero traction on the boundary; interior stencils fall back to one-sided
    /// differences there.
    TractionFree,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub n: [usize; 2],
    pub dx: [f64; 2],
    pub bc: Boundary,
}

impl Grid {
    pub fn line(n: usize, dx: f64, bc: Boundary) -> Result<Self, CoreError> {
        let g = Grid { dim: 1, n: [n, 1], dx: [dx, dx], bc };
        g.validate()?;
        Ok(g)
    }

    pub fn rect(n: [usize; 2], dx: [f64; 2], bc: Boundary) -> Result<Self, CoreError> {
        let g = Grid { dim: 2, n, dx, bc };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<(), CoreError> {
        for a in 0..self.dim {
            if self.n[a] < 8 {
                return Err(CoreError::invalid(format!(
                    "grid needs at least 8 nodes per axis, got {} on axis {a}",
                    self.n[a]
                )));
            }
            if !(self.dx[a] > 0.0) || !self.dx[a].is_finite() {
                return Err(CoreError::invalid(format!(
                    "grid spacing must be positive and finite, got {} on axis {a}",
                    self.dx[a]
                )));
            }
        }
        if self.dim == 1 && self.n[1] != 1 {
            return Err(CoreError::invalid("1D grid must have n[1] == 1"));
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.n[0] * self.n[1]
    }

    #[inline]
    pub fn node(&self, ix: usize, iy: usize) -> usize {
        ix + self.n[0] * iy
    }

    #[inline]
    pub fn coords(&self, node: usize) -> [f64; 2] {
        let ix = node % self.n[0];
        let iy = node / self.n[0];
        [ix as f64 * self.dx[0], iy as f64 * self.dx[1]]
    }

    /// Domain extent along `axis`; for periodic grids this is the period.
    pub fn length(&self, axis: usize) -> f64 {
        self.n[axis] as f64 * self.dx[axis]
    }

    /// Volume (area, length) of one cell, the quadrature weight per node.
    pub fn cell_volume(&self) -> f64 {
        if self.dim == 1 {
            self.dx[0]
        } else {
            self.dx[0] * self.dx[1]
        }
    }

    pub fn is_periodic(&self) -> bool {
        self.bc == Boundary::Periodic
    }
}
