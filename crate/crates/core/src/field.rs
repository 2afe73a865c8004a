//! Dense nodal fields of tensor rank 0 to 4.
//!
//! Storage is component-outer: `data[c * nnodes + node]`, so each tensor
//! component is a contiguous slice over the grid. Component indices pack
//! row-major, e.g. a rank-2 component (i, j) lives at `c = i * dim + j`.
//! All ranks share this one container; the rank only fixes how many
//! components exist (`dim^rank`).

use crate::error::CoreError;
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub rank: usize,
    pub dim: usize,
    pub nnodes: usize,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Grid, rank: usize) -> Self {
        assert!(rank <= 4, "tensor rank above 4 is not supported");
        let ncomp = grid.dim.pow(rank as u32);
        Field {
            rank,
            dim: grid.dim,
            nnodes: grid.num_nodes(),
            data: vec![0.0; ncomp * grid.num_nodes()],
        }
    }

    pub fn ncomp(&self) -> usize {
        self.dim.pow(self.rank as u32)
    }

    #[inline]
    pub fn idx(&self, comp: usize, node: usize) -> usize {
        comp * self.nnodes + node
    }

    #[inline]
    pub fn get(&self, comp: usize, node: usize) -> f64 {
        self.data[comp * self.nnodes + node]
    }

    #[inline]
    pub fn set(&mut self, comp: usize, node: usize, v: f64) {
        self.data[comp * self.nnodes + node] = v;
    }

    /// Scalar value; rank 0 only.
    #[inline]
    pub fn s(&self, node: usize) -> f64 {
        debug_assert_eq!(self.rank, 0);
        self.data[node]
    }

    #[inline]
    pub fn v(&self, node: usize, i: usize) -> f64 {
        debug_assert_eq!(self.rank, 1);
        self.data[i * self.nnodes + node]
    }

    #[inline]
    pub fn m(&self, node: usize, i: usize, j: usize) -> f64 {
        debug_assert_eq!(self.rank, 2);
        self.data[(i * self.dim + j) * self.nnodes + node]
    }

    #[inline]
    pub fn t3(&self, node: usize, i: usize, j: usize, k: usize) -> f64 {
        debug_assert_eq!(self.rank, 3);
        self.data[((i * self.dim + j) * self.dim + k) * self.nnodes + node]
    }

    #[inline]
    pub fn t4(&self, node: usize, i: usize, j: usize, k: usize, l: usize) -> f64 {
        debug_assert_eq!(self.rank, 4);
        self.data[(((i * self.dim + j) * self.dim + k) * self.dim + l) * self.nnodes + node]
    }

    #[inline]
    pub fn set_v(&mut self, node: usize, i: usize, v: f64) {
        debug_assert_eq!(self.rank, 1);
        self.data[i * self.nnodes + node] = v;
    }

    #[inline]
    pub fn set_m(&mut self, node: usize, i: usize, j: usize, v: f64) {
        debug_assert_eq!(self.rank, 2);
        self.data[(i * self.dim + j) * self.nnodes + node] = v;
    }

    pub fn comp_slice(&self, comp: usize) -> &[f64] {
        &self.data[comp * self.nnodes..(comp + 1) * self.nnodes]
    }

    pub fn comp_slice_mut(&mut self, comp: usize) -> &mut [f64] {
        &mut self.data[comp * self.nnodes..(comp + 1) * self.nnodes]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    /// self += a * other, componentwise.
    pub fn axpy(&mut self, a: f64, other: &Field) -> Result<(), CoreError> {
        if self.rank != other.rank || self.dim != other.dim || self.nnodes != other.nnodes {
            return Err(CoreError::invalid("axpy on fields of different shape"));
        }
        for (x, y) in self.data.iter_mut().zip(other.data.iter()) {
            *x += a * y;
        }
        Ok(())
    }

    pub fn scale(&mut self, a: f64) {
        for x in self.data.iter_mut() {
            *x *= a;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    /// Builds a scalar field by evaluating `f` at every node coordinate.
    pub fn from_fn_scalar(grid: &Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut out = Field::zeros(grid, 0);
        for node in 0..grid.num_nodes() {
            let x = grid.coords(node);
            out.data[node] = f(x);
        }
        out
    }

    /// Builds a vector field; `f` returns one component per call.
    pub fn from_fn_vector(grid: &Grid, f: impl Fn([f64; 2], usize) -> f64) -> Self {
        let mut out = Field::zeros(grid, 1);
        for i in 0..grid.dim {
            for node in 0..grid.num_nodes() {
                let x = grid.coords(node);
                out.data[i * out.nnodes + node] = f(x, i);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    #[test]
    fn component_slices_are_contiguous() {
        let g = Grid::rect([8, 8], [1.0, 1.0], Boundary::Periodic).unwrap();
        let mut f = Field::zeros(&g, 2);
        f.set_m(5, 1, 0, 3.5);
        // component (1,0) packs at c = 1*2 + 0 = 2
        assert_eq!(f.comp_slice(2)[5], 3.5);
        assert_eq!(f.m(5, 1, 0), 3.5);
        assert_eq!(f.ncomp(), 4);
    }

    #[test]
    fn rank_counts_components_by_dimension() {
        let g1 = Grid::line(8, 1.0, Boundary::Periodic).unwrap();
        let g2 = Grid::rect([8, 8], [1.0, 1.0], Boundary::Periodic).unwrap();
        assert_eq!(Field::zeros(&g1, 4).ncomp(), 1);
        assert_eq!(Field::zeros(&g2, 4).ncomp(), 16);
    }

    #[test]
    fn axpy_rejects_shape_mismatch() {
        let g = Grid::line(8, 1.0, Boundary::Periodic).unwrap();
        let mut a = Field::zeros(&g, 1);
        let b = Field::zeros(&g, 2);
        assert!(a.axpy(1.0, &b).is_err());
    }
}
