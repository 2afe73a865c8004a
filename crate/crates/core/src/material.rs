//! Material coefficient fields: stiffness C_ijkl and (possibly anisotropic)
//! mass density rho_ij, with positivity validation and wave-speed estimates.

use crate::error::CoreError;
use crate::field::Field;
use crate::grid::Grid;
use nalgebra::DMatrix;

#[derive(Debug, Clone)]
pub struct MaterialModel {
    /// Stiffness, rank 4.
    pub c: Field,
    /// Density tensor, rank 2. Scalar densities populate rho * identity.
    pub rho: Field,
}

impl MaterialModel {
    /// Isotropic stiffness C_ijkl = lambda d_ij d_kl + mu (d_ik d_jl + d_il d_jk)
    /// with scalar density. In 1D this reduces to the single modulus
    /// lambda + 2 mu.
    pub fn isotropic(grid: &Grid, lambda: &Field, mu: &Field, rho: &Field) -> Self {
        let dim = grid.dim;
        let mut c = Field::zeros(grid, 4);
        let mut r = Field::zeros(grid, 2);
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        for node in 0..grid.num_nodes() {
            let la = lambda.s(node);
            let m = mu.s(node);
            for i in 0..dim {
                for j in 0..dim {
                    for k in 0..dim {
                        for l in 0..dim {
                            let v = la * d(i, j) * d(k, l) + m * (d(i, k) * d(j, l) + d(i, l) * d(j, k));
                            c.set(((i * dim + j) * dim + k) * dim + l, node, v);
                        }
                    }
                }
                r.set_m(node, i, i, rho.s(node));
            }
        }
        MaterialModel { c, rho: r }
    }

    /// 1D medium from a scalar modulus and scalar density.
    pub fn scalar_1d(grid: &Grid, modulus: &Field, rho: &Field) -> Result<Self, CoreError> {
        if grid.dim != 1 {
            return Err(CoreError::invalid("scalar_1d needs a 1D grid"));
        }
        let mut c = Field::zeros(grid, 4);
        let mut r = Field::zeros(grid, 2);
        for node in 0..grid.num_nodes() {
            c.set(0, node, modulus.s(node));
            r.set(0, node, rho.s(node));
        }
        Ok(MaterialModel { c, rho: r })
    }

    /// Homogeneous 1D medium from constant modulus and density.
    pub fn uniform_scalar_1d(grid: &Grid, modulus: f64, rho: f64) -> Result<Self, CoreError> {
        let c = constant(grid, modulus);
        let r = constant(grid, rho);
        Self::scalar_1d(grid, &c, &r)
    }

    pub fn uniform_isotropic(grid: &Grid, lambda: f64, mu: f64, rho: f64) -> Self {
        let la = constant(grid, lambda);
        let m = constant(grid, mu);
        let r = constant(grid, rho);
        Self::isotropic(grid, &la, &m, &r)
    }

    #[inline]
    pub fn c_at(&self, node: usize, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.c.t4(node, i, j, k, l)
    }

    #[inline]
    pub fn rho_at(&self, node: usize, i: usize, j: usize) -> f64 {
        self.rho.m(node, i, j)
    }

    /// sigma_ij = C_ijkl g_kl at one node; `g` is a displacement gradient.
    pub fn stress(&self, node: usize, g: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let dim = self.c.dim;
        let mut s = [[0.0; 2]; 2];
        for i in 0..dim {
            for j in 0..dim {
                let mut v = 0.0;
                for k in 0..dim {
                    for l in 0..dim {
                        v += self.c.t4(node, i, j, k, l) * g[k][l];
                    }
                }
                s[i][j] = v;
            }
        }
        s
    }

    /// Checks pointwise stability: the stiffness must be positive definite on
    /// symmetric strains (Mandel eigenvalues) and the density tensor symmetric
    /// positive definite.
    pub fn validate(&self) -> Result<(), CoreError> {
        let dim = self.c.dim;
        for node in 0..self.c.nnodes {
            if dim == 1 {
                if self.c.get(0, node) <= 0.0 {
                    return Err(CoreError::invalid(format!(
                        "stiffness must be positive, got {} at node {node}",
                        self.c.get(0, node)
                    )));
                }
                if self.rho.get(0, node) <= 0.0 {
                    return Err(CoreError::invalid(format!(
                        "density must be positive, got {} at node {node}",
                        self.rho.get(0, node)
                    )));
                }
                continue;
            }
            for i in 0..dim {
                for j in 0..dim {
                    for k in 0..dim {
                        for l in 0..dim {
                            let a = self.c.t4(node, i, j, k, l);
                            let b = self.c.t4(node, j, i, k, l);
                            let c2 = self.c.t4(node, i, j, l, k);
                            if (a - b).abs() > 1e-9 * (1.0 + a.abs())
                                || (a - c2).abs() > 1e-9 * (1.0 + a.abs())
                            {
                                return Err(CoreError::invalid(
                                    "stiffness lacks minor symmetry; cannot validate definiteness",
                                ));
                            }
                        }
                    }
                }
            }
            let s2 = std::f64::consts::SQRT_2;
            let c = |i, j, k, l| self.c.t4(node, i, j, k, l);
            let mandel = DMatrix::from_row_slice(
                3,
                3,
                &[
                    c(0, 0, 0, 0),
                    c(0, 0, 1, 1),
                    s2 * c(0, 0, 0, 1),
                    c(1, 1, 0, 0),
                    c(1, 1, 1, 1),
                    s2 * c(1, 1, 0, 1),
                    s2 * c(0, 1, 0, 0),
                    s2 * c(0, 1, 1, 1),
                    2.0 * c(0, 1, 0, 1),
                ],
            );
            let eig = mandel.symmetric_eigenvalues();
            if eig.iter().any(|&v| v <= 0.0) {
                return Err(CoreError::invalid(format!(
                    "stiffness is not positive definite at node {node} (Mandel eigenvalues {:?})",
                    eig.as_slice()
                )));
            }
            let r01 = self.rho.m(node, 0, 1);
            let r10 = self.rho.m(node, 1, 0);
            if (r01 - r10).abs() > 1e-9 * (1.0 + r01.abs()) {
                return Err(CoreError::invalid("density tensor must be symmetric"));
            }
            let (e1, e2) = sym2_eigen(self.rho.m(node, 0, 0), r01, self.rho.m(node, 1, 1));
            if e1 <= 0.0 || e2 <= 0.0 {
                return Err(CoreError::invalid(format!(
                    "density tensor is not positive definite at node {node}"
                )));
            }
        }
        Ok(())
    }

    /// Largest plane-wave speed over all nodes and propagation directions,
    /// from the acoustic tensor C_ijkl n_j n_l against the density tensor.
    /// Used for CFL limits.
    pub fn max_wave_speed(&self) -> f64 {
        let dim = self.c.dim;
        let mut worst: f64 = 0.0;
        for node in 0..self.c.nnodes {
            if dim == 1 {
                let c2 = self.c.get(0, node) / self.rho.get(0, node);
                worst = worst.max(c2);
                continue;
            }
            let (r1, r2) = sym2_eigen(
                self.rho.m(node, 0, 0),
                self.rho.m(node, 0, 1),
                self.rho.m(node, 1, 1),
            );
            let rho_min = r1.min(r2);
            for step in 0..9 {
                let th = std::f64::consts::PI * step as f64 / 9.0;
                let n = [th.cos(), th.sin()];
                let mut a = [[0.0_f64; 2]; 2];
                for i in 0..2 {
                    for k in 0..2 {
                        let mut v = 0.0;
                        for j in 0..2 {
                            for l in 0..2 {
                                v += self.c.t4(node, i, j, k, l) * n[j] * n[l];
                            }
                        }
                        a[i][k] = v;
                    }
                }
                let (e1, e2) = sym2_eigen(a[0][0], 0.5 * (a[0][1] + a[1][0]), a[1][1]);
                worst = worst.max(e1.max(e2) / rho_min);
            }
        }
        worst.max(0.0).sqrt()
    }
}

/// Constant scalar field helper.
pub fn constant(grid: &Grid, v: f64) -> Field {
    let mut f = Field::zeros(grid, 0);
    f.fill(v);
    f
}

fn sym2_eigen(a: f64, b: f64, c: f64) -> (f64, f64) {
    let mean = 0.5 * (a + c);
    let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    (mean - r, mean + r)
}
