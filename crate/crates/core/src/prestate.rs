//! The static background a wave propagates through: pre-displacement u0 and
//! its gradients, pre-stress sigma0, the equilibrium body force, and the
//! background velocity v0.
//!
//! Two entry points exist. `from_u0` takes the pre-displacement and derives
//! everything (gradient G0, connection Gamma_ij^k = u0_i,jk, sigma0 through
//! Hooke, stored-energy bookkeeping). `from_sigma0` accepts a measured
//! pre-stress directly; the connection and stored-energy fields are then
//! unavailable and the accessors for them return errors instead of guessing.
//!
//! v0 is an independent smooth input with arbitrary units, constant in time;
//! it defaults to zero.

use crate::error::CoreError;
use crate::field::Field;
use crate::grid::Grid;
use crate::material::MaterialModel;
use crate::ops;

#[derive(Debug, Clone)]
pub struct PreState {
    /// Pre-stress sigma0_ij.
    pub sigma0: Field,
    /// Equilibrium body force, defined as -div sigma0 so statics balance
    /// exactly in the discrete sense.
    pub f0_static: Field,
    /// Background velocity v0_i(x).
    pub v0: Field,
    /// Pre-stress gradient S_(ij)k = sigma0_ij,k; the displacement-coupling
    /// stress coefficient.
    pub sgrad: Field,
    /// K_ik = sigma0_ij,jk; the displacement coupling in the motion equation.
    pub kdiv: Field,
    /// Symmetrized K, which is what the exact variational motion equation
    /// carries (identical to kdiv in 1D).
    pub ksym: Field,

    u0: Option<Field>,
    g0: Option<Field>,
    gamma: Option<Field>,
    w0: Option<Field>,
    w0_grad: Option<Field>,
    w0_hess: Option<Field>,
    f0_total: Option<Field>,
    f0_grad: Option<Field>,
}

impl PreState {
    /// Quiescent background: everything zero. The coupled variants all reduce
    /// to the classical medium on this state.
    pub fn quiescent(grid: &Grid) -> Self {
        PreState {
            sigma0: Field::zeros(grid, 2),
            f0_static: Field::zeros(grid, 1),
            v0: Field::zeros(grid, 1),
            sgrad: Field::zeros(grid, 3),
            kdiv: Field::zeros(grid, 2),
            ksym: Field::zeros(grid, 2),
            u0: None,
            g0: None,
            gamma: None,
            w0: None,
            w0_grad: None,
            w0_hess: None,
            f0_total: None,
            f0_grad: None,
        }
    }

    pub fn from_u0(
        grid: &Grid,
        material: &MaterialModel,
        u0: Field,
        v0: Option<Field>,
    ) -> Result<Self, CoreError> {
        if u0.rank != 1 {
            return Err(CoreError::invalid("u0 must be a vector field"));
        }
        let g0 = ops::grad(grid, &u0);
        let gamma = ops::grad(grid, &g0);
        let sigma0 = hooke_pre_stress(grid, material, &g0);
        let mut st = Self::from_sigma0(grid, sigma0, v0)?;
        st.attach_kinematics(grid, material, u0, g0, gamma);
        Ok(st)
    }

    pub fn from_sigma0(
        grid: &Grid,
        sigma0: Field,
        v0: Option<Field>,
    ) -> Result<Self, CoreError> {
        if sigma0.rank != 2 {
            return Err(CoreError::invalid("sigma0 must be a rank-2 field"));
        }
        let dim = grid.dim;
        for node in 0..sigma0.nnodes {
            for i in 0..dim {
                for j in (i + 1)..dim {
                    let a = sigma0.m(node, i, j);
                    let b = sigma0.m(node, j, i);
                    if (a - b).abs() > 1e-9 * (1.0 + a.abs()) {
                        return Err(CoreError::invalid("pre-stress must be symmetric"));
                    }
                }
            }
        }
        let v0 = match v0 {
            Some(v) => {
                if v.rank != 1 {
                    return Err(CoreError::invalid("v0 must be a vector field"));
                }
                v
            }
            None => Field::zeros(grid, 1),
        };
        let mut f0_static = ops::div_rank2(grid, &sigma0);
        f0_static.scale(-1.0);
        let sgrad = ops::grad(grid, &sigma0);
        let div = ops::div_rank2(grid, &sigma0);
        let kdiv = ops::grad(grid, &div);
        let mut ksym = Field::zeros(grid, 2);
        for node in 0..kdiv.nnodes {
            for i in 0..dim {
                for k in 0..dim {
                    ksym.set_m(node, i, k, 0.5 * (kdiv.m(node, i, k) + kdiv.m(node, k, i)));
                }
            }
        }
        Ok(PreState {
            sigma0,
            f0_static,
            v0,
            sgrad,
            kdiv,
            ksym,
            u0: None,
            g0: None,
            gamma: None,
            w0: None,
            w0_grad: None,
            w0_hess: None,
            f0_total: None,
            f0_grad: None,
        })
    }

    fn attach_kinematics(
        &mut self,
        grid: &Grid,
        _material: &MaterialModel,
        u0: Field,
        g0: Field,
        gamma: Field,
    ) {
        let dim = grid.dim;
        // stored energy density of the pre-state, W0 = sigma0 : G0 / 2
        let mut w0 = Field::zeros(grid, 0);
        for node in 0..w0.nnodes {
            let mut v = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    v += self.sigma0.m(node, i, j) * g0.m(node, i, j);
                }
            }
            w0.set(0, node, 0.5 * v);
        }
        let w0_grad = ops::grad(grid, &w0);
        let hess_raw = ops::grad(grid, &w0_grad);
        let mut w0_hess = Field::zeros(grid, 2);
        for node in 0..hess_raw.nnodes {
            for i in 0..dim {
                for j in 0..dim {
                    w0_hess.set_m(
                        node,
                        i,
                        j,
                        0.5 * (hess_raw.m(node, i, j) + hess_raw.m(node, j, i)),
                    );
                }
            }
        }
        // total static force: equilibrium part plus the stored-energy gradient
        let mut f0_total = self.f0_static.clone();
        f0_total.axpy(1.0, &w0_grad).expect("shape");
        let f0_grad = ops::grad(grid, &f0_total);
        self.u0 = Some(u0);
        self.g0 = Some(g0);
        self.gamma = Some(gamma);
        self.w0 = Some(w0);
        self.w0_grad = Some(w0_grad);
        self.w0_hess = Some(w0_hess);
        self.f0_total = Some(f0_total);
        self.f0_grad = Some(f0_grad);
    }

    pub fn has_kinematics(&self) -> bool {
        self.gamma.is_some()
    }

    fn need<'a>(&self, f: &'a Option<Field>, what: &str) -> Result<&'a Field, CoreError> {
        f.as_ref().ok_or_else(|| {
            CoreError::invalid(format!(
                "{what} requires a pre-state built from u0 (kinematics unavailable for a \
                 pre-stress-only background)"
            ))
        })
    }

    pub fn u0(&self) -> Result<&Field, CoreError> {
        self.need(&self.u0, "u0")
    }

    pub fn g0(&self) -> Result<&Field, CoreError> {
        self.need(&self.g0, "the pre-displacement gradient")
    }

    /// Connection Gamma_ij^k = u0_i,jk; indices (i, j, k).
    pub fn gamma(&self) -> Result<&Field, CoreError> {
        self.need(&self.gamma, "the spatial connection")
    }

    pub fn w0(&self) -> Result<&Field, CoreError> {
        self.need(&self.w0, "the stored-energy density")
    }

    pub fn w0_grad(&self) -> Result<&Field, CoreError> {
        self.need(&self.w0_grad, "the stored-energy gradient")
    }

    pub fn w0_hess(&self) -> Result<&Field, CoreError> {
        self.need(&self.w0_hess, "the stored-energy Hessian")
    }

    /// Static body force of the heterogeneity expansion (equilibrium force
    /// plus stored-energy gradient).
    pub fn f0_total(&self) -> Result<&Field, CoreError> {
        self.need(&self.f0_total, "the total static force")
    }

    pub fn f0_grad(&self) -> Result<&Field, CoreError> {
        self.need(&self.f0_grad, "the static force gradient")
    }

    /// Gauge shift of the pre-strain: G0 += delta with sigma0 updated through
    /// Hooke and every derived field rebuilt. With spatially constant
    /// stiffness this leaves the motion-equation coefficients unchanged,
    /// which is exactly the gauge freedom of the background description.
    pub fn shift_pre_strain(
        &mut self,
        grid: &Grid,
        material: &MaterialModel,
        delta: [[f64; 2]; 2],
    ) -> Result<(), CoreError> {
        let g0 = self
            .g0
            .as_mut()
            .ok_or_else(|| CoreError::invalid("pre-strain shift needs kinematics"))?;
        let dim = grid.dim;
        for node in 0..g0.nnodes {
            for i in 0..dim {
                for j in 0..dim {
                    let v = g0.m(node, i, j) + delta[i][j];
                    g0.set_m(node, i, j, v);
                }
            }
        }
        let g0 = self.g0.take().unwrap();
        let u0 = self.u0.take().unwrap();
        let gamma = self.gamma.take().unwrap();
        let sigma0 = hooke_pre_stress(grid, material, &g0);
        let mut st = Self::from_sigma0(grid, sigma0, Some(self.v0.clone()))?;
        st.attach_kinematics(grid, material, u0, g0, gamma);
        *self = st;
        Ok(())
    }
}

/// sigma0_ij = C_ijkl G0_kl.
pub fn hooke_pre_stress(grid: &Grid, material: &MaterialModel, g0: &Field) -> Field {
    let dim = grid.dim;
    let mut s = Field::zeros(grid, 2);
    for node in 0..g0.nnodes {
        let mut g = [[0.0; 2]; 2];
        for k in 0..dim {
            for l in 0..dim {
                g[k][l] = g0.m(node, k, l);
            }
        }
        let sig = material.stress(node, &g);
        for i in 0..dim {
            for j in 0..dim {
                s.set_m(node, i, j, sig[i][j]);
            }
        }
    }
    s
}

/// Torsion of the connection: T_ij^k = Gamma_ij^k - Gamma_ji^k. The swap is
/// over the field index and the first derivative index, so this is generally
/// nonzero even for a connection built from a smooth u0.
pub fn torsion(gamma: &Field) -> Field {
    assert_eq!(gamma.rank, 3);
    let dim = gamma.dim;
    let mut t = gamma.clone();
    for node in 0..gamma.nnodes {
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let v = gamma.t3(node, i, j, k) - gamma.t3(node, j, i, k);
                    t.set((i * dim + j) * dim + k, node, v);
                }
            }
        }
    }
    t
}

/// Antisymmetry of the two derivative indices, Gamma_ij^k - Gamma_ik^j
/// read as u0_i,jk - u0_i,kj. For a connection built by differentiating a
/// smooth u0 this vanishes to rounding (discrete partials commute), which is
/// the usable smoothness check.
pub fn mixed_partial_defect(gamma: &Field) -> Field {
    assert_eq!(gamma.rank, 3);
    let dim = gamma.dim;
    let mut t = gamma.clone();
    for node in 0..gamma.nnodes {
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let v = gamma.t3(node, i, j, k) - gamma.t3(node, i, k, j);
                    t.set((i * dim + j) * dim + k, node, v);
                }
            }
        }
    }
    t
}
