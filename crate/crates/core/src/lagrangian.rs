//! Incremental Lagrangian densities for waves on a pre-stressed, moving
//! background, their canonical derivative fields, Euler-Lagrange residuals,
//! and the action quadrature.
//!
//! Four density variants share one code path:
//!
//! * `Classical`: quadratic density of a linear elastic medium, optionally
//!   carrying a constant pre-stress term.
//! * `TemporalRaw`: kinetic energy written in the relative rate
//!   c_i = u_{i,t} - u_{i,j} v0_j with the quadratic (grad u . v0)^2 piece
//!   dropped; couples stress to velocity through rho u_dot (x) v0.
//! * `TemporalSym`: the symmetrized coupling coefficient
//!   V_(i)(js) = (rho_ij v0_s + rho_is v0_j)/2, which restores the i-j
//!   symmetry of the stress. Identical to `TemporalRaw` in 1D.
//! * `Wfe`: heterogeneity expressed through pre-stress gradients; stress
//!   couples to displacement via sigma0_ij,k and the motion equation picks
//!   up a configurational stiffness sigma0_ij,jk.
//!
//! All densities are quadratic in (u, grad u, u_dot), so the finite
//! difference functional-derivative oracle in this module agrees with the
//! hand-derived canonical fields to rounding, not merely to truncation
//! order. That agreement is the module's main self-check.

use crate::error::CoreError;
use crate::field::Field;
use crate::force::BodyForceModel;
use crate::grid::Grid;
use crate::material::MaterialModel;
use crate::ops;
use crate::prestate::PreState;
use crate::state::{Trajectory, WaveState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Classical,
    TemporalRaw,
    TemporalSym,
    Wfe,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Classical => "classical",
            Variant::TemporalRaw => "willis-temporal-raw",
            Variant::TemporalSym => "willis-temporal",
            Variant::Wfe => "wfe",
        }
    }
}

/// Pointwise arguments of the density: displacement, displacement gradient
/// (row = component, column = derivative axis), velocity, incremental force.
#[derive(Debug, Clone, Copy, Default)]
pub struct LocalArgs {
    pub u: [f64; 2],
    pub g: [[f64; 2]; 2],
    pub udot: [f64; 2],
    pub f: [f64; 2],
}

/// Coefficient values at one node. Extracted rather than read inline so a
/// caller can evaluate the density with shifted coefficients (the gauge
/// defect computation advects every coefficient field).
#[derive(Debug, Clone, Copy, Default)]
pub struct Coeffs {
    pub c: [[[[f64; 2]; 2]; 2]; 2],
    pub rho: [[f64; 2]; 2],
    pub sigma0: [[f64; 2]; 2],
    pub fbar0: [f64; 2],
    pub v0: [f64; 2],
    /// sigma0_ij,k
    pub sgrad: [[[f64; 2]; 2]; 2],
    /// stored-energy gradient of the background (zero bookkeeping when the
    /// pre-state was given as a stress only)
    pub w0g: [f64; 2],
    pub w0h: [[f64; 2]; 2],
    /// total static force and its gradient
    pub f0t: [f64; 2],
    pub f0g: [[f64; 2]; 2],
}

#[derive(Debug, Clone, Copy)]
pub struct DensityBreakdown {
    pub w: f64,
    pub phi: f64,
    pub t: f64,
    pub l: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CanonicalPoint {
    /// effective body force, -dL/du
    pub fbar: [f64; 2],
    /// total effective stress, dL/d(grad u)
    pub sbar: [[f64; 2]; 2],
    /// effective momentum, -dL/d(u_dot)
    pub pbar: [f64; 2],
    /// sbar minus the pre-stress
    pub sigma_inc: [[f64; 2]; 2],
}

/// Which density argument a functional derivative is taken with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wrt {
    U,
    Grad,
    Udot,
}

pub fn coeffs_at(dim: usize, material: &MaterialModel, pre: &PreState, node: usize) -> Coeffs {
    let mut c = Coeffs::default();
    for i in 0..dim {
        for j in 0..dim {
            c.rho[i][j] = material.rho_at(node, i, j);
            c.sigma0[i][j] = pre.sigma0.m(node, i, j);
            for k in 0..dim {
                c.sgrad[i][j][k] = pre.sgrad.t3(node, i, j, k);
                for l in 0..dim {
                    c.c[i][j][k][l] = material.c_at(node, i, j, k, l);
                }
            }
        }
        c.fbar0[i] = pre.f0_static.v(node, i);
        c.v0[i] = pre.v0.v(node, i);
    }
    if pre.has_kinematics() {
        let w0g = pre.w0_grad().unwrap();
        let w0h = pre.w0_hess().unwrap();
        let f0t = pre.f0_total().unwrap();
        let f0g = pre.f0_grad().unwrap();
        for i in 0..dim {
            c.w0g[i] = w0g.v(node, i);
            c.f0t[i] = f0t.v(node, i);
            for j in 0..dim {
                c.w0h[i][j] = w0h.m(node, i, j);
                c.f0g[i][j] = f0g.m(node, i, j);
            }
        }
    } else {
        // stress-only pre-state: take the stored-energy bookkeeping as zero,
        // a legitimate gauge choice that leaves the motion equation intact
        for i in 0..dim {
            c.f0t[i] = pre.f0_static.v(node, i);
            for j in 0..dim {
                c.f0g[i][j] = -pre.kdiv.m(node, i, j);
            }
        }
    }
    c
}

fn vcoef(co: &Coeffs, i: usize, j: usize, s: usize) -> f64 {
    0.5 * (co.rho[i][j] * co.v0[s] + co.rho[i][s] * co.v0[j])
}

/// Pointwise density split W + Phi - T = L.
pub fn density_with(variant: Variant, dim: usize, co: &Coeffs, a: &LocalArgs) -> DensityBreakdown {
    let mut s0g = 0.0;
    let mut cgg = 0.0;
    let mut ruu = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            s0g += co.sigma0[i][j] * a.g[i][j];
            ruu += co.rho[i][j] * a.udot[i] * a.udot[j];
            for k in 0..dim {
                for l in 0..dim {
                    cgg += co.c[i][j][k][l] * a.g[i][j] * a.g[k][l];
                }
            }
        }
    }
    let (w, phi, t);
    match variant {
        Variant::Classical | Variant::TemporalRaw | Variant::TemporalSym => {
            w = s0g + 0.5 * cgg;
            let mut p = 0.0;
            for i in 0..dim {
                p -= (co.fbar0[i] + a.f[i]) * a.u[i];
            }
            phi = p;
            let mut coupling = 0.0;
            match variant {
                Variant::TemporalRaw => {
                    for i in 0..dim {
                        for j in 0..dim {
                            for s in 0..dim {
                                coupling += co.rho[i][j] * a.udot[i] * a.g[j][s] * co.v0[s];
                            }
                        }
                    }
                }
                Variant::TemporalSym => {
                    for k in 0..dim {
                        for i in 0..dim {
                            for j in 0..dim {
                                coupling += vcoef(co, k, i, j) * a.udot[k] * a.g[i][j];
                            }
                        }
                    }
                }
                _ => {}
            }
            t = 0.5 * ruu - coupling;
        }
        Variant::Wfe => {
            let mut wv = s0g + 0.5 * cgg;
            for i in 0..dim {
                wv += co.w0g[i] * a.u[i];
                for j in 0..dim {
                    wv += 0.5 * co.w0h[i][j] * a.u[i] * a.u[j];
                    for k in 0..dim {
                        wv += co.sgrad[i][j][k] * a.g[i][j] * a.u[k];
                    }
                }
            }
            w = wv;
            let mut p = 0.0;
            for i in 0..dim {
                let mut fi = co.f0t[i] + a.f[i];
                for j in 0..dim {
                    fi += 0.5 * co.f0g[i][j] * a.u[j];
                }
                p -= fi * a.u[i];
            }
            phi = p;
            t = 0.5 * ruu;
        }
    }
    DensityBreakdown {
        w,
        phi,
        t,
        l: w + phi - t,
    }
}

/// Hand-derived partial derivatives of the density, packaged as the
/// effective force, stress, and momentum.
pub fn canonical_with(variant: Variant, dim: usize, co: &Coeffs, a: &LocalArgs) -> CanonicalPoint {
    let mut out = CanonicalPoint::default();
    // dL/du
    for m in 0..dim {
        let dldu = match variant {
            Variant::Classical | Variant::TemporalRaw | Variant::TemporalSym => {
                -(co.fbar0[m] + a.f[m])
            }
            Variant::Wfe => {
                let mut v = co.w0g[m] - co.f0t[m] - a.f[m];
                for j in 0..dim {
                    v += co.w0h[m][j] * a.u[j];
                    v -= 0.5 * (co.f0g[m][j] + co.f0g[j][m]) * a.u[j];
                }
                for i in 0..dim {
                    for j in 0..dim {
                        v += co.sgrad[i][j][m] * a.g[i][j];
                    }
                }
                v
            }
        };
        out.fbar[m] = -dldu;
    }
    // dL/d(grad u)
    for m in 0..dim {
        for n in 0..dim {
            let mut s = co.sigma0[m][n];
            for k in 0..dim {
                for l in 0..dim {
                    s += co.c[m][n][k][l] * a.g[k][l];
                }
            }
            match variant {
                Variant::TemporalRaw => {
                    for k in 0..dim {
                        s += co.rho[m][k] * a.udot[k] * co.v0[n];
                    }
                }
                Variant::TemporalSym => {
                    for k in 0..dim {
                        s += vcoef(co, k, m, n) * a.udot[k];
                    }
                }
                Variant::Wfe => {
                    for k in 0..dim {
                        s += co.sgrad[m][n][k] * a.u[k];
                    }
                }
                Variant::Classical => {}
            }
            out.sbar[m][n] = s;
            out.sigma_inc[m][n] = s - co.sigma0[m][n];
        }
    }
    // dL/d(u_dot)
    for m in 0..dim {
        let mut dldv = 0.0;
        for j in 0..dim {
            dldv -= co.rho[m][j] * a.udot[j];
        }
        match variant {
            Variant::TemporalRaw => {
                for j in 0..dim {
                    for s in 0..dim {
                        dldv += co.rho[m][j] * a.g[j][s] * co.v0[s];
                    }
                }
            }
            Variant::TemporalSym => {
                for i in 0..dim {
                    for j in 0..dim {
                        dldv += vcoef(co, m, i, j) * a.g[i][j];
                    }
                }
            }
            _ => {}
        }
        out.pbar[m] = -dldv;
    }
    out
}

/// Central finite difference of the density in one argument component.
/// Step h = 1e-5 (1 + |value|). Exact to rounding here since every density
/// is quadratic, which is what makes this a usable oracle.
pub fn fd_partial(
    variant: Variant,
    dim: usize,
    co: &Coeffs,
    a: &LocalArgs,
    wrt: Wrt,
    i: usize,
    j: usize,
) -> f64 {
    let read = |args: &LocalArgs| -> f64 {
        match wrt {
            Wrt::U => args.u[i],
            Wrt::Grad => args.g[i][j],
            Wrt::Udot => args.udot[i],
        }
    };
    let mut plus = *a;
    let mut minus = *a;
    let h = 1e-5 * (1.0 + read(a).abs());
    match wrt {
        Wrt::U => {
            plus.u[i] += h;
            minus.u[i] -= h;
        }
        Wrt::Grad => {
            plus.g[i][j] += h;
            minus.g[i][j] -= h;
        }
        Wrt::Udot => {
            plus.udot[i] += h;
            minus.udot[i] -= h;
        }
    }
    let lp = density_with(variant, dim, co, &plus).l;
    let lm = density_with(variant, dim, co, &minus).l;
    (lp - lm) / (2.0 * h)
}

/// Density and canonical-field evaluation bound to one configuration.
pub struct Engine<'a> {
    pub variant: Variant,
    pub grid: &'a Grid,
    pub material: &'a MaterialModel,
    pub pre: &'a PreState,
}

/// The four density components as nodal fields.
pub struct DensityFields {
    pub w: Field,
    pub phi: Field,
    pub t: Field,
    pub l: Field,
}

pub struct CanonicalFieldSet {
    pub fbar: Field,
    pub sbar: Field,
    pub pbar: Field,
    pub sigma_inc: Field,
}

impl<'a> Engine<'a> {
    pub fn new(
        variant: Variant,
        grid: &'a Grid,
        material: &'a MaterialModel,
        pre: &'a PreState,
    ) -> Self {
        Engine {
            variant,
            grid,
            material,
            pre,
        }
    }

    fn local_args(&self, state: &WaveState, f: Option<&Field>) -> (Field, Vec<LocalArgs>) {
        let dim = self.grid.dim;
        let grad = ops::grad(self.grid, &state.u);
        let mut out = Vec::with_capacity(self.grid.num_nodes());
        for node in 0..self.grid.num_nodes() {
            let mut a = LocalArgs::default();
            for i in 0..dim {
                a.u[i] = state.u.v(node, i);
                a.udot[i] = state.udot.v(node, i);
                if let Some(ff) = f {
                    a.f[i] = ff.v(node, i);
                }
                for j in 0..dim {
                    a.g[i][j] = grad.m(node, i, j);
                }
            }
            out.push(a);
        }
        (grad, out)
    }

    pub fn density_fields(&self, state: &WaveState, f: Option<&Field>) -> DensityFields {
        let dim = self.grid.dim;
        let (_, args) = self.local_args(state, f);
        let mut w = Field::zeros(self.grid, 0);
        let mut phi = Field::zeros(self.grid, 0);
        let mut t = Field::zeros(self.grid, 0);
        let mut l = Field::zeros(self.grid, 0);
        for (node, a) in args.iter().enumerate() {
            let co = coeffs_at(dim, self.material, self.pre, node);
            let d = density_with(self.variant, dim, &co, a);
            w.set(0, node, d.w);
            phi.set(0, node, d.phi);
            t.set(0, node, d.t);
            l.set(0, node, d.l);
        }
        DensityFields { w, phi, t, l }
    }

    pub fn canonical_fields(&self, state: &WaveState, f: Option<&Field>) -> CanonicalFieldSet {
        let dim = self.grid.dim;
        let (_, args) = self.local_args(state, f);
        let mut fbar = Field::zeros(self.grid, 1);
        let mut sbar = Field::zeros(self.grid, 2);
        let mut pbar = Field::zeros(self.grid, 1);
        let mut sigma_inc = Field::zeros(self.grid, 2);
        for (node, a) in args.iter().enumerate() {
            let co = coeffs_at(dim, self.material, self.pre, node);
            let c = canonical_with(self.variant, dim, &co, a);
            for i in 0..dim {
                fbar.set_v(node, i, c.fbar[i]);
                pbar.set_v(node, i, c.pbar[i]);
                for j in 0..dim {
                    sbar.set_m(node, i, j, c.sbar[i][j]);
                    sigma_inc.set_m(node, i, j, c.sigma_inc[i][j]);
                }
            }
        }
        CanonicalFieldSet {
            fbar,
            sbar,
            pbar,
            sigma_inc,
        }
    }

    /// Finite-difference functional derivative over the whole grid; the
    /// independent check against `canonical_fields`.
    pub fn fd_functional_derivative(
        &self,
        state: &WaveState,
        f: Option<&Field>,
        wrt: Wrt,
    ) -> Field {
        let dim = self.grid.dim;
        let (_, args) = self.local_args(state, f);
        let rank = if wrt == Wrt::Grad { 2 } else { 1 };
        let mut out = Field::zeros(self.grid, rank);
        for (node, a) in args.iter().enumerate() {
            let co = coeffs_at(dim, self.material, self.pre, node);
            for i in 0..dim {
                if wrt == Wrt::Grad {
                    for j in 0..dim {
                        let v = fd_partial(self.variant, dim, &co, a, wrt, i, j);
                        out.set_m(node, i, j, v);
                    }
                } else {
                    let v = fd_partial(self.variant, dim, &co, a, wrt, i, 0);
                    out.set_v(node, i, v);
                }
            }
        }
        out
    }

    /// Space-time quadrature of the density over snapshots [lo, hi):
    /// uniform weights dt * cell_volume on the periodic grid.
    pub fn action(
        &self,
        traj: &Trajectory,
        range: (usize, usize),
        forces: Option<&[Field]>,
    ) -> Result<f64, CoreError> {
        let (lo, hi) = range;
        if hi > traj.len() || lo >= hi {
            return Err(CoreError::invalid("action window out of range"));
        }
        if let Some(fs) = forces {
            if fs.len() != traj.len() {
                return Err(CoreError::invalid("force series length mismatch"));
            }
        }
        let mut slab = Vec::with_capacity(hi - lo);
        for n in lo..hi {
            let f = forces.map(|fs| &fs[n]);
            let d = self.density_fields(traj.state(n), f);
            slab.push(ops::integrate_nodal(self.grid, d.l.comp_slice(0)));
        }
        Ok(traj.dt * ops::pairwise_sum(&slab))
    }

    /// Discrete Euler-Lagrange residual at the middle of three consecutive
    /// time levels: r = dL/du - div(dL/dgrad) - d/dt(dL/dudot), the time
    /// derivative taken as a centered difference of the neighbors' momenta
    /// (their stored velocities already being centered estimates).
    pub fn el_residual(
        &self,
        prev: &WaveState,
        cur: &WaveState,
        next: &WaveState,
        forces: (Option<&Field>, Option<&Field>, Option<&Field>),
        dt: f64,
    ) -> Result<Field, CoreError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(CoreError::invalid("dt must be positive"));
        }
        let span = next.t - prev.t;
        if (span - 2.0 * dt).abs() > 1e-9 * dt {
            return Err(CoreError::invalid("time levels are not consecutive"));
        }
        let c_cur = self.canonical_fields(cur, forces.1);
        let p_prev = self.canonical_fields(prev, forces.0).pbar;
        let p_next = self.canonical_fields(next, forces.2).pbar;
        // r = -fbar - div(sbar) + (pbar_next - pbar_prev) / (2 dt)
        let mut r = ops::div_rank2(self.grid, &c_cur.sbar);
        r.scale(-1.0);
        r.axpy(-1.0, &c_cur.fbar)?;
        r.axpy(1.0 / (2.0 * dt), &p_next)?;
        r.axpy(-1.0 / (2.0 * dt), &p_prev)?;
        Ok(r)
    }

    /// Kinetic plus strain energy, integrated.
    pub fn energy_total(&self, state: &WaveState) -> f64 {
        let d = self.density_fields(state, None);
        let mut e = d.t;
        e.axpy(1.0, &d.w).expect("shape");
        ops::integrate_nodal(self.grid, e.comp_slice(0))
    }

    /// Incremental force fields for every snapshot of a trajectory.
    pub fn force_series(
        &self,
        traj: &Trajectory,
        model: &BodyForceModel,
    ) -> Result<Vec<Field>, CoreError> {
        traj.snaps
            .iter()
            .map(|s| model.eval(self.grid, s.state.t))
            .collect()
    }
}
