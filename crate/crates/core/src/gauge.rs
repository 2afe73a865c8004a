//! Local space-time transformations of a trajectory, the action defect they
//! induce, Noether currents, and integrated conservation balances.
//!
//! A transformation is stored per snapshot as three nodal fields: the spatial
//! coordinate perturbation dx_j, the time perturbation dtc, and the field
//! perturbation du_i, each understood as the first-order coefficient of a
//! small parameter eps. `action_defect` re-evaluates the action with all
//! three applied at a finite eps, together with the volume Jacobian and
//! advected coefficient fields, and reports |A' - A|. For a transformation
//! matched to the density in use the defect shrinks quadratically in eps;
//! a mismatched density leaves a linear remainder.

use crate::error::CoreError;
use crate::field::Field;
use crate::grid::Grid;
use crate::lagrangian::{coeffs_at, density_with, Coeffs, Engine};
use crate::ops;
use crate::state::{Trajectory, WaveState};

/// First-order transformation data, one entry per trajectory snapshot.
pub struct LocalTransform {
    /// spatial coordinate perturbation, rank 1
    pub dx: Vec<Field>,
    /// time coordinate perturbation, rank 0
    pub dtc: Vec<Field>,
    /// field perturbation, rank 1
    pub du: Vec<Field>,
}

impl LocalTransform {
    pub fn len(&self) -> usize {
        self.dx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dx.is_empty()
    }
}

/// Covariant rate u_i;t = udot_i - u_i,j v0_j.
pub fn cov_dt(grid: &Grid, u: &Field, udot: &Field, v0: &Field) -> Field {
    let g = ops::grad(grid, u);
    let mut out = udot.clone();
    for node in 0..grid.num_nodes() {
        for i in 0..grid.dim {
            let mut adv = 0.0;
            for j in 0..grid.dim {
                adv += g.m(node, i, j) * v0.v(node, j);
            }
            out.set_v(node, i, udot.v(node, i) - adv);
        }
    }
    out
}

/// Covariant gradient u_i;j = u_i,j + gamma_ijr u_r.
pub fn cov_dx(grid: &Grid, u: &Field, gamma: &Field) -> Field {
    let mut out = ops::grad(grid, u);
    for node in 0..grid.num_nodes() {
        for i in 0..grid.dim {
            for j in 0..grid.dim {
                let mut conn = 0.0;
                for r in 0..grid.dim {
                    conn += gamma.t3(node, i, j, r) * u.v(node, r);
                }
                out.set_m(node, i, j, out.m(node, i, j) + conn);
            }
        }
    }
    out
}

/// Smooth window over `len` time levels that is exactly zero for the first
/// and last `margin` levels. The zero margins keep every transform field and
/// its centered time differences supported strictly inside the trajectory.
pub fn bump_window(len: usize, margin: usize) -> Vec<f64> {
    assert!(len > 2 * margin + 2, "window too short for requested margin");
    let span = (len - 1 - 2 * margin) as f64;
    (0..len)
        .map(|n| {
            if n < margin || n + margin >= len {
                0.0
            } else {
                let s = (n - margin) as f64 / span;
                if s <= 0.0 || s >= 1.0 {
                    0.0
                } else {
                    (std::f64::consts::PI * s).sin().powi(2)
                }
            }
        })
        .collect()
}

/// Time-gauge transformation dt = profile(x) w(t), with the field carried
/// along its covariant rate: du_i = (udot_i - u_i,j v0_j) dt.
pub fn temporal_transform(
    eng: &Engine,
    traj: &Trajectory,
    profile: &Field,
    window: &[f64],
) -> Result<LocalTransform, CoreError> {
    if profile.rank != 0 {
        return Err(CoreError::invalid("temporal profile must be a scalar field"));
    }
    if window.len() != traj.len() {
        return Err(CoreError::invalid("window length must match the trajectory"));
    }
    let grid = eng.grid;
    let mut dx = Vec::with_capacity(traj.len());
    let mut dtc = Vec::with_capacity(traj.len());
    let mut du = Vec::with_capacity(traj.len());
    for (n, &w) in window.iter().enumerate() {
        let st = traj.state(n);
        let rate = cov_dt(grid, &st.u, &st.udot, &eng.pre.v0);
        let mut dtc_n = profile.clone();
        dtc_n.scale(w);
        let mut du_n = Field::zeros(grid, 1);
        for node in 0..grid.num_nodes() {
            let dt_here = dtc_n.s(node);
            for i in 0..grid.dim {
                du_n.set_v(node, i, rate.v(node, i) * dt_here);
            }
        }
        dx.push(Field::zeros(grid, 1));
        dtc.push(dtc_n);
        du.push(du_n);
    }
    Ok(LocalTransform { dx, dtc, du })
}

/// Space-gauge transformation dx_j = profile_j(x) w(t), with the field
/// carried along its covariant gradient: du_i = (u_i,j + gamma_ijr u_r) dx_j.
/// Needs the pre-state connection, so the pre-state must carry kinematics.
pub fn spatial_transform(
    eng: &Engine,
    traj: &Trajectory,
    profile: &Field,
    window: &[f64],
) -> Result<LocalTransform, CoreError> {
    if profile.rank != 1 {
        return Err(CoreError::invalid("spatial profile must be a vector field"));
    }
    if window.len() != traj.len() {
        return Err(CoreError::invalid("window length must match the trajectory"));
    }
    let gamma = eng.pre.gamma()?;
    let grid = eng.grid;
    let mut dx = Vec::with_capacity(traj.len());
    let mut dtc = Vec::with_capacity(traj.len());
    let mut du = Vec::with_capacity(traj.len());
    for (n, &w) in window.iter().enumerate() {
        let st = traj.state(n);
        let covg = cov_dx(grid, &st.u, gamma);
        let mut dx_n = profile.clone();
        dx_n.scale(w);
        let mut du_n = Field::zeros(grid, 1);
        for node in 0..grid.num_nodes() {
            for i in 0..grid.dim {
                let mut v = 0.0;
                for j in 0..grid.dim {
                    v += covg.m(node, i, j) * dx_n.v(node, j);
                }
                du_n.set_v(node, i, v);
            }
        }
        dx.push(dx_n);
        dtc.push(Field::zeros(grid, 0));
        du.push(du_n);
    }
    Ok(LocalTransform { dx, dtc, du })
}

/// Rigid time shift: dt = c everywhere, coordinates move and the field does
/// not. Its Noether time component is the Hamiltonian density.
pub fn time_translation(grid: &Grid, len: usize, c: f64) -> LocalTransform {
    let mut dtc_n = Field::zeros(grid, 0);
    dtc_n.fill(c);
    LocalTransform {
        dx: (0..len).map(|_| Field::zeros(grid, 1)).collect(),
        dtc: (0..len).map(|_| dtc_n.clone()).collect(),
        du: (0..len).map(|_| Field::zeros(grid, 1)).collect(),
    }
}

/// Every density coefficient sampled as a nodal field, in the same layout
/// `coeffs_at` produces. Sampling once lets the defect computation advect
/// coefficients by differentiating these fields.
struct CoeffBundle {
    c: Field,
    rho: Field,
    sigma0: Field,
    fbar0: Field,
    v0: Field,
    sgrad: Field,
    w0g: Field,
    w0h: Field,
    f0t: Field,
    f0g: Field,
}

fn sample_bundle(eng: &Engine) -> CoeffBundle {
    let grid = eng.grid;
    let dim = grid.dim;
    let mut b = CoeffBundle {
        c: Field::zeros(grid, 4),
        rho: Field::zeros(grid, 2),
        sigma0: Field::zeros(grid, 2),
        fbar0: Field::zeros(grid, 1),
        v0: Field::zeros(grid, 1),
        sgrad: Field::zeros(grid, 3),
        w0g: Field::zeros(grid, 1),
        w0h: Field::zeros(grid, 2),
        f0t: Field::zeros(grid, 1),
        f0g: Field::zeros(grid, 2),
    };
    for node in 0..grid.num_nodes() {
        let co = coeffs_at(dim, eng.material, eng.pre, node);
        for i in 0..dim {
            b.fbar0.set_v(node, i, co.fbar0[i]);
            b.v0.set_v(node, i, co.v0[i]);
            b.w0g.set_v(node, i, co.w0g[i]);
            b.f0t.set_v(node, i, co.f0t[i]);
            for j in 0..dim {
                b.rho.set_m(node, i, j, co.rho[i][j]);
                b.sigma0.set_m(node, i, j, co.sigma0[i][j]);
                b.w0h.set_m(node, i, j, co.w0h[i][j]);
                b.f0g.set_m(node, i, j, co.f0g[i][j]);
                for k in 0..dim {
                    b.sgrad
                        .set((i * dim + j) * dim + k, node, co.sgrad[i][j][k]);
                    for l in 0..dim {
                        b.c.set(
                            ((i * dim + j) * dim + k) * dim + l,
                            node,
                            co.c[i][j][k][l],
                        );
                    }
                }
            }
        }
    }
    b
}

fn diff_field(grid: &Grid, f: &Field, axis: usize) -> Field {
    let mut out = Field::zeros(grid, f.rank);
    let mut tmp = vec![0.0; grid.num_nodes()];
    for comp in 0..f.ncomp() {
        ops::diff_axis(grid, f.comp_slice(comp), &mut tmp, axis);
        out.comp_slice_mut(comp).copy_from_slice(&tmp);
    }
    out
}

fn diff_bundle(grid: &Grid, b: &CoeffBundle, axis: usize) -> CoeffBundle {
    CoeffBundle {
        c: diff_field(grid, &b.c, axis),
        rho: diff_field(grid, &b.rho, axis),
        sigma0: diff_field(grid, &b.sigma0, axis),
        fbar0: diff_field(grid, &b.fbar0, axis),
        v0: diff_field(grid, &b.v0, axis),
        sgrad: diff_field(grid, &b.sgrad, axis),
        w0g: diff_field(grid, &b.w0g, axis),
        w0h: diff_field(grid, &b.w0h, axis),
        f0t: diff_field(grid, &b.f0t, axis),
        f0g: diff_field(grid, &b.f0g, axis),
    }
}

fn coeffs_from(b: &CoeffBundle, dim: usize, node: usize) -> Coeffs {
    let mut co = Coeffs::default();
    for i in 0..dim {
        co.fbar0[i] = b.fbar0.v(node, i);
        co.v0[i] = b.v0.v(node, i);
        co.w0g[i] = b.w0g.v(node, i);
        co.f0t[i] = b.f0t.v(node, i);
        for j in 0..dim {
            co.rho[i][j] = b.rho.m(node, i, j);
            co.sigma0[i][j] = b.sigma0.m(node, i, j);
            co.w0h[i][j] = b.w0h.m(node, i, j);
            co.f0g[i][j] = b.f0g.m(node, i, j);
            for k in 0..dim {
                co.sgrad[i][j][k] = b.sgrad.t3(node, i, j, k);
                for l in 0..dim {
                    co.c[i][j][k][l] = b.c.t4(node, i, j, k, l);
                }
            }
        }
    }
    co
}

fn coeffs_add_scaled(dst: &mut Coeffs, s: f64, add: &Coeffs, dim: usize) {
    for i in 0..dim {
        dst.fbar0[i] += s * add.fbar0[i];
        dst.v0[i] += s * add.v0[i];
        dst.w0g[i] += s * add.w0g[i];
        dst.f0t[i] += s * add.f0t[i];
        for j in 0..dim {
            dst.rho[i][j] += s * add.rho[i][j];
            dst.sigma0[i][j] += s * add.sigma0[i][j];
            dst.w0h[i][j] += s * add.w0h[i][j];
            dst.f0g[i][j] += s * add.f0g[i][j];
            for k in 0..dim {
                dst.sgrad[i][j][k] += s * add.sgrad[i][j][k];
                for l in 0..dim {
                    dst.c[i][j][k][l] += s * add.c[i][j][k][l];
                }
            }
        }
    }
}

fn centered_rate(a: &Field, b: &Field, two_dt: f64) -> Field {
    let mut out = b.clone();
    out.axpy(-1.0, a).expect("shape");
    out.scale(1.0 / two_dt);
    out
}

/// Action of the transformed trajectory minus the action of the original,
/// in absolute value, at a finite eps.
///
/// The transformed action uses first-order transported arguments: gradients
/// pick up (du)_b - u_,a (dx_a)_b, rates the analogous time expression, the
/// volume element the Jacobian 1 + eps (div dx + d(dt)/dt), and every
/// coefficient field (including any force series) is advected along the
/// coordinate perturbation. The window (lo, hi) must leave one snapshot of
/// slack at each end for centered time differences of the transform data.
pub fn action_defect(
    eng: &Engine,
    traj: &Trajectory,
    forces: Option<&[Field]>,
    tr: &LocalTransform,
    range: (usize, usize),
    eps: f64,
) -> Result<f64, CoreError> {
    let (lo, hi) = range;
    let len = traj.len();
    if tr.len() != len {
        return Err(CoreError::invalid("transform length must match the trajectory"));
    }
    if lo < 1 || hi + 1 > len || lo >= hi {
        return Err(CoreError::invalid(
            "defect window must lie strictly inside the trajectory",
        ));
    }
    if !eps.is_finite() {
        return Err(CoreError::invalid("eps must be finite"));
    }
    let grid = eng.grid;
    let dim = grid.dim;
    let nnodes = grid.num_nodes();
    let two_dt = 2.0 * traj.dt;

    let base = eng.action(traj, range, forces)?;

    let bundle = sample_bundle(eng);
    let dbundle: Vec<CoeffBundle> = (0..dim).map(|ax| diff_bundle(grid, &bundle, ax)).collect();

    let mut slab = Vec::with_capacity(hi - lo);
    let mut nodal = vec![0.0; nnodes];
    for n in lo..hi {
        let st = traj.state(n);
        let g = ops::grad(grid, &st.u);

        let dxf = &tr.dx[n];
        let dtcf = &tr.dtc[n];
        let duf = &tr.du[n];
        let gdx = ops::grad(grid, dxf);
        let gdtc = ops::grad(grid, dtcf);
        let gdu = ops::grad(grid, duf);
        let ddx = centered_rate(&tr.dx[n - 1], &tr.dx[n + 1], two_dt);
        let ddtc = centered_rate(&tr.dtc[n - 1], &tr.dtc[n + 1], two_dt);
        let ddu = centered_rate(&tr.du[n - 1], &tr.du[n + 1], two_dt);

        let f_n = forces.map(|fs| &fs[n]);
        let f_grad = f_n.map(|f| ops::grad(grid, f));
        let f_rate = forces.map(|fs| centered_rate(&fs[n - 1], &fs[n + 1], two_dt));

        for node in 0..nnodes {
            let mut a = crate::lagrangian::LocalArgs::default();
            let dtc_here = dtcf.s(node);
            let ddtc_here = ddtc.s(node);
            for i in 0..dim {
                a.u[i] = st.u.v(node, i) + eps * duf.v(node, i);
                let mut vdrag = st.udot.v(node, i) * ddtc_here;
                for j in 0..dim {
                    vdrag += g.m(node, i, j) * ddx.v(node, j);
                }
                a.udot[i] = st.udot.v(node, i) + eps * (ddu.v(node, i) - vdrag);
                if let Some(f) = f_n {
                    let mut adv = f_rate.as_ref().expect("series").v(node, i) * dtc_here;
                    for j in 0..dim {
                        adv += f_grad.as_ref().expect("series").m(node, i, j) * dxf.v(node, j);
                    }
                    a.f[i] = f.v(node, i) + eps * adv;
                }
                for bx in 0..dim {
                    let mut gdrag = st.udot.v(node, i) * gdtc.v(node, bx);
                    for j in 0..dim {
                        gdrag += g.m(node, i, j) * gdx.m(node, j, bx);
                    }
                    a.g[i][bx] = g.m(node, i, bx) + eps * (gdu.m(node, i, bx) - gdrag);
                }
            }

            let mut co = coeffs_from(&bundle, dim, node);
            for ax in 0..dim {
                let shift = eps * dxf.v(node, ax);
                if shift != 0.0 {
                    let dco = coeffs_from(&dbundle[ax], dim, node);
                    coeffs_add_scaled(&mut co, shift, &dco, dim);
                }
            }

            let mut jac = 1.0 + eps * ddtc_here;
            for j in 0..dim {
                jac += eps * gdx.m(node, j, j);
            }
            if jac <= 0.0 {
                return Err(CoreError::invalid(
                    "transformation folds the domain: volume Jacobian is not positive",
                ));
            }
            nodal[node] = jac * density_with(eng.variant, dim, &co, &a).l;
        }
        slab.push(ops::integrate_nodal(grid, &nodal));
    }
    let transformed = traj.dt * ops::pairwise_sum(&slab);
    Ok((transformed - base).abs())
}

/// Defect at each eps of a sweep.
pub fn defect_sweep(
    eng: &Engine,
    traj: &Trajectory,
    forces: Option<&[Field]>,
    tr: &LocalTransform,
    range: (usize, usize),
    epsilons: &[f64],
) -> Result<Vec<(f64, f64)>, CoreError> {
    epsilons
        .iter()
        .map(|&e| action_defect(eng, traj, forces, tr, range, e).map(|d| (e, d)))
        .collect()
}

/// Least-squares slope of log(defect) against log(eps).
pub fn fit_loglog_slope(pts: &[(f64, f64)]) -> Result<f64, CoreError> {
    if pts.len() < 2 {
        return Err(CoreError::invalid("slope fit needs at least two points"));
    }
    let mut xs = Vec::with_capacity(pts.len());
    let mut ys = Vec::with_capacity(pts.len());
    for &(e, d) in pts {
        if e <= 0.0 || d <= 0.0 {
            return Err(CoreError::invalid(
                "slope fit needs positive eps and defect values",
            ));
        }
        xs.push(e.ln());
        ys.push(d.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    if den == 0.0 {
        return Err(CoreError::invalid("slope fit needs distinct eps values"));
    }
    Ok(num / den)
}

/// Noether current of one snapshot: a spatial flux vector and a time density.
pub struct NoetherField {
    pub space: Field,
    pub time: Field,
}

/// Noether current for the transform data of a single time level.
///
/// With the canonical partials s_ik = dL/du_i,k and p_i = -dL/dudot_i the
/// components are
///   P_k = L dx_k + s_ik (du_i - u_i,j dx_j - udot_i dt)
///   P_t = L dt   - p_i  (du_i - u_i,j dx_j - udot_i dt)
pub fn noether_current(
    eng: &Engine,
    state: &WaveState,
    f: Option<&Field>,
    dx: &Field,
    dtc: &Field,
    du: &Field,
) -> Result<NoetherField, CoreError> {
    let grid = eng.grid;
    let dim = grid.dim;
    let cf = eng.canonical_fields(state, f);
    let dens = eng.density_fields(state, f);
    let g = ops::grad(grid, &state.u);
    let mut space = Field::zeros(grid, 1);
    let mut time = Field::zeros(grid, 0);
    for node in 0..grid.num_nodes() {
        let l = dens.l.s(node);
        let dtc_here = dtc.s(node);
        // characteristic q_i = du_i - u_i,b dx^b, the field change at fixed
        // coordinates
        let mut q = [0.0; 2];
        for i in 0..dim {
            let mut pull = state.udot.v(node, i) * dtc_here;
            for j in 0..dim {
                pull += g.m(node, i, j) * dx.v(node, j);
            }
            q[i] = du.v(node, i) - pull;
        }
        for k in 0..dim {
            let mut pk = l * dx.v(node, k);
            for i in 0..dim {
                pk += cf.sbar.m(node, i, k) * q[i];
            }
            space.set_v(node, k, pk);
        }
        let mut pt = l * dtc_here;
        for i in 0..dim {
            pt -= cf.pbar.v(node, i) * q[i];
        }
        time.set(0, node, pt);
    }
    Ok(NoetherField { space, time })
}

/// Space-time divergence of a Noether current, centered in time over three
/// consecutive levels.
pub fn noether_divergence(
    grid: &Grid,
    prev: &NoetherField,
    cur: &NoetherField,
    next: &NoetherField,
    dt: f64,
) -> Result<Field, CoreError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(CoreError::invalid("dt must be positive"));
    }
    let mut out = ops::div_rank1(grid, &cur.space);
    out.axpy(1.0 / (2.0 * dt), &next.time)?;
    out.axpy(-1.0 / (2.0 * dt), &prev.time)?;
    Ok(out)
}

/// Charge of the rigid time-gauge transformation: the Lagrangian density
/// plus the momentum advected along the background velocity,
///   Q = integral of (L + p_i u_i,j v0_j).
/// For a vanishing background velocity this is the plain Lagrangian
/// integral, which only the gauge-coupled densities keep balanced.
pub fn temporal_charge(eng: &Engine, state: &WaveState) -> Result<f64, CoreError> {
    let grid = eng.grid;
    let dim = grid.dim;
    let dens = eng.density_fields(state, None);
    let cf = eng.canonical_fields(state, None);
    let g = ops::grad(grid, &state.u);
    let mut nodal = vec![0.0; grid.num_nodes()];
    for (node, slot) in nodal.iter_mut().enumerate() {
        let mut q = dens.l.s(node);
        for i in 0..dim {
            for j in 0..dim {
                q += cf.pbar.v(node, i) * g.m(node, i, j) * eng.pre.v0.v(node, j);
            }
        }
        *slot = q;
    }
    Ok(ops::integrate_nodal(grid, &nodal))
}

/// Charge of the rigid space-gauge transformation along axis `j`:
///   Q_j = integral of p_i gamma_ijr u_r.
/// Needs the pre-state connection.
pub fn spatial_charge(eng: &Engine, state: &WaveState, j: usize) -> Result<f64, CoreError> {
    let grid = eng.grid;
    let dim = grid.dim;
    if j >= dim {
        return Err(CoreError::invalid("charge axis out of range"));
    }
    let gamma = eng.pre.gamma()?;
    let cf = eng.canonical_fields(state, None);
    let mut nodal = vec![0.0; grid.num_nodes()];
    for (node, slot) in nodal.iter_mut().enumerate() {
        let mut q = 0.0;
        for i in 0..dim {
            for r in 0..dim {
                q += cf.pbar.v(node, i) * gamma.t3(node, i, j, r) * state.u.v(node, r);
            }
        }
        *slot = q;
    }
    Ok(ops::integrate_nodal(grid, &nodal))
}

/// Endpoint charges of a window, their drift rate, and the boundary flux
/// they should balance. On a periodic grid the flux vanishes identically;
/// non-periodic balances are not supported.
#[derive(Debug, Clone, Copy)]
pub struct Balance {
    pub q_start: f64,
    pub q_end: f64,
    pub rate: f64,
    pub flux: f64,
    pub residual: f64,
}

fn balance_over<Fq>(traj: &Trajectory, range: (usize, usize), mut q: Fq) -> Result<Balance, CoreError>
where
    Fq: FnMut(&WaveState) -> Result<f64, CoreError>,
{
    let (lo, hi) = range;
    if hi >= traj.len() || lo >= hi {
        return Err(CoreError::invalid("balance window out of range"));
    }
    let s0 = traj.state(lo);
    let s1 = traj.state(hi);
    let span = s1.t - s0.t;
    if span <= 0.0 {
        return Err(CoreError::invalid("balance window spans no time"));
    }
    let q_start = q(s0)?;
    let q_end = q(s1)?;
    let rate = (q_end - q_start) / span;
    let flux = 0.0;
    Ok(Balance {
        q_start,
        q_end,
        rate,
        flux,
        residual: (rate - flux).abs(),
    })
}

/// Drift balance of the time-gauge charge over snapshots [lo, hi].
pub fn conservation_temporal(
    eng: &Engine,
    traj: &Trajectory,
    range: (usize, usize),
) -> Result<Balance, CoreError> {
    if !eng.grid.is_periodic() {
        return Err(CoreError::invalid(
            "charge balances are only evaluated on periodic grids",
        ));
    }
    balance_over(traj, range, |s| temporal_charge(eng, s))
}

/// Drift balance of the space-gauge charge along axis `j`.
pub fn conservation_spatial(
    eng: &Engine,
    traj: &Trajectory,
    range: (usize, usize),
    j: usize,
) -> Result<Balance, CoreError> {
    if !eng.grid.is_periodic() {
        return Err(CoreError::invalid(
            "charge balances are only evaluated on periodic grids",
        ));
    }
    balance_over(traj, range, |s| spatial_charge(eng, s, j))
}

/// Body force series that completes a sampled trajectory into an exact
/// discrete solution: f_n is set to the force-free residual of the middle
/// level, which the force term then cancels identically. The two end levels
/// copy their neighbors; residuals are not defined there.
pub fn manufactured_force_series(
    eng: &Engine,
    traj: &Trajectory,
) -> Result<Vec<Field>, CoreError> {
    if traj.len() < 3 {
        return Err(CoreError::invalid(
            "force completion needs at least three snapshots",
        ));
    }
    let mut fs: Vec<Field> = Vec::with_capacity(traj.len());
    for n in 1..traj.len() - 1 {
        let r = eng.el_residual(
            traj.state(n - 1),
            traj.state(n),
            traj.state(n + 1),
            (None, None, None),
            traj.dt,
        )?;
        fs.push(r);
    }
    let first = fs[0].clone();
    let last = fs[fs.len() - 1].clone();
    fs.insert(0, first);
    fs.push(last);
    Ok(fs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use crate::lagrangian::Variant;
    use crate::material::MaterialModel;
    use crate::prestate::PreState;
    use crate::state::Trajectory;

    fn line_grid(n: usize) -> Grid {
        let l = 2.0 * std::f64::consts::PI;
        Grid::line(n, l / n as f64, Boundary::Periodic).unwrap()
    }

    /// Sample u_i(x, t) into a trajectory with centered rates.
    fn sampled(
        grid: &Grid,
        dt: f64,
        steps: usize,
        u: impl Fn([f64; 2], usize, f64) -> f64,
    ) -> Trajectory {
        let us = (0..=steps)
            .map(|n| {
                let t = n as f64 * dt;
                Field::from_fn_vector(grid, |x, i| u(x, i, t))
            })
            .collect();
        Trajectory::from_samples(dt, 0.0, us).unwrap()
    }

    /// Discrete dispersion root of the classical scalar chain built from
    /// centered first differences applied twice in both space and time.
    fn discrete_omega(c2: f64, k: f64, h: f64, dt: f64) -> f64 {
        let arg = c2.sqrt() * (k * h).sin() * dt / h;
        assert!(arg.abs() < 1.0);
        arg.asin() / dt
    }

    #[test]
    fn window_margins_are_exactly_zero() {
        let w = bump_window(20, 3);
        for n in 0..3 {
            assert_eq!(w[n], 0.0);
            assert_eq!(w[19 - n], 0.0);
        }
        assert_eq!(w[3], 0.0);
        assert_eq!(w[16], 0.0);
        assert!(w[10] > 0.9);
    }

    #[test]
    fn slope_fit_recovers_exact_power() {
        let pts: Vec<(f64, f64)> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&e: &f64| (e, 3.7 * e.powf(2.0)))
            .collect();
        let s = fit_loglog_slope(&pts).unwrap();
        assert!((s - 2.0).abs() < 1e-10);
    }

    #[test]
    fn charges_vanish_at_rest() {
        let grid = line_grid(24);
        let mat = MaterialModel::uniform_scalar_1d(&grid, 1.0, 1.0).unwrap();
        let u0 = Field::from_fn_vector(&grid, |x, i| if i == 0 { 0.02 * x[0].sin() } else { 0.0 });
        let pre = PreState::from_u0(&grid, &mat, u0, None).unwrap();
        let eng = Engine::new(Variant::Wfe, &grid, &mat, &pre);
        let rest = crate::state::WaveState::zeros(&grid);
        assert_eq!(temporal_charge(&eng, &rest).unwrap(), 0.0);
        assert_eq!(spatial_charge(&eng, &rest, 0).unwrap(), 0.0);
    }

    #[test]
    fn time_translation_charge_is_total_energy_for_classical_waves() {
        let grid = line_grid(32);
        let mat = MaterialModel::uniform_scalar_1d(&grid, 1.3, 0.8).unwrap();
        let pre = PreState::quiescent(&grid);
        let eng = Engine::new(Variant::Classical, &grid, &mat, &pre);
        let mut st = crate::state::WaveState::zeros(&grid);
        for node in 0..grid.num_nodes() {
            let x = grid.coords(node)[0];
            st.u.set_v(node, 0, 0.1 * (3.0 * x).sin());
            st.udot.set_v(node, 0, 0.05 * x.cos());
        }
        let tr = time_translation(&grid, 1, 1.0);
        let cur = noether_current(&eng, &st, None, &tr.dx[0], &tr.dtc[0], &tr.du[0]).unwrap();
        let q = ops::integrate_nodal(&grid, cur.time.comp_slice(0));
        let e = eng.energy_total(&st);
        assert!((q - e).abs() <= 1e-12 * e.abs().max(1.0));
    }

    #[test]
    fn force_completion_zeroes_the_residual() {
        let n = 32;
        let grid = line_grid(n);
        let mat = MaterialModel::uniform_scalar_1d(&grid, 1.0, 1.0).unwrap();
        let v0 = Field::from_fn_vector(&grid, |x, i| if i == 0 { 0.1 * x[0].sin() } else { 0.0 });
        let pre = PreState::from_sigma0(&grid, Field::zeros(&grid, 2), Some(v0)).unwrap();
        let eng = Engine::new(Variant::TemporalSym, &grid, &mat, &pre);

        let h = grid.dx[0];
        let k = 5.0;
        let dt = 0.4 * h;
        let om = discrete_omega(1.0, k, h, dt);
        let traj = sampled(&grid, dt, 40, |x, i, t| {
            if i == 0 {
                0.1 * (k * x[0] - om * t).sin()
            } else {
                0.0
            }
        });

        let fs = manufactured_force_series(&eng, &traj).unwrap();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for nn in 1..traj.len() - 1 {
            let r = eng
                .el_residual(
                    traj.state(nn - 1),
                    traj.state(nn),
                    traj.state(nn + 1),
                    (Some(&fs[nn - 1]), Some(&fs[nn]), Some(&fs[nn + 1])),
                    traj.dt,
                )
                .unwrap();
            worst = worst.max(r.max_abs());
            scale = scale.max(fs[nn].max_abs());
        }
        assert!(scale > 0.0);
        assert!(worst <= 1e-12 * scale.max(1.0), "worst {worst:e}");
    }

    #[test]
    fn matched_temporal_defect_is_quadratic_in_eps() {
        let n = 64;
        let grid = line_grid(n);
        let mat = MaterialModel::uniform_scalar_1d(&grid, 1.0, 1.0).unwrap();
        let v0 = Field::from_fn_vector(&grid, |x, i| if i == 0 { 0.05 * x[0].sin() } else { 0.0 });
        let pre = PreState::from_sigma0(&grid, Field::zeros(&grid, 2), Some(v0)).unwrap();
        let eng = Engine::new(Variant::TemporalSym, &grid, &mat, &pre);

        let h = grid.dx[0];
        let k = 5.0;
        let dt = 0.4 * h;
        let om = discrete_omega(1.0, k, h, dt);
        let steps = 60;
        let traj = sampled(&grid, dt, steps, |x, i, t| {
            if i == 0 {
                0.1 * (k * x[0] - om * t).sin()
            } else {
                0.0
            }
        });
        let fs = manufactured_force_series(&eng, &traj).unwrap();

        let profile = Field::from_fn_scalar(&grid, |x| 0.4 * (3.0 * x[0]).sin());
        let window = bump_window(traj.len(), 3);
        let tr = temporal_transform(&eng, &traj, &profile, &window).unwrap();

        let pts = defect_sweep(
            &eng,
            &traj,
            Some(&fs),
            &tr,
            (1, traj.len() - 1),
            &[1e-2, 1e-3, 1e-4],
        )
        .unwrap();
        let slope = fit_loglog_slope(&pts).unwrap();
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
    }
}
