//! Discrete calculus on nodal fields: gradients, divergences, strains and
//! deterministic quadrature.
//!
//! All derivatives are second-order central differences. Periodic grids wrap;
//! otherwise the two boundary layers use the one-sided second-order stencils
//! (-3f0 + 4f1 - f2)/2h and (3fN - 4f(N-1) + f(N-2))/2h so the global order
//! stays two. Gradients append the derivative axis as the LAST tensor index:
//! grad(u)(i, j) = u_i,j and grad(grad(u))(i, j, k) = u_i,jk.
//!
//! Sums use a fixed pairwise tree so results do not depend on thread count or
//! iteration chunking.

use crate::field::Field;
use crate::grid::Grid;

/// Differentiates one contiguous component slice along `axis` into `dst`.
pub fn diff_axis(grid: &Grid, src: &[f64], dst: &mut [f64], axis: usize) {
    let nx = grid.n[0];
    let ny = grid.n[1];
    let h = grid.dx[axis];
    let inv2h = 1.0 / (2.0 * h);
    if axis >= grid.dim {
        dst.fill(0.0);
        return;
    }
    let (count, stride, nlines, line_stride) = if axis == 0 {
        (nx, 1usize, ny, nx)
    } else {
        (ny, nx, nx, 1usize)
    };
    for line in 0..nlines {
        let base = line * line_stride;
        let at = |i: usize| src[base + i * stride];
        if grid.is_periodic() {
            for i in 0..count {
                let ip = if i + 1 == count { 0 } else { i + 1 };
                let im = if i == 0 { count - 1 } else { i - 1 };
                dst[base + i * stride] = (at(ip) - at(im)) * inv2h;
            }
        } else {
            dst[base] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) * inv2h;
            for i in 1..count - 1 {
                dst[base + i * stride] = (at(i + 1) - at(i - 1)) * inv2h;
            }
            dst[base + (count - 1) * stride] =
                (3.0 * at(count - 1) - 4.0 * at(count - 2) + at(count - 3)) * inv2h;
        }
    }
}

/// Gradient: rank r in, rank r+1 out, derivative axis appended last.
pub fn grad(grid: &Grid, f: &Field) -> Field {
    assert!(f.rank < 4, "gradient would exceed rank 4");
    let mut out = Field::zeros(grid, f.rank + 1);
    let dim = grid.dim;
    for c in 0..f.ncomp() {
        let src = f.comp_slice(c).to_vec();
        for k in 0..dim {
            diff_axis(grid, &src, out.comp_slice_mut(c * dim + k), k);
        }
    }
    out
}

/// Two nested gradients; for a vector u this is u_i,jk with indices (i, j, k).
pub fn second_grad(grid: &Grid, f: &Field) -> Field {
    grad(grid, &grad(grid, f))
}

/// Divergence of a rank-2 field over its second index: out_i = D_j sigma_ij.
pub fn div_rank2(grid: &Grid, sigma: &Field) -> Field {
    assert_eq!(sigma.rank, 2);
    let dim = grid.dim;
    let mut out = Field::zeros(grid, 1);
    let mut tmp = vec![0.0; grid.num_nodes()];
    for i in 0..dim {
        for j in 0..dim {
            diff_axis(grid, sigma.comp_slice(i * dim + j), &mut tmp, j);
            let dst = out.comp_slice_mut(i);
            for (d, t) in dst.iter_mut().zip(tmp.iter()) {
                *d += t;
            }
        }
    }
    out
}

/// Scalar divergence of a rank-1 field: out = D_k v_k.
pub fn div_rank1(grid: &Grid, v: &Field) -> Field {
    assert_eq!(v.rank, 1);
    let mut out = Field::zeros(grid, 0);
    let mut tmp = vec![0.0; grid.num_nodes()];
    for k in 0..grid.dim {
        diff_axis(grid, v.comp_slice(k), &mut tmp, k);
        let dst = out.comp_slice_mut(0);
        for (d, t) in dst.iter_mut().zip(tmp.iter()) {
            *d += t;
        }
    }
    out
}

/// Symmetric gradient e_ij = (u_i,j + u_j,i) / 2.
pub fn strain(grid: &Grid, u: &Field) -> Field {
    assert_eq!(u.rank, 1);
    let g = grad(grid, u);
    let dim = grid.dim;
    let mut out = Field::zeros(grid, 2);
    for node in 0..g.nnodes {
        for i in 0..dim {
            for j in 0..dim {
                out.set_m(node, i, j, 0.5 * (g.m(node, i, j) + g.m(node, j, i)));
            }
        }
    }
    out
}

/// Pairwise tree summation; associativity is fixed by the recursion, so the
/// result is identical regardless of how callers might like to chunk work.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Midpoint-rule integral of nodal values: cell volume times the node sum.
pub fn integrate_nodal(grid: &Grid, values: &[f64]) -> f64 {
    pairwise_sum(values) * grid.cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    #[test]
    fn one_sided_edges_are_exact_on_quadratics() {
        let g = Grid::line(16, 0.25, Boundary::FixedDisplacement).unwrap();
        let f = Field::from_fn_scalar(&g, |x| 1.0 + 2.0 * x[0] + 3.0 * x[0] * x[0]);
        let df = grad(&g, &f);
        for node in 0..g.num_nodes() {
            let x = g.coords(node)[0];
            assert!((df.v(node, 0) - (2.0 + 6.0 * x)).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_gradient_converges_at_second_order() {
        let mut errs = Vec::new();
        for &n in &[32usize, 64, 128] {
            let l = 2.0 * std::f64::consts::PI;
            let g = Grid::line(n, l / n as f64, Boundary::Periodic).unwrap();
            let f = Field::from_fn_scalar(&g, |x| (3.0 * x[0]).sin());
            let df = grad(&g, &f);
            let mut e = 0.0_f64;
            for node in 0..g.num_nodes() {
                let x = g.coords(node)[0];
                e = e.max((df.v(node, 0) - 3.0 * (3.0 * x).cos()).abs());
            }
            errs.push(e);
        }
        let order = (errs[0] / errs[2]).ln() / 4.0_f64.ln();
        assert!(order > 1.9, "observed order {order}, errors {errs:?}");
    }

    #[test]
    fn mixed_partials_commute_to_rounding() {
        let g = Grid::rect([24, 24], [0.26, 0.31], Boundary::Periodic).unwrap();
        // periodic in both axes on the given spacings
        let lx = g.length(0);
        let ly = g.length(1);
        let f = Field::from_fn_scalar(&g, |x| {
            (2.0 * std::f64::consts::TAU * x[0] / lx).sin()
                * (std::f64::consts::TAU * x[1] / ly).cos()
        });
        let gg = second_grad(&g, &f);
        let mut worst = 0.0_f64;
        for node in 0..g.num_nodes() {
            worst = worst.max((gg.m(node, 0, 1) - gg.m(node, 1, 0)).abs());
        }
        assert!(worst < 1e-12, "mixed partial defect {worst}");
    }

    #[test]
    fn divergence_contracts_second_index() {
        let g = Grid::rect([12, 12], [0.3, 0.3], Boundary::FixedDisplacement).unwrap();
        // sigma = [[x, y], [2x, x + y]] has div = (1 + 1, 2 + 1) = (2, 3)
        let mut s = Field::zeros(&g, 2);
        for node in 0..g.num_nodes() {
            let [x, y] = g.coords(node);
            s.set_m(node, 0, 0, x);
            s.set_m(node, 0, 1, y);
            s.set_m(node, 1, 0, 2.0 * x);
            s.set_m(node, 1, 1, x + y);
        }
        let d = div_rank2(&g, &s);
        for node in 0..g.num_nodes() {
            assert!((d.v(node, 0) - 2.0).abs() < 1e-12);
            assert!((d.v(node, 1) - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pairwise_sum_matches_exact_series() {
        let xs: Vec<f64> = (1..=1000).map(|i| 1.0 / i as f64).collect();
        let mut naive = 0.0;
        for &x in &xs {
            naive += x;
        }
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-12);
        // splitting by hand reproduces the same tree result bit for bit
        let split = pairwise_sum(&xs[..500]) + pairwise_sum(&xs[500..]);
        assert_eq!(pairwise_sum(&xs).to_bits(), split.to_bits());
    }

    #[test]
    fn trapezoid_sum_is_exact_for_periodic_harmonics() {
        let g = Grid::line(64, 2.0 * std::f64::consts::PI / 64.0, Boundary::Periodic).unwrap();
        let f = Field::from_fn_scalar(&g, |x| (3.0 * x[0]).sin() + 0.5 * (5.0 * x[0]).cos());
        assert!(integrate_nodal(&g, f.as_slice()).abs() < 1e-13);
    }
}
