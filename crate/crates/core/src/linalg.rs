//! Dirichlet solves for the discrete Laplacian: conjugate gradients on the
//! symmetric line and plane stencils, a tridiagonal sweep for the radial one.

use crate::error::{Error, Result};
use crate::geometry::{Grid, Layout};

pub(crate) const CG_REL_TOL: f64 = 1e-10;

/// `out = -Laplacian(x)` on interior nodes, zero on boundary nodes.
fn apply_neg_laplacian(grid: &Grid, x: &[f64], out: &mut [f64]) {
    grid.apply_laplacian(x, out);
    for v in out.iter_mut() {
        *v = -*v;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `-Laplacian(u) = rhs` at interior nodes with `u = boundary` at
/// boundary nodes. `boundary` is indexed by node; interior entries are ignored.
pub(crate) fn solve_dirichlet(grid: &Grid, rhs: &[f64], boundary: &[f64]) -> Result<Vec<f64>> {
    match grid.layout {
        Layout::Radial { .. } => radial_tridiagonal(grid, rhs, boundary),
        _ => conjugate_gradient(grid, rhs, boundary),
    }
}

fn conjugate_gradient(grid: &Grid, rhs: &[f64], boundary: &[f64]) -> Result<Vec<f64>> {
    let n = grid.len();
    let mask = grid.boundary_mask();
    // Lift: g carries the boundary data, the unknown w vanishes on the boundary.
    let g: Vec<f64> = (0..n)
        .map(|i| if mask[i] { boundary[i] } else { 0.0 })
        .collect();
    let mut lg = vec![0.0; n];
    apply_neg_laplacian(grid, &g, &mut lg);
    let b: Vec<f64> = (0..n)
        .map(|i| if mask[i] { 0.0 } else { rhs[i] - lg[i] })
        .collect();

    let b_norm = dot(&b, &b).sqrt();
    let mut w = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(g);
    }
    let mut r = b.clone();
    let mut d = r.clone();
    let mut ad = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let cap = 10 * n + 100;
    for _ in 0..cap {
        if rr.sqrt() <= CG_REL_TOL * b_norm {
            return Ok(w.iter().zip(&g).map(|(a, b)| a + b).collect());
        }
        apply_neg_laplacian(grid, &d, &mut ad);
        let alpha = rr / dot(&d, &ad);
        for i in 0..n {
            w[i] += alpha * d[i];
            r[i] -= alpha * ad[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            d[i] = r[i] + beta * d[i];
        }
        rr = rr_new;
    }
    Err(Error::NoConvergence {
        method: "conjugate gradient",
        iterations: cap,
        residual: rr.sqrt() / b_norm,
    })
}

/// Thomas algorithm for the (non-symmetric) radial stencil.
fn radial_tridiagonal(grid: &Grid, rhs: &[f64], boundary: &[f64]) -> Result<Vec<f64>> {
    let Layout::Radial { h, n, dim } = grid.layout else {
        unreachable!("radial solve on a non-radial grid");
    };
    let m = n - 1; // unknowns 0..m-1, node m is the boundary
    let inv = 1.0 / (h * h);
    let curv = (dim - 1) as f64;
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut b = rhs[..m].to_vec();
    diag[0] = 2.0 * dim as f64 * inv;
    upper[0] = -2.0 * dim as f64 * inv;
    for i in 1..m {
        let r = i as f64 * h;
        lower[i] = -inv + curv / (2.0 * h * r);
        diag[i] = 2.0 * inv;
        upper[i] = -inv - curv / (2.0 * h * r);
    }
    if m >= 1 {
        b[m - 1] -= upper[m - 1] * boundary[m];
        upper[m - 1] = 0.0;
    }
    for i in 1..m {
        let f = lower[i] / diag[i - 1];
        diag[i] -= f * upper[i - 1];
        b[i] -= f * b[i - 1];
    }
    let mut x = vec![0.0; n];
    x[m] = boundary[m];
    x[m - 1] = b[m - 1] / diag[m - 1];
    for i in (0..m - 1).rev() {
        x[i] = (b[i] - upper[i] * x[i + 1]) / diag[i];
    }
    Ok(x)
}
