//! First Dirichlet eigenpair of `-Laplacian`, normalised to unit mass, and
//! the eigen-mass functional `y(t) = int u(t) phi_1`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Domain, Field, Grid};
use crate::linalg;

/// `phi_1 > 0` with `int phi_1 = 1`, its eigenvalue, and how far the
/// normalisation is from exact.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub phi1: Field,
    pub lambda1: f64,
    pub normalization_residual: f64,
}

/// JSON summary printed by the `eigen` subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct EigenSummary {
    pub lambda1: f64,
    pub c1: f64,
    pub c2: f64,
    pub normalization_residual: f64,
}

const SERIES_CUTOFF: f64 = 1e-16;

/// Power series of `J_0`, accurate for `|z| <= 8`.
pub fn bessel_j0(z: f64) -> f64 {
    let q = -0.25 * z * z;
    let mut term = 1.0f64;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term.abs() > SERIES_CUTOFF {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

/// Power series of `J_1`, accurate for `|z| <= 8`.
pub fn bessel_j1(z: f64) -> f64 {
    let q = -0.25 * z * z;
    let mut term: f64 = 0.5 * z;
    let mut sum = term;
    let mut k = 1.0;
    while term.abs() > SERIES_CUTOFF {
        term *= q / (k * (k + 1.0));
        sum += term;
        k += 1.0;
    }
    sum
}

/// First positive zero of `J_0`, by bisection on `[2, 3]`.
pub fn bessel_j0_first_zero() -> f64 {
    let (mut lo, mut hi) = (2.0f64, 3.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bessel_j0(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Composite 5-point Gauss-Legendre rule.
pub(crate) fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let width = (b - a) / panels as f64;
    let mut sum = 0.0;
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * width;
        for (x, w) in X.iter().zip(W) {
            sum += w * f(mid + 0.5 * width * x);
        }
    }
    0.5 * width * sum
}

/// Closed-form eigenpair sampled on the grid. The normalisation residual is
/// measured by high-order quadrature of the continuous eigenfunction.
pub fn analytic_eigenpair(grid: &Arc<Grid>) -> EigenPair {
    let (profile, lambda1, mass): (Box<dyn Fn(crate::geometry::Point) -> f64>, f64, f64) =
        match grid.domain {
            Domain::Interval { a, b } => {
                let len = b - a;
                let amp = PI / (2.0 * len);
                let k = PI / len;
                let mass = integrate(|x| amp * (k * (x - a)).sin(), a, b, 400);
                (Box::new(move |p| amp * (k * (p.x - a)).sin()), k * k, mass)
            }
            Domain::Disk { radius, dim: 2 } => {
                let j0 = bessel_j0_first_zero();
                let amp = j0 / (2.0 * PI * radius * radius * bessel_j1(j0));
                let k = j0 / radius;
                let mass = integrate(|r| 2.0 * PI * r * amp * bessel_j0(k * r), 0.0, radius, 400);
                (
                    Box::new(move |p| amp * bessel_j0(k * p.norm().min(radius))),
                    k * k,
                    mass,
                )
            }
            Domain::Disk { radius, .. } => {
                // Three-dimensional ball: phi = c sin(k r) / (k r).
                let k = PI / radius;
                let amp = PI / (4.0 * radius.powi(3));
                let shape = move |r: f64| {
                    let kr = k * r;
                    if kr < 1e-8 {
                        1.0 - kr * kr / 6.0
                    } else {
                        kr.sin() / kr
                    }
                };
                let mass = integrate(|r| 4.0 * PI * r * r * amp * shape(r), 0.0, radius, 400);
                (
                    Box::new(move |p| amp * shape(p.norm().min(radius))),
                    k * k,
                    mass,
                )
            }
            Domain::Rectangle { lx, ly } => {
                let amp = PI * PI / (4.0 * lx * ly);
                let (kx, ky) = (PI / lx, PI / ly);
                let mass = amp
                    * integrate(|x| (kx * x).sin(), 0.0, lx, 400)
                    * integrate(|y| (ky * y).sin(), 0.0, ly, 400);
                (
                    Box::new(move |p| amp * (kx * p.x).sin() * (ky * p.y).sin()),
                    kx * kx + ky * ky,
                    mass,
                )
            }
        };
    let phi1 = Field::from_fn(grid, |p| profile(p).max(0.0)).with_zero_boundary();
    EigenPair {
        phi1,
        lambda1,
        normalization_residual: (mass - 1.0).abs(),
    }
}

/// Inverse power iteration on the discrete Dirichlet Laplacian, stopped once
/// the eigenvalue estimate changes by less than `tol`; the result is scaled to
/// unit trapezoidal mass.
pub fn numeric_eigenpair(grid: &Arc<Grid>, tol: f64) -> Result<EigenPair> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let n = grid.len();
    let zero = vec![0.0; n];
    let mask = grid.boundary_mask().to_vec();
    let mut x: Vec<f64> = (0..n).map(|i| if mask[i] { 0.0 } else { 1.0 }).collect();
    let mut lambda = f64::INFINITY;
    const CAP: usize = 500;
    let mut change = f64::INFINITY;
    for _ in 0..CAP {
        let y = linalg::solve_dirichlet(grid, &x, &zero)?;
        let xy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let xx: f64 = x.iter().map(|a| a * a).sum();
        let next = xx / xy;
        change = (next - lambda).abs();
        lambda = next;
        let norm = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        x = y.iter().map(|v| v / norm).collect();
        if change < tol {
            let weights = grid.quadrature_weights();
            let mass: f64 = x.iter().zip(&weights).map(|(a, w)| a * w).sum();
            let values: Vec<f64> = x.iter().map(|v| v / mass).collect();
            let check: f64 = values.iter().zip(&weights).map(|(a, w)| a * w).sum();
            let mut phi1 = Field::from_values(grid, values)?;
            phi1 = phi1.with_zero_boundary();
            return Ok(EigenPair {
                phi1,
                lambda1: lambda,
                normalization_residual: (check - 1.0).abs(),
            });
        }
    }
    Err(Error::NoConvergence {
        method: "inverse power iteration",
        iterations: CAP,
        residual: change,
    })
}

/// Trapezoidal `int u phi_1 dx` (with the radial Jacobian on disks).
pub fn eigen_mass(u: &Field, ep: &EigenPair) -> Result<f64> {
    if !u.same_grid(&ep.phi1) {
        return Err(Error::GridMismatch);
    }
    Ok(eigen_mass_values(&u.grid, &u.values, &ep.phi1.values))
}

pub(crate) fn eigen_mass_values(grid: &Grid, u: &[f64], phi: &[f64]) -> f64 {
    let w = grid.quadrature_weights();
    u.iter().zip(phi).zip(&w).map(|((a, b), c)| a * b * c).sum()
}

/// Precomputed `phi_1 * weight` products for repeated eigen-mass evaluation.
#[derive(Debug, Clone)]
pub(crate) struct MassWeights(Vec<f64>);

impl MassWeights {
    pub(crate) fn new(ep: &EigenPair) -> Self {
        let w = ep.phi1.grid.quadrature_weights();
        MassWeights(ep.phi1.values.iter().zip(&w).map(|(a, b)| a * b).collect())
    }

    pub(crate) fn mass(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.0).map(|(a, b)| a * b).sum()
    }
}

/// `(c1, c2)` with `c1 delta <= phi_1 <= c2 delta` over interior nodes.
pub fn eigen_distance_bounds(ep: &EigenPair, grid: &Grid) -> (f64, f64) {
    grid.interior_nodes()
        .map(|i| ep.phi1.values[i] / grid.delta(i))
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| {
            (lo.min(r), hi.max(r))
        })
}

/// Discrete residual `||(-Lap_h) phi - lambda phi||_inf / ||phi||_inf`.
pub fn eigen_residual(ep: &EigenPair) -> f64 {
    let grid = &ep.phi1.grid;
    let mut lap = vec![0.0; grid.len()];
    grid.apply_laplacian(&ep.phi1.values, &mut lap);
    let worst = grid
        .interior_nodes()
        .map(|i| (-lap[i] - ep.lambda1 * ep.phi1.values[i]).abs())
        .fold(0.0f64, f64::max);
    worst / ep.phi1.sup_norm()
}

pub fn summarize(ep: &EigenPair) -> EigenSummary {
    let (c1, c2) = eigen_distance_bounds(ep, &ep.phi1.grid);
    EigenSummary {
        lambda1: ep.lambda1,
        c1,
        c2,
        normalization_residual: ep.normalization_residual,
    }
}
