//! Explicit initial data and comparison objects: the radial bump of the
//! auxiliary ball problem, its rescaled copies, C1 cutoffs, the elliptic
//! barrier, and the collar / localized data built from them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{detect_loss_set, LossReport};
use crate::error::{Error, Result};
use crate::geometry::{Domain, Field, Grid, Point};
use crate::hamiltonian::centered_at;
use crate::solver::{solve_poisson, ViscosityLimit, ViscosityParams};

/// Tolerance of the nodewise check `c1 >= |grad(c1 psi)|^p`.
pub const BARRIER_TOL: f64 = 1e-9;

/// Cubic smoothstep `S(s) = 1 - 3 s^2 + 2 s^3` on `[0, 1]`, clamped outside:
/// `S = 1` for `s <= 0`, `S = 0` for `s >= 1`, with zero slope at both ends.
pub fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    1.0 - s * s * (3.0 - 2.0 * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub amplitude: f64,
    pub support_radius: f64,
    pub center: Point,
}

impl BumpSpec {
    pub fn peak(&self) -> f64 {
        self.amplitude * (self.support_radius * self.support_radius).powi(2)
    }
}

/// `V0(x) = A max(0, 1/4 - |x|^2)^2`: C1, supported in the ball of radius
/// 1/2, peak `A / 16`. The grid must live on the unit ball.
pub fn radial_bump(grid: &Arc<Grid>, amplitude: f64) -> Result<(Field, BumpSpec)> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bump amplitude must be >= 0, got {amplitude}"
        )));
    }
    let unit = match grid.domain {
        Domain::Disk { radius, .. } => radius == 1.0,
        Domain::Interval { a, b } => a == -1.0 && b == 1.0,
        Domain::Rectangle { .. } => false,
    };
    if !unit {
        return Err(Error::InvalidDomain(
            "the bump lives on the unit ball".into(),
        ));
    }
    let f = Field::from_fn(grid, |p| {
        let s = (0.25 - p.norm().powi(2)).max(0.0);
        amplitude * s * s
    })
    .with_zero_boundary();
    Ok((
        f,
        BumpSpec {
            amplitude,
            support_radius: 0.5,
            center: Point::new(0.0, 0.0),
        },
    ))
}

/// `w(x, t) = rho^beta V((x - x1) / rho, t / rho^2)` from snapshots of a run
/// on the unit ball; linear in time between snapshots.
#[derive(Debug, Clone)]
pub struct ScaledSubsolution {
    snapshots: Vec<Field>,
    pub x1: Point,
    pub rho: f64,
    pub beta: f64,
}

impl ScaledSubsolution {
    pub fn t_max(&self) -> f64 {
        self.rho * self.rho * self.snapshots.last().map_or(0.0, |f| f.time)
    }

    pub fn eval(&self, x: Point, t: f64) -> Result<f64> {
        let y = (x - self.x1).scale(1.0 / self.rho);
        if y.norm() > 1.0 + 1e-12 {
            return Err(Error::OutsideBall { x: x.x, y: x.y });
        }
        let y = if y.norm() > 1.0 {
            y.scale(1.0 / y.norm())
        } else {
            y
        };
        let s = t / (self.rho * self.rho);
        let snaps = &self.snapshots;
        if s < snaps[0].time - 1e-12 || s > snaps.last().unwrap().time + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "time {t} outside the rescaled run [{}, {}]",
                self.rho * self.rho * snaps[0].time,
                self.t_max()
            )));
        }
        let k = snaps
            .partition_point(|f| f.time <= s)
            .clamp(1, snaps.len().max(2) - 1);
        let value = if snaps.len() == 1 {
            snaps[0].grid.interpolate(&snaps[0].values, y)?
        } else {
            let (a, b) = (&snaps[k - 1], &snaps[k]);
            let va = a.grid.interpolate(&a.values, y)?;
            let vb = b.grid.interpolate(&b.values, y)?;
            let span = b.time - a.time;
            let w = if span > 0.0 {
                ((s - a.time) / span).clamp(0.0, 1.0)
            } else {
                1.0
            };
            va + w * (vb - va)
        };
        Ok(self.rho.powf(self.beta) * value)
    }
}

/// Rescales the snapshots of a unit-ball run into the tangent ball of radius
/// `rho` touching the boundary at `x0`.
pub fn scaled_subsolution(
    v_run: &[Field],
    domain: &Domain,
    x0: Point,
    rho: f64,
    p: f64,
) -> Result<ScaledSubsolution> {
    if v_run.is_empty() {
        return Err(Error::InvalidParameter("empty auxiliary run".into()));
    }
    let x1 = domain.interior_tangent_ball(x0, rho)?;
    Ok(ScaledSubsolution {
        snapshots: v_run.to_vec(),
        x1,
        rho,
        beta: (p - 2.0) / (p - 1.0),
    })
}

/// Open set used to localize boundary data. Distances are Euclidean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Omega {
    /// Axis-aligned box `(x0, x1) x (y0, y1)`; in 1-D only `x0, x1` matter.
    Box {
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
    },
    Ball {
        cx: f64,
        cy: f64,
        radius: f64,
    },
}

impl Omega {
    pub fn distance(&self, p: Point) -> f64 {
        match *self {
            Omega::Box { x0, x1, y0, y1 } => {
                let dx = (x0 - p.x).max(p.x - x1).max(0.0);
                let dy = (y0 - p.y).max(p.y - y1).max(0.0);
                dx.hypot(dy)
            }
            Omega::Ball { cx, cy, radius } => (p.dist(Point::new(cx, cy)) - radius).max(0.0),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        match *self {
            Omega::Box { x0, x1, y0, y1 } => p.x > x0 && p.x < x1 && p.y > y0 && p.y < y1,
            Omega::Ball { cx, cy, radius } => p.dist(Point::new(cx, cy)) < radius,
        }
    }

    /// Dense samples of `omega ∩ boundary`, spaced at most `spacing` apart.
    pub fn boundary_part(&self, domain: &Domain, spacing: f64) -> Vec<Point> {
        match *domain {
            Domain::Interval { a, b } => [a, b]
                .into_iter()
                .map(Point::on_line)
                .filter(|q| self.contains(*q))
                .collect(),
            _ => {
                let count = ((domain.perimeter() / spacing).ceil() as usize).max(64);
                domain
                    .boundary_samples(count)
                    .into_iter()
                    .map(|bp| bp.point)
                    .filter(|q| self.contains(*q))
                    .collect()
            }
        }
    }
}

/// `h(x) = S(dist(x, omega) / eps)`: 1 on omega, 0 beyond distance `eps`.
pub fn smooth_cutoff_h(grid: &Arc<Grid>, omega: &Omega, eps: f64) -> Result<Field> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    Ok(Field::from_fn(grid, |p| {
        smoothstep(omega.distance(p) / eps)
    }))
}

#[derive(Debug, Clone, Serialize)]
pub struct Barrier {
    #[serde(skip)]
    pub psi: Field,
    pub c1: f64,
    pub sup_grad_psi: f64,
    /// `max (|grad(c1 psi)|^p - c1)` over nodes; nonpositive up to roundoff.
    pub max_supersolution_violation: f64,
    pub min_psi: f64,
}

/// Solves `-Lap psi = 1` with `psi = h` on the boundary and sets
/// `c1 = sup |grad psi|^{-p/(p-1)}`, so that `-Lap(c1 psi) = c1 >= |grad(c1 psi)|^p`.
pub fn build_barrier(grid: &Arc<Grid>, h_field: &Field, p: f64) -> Result<Barrier> {
    if !Arc::ptr_eq(grid, &h_field.grid) && **grid != *h_field.grid {
        return Err(Error::GridMismatch);
    }
    for i in grid.boundary_nodes() {
        let v = h_field.values[i];
        if !(-1e-12..=1.0 + 1e-12).contains(&v) {
            return Err(Error::InvalidParameter(format!(
                "boundary data must lie in [0, 1], got {v}"
            )));
        }
    }
    let rhs = Field::from_fn(grid, |_| 1.0);
    let psi = solve_poisson(&rhs, h_field)?;
    let grads: Vec<f64> = (0..grid.len())
        .map(|i| centered_at(grid, &psi.values, i))
        .collect();
    let sup_grad_psi = grads.iter().copied().fold(0.0, f64::max);
    if !(sup_grad_psi > 0.0) {
        return Err(Error::InvalidParameter("barrier has zero gradient".into()));
    }
    let c1 = sup_grad_psi.powf(-p / (p - 1.0));
    let max_supersolution_violation = grads
        .iter()
        .map(|g| (c1 * g).powf(p) - c1)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_supersolution_violation > BARRIER_TOL {
        return Err(Error::BarrierViolation(max_supersolution_violation));
    }
    let min_psi = psi.values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Barrier {
        psi,
        c1,
        sup_grad_psi,
        max_supersolution_violation,
        min_psi,
    })
}

/// C1 data equal to `rho^beta * v0_sup` on the collar `rho/2 <= delta <= 3 rho/2`,
/// tapering to zero at `delta <= rho/4` and `delta >= 2 rho`.
pub fn collar_data(grid: &Arc<Grid>, rho: f64, v0_sup: f64, p: f64) -> Result<Field> {
    let beta = (p - 2.0) / (p - 1.0);
    let probe = grid.domain.boundary_samples(4)[0].point;
    grid.domain.interior_tangent_ball(probe, rho)?;
    let plateau = rho.powf(beta) * v0_sup;
    let f = Field::from_fn(grid, |q| {
        let d = grid.domain.distance_to_boundary(q).unwrap_or(0.0);
        plateau * collar_profile(d, rho)
    })
    .with_zero_boundary();
    let inside = (0..grid.len()).any(|i| {
        let d = grid.delta(i);
        d >= 0.5 * rho && d <= 1.5 * rho
    });
    if !inside {
        return Err(Error::Infeasible(format!(
            "no grid node in the collar of width rho = {rho}"
        )));
    }
    Ok(f)
}

/// 0 below `rho/4`, 1 on `[rho/2, 3 rho/2]`, 0 beyond `2 rho`.
fn collar_profile(d: f64, rho: f64) -> f64 {
    let rise = 1.0 - smoothstep((d - 0.25 * rho) / (0.25 * rho));
    let fall = smoothstep((d - 1.5 * rho) / (0.5 * rho));
    rise.min(fall)
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalizedDataReport {
    pub plateau: f64,
    pub c1: f64,
    /// Nodes breaking `u0 = 0` where `dist(x, omega ∩ boundary) >= 2 rho`.
    pub zero_violations: usize,
    /// Nodes breaking `u0 <= c1 / 2`.
    pub cap_violations: usize,
    /// Nodes breaking `u0 >= plateau` on the inner region.
    pub plateau_violations: usize,
    pub plateau_nodes: usize,
    /// `min psi` over `dist <= 2 rho`; the construction wants `>= 1/2`.
    pub min_psi_near_omega: f64,
    /// `max (u0 - c1 psi)` over nodes.
    pub max_barrier_gap: f64,
}

/// Data localized near `omega ∩ boundary`:
/// zero at distance `>= 2 rho`, at most `c1/2` everywhere, and equal to
/// `rho^beta * v0_sup` on `{delta >= rho/2, dist <= 3 rho/2}`.
pub fn localized_data(
    grid: &Arc<Grid>,
    omega: &Omega,
    eps: f64,
    rho: f64,
    p: f64,
    barrier: &Barrier,
    v0_sup: f64,
) -> Result<(Field, LocalizedDataReport)> {
    let beta = (p - 2.0) / (p - 1.0);
    let c1 = barrier.c1;
    if !(rho > 0.0 && rho < eps / 3.0) {
        return Err(Error::Infeasible(format!(
            "need 0 < rho < eps/3, got rho = {rho}, eps = {eps}"
        )));
    }
    let plateau = rho.powf(beta) * v0_sup;
    if plateau >= 0.5 * c1 {
        return Err(Error::Infeasible(format!(
            "need rho^beta * sup V0 < c1/2, got {plateau:.6e} >= {:.6e}",
            0.5 * c1
        )));
    }
    let part = omega.boundary_part(&grid.domain, 0.125 * grid.h().min(rho));
    if part.is_empty() {
        return Err(Error::Infeasible("omega does not meet the boundary".into()));
    }
    let dist = |q: Point| part.iter().map(|b| b.dist(q)).fold(f64::INFINITY, f64::min);
    let mut values = vec![0.0; grid.len()];
    let mut rep = LocalizedDataReport {
        plateau,
        c1,
        zero_violations: 0,
        cap_violations: 0,
        plateau_violations: 0,
        plateau_nodes: 0,
        min_psi_near_omega: f64::INFINITY,
        max_barrier_gap: f64::NEG_INFINITY,
    };
    for i in 0..grid.len() {
        let q = grid.point(i);
        let d = dist(q);
        let delta = grid.delta(i);
        let rise = 1.0 - smoothstep((delta - 0.25 * rho) / (0.25 * rho));
        let fall = smoothstep((d - 1.5 * rho) / (0.5 * rho));
        let v = if grid.is_boundary(i) {
            0.0
        } else {
            plateau * rise.min(fall)
        };
        values[i] = v;
        if d >= 2.0 * rho && v != 0.0 {
            rep.zero_violations += 1;
        }
        if v > 0.5 * c1 {
            rep.cap_violations += 1;
        }
        if delta >= 0.5 * rho && d <= 1.5 * rho {
            rep.plateau_nodes += 1;
            if v < plateau {
                rep.plateau_violations += 1;
            }
        }
        if d <= 2.0 * rho {
            rep.min_psi_near_omega = rep.min_psi_near_omega.min(barrier.psi.values[i]);
        }
        rep.max_barrier_gap = rep.max_barrier_gap.max(v - c1 * barrier.psi.values[i]);
    }
    if rep.plateau_nodes == 0 {
        return Err(Error::Infeasible(format!(
            "no grid node in the plateau region for rho = {rho}"
        )));
    }
    Ok((Field::from_values(grid, values)?, rep))
}

#[derive(Debug, Clone)]
pub struct BumpSearch {
    pub amplitude: f64,
    pub bump: BumpSpec,
    pub report: LossReport,
    pub limit: ViscosityLimit,
    /// Time of the largest boundary trace and that trace.
    pub t0: f64,
    pub c0: f64,
    pub tried: Vec<f64>,
}

/// Doubles the bump amplitude from `start` until the run on the unit ball
/// loses its boundary values, giving up beyond `max_amplitude`.
pub fn search_loss_bump(
    grid: &Arc<Grid>,
    params: &ViscosityParams,
    start: f64,
    max_amplitude: f64,
    sample_count: usize,
) -> Result<BumpSearch> {
    let mut a = start;
    let mut tried = Vec::new();
    while a <= max_amplitude {
        tried.push(a);
        let (v0, bump) = radial_bump(grid, a)?;
        let (report, limit) = detect_loss_set(&v0, params, sample_count, None)?;
        if !report.is_empty() {
            let s = &report.samples[report.loss_set[0]];
            let best = s.traces.iter().fold(
                s.traces[0],
                |b, tv| if tv.value > b.value { *tv } else { b },
            );
            return Ok(BumpSearch {
                amplitude: a,
                bump,
                t0: best.t,
                c0: best.value,
                report,
                limit,
                tried,
            });
        }
        a *= 2.0;
    }
    Err(Error::SweepExhausted(max_amplitude))
}
