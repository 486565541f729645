//! Explicit monotone time integration of the truncated problems
//! `u_t - Lap u = F_j(grad u)`, the sweep in `j` that realises the viscosity
//! solution, and the Dirichlet Poisson solve used by the barrier.
//!
//! Every run, single or grouped, goes through [`Engine`], which advances a set
//! of states in lockstep with one shared time step. Sharing the step is what
//! makes nodewise comparisons between runs exact: the update map is monotone
//! for any step below the CFL bound of every member.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::eigen::{analytic_eigenpair, MassWeights};
use crate::error::{Error, Result};
use crate::geometry::{Field, Grid, Layout};
use crate::hamiltonian::{f_j_lipschitz, HamiltonianParams};

/// Growth factor of `sup |u|` between two steps that counts as instability.
const INSTABILITY_GROWTH: f64 = 10.0;
/// Tolerance for the nodewise ordering `u_j <= u_{j'}` across the sweep.
pub const J_MONOTONICITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub hparams: HamiltonianParams,
    pub cfl_safety: f64,
    pub t_max: f64,
    /// Blowup is declared once the discrete sup gradient reaches this value.
    pub gradient_cap: f64,
    pub snapshot_times: Vec<f64>,
    /// Spacing of trace rows; zero records every step.
    pub trace_interval: f64,
}

impl SolverParams {
    /// Defaults: `cfl_safety = 0.9`, resolution-linked cap
    /// `G = 0.5 h^{-1/(p-1)}`, 1000 trace rows, no snapshots.
    pub fn new(hparams: HamiltonianParams, t_max: f64, grid: &Grid) -> Self {
        SolverParams {
            hparams,
            cfl_safety: 0.9,
            t_max,
            gradient_cap: default_gradient_cap(grid.h(), hparams.p),
            snapshot_times: Vec::new(),
            trace_interval: t_max / 1000.0,
        }
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    pub fn with_j(mut self, j: Option<u64>) -> Self {
        self.hparams.j = j;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        if !(self.gradient_cap > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gradient cap must be positive, got {}",
                self.gradient_cap
            )));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        if !(self.trace_interval >= 0.0) {
            return Err(Error::InvalidParameter(
                "trace interval must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// `G = 0.5 h^{-1/(p-1)}`: the steepest slope a grid of spacing `h` can show
/// against a `delta^beta` boundary profile.
pub fn default_gradient_cap(h: f64, p: f64) -> f64 {
    0.5 * h.powf(-1.0 / (p - 1.0))
}

/// One diagnostic row of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub sup_u: f64,
    pub sup_grad: f64,
    pub eigen_mass: f64,
    pub sup_ut: f64,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
    pub snapshots: Vec<Field>,
    pub blowup_flag: bool,
    /// First time the sup gradient reached the cap.
    pub blowup_time: Option<f64>,
    /// Last state strictly below the cap (the classical solution just before
    /// the crossing), when a crossing happened.
    pub pre_blowup: Option<Field>,
    pub final_state: Field,
    pub steps: usize,
}

pub const TRACE_CSV_HEADER: &str = "t,sup_u,sup_grad,eigen_mass,sup_ut";

/// `{:.16e}` keeps 17 significant digits, enough for exact round trips.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl RunTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.rows.len() * 120);
        s.push_str(TRACE_CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                fmt_f64(r.t),
                fmt_f64(r.sup_u),
                fmt_f64(r.sup_grad),
                fmt_f64(r.eigen_mass),
                fmt_f64(r.sup_ut)
            );
        }
        s
    }

    pub fn summary(&self, params: &SolverParams) -> RunSummary {
        RunSummary {
            blowup_flag: self.blowup_flag,
            blowup_time: self.blowup_time,
            steps: self.steps,
            final_time: self.final_state.time,
            params: params.clone(),
        }
    }

    pub fn max_sup_gradient(&self) -> f64 {
        self.rows.iter().map(|r| r.sup_grad).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub blowup_flag: bool,
    pub blowup_time: Option<f64>,
    pub steps: usize,
    pub final_time: f64,
    pub params: SolverParams,
}

/// Writes `Lap u + F(m)` at interior nodes (zero on the boundary) and
/// returns the largest upwind magnitude `m`.
fn rhs_kernel(grid: &Grid, hp: &HamiltonianParams, u: &[f64], out: &mut [f64]) -> f64 {
    #[inline(always)]
    fn pick(left: f64, centre: f64, right: f64, inv_h: f64) -> f64 {
        ((right - centre) * inv_h)
            .max((left - centre) * inv_h)
            .max(0.0)
    }
    let mut best = 0.0f64;
    match grid.layout {
        Layout::Line { h, n, .. } => {
            let inv_h = 1.0 / h;
            let inv_h2 = inv_h * inv_h;
            out[0] = 0.0;
            out[n - 1] = 0.0;
            for i in 1..n - 1 {
                let (l, c, r) = (u[i - 1], u[i], u[i + 1]);
                let m = pick(l, c, r, inv_h);
                best = best.max(m);
                out[i] = (l - 2.0 * c + r) * inv_h2 + hp.eval(m);
            }
        }
        Layout::Radial { h, n, dim } => {
            let inv_h = 1.0 / h;
            let inv_h2 = inv_h * inv_h;
            let curv = (dim - 1) as f64;
            let m0 = pick(u[1], u[0], u[1], inv_h);
            best = best.max(m0);
            out[0] = 2.0 * dim as f64 * (u[1] - u[0]) * inv_h2 + hp.eval(m0);
            for i in 1..n - 1 {
                let (l, c, r) = (u[i - 1], u[i], u[i + 1]);
                let m = pick(l, c, r, inv_h);
                best = best.max(m);
                let radial = curv / (i as f64 * h) * (r - l) * 0.5 * inv_h;
                out[i] = (l - 2.0 * c + r) * inv_h2 + radial + hp.eval(m);
            }
            out[n - 1] = 0.0;
        }
        Layout::Plane { nx, ny, hx, hy } => {
            let (ihx, ihy) = (1.0 / hx, 1.0 / hy);
            let (ihx2, ihy2) = (ihx * ihx, ihy * ihy);
            out[..nx].fill(0.0);
            out[(ny - 1) * nx..].fill(0.0);
            for j in 1..ny - 1 {
                let row = j * nx;
                out[row] = 0.0;
                out[row + nx - 1] = 0.0;
                for k in row + 1..row + nx - 1 {
                    let c = u[k];
                    let (w, e, s, nn) = (u[k - 1], u[k + 1], u[k - nx], u[k + nx]);
                    let mx = pick(w, c, e, ihx);
                    let my = pick(s, c, nn, ihy);
                    let m = mx.hypot(my);
                    best = best.max(m);
                    out[k] = (w - 2.0 * c + e) * ihx2 + (s - 2.0 * c + nn) * ihy2 + hp.eval(m);
                }
            }
        }
    }
    best
}

/// `sqrt(sum_axis 1/h_axis^2)`, the sensitivity of the upwind magnitude to the centre value.
fn upwind_sensitivity(grid: &Grid) -> f64 {
    grid.spacings()
        .iter()
        .map(|h| 1.0 / (h * h))
        .sum::<f64>()
        .sqrt()
}

/// Largest monotone step for a state whose largest upwind magnitude is `m_max`:
/// `cfl / (diag(-Lap) + L * sqrt(sum 1/h^2))` with `L` the Lipschitz bound of `F_j` on `[0, m_max]`.
pub fn stable_dt(grid: &Grid, hp: &HamiltonianParams, m_max: f64, cfl: f64) -> f64 {
    let lip = f_j_lipschitz(m_max, hp);
    cfl / (grid.laplacian_diagonal() + lip * upwind_sensitivity(grid))
}

struct Member {
    hp: HamiltonianParams,
    u: Vec<f64>,
    prev: Vec<f64>,
    rhs: Vec<f64>,
    max_m: f64,
    sup: f64,
}

/// Lockstep explicit integrator for one or more states on a common grid.
pub struct Engine {
    grid: Arc<Grid>,
    members: Vec<Member>,
    t: f64,
    cfl: f64,
    steps: usize,
    last_dt: f64,
}

impl Engine {
    pub fn new(
        grid: &Arc<Grid>,
        cfl: f64,
        states: Vec<(HamiltonianParams, Vec<f64>)>,
    ) -> Result<Engine> {
        let n = grid.len();
        let mut members = Vec::with_capacity(states.len());
        for (hp, mut u) in states {
            if u.len() != n {
                return Err(Error::GridMismatch);
            }
            if u.iter().any(|v| !v.is_finite()) {
                return Err(Error::SolverAbort {
                    time: 0.0,
                    reason: "non-finite initial data".into(),
                });
            }
            for i in grid.boundary_nodes() {
                u[i] = 0.0;
            }
            let sup = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            members.push(Member {
                hp,
                prev: u.clone(),
                rhs: vec![0.0; n],
                u,
                max_m: 0.0,
                sup,
            });
        }
        Ok(Engine {
            grid: Arc::clone(grid),
            members,
            t: 0.0,
            cfl,
            steps: 0,
            last_dt: 0.0,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.members[k].u
    }

    pub fn previous_state(&self, k: usize) -> &[f64] {
        &self.members[k].prev
    }

    pub fn last_dt(&self) -> f64 {
        self.last_dt
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Refreshes every member's right-hand side and returns the shared
    /// monotone step.
    fn prepare(&mut self) -> f64 {
        let grid = &*self.grid;
        let mut dt = f64::INFINITY;
        for m in &mut self.members {
            m.max_m = rhs_kernel(grid, &m.hp, &m.u, &mut m.rhs);
            dt = dt.min(stable_dt(grid, &m.hp, m.max_m, self.cfl));
        }
        dt
    }

    /// `sup |Lap u + F(m)|` over interior nodes of member `k` at the current state.
    pub fn sup_time_derivative(&mut self, k: usize) -> f64 {
        let m = &mut self.members[k];
        m.max_m = rhs_kernel(&self.grid, &m.hp, &m.u, &mut m.rhs);
        m.rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// One forward Euler step of length at most `dt_limit`; returns the step taken.
    pub fn step(&mut self, dt_limit: f64) -> Result<f64> {
        let dt = self.prepare().min(dt_limit);
        let t_new = self.t + dt;
        let mask = self.grid.boundary_mask();
        for m in &mut self.members {
            std::mem::swap(&mut m.u, &mut m.prev);
            let mut sup = 0.0f64;
            for i in 0..m.u.len() {
                let v = if mask[i] {
                    0.0
                } else {
                    m.prev[i] + dt * m.rhs[i]
                };
                m.u[i] = v;
                sup = sup.max(v.abs());
            }
            if !sup.is_finite() {
                return Err(Error::SolverAbort {
                    time: t_new,
                    reason: "non-finite state".into(),
                });
            }
            if m.sup > 0.0 && sup > INSTABILITY_GROWTH * m.sup {
                return Err(Error::SolverAbort {
                    time: t_new,
                    reason: format!("sup |u| grew from {:e} to {:e} in one step", m.sup, sup),
                });
            }
            m.sup = sup;
        }
        self.t = t_new;
        self.steps += 1;
        self.last_dt = dt;
        Ok(dt)
    }
}

/// One forward-Euler step at the member's own CFL step.
pub fn step_explicit(u: &Field, params: &SolverParams) -> Result<Field> {
    let mut engine = Engine::new(
        &u.grid,
        params.cfl_safety,
        vec![(params.hparams, u.values.clone())],
    )?;
    let dt = engine.step(f64::INFINITY)?;
    Ok(Field {
        grid: Arc::clone(&u.grid),
        values: engine.state(0).to_vec(),
        time: u.time + dt,
    })
}

/// Integrates a group of initial states in lockstep and hands every step to
/// `observer(t, states)`. Snapshots of each member are taken at the completed
/// step nearest to each requested time. Returns `snapshots[member][k]`.
pub fn evolve_lockstep(
    grid: &Arc<Grid>,
    states: Vec<(HamiltonianParams, Vec<f64>)>,
    t_max: f64,
    cfl: f64,
    snapshot_times: &[f64],
    mut observer: impl FnMut(f64, &Engine) -> Result<()>,
) -> Result<Vec<Vec<Field>>> {
    let mut engine = Engine::new(grid, cfl, states)?;
    let count = engine.len();
    let mut snaps: Vec<Vec<Field>> = vec![Vec::new(); count];
    let mut pending = sorted_times(snapshot_times, t_max);
    take_due_snapshots(&engine, &mut pending, &mut snaps, true);
    observer(0.0, &engine)?;
    while engine.time() < t_max {
        engine.step(t_max - engine.time())?;
        take_due_snapshots(&engine, &mut pending, &mut snaps, false);
        observer(engine.time(), &engine)?;
    }
    Ok(snaps)
}

fn sorted_times(times: &[f64], t_max: f64) -> Vec<f64> {
    let mut v: Vec<f64> = times
        .iter()
        .copied()
        .filter(|t| *t >= 0.0 && *t <= t_max)
        .collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.reverse();
    v
}

/// Pops every requested time that the last step reached and stores the state
/// (current or previous) closest to it.
fn take_due_snapshots(
    engine: &Engine,
    pending: &mut Vec<f64>,
    snaps: &mut [Vec<Field>],
    initial: bool,
) {
    let t = engine.time();
    while let Some(&ts) = pending.last() {
        if ts > t {
            break;
        }
        pending.pop();
        let prev_t = if initial { t } else { t - engine.last_dt };
        let use_prev = !initial && (ts - prev_t).abs() < (t - ts).abs();
        for (k, list) in snaps.iter_mut().enumerate() {
            let (values, time) = if use_prev {
                (engine.previous_state(k).to_vec(), prev_t)
            } else {
                (engine.state(k).to_vec(), t)
            };
            list.push(Field {
                grid: Arc::clone(&engine.grid),
                values,
                time,
            });
        }
    }
}

/// Solves the truncated problem from `u0`. With `j = None` (classical mode)
/// the run stops as soon as the sup gradient reaches the cap; with a finite
/// `j` it always runs to `t_max`.
pub fn solve_regularized(u0: &Field, params: &SolverParams) -> Result<RunTrace> {
    let stop_at_cap = params.hparams.j.is_none();
    run_single(u0, params, stop_at_cap)
}

/// Same integration as [`solve_regularized`] but never stops at the cap; the
/// first crossing is still recorded.
pub fn solve_through(u0: &Field, params: &SolverParams) -> Result<RunTrace> {
    run_single(u0, params, false)
}

fn run_single(u0: &Field, params: &SolverParams, stop_at_cap: bool) -> Result<RunTrace> {
    params.validate()?;
    let grid = Arc::clone(&u0.grid);
    let ep = analytic_eigenpair(&grid);
    let weights = MassWeights::new(&ep);
    let mut engine = Engine::new(
        &grid,
        params.cfl_safety,
        vec![(params.hparams, u0.values.clone())],
    )?;
    let mut snaps: Vec<Vec<Field>> = vec![Vec::new()];
    let mut pending = sorted_times(&params.snapshot_times, params.t_max);
    let mut rows = Vec::new();
    let mut next_row = 0.0;
    let mut blowup_time = None;
    let mut pre_blowup = None;

    let record = |engine: &mut Engine, rows: &mut Vec<TraceRow>| {
        let sup_ut = engine.sup_time_derivative(0);
        let u = engine.state(0);
        rows.push(TraceRow {
            t: engine.time(),
            sup_u: u.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            sup_grad: grid.max_edge_slope(u),
            eigen_mass: weights.mass(u),
            sup_ut,
        });
    };

    take_due_snapshots(&engine, &mut pending, &mut snaps, true);
    record(&mut engine, &mut rows);
    next_row += params.trace_interval;
    if grid.max_edge_slope(engine.state(0)) >= params.gradient_cap {
        blowup_time = Some(0.0);
    }
    while blowup_time.is_none() || !stop_at_cap {
        if engine.time() >= params.t_max {
            break;
        }
        engine.step(params.t_max - engine.time())?;
        take_due_snapshots(&engine, &mut pending, &mut snaps, false);
        let crossed =
            blowup_time.is_none() && grid.max_edge_slope(engine.state(0)) >= params.gradient_cap;
        if crossed {
            blowup_time = Some(engine.time());
            pre_blowup = Some(Field {
                grid: Arc::clone(&grid),
                values: engine.previous_state(0).to_vec(),
                time: engine.time() - engine.last_dt,
            });
        }
        let done = engine.time() >= params.t_max || (crossed && stop_at_cap);
        if engine.time() + 1e-15 >= next_row || done || crossed {
            record(&mut engine, &mut rows);
            while next_row <= engine.time() + 1e-15 {
                next_row += params.trace_interval.max(f64::MIN_POSITIVE);
                if params.trace_interval == 0.0 {
                    break;
                }
            }
        }
    }
    let final_state = Field {
        grid: Arc::clone(&grid),
        values: engine.state(0).to_vec(),
        time: engine.time(),
    };
    Ok(RunTrace {
        rows,
        snapshots: snaps.pop().unwrap_or_default(),
        blowup_flag: blowup_time.is_some(),
        blowup_time,
        pre_blowup,
        final_state,
        steps: engine.steps(),
    })
}

/// Inputs of the sweep `j -> infinity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViscosityParams {
    pub p: f64,
    pub cfl_safety: f64,
    pub t_max: f64,
    pub j_schedule: Vec<u64>,
    /// Successive iterates closer than this (sup norm over all snapshots)
    /// count as saturated; `None` means `1e-4 * sup |u0|`.
    pub saturation_tol: Option<f64>,
    pub snapshot_times: Vec<f64>,
    pub gradient_cap: f64,
    pub trace_interval: f64,
}

impl ViscosityParams {
    pub fn new(p: f64, t_max: f64, grid: &Grid) -> Self {
        ViscosityParams {
            p,
            cfl_safety: 0.9,
            t_max,
            j_schedule: default_j_schedule(),
            saturation_tol: None,
            snapshot_times: vec![t_max],
            gradient_cap: default_gradient_cap(grid.h(), p),
            trace_interval: t_max / 1000.0,
        }
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }
}

/// `2, 4, ..., 1024`.
pub fn default_j_schedule() -> Vec<u64> {
    (1..=10).map(|k| 1u64 << k).collect()
}

#[derive(Debug, Clone)]
pub struct ViscosityLimit {
    /// Snapshots of the most truncated-free member.
    pub snapshots: Vec<Field>,
    /// Trace of the same member; `blowup_time` is its first cap crossing.
    pub trace: RunTrace,
    /// Members actually integrated, in increasing order.
    pub j_values: Vec<u64>,
    /// `gaps[k] = max_t |u_{j_{k+1}} - u_{j_k}|_inf` over the snapshots.
    pub gaps: Vec<f64>,
    pub saturated_at: Option<u64>,
    pub cauchy_gap: f64,
    /// Truncation levels at or above this value never bind on this grid, so
    /// those members coincide with the untruncated scheme.
    pub exact_from: u64,
}

/// Smallest `j` that can never be reached by the upwind magnitude of a
/// solution starting from `u0` on this grid.
pub fn exact_truncation_level(u0: &Field) -> u64 {
    let hi = u0.values.iter().fold(0.0f64, |m, v| m.max(*v));
    let lo = u0.values.iter().fold(0.0f64, |m, v| m.min(*v));
    ((hi - lo) * upwind_sensitivity(&u0.grid)).ceil().max(1.0) as u64
}

/// Integrates the truncated problems for every `j` in the schedule in
/// lockstep and measures how fast they settle. Members at or above
/// [`exact_truncation_level`] are bit-identical, so only the first of them is
/// integrated. Aborts if the nodewise ordering in `j` fails by more than
/// [`J_MONOTONICITY_TOL`].
pub fn viscosity_limit(u0: &Field, params: &ViscosityParams) -> Result<ViscosityLimit> {
    if params.j_schedule.is_empty() {
        return Err(Error::InvalidParameter("empty j schedule".into()));
    }
    let mut schedule = params.j_schedule.clone();
    schedule.sort_unstable();
    schedule.dedup();
    if schedule[0] == 0 {
        return Err(Error::InvalidParameter("j must be positive".into()));
    }
    let exact_from = exact_truncation_level(u0);
    let mut j_values: Vec<u64> = schedule
        .iter()
        .copied()
        .filter(|j| *j < exact_from)
        .collect();
    let collapsed = schedule.iter().copied().find(|j| *j >= exact_from);
    if let Some(j) = collapsed {
        j_values.push(j);
    }
    let grid = Arc::clone(&u0.grid);
    let hp0 = HamiltonianParams::new(params.p, None)?;
    let top = HamiltonianParams {
        j: collapsed.map_or(j_values.last().copied(), |_| None),
        ..hp0
    };
    let mut states: Vec<(HamiltonianParams, Vec<f64>)> = j_values
        .iter()
        .map(|&j| (hp0.with_j(Some(j)), u0.values.clone()))
        .collect();
    // The collapsed member runs on the untruncated map: identical values, no branch.
    if collapsed.is_some() {
        states.last_mut().unwrap().0 = top;
    }

    let sp = SolverParams {
        hparams: top,
        cfl_safety: params.cfl_safety,
        t_max: params.t_max,
        gradient_cap: params.gradient_cap,
        snapshot_times: params.snapshot_times.clone(),
        trace_interval: params.trace_interval,
    };
    sp.validate()?;
    let ep = analytic_eigenpair(&grid);
    let weights = MassWeights::new(&ep);
    let last = states.len() - 1;
    let mut rows = Vec::new();
    let mut next_row = 0.0;
    let mut blowup_time = None;
    let mut pre_blowup = None;
    let mut scratch = vec![0.0; grid.len()];

    let snaps = evolve_lockstep(
        &grid,
        states,
        params.t_max,
        params.cfl_safety,
        &params.snapshot_times,
        |t, engine| {
            let u = engine.state(last);
            let slope = grid.max_edge_slope(u);
            let crossed = blowup_time.is_none() && slope >= params.gradient_cap;
            if crossed {
                blowup_time = Some(t);
                if engine.steps() > 0 {
                    pre_blowup = Some(Field {
                        grid: Arc::clone(&grid),
                        values: engine.previous_state(last).to_vec(),
                        time: t - engine.last_dt(),
                    });
                }
            }
            let done = t >= params.t_max;
            if t + 1e-15 >= next_row || done || crossed {
                rhs_kernel(&grid, &top, u, &mut scratch);
                rows.push(TraceRow {
                    t,
                    sup_u: u.iter().fold(0.0f64, |m, v| m.max(v.abs())),
                    sup_grad: slope,
                    eigen_mass: weights.mass(u),
                    sup_ut: scratch.iter().fold(0.0f64, |m, v| m.max(v.abs())),
                });
                while next_row <= t + 1e-15 {
                    if params.trace_interval == 0.0 {
                        break;
                    }
                    next_row += params.trace_interval;
                }
                for k in 1..engine.len() {
                    check_ordering(
                        engine.state(k - 1),
                        engine.state(k),
                        j_values[k - 1],
                        j_values[k],
                        t,
                    )?;
                }
            }
            Ok(())
        },
    )?;

    let mut gaps = Vec::with_capacity(j_values.len().saturating_sub(1));
    for k in 1..j_values.len() {
        let mut gap = 0.0f64;
        for (a, b) in snaps[k - 1].iter().zip(&snaps[k]) {
            check_ordering(&a.values, &b.values, j_values[k - 1], j_values[k], a.time)?;
            gap = gap.max(a.distance(b)?);
        }
        gaps.push(gap);
    }
    let tol = params.saturation_tol.unwrap_or(1e-4 * u0.sup_norm());
    let saturated_at = gaps.iter().position(|g| *g < tol).map(|k| j_values[k + 1]);
    let cauchy_gap = gaps.last().copied().unwrap_or(0.0);
    let top_snaps = snaps.into_iter().nth(last).unwrap_or_default();
    let final_state = top_snaps.last().cloned().unwrap_or_else(|| u0.clone());
    let trace = RunTrace {
        rows,
        snapshots: top_snaps.clone(),
        blowup_flag: blowup_time.is_some(),
        blowup_time,
        pre_blowup,
        final_state,
        steps: 0,
    };
    Ok(ViscosityLimit {
        snapshots: top_snaps,
        trace,
        j_values,
        gaps,
        saturated_at,
        cauchy_gap,
        exact_from,
    })
}

fn check_ordering(lo: &[f64], hi: &[f64], j_lo: u64, j_hi: u64, time: f64) -> Result<()> {
    let gap = lo.iter().zip(hi).map(|(a, b)| a - b).fold(0.0f64, f64::max);
    if gap > J_MONOTONICITY_TOL {
        return Err(Error::MonotonicityViolation {
            j_lo,
            j_hi,
            time,
            gap,
        });
    }
    Ok(())
}

/// Solves `-Lap u = rhs` inside with `u = boundary` on the boundary nodes.
pub fn solve_poisson(rhs: &Field, boundary: &Field) -> Result<Field> {
    if !rhs.same_grid(boundary) {
        return Err(Error::GridMismatch);
    }
    let values = crate::linalg::solve_dirichlet(&rhs.grid, &rhs.values, &boundary.values)?;
    Ok(Field {
        grid: Arc::clone(&rhs.grid),
        values,
        time: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;

    fn grid(d: Domain, n: usize) -> Arc<Grid> {
        Arc::new(Grid::build(d, n).unwrap())
    }

    fn hp(p: f64) -> HamiltonianParams {
        HamiltonianParams::new(p, None).unwrap()
    }

    #[test]
    fn zero_stays_zero() {
        let g = grid(Domain::interval(-1.0, 1.0).unwrap(), 49);
        let u0 = Field::zeros(&g);
        let tr = solve_regularized(&u0, &SolverParams::new(hp(3.0), 0.1, &g)).unwrap();
        assert!(tr.final_state.sup_norm() == 0.0);
        assert!(!tr.blowup_flag);
    }

    #[test]
    fn small_eigenmode_decays_at_lambda1() {
        let g = grid(Domain::interval(-1.0, 1.0).unwrap(), 99);
        let ep = analytic_eigenpair(&g);
        let u0 = ep.phi1.scaled(1e-4);
        let t = 0.3;
        let tr = solve_regularized(&u0, &SolverParams::new(hp(3.0), t, &g)).unwrap();
        let ratio = tr.final_state.sup_norm() / u0.sup_norm();
        let expect = (-ep.lambda1 * tr.final_state.time).exp();
        assert!((ratio / expect - 1.0).abs() < 2e-3, "{ratio} vs {expect}");
    }

    #[test]
    fn sup_never_increases() {
        let g = grid(Domain::rectangle(1.0, 1.0).unwrap(), 19);
        let u0 = Field::from_fn(&g, |p| {
            3.0 * (std::f64::consts::PI * p.x).sin() * (std::f64::consts::PI * p.y).sin()
        });
        let s0 = u0.sup_norm();
        let tr = solve_through(&u0, &SolverParams::new(hp(3.0), 0.05, &g)).unwrap();
        for r in &tr.rows {
            assert!(r.sup_u <= s0 + 1e-13);
        }
    }

    #[test]
    fn classical_mode_stops_at_cap() {
        let g = grid(Domain::interval(-1.0, 1.0).unwrap(), 99);
        let u0 = Field::from_fn(&g, |p| 2.0 * (1.0 - p.x * p.x).powi(2));
        let params = SolverParams::new(hp(3.0), 1.0, &g);
        let tr = solve_regularized(&u0, &params).unwrap();
        assert!(tr.blowup_flag);
        let tb = tr.blowup_time.unwrap();
        assert!(tr.final_state.time == tb && tb < 1.0);
        let pre = tr.pre_blowup.unwrap();
        assert!(g.max_edge_slope(&pre.values) < params.gradient_cap);
        assert!(g.max_edge_slope(&tr.final_state.values) >= params.gradient_cap);
    }

    #[test]
    fn snapshots_hit_nearest_step() {
        let g = grid(Domain::interval(0.0, 1.0).unwrap(), 19);
        let u0 = Field::from_fn(&g, |p| p.x * (1.0 - p.x));
        let params = SolverParams::new(hp(3.0), 0.05, &g).with_snapshots(vec![0.0, 0.01, 0.05]);
        let dt = stable_dt(&g, &hp(3.0), 1.0 / 0.05 * 0.25, 0.9);
        let tr = solve_regularized(&u0, &params).unwrap();
        assert_eq!(tr.snapshots.len(), 3);
        assert_eq!(tr.snapshots[0].time, 0.0);
        assert!((tr.snapshots[1].time - 0.01).abs() <= dt);
        assert!((tr.snapshots[2].time - 0.05).abs() < 1e-15);
    }

    #[test]
    fn lockstep_preserves_order() {
        let g = grid(Domain::interval(-1.0, 1.0).unwrap(), 59);
        let lo = Field::from_fn(&g, |p| 5.0 * (1.0 - p.x * p.x));
        let hi = Field::from_fn(&g, |p| 6.0 * (1.0 - p.x * p.x) + 0.3 * (1.0 - p.x.abs()));
        let mut worst = f64::NEG_INFINITY;
        evolve_lockstep(
            &g,
            vec![(hp(3.0), lo.values), (hp(3.0), hi.values)],
            0.2,
            0.9,
            &[],
            |_, e| {
                let gap = e
                    .state(0)
                    .iter()
                    .zip(e.state(1))
                    .map(|(a, b)| a - b)
                    .fold(f64::NEG_INFINITY, f64::max);
                worst = worst.max(gap);
                Ok(())
            },
        )
        .unwrap();
        assert!(worst <= 1e-12, "{worst}");
    }

    #[test]
    fn trace_csv_roundtrips() {
        let g = grid(Domain::interval(-1.0, 1.0).unwrap(), 19);
        let u0 = Field::from_fn(&g, |p| 1.0 - p.x * p.x);
        let tr = solve_regularized(&u0, &SolverParams::new(hp(3.0), 0.01, &g)).unwrap();
        let csv = tr.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(TRACE_CSV_HEADER));
        for (line, row) in lines.zip(&tr.rows) {
            let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            assert_eq!(
                v,
                vec![row.t, row.sup_u, row.sup_grad, row.eigen_mass, row.sup_ut]
            );
        }
    }

    #[test]
    fn sweep_is_monotone_and_collapses() {
        let g = grid(Domain::interval(-1.0, 1.0).unwrap(), 39);
        let u0 = Field::from_fn(&g, |p| 4.0 * (1.0 - p.x * p.x));
        let vp = ViscosityParams::new(3.0, 0.05, &g).with_snapshots(vec![0.025, 0.05]);
        let out = viscosity_limit(&u0, &vp).unwrap();
        assert_eq!(out.exact_from, (4.0f64 * 20.0).ceil() as u64);
        assert_eq!(*out.j_values.last().unwrap(), 128);
        assert!(out.j_values.len() < vp.j_schedule.len());
        assert!(out.gaps.iter().all(|g| *g >= 0.0));
        assert_eq!(out.snapshots.len(), 2);

        // the collapsed member equals a plain untruncated run
        let tr = solve_through(&u0, &SolverParams::new(hp(3.0), 0.05, &g)).unwrap();
        assert!(
            tr.final_state
                .distance(out.snapshots.last().unwrap())
                .unwrap()
                < 1e-12
        );
    }

    #[test]
    fn rejects_bad_params() {
        let g = grid(Domain::interval(-1.0, 1.0).unwrap(), 9);
        let u0 = Field::zeros(&g);
        let mut sp = SolverParams::new(hp(3.0), 1.0, &g);
        sp.t_max = -1.0;
        assert!(solve_regularized(&u0, &sp).is_err());
        let mut vp = ViscosityParams::new(3.0, 1.0, &g);
        vp.j_schedule.clear();
        assert!(viscosity_limit(&u0, &vp).is_err());
    }

    #[test]
    fn poisson_reproduces_quadratics() {
        for (d, exact) in [
            (
                Domain::interval(-1.0, 1.0).unwrap(),
                Box::new(|p: crate::Point| 0.5 * (1.0 - p.x * p.x))
                    as Box<dyn Fn(crate::Point) -> f64>,
            ),
            (
                Domain::disk(1.0).unwrap(),
                Box::new(|p: crate::Point| 0.25 * (1.0 - p.x * p.x - p.y * p.y)),
            ),
            (
                Domain::ball(1.0, 3).unwrap(),
                Box::new(|p: crate::Point| (1.0 - p.x * p.x - p.y * p.y) / 6.0),
            ),
            (
                Domain::rectangle(2.0, 1.0).unwrap(),
                Box::new(|p: crate::Point| 0.5 * p.y * (1.0 - p.y)),
            ),
        ] {
            let g = grid(d, 15);
            let rhs = Field::from_fn(&g, |_| 1.0);
            let bd = Field::from_fn(&g, |p| exact(p));
            let u = solve_poisson(&rhs, &bd).unwrap();
            let want = Field::from_fn(&g, |p| exact(p));
            assert!(u.distance(&want).unwrap() < 1e-9, "{:?}", g.domain);
        }
    }
}
