//! Amplitude thresholds: bracketing `lambda*` for a fixed profile, the
//! large-mass loss criterion, and the perturbation experiments around a
//! threshold solution.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{loss_report, profile_fit, LossReport};
use crate::eigen::{analytic_eigenpair, MassWeights};
use crate::error::{Error, Result};
use crate::geometry::{Domain, Field, Grid};
use crate::hamiltonian::{centered_at, profile_constant, HamiltonianParams};
use crate::solver::{default_gradient_cap, viscosity_limit, Engine, ViscosityParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "t_cross", rename_all = "lowercase")]
pub enum Classification {
    Global,
    Blowup(f64),
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub p: f64,
    pub t_max: f64,
    pub cfl_safety: f64,
    /// `None` uses the resolution-linked default cap.
    pub gradient_cap: Option<f64>,
    /// Trailing fraction of `t_max` over which decay must be sustained.
    pub decay_window: f64,
    /// Undecided runs are retried with `t_max` doubled this many times.
    pub max_retries: u32,
    pub start_lambda: f64,
}

impl ThresholdParams {
    pub fn new(p: f64, t_max: f64) -> Self {
        ThresholdParams {
            p,
            t_max,
            cfl_safety: 0.9,
            gradient_cap: None,
            decay_window: 0.2,
            max_retries: 2,
            start_lambda: 1.0,
        }
    }

    fn cap(&self, grid: &Grid) -> f64 {
        self.gradient_cap
            .unwrap_or_else(|| default_gradient_cap(grid.h(), self.p))
    }
}

/// What a single classification run saw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub lambda: f64,
    pub classification: Classification,
    pub t_max: f64,
    pub final_time: f64,
    pub sup_u_initial: f64,
    pub sup_u_final: f64,
    pub sup_grad_initial: f64,
    pub sup_grad_max: f64,
    pub steps: usize,
}

/// Classical-mode run of `lambda * phi`. Blowup once the cap is crossed;
/// Global once, over the trailing window, `sup u` has halved, `sup grad` has
/// not increased and sits below its initial value; Undecided at `t_max`.
pub fn classify_lambda(lambda: f64, phi: &Field, params: &ThresholdParams) -> Result<Evidence> {
    classify_run(lambda, phi, params, params.t_max)
}

fn classify_run(
    lambda: f64,
    phi: &Field,
    params: &ThresholdParams,
    t_max: f64,
) -> Result<Evidence> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if !phi.in_class_x() {
        return Err(Error::InvalidParameter(
            "profile is not in the admissible class".into(),
        ));
    }
    let grid = Arc::clone(&phi.grid);
    let cap = params.cap(&grid);
    let hp = HamiltonianParams::new(params.p, None)?;
    let u0: Vec<f64> = phi.values.iter().map(|v| lambda * v).collect();
    let sup = |u: &[f64]| u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sup_u_initial = sup(&u0);
    let sup_grad_initial = grid.max_edge_slope(&u0);
    let mut engine = Engine::new(&grid, params.cfl_safety, vec![(hp, u0)])?;
    let window = params.decay_window * t_max;
    let row_dt = t_max / 500.0;
    let mut rows: Vec<(f64, f64, f64)> = vec![(0.0, sup_u_initial, sup_grad_initial)];
    let mut sup_grad_max = sup_grad_initial;
    let mut classification = if sup_grad_initial >= cap {
        Classification::Blowup(0.0)
    } else {
        Classification::Undecided
    };
    while classification == Classification::Undecided && engine.time() < t_max {
        engine.step(t_max - engine.time())?;
        let u = engine.state(0);
        let g = grid.max_edge_slope(u);
        sup_grad_max = sup_grad_max.max(g);
        let t = engine.time();
        if g >= cap {
            classification = Classification::Blowup(t);
            break;
        }
        if t >= rows.last().unwrap().0 + row_dt || t >= t_max {
            rows.push((t, sup(u), g));
            if t >= window && decayed(&rows, t - window, sup_grad_initial) {
                classification = Classification::Global;
            }
        }
    }
    let u = engine.state(0);
    Ok(Evidence {
        lambda,
        classification,
        t_max,
        final_time: engine.time(),
        sup_u_initial,
        sup_u_final: sup(u),
        sup_grad_initial,
        sup_grad_max,
        steps: engine.steps(),
    })
}

fn decayed(rows: &[(f64, f64, f64)], from: f64, grad0: f64) -> bool {
    let start = rows.partition_point(|r| r.0 < from);
    let w = &rows[start.min(rows.len() - 1)..];
    let (first, last) = (w[0], w[w.len() - 1]);
    last.1 <= 0.5 * first.1
        && last.2 < grad0
        && w.windows(2).all(|p| p[1].2 <= p[0].2 * (1.0 + 1e-12))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub lambda: f64,
    pub classification: Classification,
    pub retries: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bisection {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub history: Vec<HistoryEntry>,
    /// Bisection steps after the bracket was established.
    pub steps: usize,
    /// True when the upper edge was set by an Undecided midpoint.
    pub hi_undecided: bool,
}

/// Bracketing then bisection over any classifier `classify(lambda, retry)`.
/// Undecided results are retried up to `max_retries` times; a midpoint that
/// stays undecided moves the upper edge down.
pub fn bisect_with<C>(
    mut classify: C,
    start: f64,
    rel_tol: f64,
    max_retries: u32,
) -> Result<Bisection>
where
    C: FnMut(f64, u32) -> Result<Classification>,
{
    if !(start > 0.0 && rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need start > 0 and 0 < rel_tol < 1, got {start}, {rel_tol}"
        )));
    }
    let mut history = Vec::new();
    let mut decide = |lambda: f64, history: &mut Vec<HistoryEntry>| -> Result<Classification> {
        let mut c = Classification::Undecided;
        let mut retries = 0;
        for level in 0..=max_retries {
            c = classify(lambda, level)?;
            retries = level;
            if c != Classification::Undecided {
                break;
            }
        }
        history.push(HistoryEntry {
            lambda,
            classification: c,
            retries,
        });
        Ok(c)
    };
    const MAX_EXPANSIONS: usize = 60;
    let first = decide(start, &mut history)?;
    let (mut lo, mut hi) = (None, None);
    match first {
        Classification::Global => lo = Some(start),
        Classification::Blowup(_) => hi = Some(start),
        Classification::Undecided => {}
    }
    let mut up = start;
    let mut down = start;
    for _ in 0..MAX_EXPANSIONS {
        if lo.is_some() && hi.is_some() {
            break;
        }
        if hi.is_none() {
            up *= 2.0;
            if let Classification::Blowup(_) = decide(up, &mut history)? {
                hi = Some(up);
            }
        }
        if lo.is_none() {
            down *= 0.5;
            if decide(down, &mut history)? == Classification::Global {
                lo = Some(down);
            }
        }
    }
    let (Some(mut lo), Some(mut hi)) = (lo, hi) else {
        return Err(Error::NoBracket(format!(
            "no Global/Blowup pair found from lambda = {start}"
        )));
    };
    // the expansion may have confirmed edges tighter than the first pair
    for e in &history {
        match e.classification {
            Classification::Global if e.lambda > lo && e.lambda < hi => lo = e.lambda,
            Classification::Blowup(_) if e.lambda < hi && e.lambda > lo => hi = e.lambda,
            _ => {}
        }
    }
    let mut steps = 0;
    let mut hi_undecided = false;
    while (hi - lo) / hi >= rel_tol {
        let mid = 0.5 * (lo + hi);
        steps += 1;
        match decide(mid, &mut history)? {
            Classification::Global => lo = mid,
            Classification::Blowup(_) => {
                hi = mid;
                hi_undecided = false;
            }
            Classification::Undecided => {
                hi = mid;
                hi_undecided = true;
            }
        }
    }
    check_monotone(&history)?;
    Ok(Bisection {
        lambda_lo: lo,
        lambda_hi: hi,
        history,
        steps,
        hi_undecided,
    })
}

/// No Global classification above a Blowup one.
pub fn check_monotone(history: &[HistoryEntry]) -> Result<()> {
    let lowest_blowup = history
        .iter()
        .filter(|e| matches!(e.classification, Classification::Blowup(_)))
        .map(|e| e.lambda)
        .fold(f64::INFINITY, f64::min);
    if let Some(g) = history
        .iter()
        .filter(|e| e.classification == Classification::Global && e.lambda > lowest_blowup)
        .map(|e| e.lambda)
        .reduce(f64::max)
    {
        return Err(Error::NonMonotone {
            global: g,
            blowup: lowest_blowup,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdResult {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub rel_tol: f64,
    pub evidence_lo: Evidence,
    pub evidence_hi: Evidence,
    pub history: Vec<HistoryEntry>,
    pub hi_undecided: bool,
    #[serde(skip)]
    pub profile_shape: Field,
}

/// Brackets `lambda*` for the profile `phi` until
/// `(lambda_hi - lambda_lo) / lambda_hi < rel_tol`.
pub fn bisect_threshold(
    phi: &Field,
    params: &ThresholdParams,
    rel_tol: f64,
) -> Result<ThresholdResult> {
    let mut runs: Vec<Evidence> = Vec::new();
    let b = bisect_with(
        |lambda, level| {
            let ev = classify_run(lambda, phi, params, params.t_max * f64::from(1u32 << level))?;
            let c = ev.classification;
            runs.push(ev);
            Ok(c)
        },
        params.start_lambda,
        rel_tol,
        params.max_retries,
    )?;
    let last_at = |lambda: f64| {
        runs.iter()
            .rev()
            .find(|e| e.lambda == lambda)
            .cloned()
            .unwrap()
    };
    Ok(ThresholdResult {
        lambda_lo: b.lambda_lo,
        lambda_hi: b.lambda_hi,
        rel_tol,
        evidence_lo: last_at(b.lambda_lo),
        evidence_hi: last_at(b.lambda_hi),
        history: b.history,
        hi_undecided: b.hi_undecided,
        profile_shape: phi.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassSweepParams {
    pub p: f64,
    pub t_max: f64,
    pub start_amplitude: f64,
    pub ratio: f64,
    pub count: usize,
    pub sample_count: usize,
    pub snapshot_count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MassSweepRow {
    pub amplitude: f64,
    pub mass: f64,
    pub flagged: Vec<bool>,
    pub crossing_time: Option<f64>,
    #[serde(skip)]
    pub report: LossReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct MassCriterion {
    pub eps: f64,
    pub m: f64,
    pub amplitude: f64,
    pub index: usize,
    pub sweep: Vec<MassSweepRow>,
}

/// The sweep family: `A * (phi_1 / max phi_1)^2`, flat at the boundary.
pub fn mass_family(grid: &Arc<Grid>, amplitude: f64) -> Field {
    let ep = analytic_eigenpair(grid);
    let top = ep.phi1.sup_norm();
    let values = ep
        .phi1
        .values
        .iter()
        .map(|v| amplitude * (v.max(0.0) / top).powi(2))
        .collect();
    Field::from_values(grid, values)
        .expect("eigenfunction lives on the same grid")
        .with_zero_boundary()
}

/// Runs every amplitude of the geometric sweep (concurrently, results in
/// sweep order) and records which boundary samples lose their values.
pub fn mass_sweep(grid: &Arc<Grid>, params: &MassSweepParams) -> Result<Vec<MassSweepRow>> {
    let ep = analytic_eigenpair(grid);
    let weights = MassWeights::new(&ep);
    let samples = grid.domain.boundary_samples(params.sample_count);
    let amplitudes: Vec<f64> = (0..params.count)
        .map(|k| params.start_amplitude * params.ratio.powi(k as i32))
        .collect();
    amplitudes
        .par_iter()
        .map(|&a| {
            let u0 = mass_family(grid, a);
            let times: Vec<f64> = (1..=params.snapshot_count)
                .map(|k| params.t_max * k as f64 / params.snapshot_count as f64)
                .collect();
            let vp = ViscosityParams::new(params.p, params.t_max, grid).with_snapshots(times);
            let limit = viscosity_limit(&u0, &vp)?;
            let report = loss_report(
                &limit,
                &samples,
                crate::diagnostics::LOSS_TOL_FACTOR * u0.sup_norm(),
            )?;
            let mut flagged = vec![false; samples.len()];
            for &k in &report.loss_set {
                flagged[k] = true;
            }
            Ok(MassSweepRow {
                amplitude: a,
                mass: weights.mass(&u0.values),
                flagged,
                crossing_time: limit.trace.blowup_time,
                report,
            })
        })
        .collect()
}

/// Smallest swept mass for which every window `B_eps(x0)` around a boundary
/// sample holds a flagged sample.
pub fn m_from_sweep(
    grid: &Grid,
    sweep: &[MassSweepRow],
    sample_count: usize,
    eps: f64,
) -> Result<MassCriterion> {
    let samples = grid.domain.boundary_samples(sample_count);
    for (index, row) in sweep.iter().enumerate() {
        let covered = samples.iter().all(|x0| {
            samples
                .iter()
                .zip(&row.flagged)
                .any(|(s, f)| *f && s.point.dist(x0.point) < eps + 1e-12)
        });
        if covered {
            return Ok(MassCriterion {
                eps,
                m: row.mass,
                amplitude: row.amplitude,
                index,
                sweep: sweep.to_vec(),
            });
        }
    }
    Err(Error::SweepExhausted(
        sweep.last().map_or(0.0, |r| r.amplitude),
    ))
}

pub fn mass_criterion_m(
    grid: &Arc<Grid>,
    eps: f64,
    params: &MassSweepParams,
) -> Result<MassCriterion> {
    let sweep = mass_sweep(grid, params)?;
    m_from_sweep(grid, &sweep, params.sample_count, eps)
}

/// Eigen-mass dynamics of a classical run up to the cap crossing, against the
/// model `H' = -lambda1 H + c0 H^p`.
#[derive(Debug, Clone, Serialize)]
pub struct MassOdeReport {
    pub h0: f64,
    /// `int |grad u0|^p phi_1 / H0^p`: the constant of the mass inequality at `t = 0`.
    pub c0: f64,
    pub lambda1: f64,
    /// `(lambda1 / c0)^{1/(p-1)}`.
    pub fixed_point: f64,
    /// Blowup time of `H' = (c0/2) H^p` from `h0`.
    pub ode_blowup_time: f64,
    pub crossing_time: Option<f64>,
    /// Largest decrease of the mass between consecutive rows while above the fixed point.
    pub max_drop_above_fixed_point: f64,
    pub trajectory: Vec<(f64, f64)>,
}

pub fn mass_ode_check(u0: &Field, p: f64, t_max: f64, cap: Option<f64>) -> Result<MassOdeReport> {
    let grid = Arc::clone(&u0.grid);
    let cap = cap.unwrap_or_else(|| default_gradient_cap(grid.h(), p));
    let ep = analytic_eigenpair(&grid);
    let weights = MassWeights::new(&ep);
    let grad_p: Vec<f64> = (0..grid.len())
        .map(|i| centered_at(&grid, &u0.values, i).powf(p))
        .collect();
    let h0 = weights.mass(&u0.values);
    if !(h0 > 0.0) {
        return Err(Error::InvalidParameter(
            "initial eigen-mass must be positive".into(),
        ));
    }
    let c0 = weights.mass(&grad_p) / h0.powf(p);
    let fixed_point = (ep.lambda1 / c0).powf(1.0 / (p - 1.0));
    let ode_blowup_time = 1.0 / ((p - 1.0) * 0.5 * c0 * h0.powf(p - 1.0));
    let hp = HamiltonianParams::new(p, None)?;
    let mut engine = Engine::new(&grid, 0.9, vec![(hp, u0.values.clone())])?;
    let mut trajectory = vec![(0.0, h0)];
    let mut crossing_time = None;
    while engine.time() < t_max {
        engine.step(t_max - engine.time())?;
        trajectory.push((engine.time(), weights.mass(engine.state(0))));
        if grid.max_edge_slope(engine.state(0)) >= cap {
            crossing_time = Some(engine.time());
            break;
        }
    }
    let max_drop_above_fixed_point = trajectory
        .windows(2)
        .filter(|w| w[0].1 > fixed_point)
        .map(|w| w[0].1 - w[1].1)
        .fold(0.0, f64::max);
    Ok(MassOdeReport {
        h0,
        c0,
        lambda1: ep.lambda1,
        fixed_point,
        ode_blowup_time,
        crossing_time,
        max_drop_above_fixed_point,
        trajectory,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Above,
    Below,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbationReport {
    pub direction: Direction,
    pub delta: f64,
    pub classification: Classification,
    pub loss_flagged: bool,
    pub first_loss_time: Option<f64>,
    /// Largest fitted endpoint constant before the first loss (or over the run).
    pub max_endpoint_ratio: f64,
    pub ratio_target: f64,
    pub c_p: f64,
    pub cap: f64,
    pub max_sup_grad: f64,
    pub t_max: f64,
}

/// Runs `(1 +- delta) u0_star` on an interval. Above: viscosity run with loss
/// detection and the endpoint profile ratio; below: classical run to `t_max`.
pub fn perturbation_experiment(
    u0_star: &Field,
    direction: Direction,
    delta: f64,
    params: &ThresholdParams,
) -> Result<PerturbationReport> {
    if !matches!(u0_star.grid.domain, Domain::Interval { .. }) {
        return Err(Error::InvalidDomain(
            "the perturbation experiment is one-dimensional".into(),
        ));
    }
    if !(delta >= 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in [0, 1), got {delta}"
        )));
    }
    let grid = Arc::clone(&u0_star.grid);
    let p = params.p;
    let c_p = profile_constant(p);
    let cap = params.cap(&grid);
    let factor = match direction {
        Direction::Above => 1.0 + delta,
        Direction::Below => 1.0 - delta,
    };
    let v0 = u0_star.scaled(factor);
    match direction {
        Direction::Above => {
            let times: Vec<f64> = (1..=100).map(|k| params.t_max * k as f64 / 100.0).collect();
            let mut vp = ViscosityParams::new(p, params.t_max, &grid).with_snapshots(times);
            vp.gradient_cap = cap;
            vp.cfl_safety = params.cfl_safety;
            let limit = viscosity_limit(&v0, &vp)?;
            let samples = grid.domain.boundary_samples(2);
            let report = loss_report(
                &limit,
                &samples,
                crate::diagnostics::LOSS_TOL_FACTOR * v0.sup_norm(),
            )?;
            let first_loss_time = report
                .flagged_points()
                .filter_map(|s| s.first_positive_time)
                .reduce(f64::min);
            let until = first_loss_time.unwrap_or(f64::INFINITY);
            let mut max_ratio = 0.0f64;
            for snap in limit.snapshots.iter().filter(|s| s.time <= until) {
                for bp in &samples {
                    max_ratio = max_ratio.max(profile_fit(snap, bp, p, None)?.fitted_c);
                }
            }
            Ok(PerturbationReport {
                direction,
                delta,
                classification: match limit.trace.blowup_time {
                    Some(t) => Classification::Blowup(t),
                    None => Classification::Undecided,
                },
                loss_flagged: !report.is_empty(),
                first_loss_time,
                max_endpoint_ratio: max_ratio,
                ratio_target: c_p * (1.0 + 0.5 * delta),
                c_p,
                cap,
                max_sup_grad: limit.trace.max_sup_gradient(),
                t_max: params.t_max,
            })
        }
        Direction::Below => {
            let no_stop = ThresholdParams {
                decay_window: 1.0,
                ..params.clone()
            };
            let ev = classify_run(1.0, &v0, &no_stop, params.t_max)?;
            Ok(PerturbationReport {
                direction,
                delta,
                classification: ev.classification,
                loss_flagged: false,
                first_loss_time: None,
                max_endpoint_ratio: f64::NAN,
                ratio_target: c_p * (1.0 - 0.5 * delta),
                c_p,
                cap,
                max_sup_grad: ev.sup_grad_max,
                t_max: params.t_max,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> Arc<Grid> {
        Arc::new(Grid::build(Domain::interval(-1.0, 1.0).unwrap(), n).unwrap())
    }

    fn quartic(g: &Arc<Grid>) -> Field {
        Field::from_fn(g, |q| (1.0 - q.x * q.x).powi(2)).with_zero_boundary()
    }

    #[test]
    fn step_oracle_bisection() {
        for tol in [1e-3, 1e-6] {
            let b = bisect_with(
                |l, _| {
                    Ok(if l >= 1.0 {
                        Classification::Blowup(1.0)
                    } else {
                        Classification::Global
                    })
                },
                0.3,
                tol,
                0,
            )
            .unwrap();
            assert!(b.lambda_lo < 1.0 && b.lambda_hi >= 1.0);
            assert!((b.lambda_hi - b.lambda_lo) / b.lambda_hi < tol);
            // bracket [0.6, 1.2] after expansion
            let bound = (0.6 / tol).log2().ceil() as usize;
            assert!(b.steps <= bound, "{} > {bound}", b.steps);
        }
    }

    #[test]
    fn undecided_retries_and_upper_shrink() {
        let mut calls = Vec::new();
        let b = bisect_with(
            |l, level| {
                calls.push((l, level));
                Ok(if l < 1.0 {
                    Classification::Global
                } else if l < 1.1 && level < 2 {
                    Classification::Undecided
                } else {
                    Classification::Blowup(1.0)
                })
            },
            1.0,
            1e-3,
            2,
        )
        .unwrap();
        assert!(calls.iter().any(|c| c.1 == 2));
        assert!(b.lambda_hi >= 1.0 && b.lambda_lo < 1.0);
        let never = bisect_with(|_, _| Ok(Classification::Global), 1.0, 1e-3, 0);
        assert!(matches!(never, Err(Error::NoBracket(_))));
    }

    #[test]
    fn monotonicity_guard() {
        let h = [
            HistoryEntry {
                lambda: 1.0,
                classification: Classification::Blowup(0.1),
                retries: 0,
            },
            HistoryEntry {
                lambda: 2.0,
                classification: Classification::Global,
                retries: 0,
            },
        ];
        assert!(matches!(check_monotone(&h), Err(Error::NonMonotone { .. })));
        assert!(check_monotone(&h[..1]).is_ok());
    }

    #[test]
    fn small_and_large_amplitudes() {
        let g = line(101);
        let phi = quartic(&g);
        let params = ThresholdParams::new(3.0, 2.0);
        let small = classify_lambda(1e-3, &phi, &params).unwrap();
        assert_eq!(small.classification, Classification::Global);
        assert!(small.final_time < params.t_max);
        let big = classify_lambda(20.0, &phi, &params).unwrap();
        assert!(matches!(big.classification, Classification::Blowup(_)));
        let above = classify_lambda(2.2, &phi, &params).unwrap();
        assert!(matches!(above.classification, Classification::Blowup(t) if t > 0.0));
    }

    #[test]
    fn coarse_threshold_bracket() {
        let g = line(101);
        let phi = quartic(&g);
        let params = ThresholdParams::new(3.0, 2.0);
        let r = bisect_threshold(&phi, &params, 1e-2).unwrap();
        assert!(r.lambda_lo < r.lambda_hi);
        assert!((r.lambda_hi - r.lambda_lo) / r.lambda_hi < 1e-2);
        assert!(r.lambda_hi > 1.0 && r.lambda_hi < 2.0, "{}", r.lambda_hi);
        assert_eq!(r.evidence_lo.classification, Classification::Global);
        check_monotone(&r.history).unwrap();
    }

    #[test]
    fn delta_zero_is_identity() {
        let g = line(51);
        let u = quartic(&g).scaled(1.2);
        assert_eq!(u.scaled(1.0 + 0.0).values, u.values);
        let params = ThresholdParams::new(3.0, 0.5);
        let a = perturbation_experiment(&u, Direction::Below, 0.0, &params).unwrap();
        let b = classify_run(
            1.0,
            &u,
            &ThresholdParams {
                decay_window: 1.0,
                ..params.clone()
            },
            0.5,
        )
        .unwrap();
        assert_eq!(a.max_sup_grad, b.sup_grad_max);
        assert_eq!(a.classification, b.classification);
    }

    #[test]
    fn mass_ode_on_large_data() {
        let g = line(101);
        let u0 = mass_family(&g, 12.0);
        let r = mass_ode_check(&u0, 3.0, 1.0, None).unwrap();
        assert!(r.crossing_time.is_some());
        assert!(r.h0 > r.fixed_point);
        assert!(r.max_drop_above_fixed_point <= 0.0);
    }
}
