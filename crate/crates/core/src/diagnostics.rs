//! Measurements on computed solutions: boundary traces and loss sets, the
//! boundary profile fit, the weighted gradient ratio, the one-dimensional
//! pointwise bound and blowup-time extrapolation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryPoint, Domain, Field, Grid, Point};
use crate::hamiltonian::{centered_at, profile_constant};
use crate::solver::{viscosity_limit, ViscosityLimit, ViscosityParams};

/// Distances along the inward normal (in units of `h`) used for extrapolation.
pub const TRACE_OFFSETS: [f64; 3] = [2.0, 4.0, 8.0];
/// A trace only counts as positive when it exceeds this multiple of its own
/// extrapolation uncertainty.
pub const TRACE_GATE: f64 = 10.0;
/// Default loss tolerance relative to `sup |u0|`.
pub const LOSS_TOL_FACTOR: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceValue {
    pub t: f64,
    pub value: f64,
    pub uncertainty: f64,
}

/// Extrapolates `u(x0, t)` from the interior along the inward normal for each
/// snapshot. The value is the least-squares linear intercept through the
/// samples at `2h, 4h, 8h`; the uncertainty is its distance to the two-point
/// intercept from `2h, 4h`.
pub fn boundary_trace(snapshots: &[Field], x0: &BoundaryPoint) -> Result<Vec<TraceValue>> {
    let Some(first) = snapshots.first() else {
        return Ok(Vec::new());
    };
    let grid = Arc::clone(&first.grid);
    let h = grid.h();
    let inward = x0.normal.scale(-1.0);
    let pts: Vec<Point> = TRACE_OFFSETS
        .iter()
        .map(|k| x0.point + inward.scale(k * h))
        .collect();
    let far = *pts.last().unwrap();
    if !grid.domain.contains(far)
        || grid.domain.distance_to_boundary(far)? < 0.5 * TRACE_OFFSETS[2] * h
    {
        return Err(Error::TraceTooShort {
            x: x0.point.x,
            y: x0.point.y,
        });
    }
    let d: Vec<f64> = TRACE_OFFSETS.iter().map(|k| k * h).collect();
    let d_mean = d.iter().sum::<f64>() / 3.0;
    let sxx: f64 = d.iter().map(|v| (v - d_mean).powi(2)).sum();
    let mut out = Vec::with_capacity(snapshots.len());
    for snap in snapshots {
        if !Arc::ptr_eq(&snap.grid, &grid) && *snap.grid != *grid {
            return Err(Error::GridMismatch);
        }
        let mut u = [0.0; 3];
        for (k, p) in pts.iter().enumerate() {
            u[k] = grid.interpolate(&snap.values, *p)?;
        }
        let u_mean = u.iter().sum::<f64>() / 3.0;
        let slope = d
            .iter()
            .zip(&u)
            .map(|(a, b)| (a - d_mean) * (b - u_mean))
            .sum::<f64>()
            / sxx;
        let value = u_mean - slope * d_mean;
        let two_point = 2.0 * u[0] - u[1];
        out.push(TraceValue {
            t: snap.time,
            value,
            uncertainty: (value - two_point).abs(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleTrace {
    pub point: Point,
    pub arclen: f64,
    pub traces: Vec<TraceValue>,
    pub max_trace: f64,
    pub first_positive_time: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LossReport {
    pub samples: Vec<SampleTrace>,
    /// Indices into `samples` of the flagged points.
    pub loss_set: Vec<usize>,
    pub loss_tol: f64,
    pub j_values: Vec<u64>,
    pub saturated_at: Option<u64>,
    pub cauchy_gap: f64,
}

impl LossReport {
    pub fn is_empty(&self) -> bool {
        self.loss_set.is_empty()
    }

    pub fn flagged_points(&self) -> impl Iterator<Item = &SampleTrace> {
        self.loss_set.iter().map(|&k| &self.samples[k])
    }

    pub const CSV_HEADER: &'static str = "arclen,x,y,max_trace,first_positive_t";

    /// One row per sample; `y` is empty in one dimension, a missing first
    /// positive time is empty.
    pub fn to_csv(&self, one_dimensional: bool) -> String {
        use crate::solver::fmt_f64;
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for smp in &self.samples {
            let y = if one_dimensional {
                String::new()
            } else {
                fmt_f64(smp.point.y)
            };
            let t = smp.first_positive_time.map(fmt_f64).unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_f64(smp.arclen),
                fmt_f64(smp.point.x),
                y,
                fmt_f64(smp.max_trace),
                t
            ));
        }
        s
    }
}

/// Builds the loss report from snapshots of an already computed limit.
pub fn loss_report(
    limit: &ViscosityLimit,
    samples: &[BoundaryPoint],
    loss_tol: f64,
) -> Result<LossReport> {
    let mut out = Vec::with_capacity(samples.len());
    let mut loss_set = Vec::new();
    for (k, bp) in samples.iter().enumerate() {
        let traces = boundary_trace(&limit.snapshots, bp)?;
        let positive =
            |tv: &TraceValue| tv.value > loss_tol && tv.value > TRACE_GATE * tv.uncertainty;
        let first_positive_time = traces.iter().find(|tv| positive(tv)).map(|tv| tv.t);
        let max_trace = traces
            .iter()
            .map(|tv| tv.value)
            .fold(f64::NEG_INFINITY, f64::max);
        let flagged = first_positive_time.is_some();
        if flagged {
            loss_set.push(k);
        }
        out.push(SampleTrace {
            point: bp.point,
            arclen: bp.arclen,
            traces,
            max_trace,
            first_positive_time,
            flagged,
        });
    }
    Ok(LossReport {
        samples: out,
        loss_set,
        loss_tol,
        j_values: limit.j_values.clone(),
        saturated_at: limit.saturated_at,
        cauchy_gap: limit.cauchy_gap,
    })
}

/// Runs the viscosity limit from `u0` once and flags every boundary sample
/// whose extrapolated trace becomes positive. `loss_tol = None` uses
/// `1e-2 * sup |u0|`.
pub fn detect_loss_set(
    u0: &Field,
    params: &ViscosityParams,
    sample_count: usize,
    loss_tol: Option<f64>,
) -> Result<(LossReport, ViscosityLimit)> {
    if sample_count < 4 && !matches!(u0.grid.domain, Domain::Interval { .. }) {
        return Err(Error::InvalidParameter(format!(
            "need at least 4 boundary samples, got {sample_count}"
        )));
    }
    let limit = viscosity_limit(u0, params)?;
    let samples = u0.grid.domain.boundary_samples(sample_count);
    let tol = loss_tol.unwrap_or(LOSS_TOL_FACTOR * u0.sup_norm());
    let report = loss_report(&limit, &samples, tol)?;
    Ok((report, limit))
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileFit {
    pub x0: Point,
    pub fitted_c: f64,
    pub fit_window: (f64, f64),
    /// Root-mean-square misfit relative to the root-mean-square data.
    pub residual: f64,
    pub samples: usize,
}

/// Default window `[4h, 0.1 * inradius]`.
pub fn default_fit_window(grid: &Grid) -> (f64, f64) {
    (4.0 * grid.h(), 0.1 * grid.domain.inradius())
}

/// Least-squares fit of `u = c * d^beta` along the inward normal at `x0`,
/// sampled every `h` over the window.
pub fn profile_fit(
    u: &Field,
    x0: &BoundaryPoint,
    p: f64,
    window: Option<(f64, f64)>,
) -> Result<ProfileFit> {
    let grid = &u.grid;
    let (lo, hi) = window.unwrap_or_else(|| default_fit_window(grid));
    let beta = (p - 2.0) / (p - 1.0);
    let h = grid.h();
    let inward = x0.normal.scale(-1.0);
    let mut num = 0.0;
    let mut den = 0.0;
    let mut data = Vec::new();
    let mut k = (lo / h).ceil();
    while k * h <= hi * (1.0 + 1e-12) {
        let d = k * h;
        let v = grid.interpolate(&u.values, x0.point + inward.scale(d))?;
        let b = d.powf(beta);
        num += v * b;
        den += b * b;
        data.push((b, v));
        k += 1.0;
    }
    if data.len() < 4 {
        return Err(Error::FitWindowTooSmall(data.len()));
    }
    let c = num / den;
    let ss: f64 = data.iter().map(|(b, v)| (v - c * b).powi(2)).sum();
    let sv: f64 = data.iter().map(|(_, v)| v * v).sum();
    let residual = if sv > 0.0 { (ss / sv).sqrt() } else { 0.0 };
    Ok(ProfileFit {
        x0: x0.point,
        fitted_c: c,
        fit_window: (lo, hi),
        residual,
        samples: data.len(),
    })
}

/// Boundary sample with the steepest nearby gradient: the point the profile
/// fit should look at.
pub fn steepest_boundary_point(u: &Field, sample_count: usize) -> BoundaryPoint {
    let grid = &u.grid;
    let probe = 2.0 * grid.h();
    grid.domain
        .boundary_samples(sample_count)
        .into_iter()
        .map(|bp| {
            let q = bp.point + bp.normal.scale(-probe);
            let v = grid.interpolate(&u.values, q).unwrap_or(0.0);
            (v, bp)
        })
        .fold(None::<(f64, BoundaryPoint)>, |best, (v, bp)| match best {
            Some((bv, _)) if bv >= v => best,
            _ => Some((v, bp)),
        })
        .map(|(_, bp)| bp)
        .expect("every domain has boundary samples")
}

/// `max |grad_h u| * delta^{1/(p-1)}` over interior nodes, with centered differences.
pub fn bernstein_ratio(u: &Field, p: f64) -> f64 {
    let grid = &u.grid;
    let e = 1.0 / (p - 1.0);
    grid.interior_nodes()
        .map(|i| centered_at(grid, &u.values, i) * grid.delta(i).powf(e))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// `max (u - [c_p d^beta + c1 d])` over the half interval nearest the chosen
/// endpoint, `d` the distance to that endpoint. Nonpositive when the bound holds.
pub fn check_endpoint_bound(u: &Field, c1: f64, p: f64, side: Side) -> Result<f64> {
    let Domain::Interval { a, b } = u.grid.domain else {
        return Err(Error::InvalidDomain(
            "the pointwise endpoint bound is one-dimensional".into(),
        ));
    };
    let mid = 0.5 * (a + b);
    let cp = profile_constant(p);
    let beta = (p - 2.0) / (p - 1.0);
    let mut worst = f64::NEG_INFINITY;
    for (i, pt) in u.grid.points().iter().enumerate() {
        let d = match side {
            Side::Left if pt.x > a && pt.x <= mid => pt.x - a,
            Side::Right if pt.x < b && pt.x >= mid => b - pt.x,
            _ => continue,
        };
        worst = worst.max(u.values[i] - (cp * d.powf(beta) + c1 * d));
    }
    Ok(worst)
}

/// First cap crossing of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub h: f64,
    pub cap: f64,
    pub time: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TstarEstimate {
    /// Latest crossing in the table: the blowup time is at least this.
    pub lower_bound: f64,
    pub estimate: f64,
    pub spread: f64,
}

/// Extrapolates the blowup time from crossing times at several resolutions
/// and caps. Per resolution the two largest caps are combined assuming
/// `sup grad ~ (T - t)^{-1}`; the finest resolution gives the estimate and the
/// spread covers its distance to the coarser estimate and to the latest crossing.
pub fn estimate_tstar(table: &[Crossing]) -> Result<TstarEstimate> {
    if let Some(c) = table.iter().find(|c| c.time.is_none()) {
        return Err(Error::NoBlowup(format!(
            "run with h = {}, cap = {} never crossed",
            c.h, c.cap
        )));
    }
    let mut hs: Vec<f64> = table.iter().map(|c| c.h).collect();
    hs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    hs.dedup();
    if hs.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two resolutions".into(),
        ));
    }
    let mut per_h = Vec::new();
    for &h in &hs {
        let mut rows: Vec<&Crossing> = table.iter().filter(|c| c.h == h).collect();
        if rows.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least two caps at h = {h}"
            )));
        }
        rows.sort_by(|a, b| a.cap.partial_cmp(&b.cap).unwrap());
        let (c1, c2) = (rows[rows.len() - 2], rows[rows.len() - 1]);
        let (g1, t1, g2, t2) = (c1.cap, c1.time.unwrap(), c2.cap, c2.time.unwrap());
        per_h.push((g2 * t2 - g1 * t1) / (g2 - g1));
    }
    let lower_bound = table
        .iter()
        .filter_map(|c| c.time)
        .fold(f64::NEG_INFINITY, f64::max);
    let estimate = per_h[0];
    let spread = (estimate - per_h[1])
        .abs()
        .max((estimate - lower_bound).abs());
    Ok(TstarEstimate {
        lower_bound,
        estimate,
        spread,
    })
}
