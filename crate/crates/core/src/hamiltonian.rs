//! The nonlinearity `|grad u|^p`, its quadratic-growth truncation `F_j`,
//! and the discrete gradient magnitudes used by the scheme and diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Field, Grid, Layout};

/// Exponent `p` and optional truncation level `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianParams {
    pub p: f64,
    /// `None` means the untruncated `s^p`.
    pub j: Option<u64>,
}

impl HamiltonianParams {
    pub fn new(p: f64, j: Option<u64>) -> Result<Self> {
        if !(p > 2.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gradient blowup needs p > 2, got {p}"
            )));
        }
        Self::subcritical(p, j)
    }

    /// Accepts `1 <= p <= 2` as well, for sanity runs outside the blowup regime.
    pub fn subcritical(p: f64, j: Option<u64>) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
        }
        if j == Some(0) {
            return Err(Error::InvalidParameter(
                "truncation level j must be >= 1".into(),
            ));
        }
        Ok(HamiltonianParams { p, j })
    }

    pub fn with_j(self, j: Option<u64>) -> Self {
        HamiltonianParams { j, ..self }
    }

    /// Boundary-layer exponent `beta = (p - 2) / (p - 1)`.
    pub fn beta(&self) -> f64 {
        (self.p - 2.0) / (self.p - 1.0)
    }

    /// See [`profile_constant`].
    pub fn c_p(&self) -> f64 {
        profile_constant(self.p)
    }

    /// Evaluates `F_j(s)` without the sign check.
    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        let sp = pow(s, self.p);
        match self.j {
            None => sp,
            Some(j) => {
                let j = j as f64;
                sp.min(pow(j, self.p - 2.0) * s * s)
            }
        }
    }
}

/// Boundary profile constant `c_p = (p - 1)^{(p-2)/(p-1)} / (p - 2)`: the
/// coefficient of the singular stationary solution `c_p d^beta` of
/// `u'' + |u'|^p = 0`, equivalently `int_0^d ((p - 1) s)^{-1/(p-1)} ds = c_p d^beta`.
pub fn profile_constant(p: f64) -> f64 {
    (p - 1.0).powf((p - 2.0) / (p - 1.0)) / (p - 2.0)
}

#[inline]
fn pow(s: f64, p: f64) -> f64 {
    if p == p.trunc() && p.abs() < 32.0 {
        s.powi(p as i32)
    } else {
        s.powf(p)
    }
}

/// `F_j(s) = min(s^p, j^{p-2} s^2)`, or `s^p` when `j` is absent.
pub fn f_j(s: f64, params: &HamiltonianParams) -> Result<f64> {
    if s < 0.0 || s.is_nan() {
        return Err(Error::NegativeMagnitude(s));
    }
    Ok(params.eval(s))
}

/// Upper bound for `dF_j/ds` on `[0, s_max]`.
///
/// The power branch is active up to `s = j`, after which the quadratic branch
/// takes over; the quadratic slope only counts once `s_max` passes `j`.
pub fn f_j_lipschitz(s_max: f64, params: &HamiltonianParams) -> f64 {
    let s_max = s_max.max(0.0);
    let p = params.p;
    match params.j {
        None => p * pow(s_max, p - 1.0),
        Some(j) => {
            let j = j as f64;
            let power = p * pow(s_max.min(j), p - 1.0);
            if s_max > j {
                power.max(2.0 * pow(j, p - 2.0) * s_max)
            } else {
                power
            }
        }
    }
}

/// Godunov upwind pick along one axis for the source `+H(|grad u|)`:
/// `max(D+ u, -D- u, 0)`. A local maximum contributes no source.
#[inline]
fn upwind_axis(left: f64, centre: f64, right: f64, h: f64) -> f64 {
    let forward = (right - centre) / h;
    let backward = (centre - left) / h;
    forward.max(-backward).max(0.0)
}

/// Upwind gradient magnitude at an interior node. Per axis the one-sided
/// slope pointing uphill is selected; magnitudes combine as a Euclidean norm.
pub fn upwind_gradient_magnitude(u: &Field, node: usize) -> f64 {
    upwind_at(&u.grid, &u.values, node)
}

#[inline]
pub(crate) fn upwind_at(grid: &Grid, u: &[f64], node: usize) -> f64 {
    match grid.layout {
        Layout::Line { h, .. } => upwind_axis(u[node - 1], u[node], u[node + 1], h),
        Layout::Radial { h, .. } => {
            let left = if node == 0 { u[1] } else { u[node - 1] };
            upwind_axis(left, u[node], u[node + 1], h)
        }
        Layout::Plane { nx, hx, hy, .. } => {
            let mx = upwind_axis(u[node - 1], u[node], u[node + 1], hx);
            let my = upwind_axis(u[node - nx], u[node], u[node + nx], hy);
            mx.hypot(my)
        }
    }
}

fn centered_axis(u: &[f64], k: usize, stride: usize, idx: usize, n: usize, h: f64) -> f64 {
    if idx == 0 {
        (-3.0 * u[k] + 4.0 * u[k + stride] - u[k + 2 * stride]) / (2.0 * h)
    } else if idx == n - 1 {
        (3.0 * u[k] - 4.0 * u[k - stride] + u[k - 2 * stride]) / (2.0 * h)
    } else {
        (u[k + stride] - u[k - stride]) / (2.0 * h)
    }
}

/// Second-order gradient magnitude; boundary nodes use one-sided
/// three-point stencils. Used for diagnostics only.
pub fn centered_gradient_magnitude(u: &Field, node: usize) -> f64 {
    centered_at(&u.grid, &u.values, node)
}

pub(crate) fn centered_at(grid: &Grid, u: &[f64], node: usize) -> f64 {
    match grid.layout {
        Layout::Line { h, n, .. } => centered_axis(u, node, 1, node, n, h).abs(),
        Layout::Radial { h, n, .. } => {
            if node == 0 {
                0.0
            } else {
                centered_axis(u, node, 1, node, n, h).abs()
            }
        }
        Layout::Plane { nx, ny, hx, hy } => {
            let (i, j) = (node % nx, node / nx);
            let gx = centered_axis(u, node, 1, i, nx, hx);
            let gy = centered_axis(u, node, nx, j, ny, hy);
            gx.hypot(gy)
        }
    }
}
