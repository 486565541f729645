//! Domains, uniform grids, the distance function and interior tangent balls.
//!
//! Three geometries are supported: an interval, a disk solved through its
//! radial reduction, and an axis-aligned rectangle `[0, lx] x [0, ly]`.
//! Grid node values live in [`Field`], which keeps a shared handle to its grid.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when deciding whether a point sits on the boundary.
const ON_BOUNDARY_TOL: f64 = 1e-12;

/// A point of the plane. One-dimensional domains only use `x`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub const fn on_line(x: f64) -> Self {
        Point { x, y: 0.0 }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

/// Geometric region carrying the distance function and tangent-ball geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    /// `(a, b)` on the real line.
    Interval { a: f64, b: f64 },
    /// Ball of the given radius centred at the origin of `R^dim`, solved radially.
    Disk { radius: f64, dim: usize },
    /// `(0, lx) x (0, ly)`.
    Rectangle { lx: f64, ly: f64 },
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Domain::Interval { a, b }.validated()
    }

    /// Two-dimensional disk.
    pub fn disk(radius: f64) -> Result<Self> {
        Domain::Disk { radius, dim: 2 }.validated()
    }

    pub fn ball(radius: f64, dim: usize) -> Result<Self> {
        Domain::Disk { radius, dim }.validated()
    }

    pub fn rectangle(lx: f64, ly: f64) -> Result<Self> {
        Domain::Rectangle { lx, ly }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            Domain::Interval { a, b } if !(a.is_finite() && b.is_finite() && b > a) => Err(
                Error::InvalidDomain(format!("interval needs b > a, got ({a}, {b})")),
            ),
            Domain::Disk { radius, .. } if !(radius.is_finite() && radius > 0.0) => Err(
                Error::InvalidDomain(format!("disk radius must be positive, got {radius}")),
            ),
            Domain::Disk { dim, .. } if !(2..=3).contains(&dim) => Err(Error::InvalidDomain(
                format!("radial solves support dimension 2 or 3, got {dim}"),
            )),
            Domain::Rectangle { lx, ly }
                if !(lx.is_finite() && ly.is_finite() && lx > 0.0 && ly > 0.0) =>
            {
                Err(Error::InvalidDomain(format!(
                    "rectangle sides must be positive, got {lx} x {ly}"
                )))
            }
            d => Ok(d),
        }
    }

    /// Spatial dimension `n` of the underlying PDE.
    pub fn space_dim(&self) -> usize {
        match *self {
            Domain::Interval { .. } => 1,
            Domain::Disk { dim, .. } => dim,
            Domain::Rectangle { .. } => 2,
        }
    }

    /// Radius of the largest inscribed ball.
    pub fn inradius(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => 0.5 * (b - a),
            Domain::Disk { radius, .. } => radius,
            Domain::Rectangle { lx, ly } => 0.5 * lx.min(ly),
        }
    }

    fn length_scale(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => (b - a).max(a.abs()).max(b.abs()),
            Domain::Disk { radius, .. } => radius,
            Domain::Rectangle { lx, ly } => lx.max(ly),
        }
    }

    fn signed_distance(&self, p: Point) -> f64 {
        match *self {
            Domain::Interval { a, b } => (p.x - a).min(b - p.x),
            Domain::Disk { radius, .. } => radius - p.norm(),
            Domain::Rectangle { lx, ly } => p.x.min(lx - p.x).min(p.y).min(ly - p.y),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.signed_distance(p) >= -ON_BOUNDARY_TOL * self.length_scale()
    }

    pub fn is_on_boundary(&self, p: Point) -> bool {
        self.signed_distance(p).abs() <= ON_BOUNDARY_TOL * self.length_scale()
    }

    /// Euclidean distance to the boundary, `delta(x) = dist(x, boundary)`.
    pub fn distance_to_boundary(&self, p: Point) -> Result<f64> {
        if !self.contains(p) {
            return Err(Error::OutsideDomain { x: p.x, y: p.y });
        }
        Ok(self.signed_distance(p).max(0.0))
    }

    /// Unit outward normal at a boundary point.
    pub fn outward_normal(&self, x0: Point) -> Result<Point> {
        if !self.is_on_boundary(x0) {
            return Err(Error::NotOnBoundary { x: x0.x, y: x0.y });
        }
        let tol = ON_BOUNDARY_TOL * self.length_scale();
        match *self {
            Domain::Interval { a, b } => {
                if (x0.x - a).abs() <= (x0.x - b).abs() {
                    Ok(Point::on_line(-1.0))
                } else {
                    Ok(Point::on_line(1.0))
                }
            }
            Domain::Disk { .. } => Ok(x0.scale(1.0 / x0.norm())),
            Domain::Rectangle { lx, ly } => {
                let on_left = x0.x.abs() <= tol;
                let on_right = (x0.x - lx).abs() <= tol;
                let on_bottom = x0.y.abs() <= tol;
                let on_top = (x0.y - ly).abs() <= tol;
                let hits = [on_left, on_right, on_bottom, on_top]
                    .iter()
                    .filter(|&&b| b)
                    .count();
                if hits > 1 {
                    return Err(Error::Corner { x: x0.x, y: x0.y });
                }
                Ok(if on_left {
                    Point::new(-1.0, 0.0)
                } else if on_right {
                    Point::new(1.0, 0.0)
                } else if on_bottom {
                    Point::new(0.0, -1.0)
                } else {
                    Point::new(0.0, 1.0)
                })
            }
        }
    }

    /// Centre `x1 = x0 - rho * nu(x0)` of the ball of radius `rho` inside the
    /// domain whose boundary touches the domain boundary only at `x0`.
    pub fn interior_tangent_ball(&self, x0: Point, rho: f64) -> Result<Point> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tangent ball radius must be positive, got {rho}"
            )));
        }
        let limit = match *self {
            Domain::Disk { radius, .. } => 0.5 * radius,
            _ => self.inradius(),
        };
        if rho >= limit {
            return Err(Error::RadiusTooLarge { rho, limit });
        }
        let nu = self.outward_normal(x0)?;
        let x1 = x0 - nu.scale(rho);
        if let Domain::Rectangle { lx, ly } = *self {
            // Tangency must be unique: every other edge strictly farther than rho.
            let others = [x1.x, lx - x1.x, x1.y, ly - x1.y];
            let clearance = others
                .iter()
                .copied()
                .filter(|d| (d - rho).abs() > ON_BOUNDARY_TOL * self.length_scale())
                .fold(f64::INFINITY, f64::min);
            let touching = others
                .iter()
                .filter(|d| (*d - rho).abs() <= ON_BOUNDARY_TOL * self.length_scale())
                .count();
            if touching != 1 || clearance <= rho {
                return Err(Error::RadiusTooLarge {
                    rho,
                    limit: clearance.min(limit),
                });
            }
        }
        Ok(x1)
    }

    /// Total boundary measure used for arc-length coordinates (0 for intervals).
    pub fn perimeter(&self) -> f64 {
        match *self {
            Domain::Interval { .. } => 0.0,
            Domain::Disk { radius, .. } => 2.0 * PI * radius,
            Domain::Rectangle { lx, ly } => 2.0 * (lx + ly),
        }
    }

    /// Point at arc length `s` on a rectangle walked counter-clockwise from the origin.
    fn rectangle_point(lx: f64, ly: f64, s: f64) -> Point {
        if s <= lx {
            Point::new(s, 0.0)
        } else if s <= lx + ly {
            Point::new(lx, s - lx)
        } else if s <= 2.0 * lx + ly {
            Point::new(lx - (s - lx - ly), ly)
        } else {
            Point::new(0.0, ly - (s - 2.0 * lx - ly))
        }
    }

    /// Boundary sample points for loss detection. Intervals always return both
    /// endpoints; rectangles skip corners.
    pub fn boundary_samples(&self, count: usize) -> Vec<BoundaryPoint> {
        match *self {
            Domain::Interval { a, b } => vec![
                BoundaryPoint {
                    point: Point::on_line(a),
                    arclen: 0.0,
                    normal: Point::on_line(-1.0),
                },
                BoundaryPoint {
                    point: Point::on_line(b),
                    arclen: b - a,
                    normal: Point::on_line(1.0),
                },
            ],
            Domain::Disk { radius, .. } => (0..count)
                .map(|k| {
                    let theta = 2.0 * PI * k as f64 / count as f64;
                    let normal = Point::new(theta.cos(), theta.sin());
                    BoundaryPoint {
                        point: normal.scale(radius),
                        arclen: radius * theta,
                        normal,
                    }
                })
                .collect(),
            Domain::Rectangle { lx, ly } => {
                let perimeter = self.perimeter();
                let step = perimeter / count as f64;
                let corners = [0.0, lx, lx + ly, 2.0 * lx + ly, perimeter];
                (0..count)
                    .map(|k| {
                        let mut s = (k as f64 + 0.5) * step;
                        if corners.iter().any(|c| (s - c).abs() < 1e-9 * perimeter) {
                            s += 0.25 * step;
                        }
                        let point = Self::rectangle_point(lx, ly, s);
                        let normal = self
                            .outward_normal(point)
                            .expect("samples avoid corners by construction");
                        BoundaryPoint {
                            point,
                            arclen: s,
                            normal,
                        }
                    })
                    .collect()
            }
        }
    }
}

/// A boundary point together with its arc-length coordinate and outward normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub point: Point,
    pub arclen: f64,
    pub normal: Point,
}

/// Node arrangement of a [`Grid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Layout {
    /// Nodes `x0 + i h`, `i = 0..n`.
    Line { x0: f64, h: f64, n: usize },
    /// Radial nodes `r = i h`, `i = 0..n`, for a ball of dimension `dim`.
    Radial { h: f64, n: usize, dim: usize },
    /// Row-major lattice, node `(i, j)` at `(i hx, j hy)` has index `j * nx + i`.
    Plane {
        nx: usize,
        ny: usize,
        hx: f64,
        hy: f64,
    },
}

/// Uniform lattice covering the closure of a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub domain: Domain,
    pub layout: Layout,
    boundary: Vec<bool>,
}

impl Grid {
    /// Uniform grid with `n_interior` interior nodes (along the shorter axis
    /// for rectangles; the longer axis gets the closest matching spacing).
    pub fn build(domain: Domain, n_interior: usize) -> Result<Grid> {
        let domain = domain.validated()?;
        if n_interior < 3 {
            return Err(Error::TooFewNodes(n_interior));
        }
        let cells = n_interior + 1;
        let (layout, boundary) = match domain {
            Domain::Interval { a, b } => {
                let n = cells + 1;
                let mut boundary = vec![false; n];
                boundary[0] = true;
                boundary[n - 1] = true;
                (
                    Layout::Line {
                        x0: a,
                        h: (b - a) / cells as f64,
                        n,
                    },
                    boundary,
                )
            }
            Domain::Disk { radius, dim } => {
                let n = cells + 1;
                let mut boundary = vec![false; n];
                boundary[n - 1] = true;
                (
                    Layout::Radial {
                        h: radius / cells as f64,
                        n,
                        dim,
                    },
                    boundary,
                )
            }
            Domain::Rectangle { lx, ly } => {
                let h = lx.min(ly) / cells as f64;
                let cells_x = ((lx / h).round() as usize).max(cells);
                let cells_y = ((ly / h).round() as usize).max(cells);
                let (nx, ny) = (cells_x + 1, cells_y + 1);
                let mut boundary = vec![false; nx * ny];
                for j in 0..ny {
                    for i in 0..nx {
                        boundary[j * nx + i] = i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
                    }
                }
                (
                    Layout::Plane {
                        nx,
                        ny,
                        hx: lx / cells_x as f64,
                        hy: ly / cells_y as f64,
                    },
                    boundary,
                )
            }
        };
        Ok(Grid {
            domain,
            layout,
            boundary,
        })
    }

    pub fn len(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }

    /// Smallest node spacing.
    pub fn h(&self) -> f64 {
        match self.layout {
            Layout::Line { h, .. } | Layout::Radial { h, .. } => h,
            Layout::Plane { hx, hy, .. } => hx.min(hy),
        }
    }

    /// Spacing along each axis (one entry for 1-D and radial layouts).
    pub fn spacings(&self) -> Vec<f64> {
        match self.layout {
            Layout::Line { h, .. } | Layout::Radial { h, .. } => vec![h],
            Layout::Plane { hx, hy, .. } => vec![hx, hy],
        }
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| !self.boundary[i])
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.boundary[i])
    }

    /// Physical location of a node. Radial nodes sit on the positive x axis.
    pub fn point(&self, node: usize) -> Point {
        match self.layout {
            Layout::Line { x0, h, .. } => Point::on_line(x0 + node as f64 * h),
            Layout::Radial { h, .. } => Point::on_line(node as f64 * h),
            Layout::Plane { nx, hx, hy, .. } => {
                Point::new((node % nx) as f64 * hx, (node / nx) as f64 * hy)
            }
        }
    }

    pub fn points(&self) -> Vec<Point> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// `delta` evaluated at a node.
    pub fn delta(&self, node: usize) -> f64 {
        self.domain
            .distance_to_boundary(self.point(node))
            .expect("grid nodes lie in the closed domain")
    }

    pub fn deltas(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.delta(i)).collect()
    }

    /// Trapezoidal quadrature weights, including the radial Jacobian for disks.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let trap = |n: usize, h: f64| -> Vec<f64> {
            (0..n)
                .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
                .collect()
        };
        match self.layout {
            Layout::Line { h, n, .. } => trap(n, h),
            Layout::Radial { h, n, dim } => {
                let sphere = sphere_area(dim);
                trap(n, h)
                    .into_iter()
                    .enumerate()
                    .map(|(i, w)| w * sphere * (i as f64 * h).powi(dim as i32 - 1))
                    .collect()
            }
            Layout::Plane { nx, ny, hx, hy } => {
                let wx = trap(nx, hx);
                let wy = trap(ny, hy);
                let mut w = Vec::with_capacity(nx * ny);
                for wj in &wy {
                    for wi in &wx {
                        w.push(wi * wj);
                    }
                }
                w
            }
        }
    }

    /// Piecewise-linear (bilinear in 2-D) interpolation of node values at `p`.
    pub fn interpolate(&self, values: &[f64], p: Point) -> Result<f64> {
        if !self.domain.contains(p) {
            return Err(Error::OutsideDomain { x: p.x, y: p.y });
        }
        let locate = |coord: f64, h: f64, n: usize| -> (usize, f64) {
            let s = (coord / h).clamp(0.0, (n - 1) as f64);
            let i = (s.floor() as usize).min(n - 2);
            (i, s - i as f64)
        };
        Ok(match self.layout {
            Layout::Line { x0, h, n } => {
                let (i, t) = locate(p.x - x0, h, n);
                values[i] * (1.0 - t) + values[i + 1] * t
            }
            Layout::Radial { h, n, .. } => {
                let (i, t) = locate(p.norm(), h, n);
                values[i] * (1.0 - t) + values[i + 1] * t
            }
            Layout::Plane { nx, ny, hx, hy } => {
                let (i, tx) = locate(p.x, hx, nx);
                let (j, ty) = locate(p.y, hy, ny);
                let v = |a: usize, b: usize| values[b * nx + a];
                (1.0 - ty) * ((1.0 - tx) * v(i, j) + tx * v(i + 1, j))
                    + ty * ((1.0 - tx) * v(i, j + 1) + tx * v(i + 1, j + 1))
            }
        })
    }

    /// Largest absolute one-sided difference quotient over all grid edges,
    /// boundary edges included. This is the discrete `||grad u||_inf` used to
    /// declare gradient blowup.
    pub fn max_edge_slope(&self, u: &[f64]) -> f64 {
        let mut best = 0.0f64;
        match self.layout {
            Layout::Line { h, n, .. } | Layout::Radial { h, n, .. } => {
                for i in 0..n - 1 {
                    best = best.max((u[i + 1] - u[i]).abs());
                }
                best / h
            }
            Layout::Plane { nx, ny, hx, hy } => {
                for j in 0..ny {
                    for i in 0..nx {
                        let k = j * nx + i;
                        if i + 1 < nx {
                            best = best.max((u[k + 1] - u[k]).abs() / hx);
                        }
                        if j + 1 < ny {
                            best = best.max((u[k + nx] - u[k]).abs() / hy);
                        }
                    }
                }
                best
            }
        }
    }

    /// Discrete Laplacian at interior nodes (3-point, radial, or 5-point);
    /// boundary rows are set to zero.
    pub fn apply_laplacian(&self, u: &[f64], out: &mut [f64]) {
        match self.layout {
            Layout::Line { h, n, .. } => {
                let inv = 1.0 / (h * h);
                out[0] = 0.0;
                out[n - 1] = 0.0;
                for i in 1..n - 1 {
                    out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv;
                }
            }
            Layout::Radial { h, n, dim } => {
                let inv = 1.0 / (h * h);
                let curv = (dim - 1) as f64;
                // Symmetry ghost u[-1] = u[1] gives dim * u_rr at the origin.
                out[0] = 2.0 * dim as f64 * (u[1] - u[0]) * inv;
                for i in 1..n - 1 {
                    let r = i as f64 * h;
                    out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv
                        + curv / r * (u[i + 1] - u[i - 1]) / (2.0 * h);
                }
                out[n - 1] = 0.0;
            }
            Layout::Plane { nx, ny, hx, hy } => {
                let (ix, iy) = (1.0 / (hx * hx), 1.0 / (hy * hy));
                for j in 0..ny {
                    for i in 0..nx {
                        let k = j * nx + i;
                        out[k] = if self.boundary[k] {
                            0.0
                        } else {
                            (u[k - 1] - 2.0 * u[k] + u[k + 1]) * ix
                                + (u[k - nx] - 2.0 * u[k] + u[k + nx]) * iy
                        };
                    }
                }
            }
        }
    }

    /// Sum over axes of `2 / h_axis^2`, i.e. the diagonal of `-Laplacian`
    /// (radial grids use the origin row `2 dim / h^2`).
    pub fn laplacian_diagonal(&self) -> f64 {
        match self.layout {
            Layout::Line { h, .. } => 2.0 / (h * h),
            Layout::Radial { h, dim, .. } => 2.0 * dim as f64 / (h * h),
            Layout::Plane { hx, hy, .. } => 2.0 / (hx * hx) + 2.0 / (hy * hy),
        }
    }
}

/// Surface measure of the unit sphere `S^{dim-1}`.
pub fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!("radial dimension validated to 2 or 3"),
    }
}

/// Grid function at one time instant.
#[derive(Debug, Clone)]
pub struct Field {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub time: f64,
}

impl Field {
    pub fn zeros(grid: &Arc<Grid>) -> Field {
        Field {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.len()],
            time: 0.0,
        }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite field value {v}"
            )));
        }
        Ok(Field {
            grid: Arc::clone(grid),
            values,
            time: 0.0,
        })
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(Point) -> f64) -> Field {
        Field {
            grid: Arc::clone(grid),
            values: (0..grid.len()).map(|i| f(grid.point(i))).collect(),
            time: 0.0,
        }
    }

    /// Same field with boundary nodes forced to zero.
    pub fn with_zero_boundary(mut self) -> Field {
        for i in 0..self.values.len() {
            if self.grid.is_boundary(i) {
                self.values[i] = 0.0;
            }
        }
        self
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn scaled(&self, s: f64) -> Field {
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| v * s).collect(),
            time: self.time,
        }
    }

    /// `max_i |self_i - other_i|`.
    pub fn distance(&self, other: &Field) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn at(&self, p: Point) -> Result<f64> {
        self.grid.interpolate(&self.values, p)
    }

    /// Membership in the discrete class X: nonnegative, finite, zero on the boundary.
    pub fn in_class_x(&self) -> bool {
        self.values
            .iter()
            .enumerate()
            .all(|(i, &v)| v.is_finite() && v >= 0.0 && (!self.grid.is_boundary(i) || v == 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_grid_nodes() {
        let g = Grid::build(Domain::interval(-1.0, 1.0).unwrap(), 3).unwrap();
        assert_eq!(g.h(), 0.5);
        let xs: Vec<f64> = g.points().iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(g.is_boundary(0) && g.is_boundary(4));
        assert_eq!(g.interior_nodes().count(), 3);
    }

    #[test]
    fn disk_radial_nodes() {
        let g = Grid::build(Domain::disk(1.0).unwrap(), 4).unwrap();
        let rs: Vec<f64> = g.points().iter().map(|p| p.x).collect();
        let expect = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
        assert_eq!(rs.len(), expect.len());
        for (r, e) in rs.iter().zip(expect) {
            assert!((r - e).abs() < 1e-15);
        }
        assert_eq!(g.boundary_nodes().collect::<Vec<_>>(), vec![5]);
    }

    #[test]
    fn rectangle_rim_count() {
        let g = Grid::build(Domain::rectangle(1.0, 1.0).unwrap(), 3).unwrap();
        assert_eq!(g.len(), 25);
        // Enumerate the 5x5 lattice: a node is on the rim iff a coordinate is 0 or 4.
        let rim = (0..5)
            .flat_map(|j| (0..5).map(move |i| (i, j)))
            .filter(|&(i, j)| i == 0 || j == 0 || i == 4 || j == 4)
            .count();
        assert_eq!(g.boundary_nodes().count(), rim);
        assert_eq!(rim, 16);
    }

    #[test]
    fn rectangle_keeps_square_cells() {
        let g = Grid::build(Domain::rectangle(2.0, 1.0).unwrap(), 9).unwrap();
        match g.layout {
            Layout::Plane { nx, ny, hx, hy } => {
                assert_eq!((nx, ny), (21, 11));
                assert!((hx - hy).abs() < 1e-15);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn rejects_small_grids_and_bad_domains() {
        let d = Domain::interval(0.0, 1.0).unwrap();
        assert_eq!(Grid::build(d, 2), Err(Error::TooFewNodes(2)));
        assert!(Domain::interval(1.0, 1.0).is_err());
        assert!(Domain::disk(0.0).is_err());
        assert!(Domain::rectangle(1.0, -1.0).is_err());
    }

    #[test]
    fn distance_examples() {
        let i = Domain::interval(-1.0, 1.0).unwrap();
        assert_eq!(i.distance_to_boundary(Point::on_line(0.0)).unwrap(), 1.0);
        let d = Domain::disk(1.0).unwrap();
        assert_eq!(d.distance_to_boundary(Point::new(0.25, 0.0)).unwrap(), 0.75);
        let r = Domain::rectangle(2.0, 1.0).unwrap();
        let p = Point::new(0.3, 0.4);
        let edges = [p.x, 2.0 - p.x, p.y, 1.0 - p.y];
        let oracle = edges.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(r.distance_to_boundary(p).unwrap(), oracle);
        assert!((oracle - 0.3).abs() < 1e-15);
        assert!(matches!(
            r.distance_to_boundary(Point::new(2.5, 0.5)),
            Err(Error::OutsideDomain { .. })
        ));
        assert_eq!(r.distance_to_boundary(Point::new(1.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn tangent_ball_examples() {
        let i = Domain::interval(-1.0, 1.0).unwrap();
        let x1 = i.interior_tangent_ball(Point::on_line(-1.0), 0.3).unwrap();
        assert!((x1.x + 0.7).abs() < 1e-15);

        let d = Domain::disk(1.0).unwrap();
        let x1 = d.interior_tangent_ball(Point::new(1.0, 0.0), 0.25).unwrap();
        assert_eq!(x1, Point::new(0.75, 0.0));
        assert!(d.interior_tangent_ball(Point::new(1.0, 0.0), 0.5).is_err());

        let r = Domain::rectangle(2.0, 1.0).unwrap();
        let x1 = r.interior_tangent_ball(Point::new(1.0, 0.0), 0.2).unwrap();
        assert_eq!(x1, Point::new(1.0, 0.2));
        let edge_dists = [x1.x, 2.0 - x1.x, x1.y, 1.0 - x1.y];
        assert!(edge_dists.iter().all(|&e| e >= 0.2));
        assert_eq!(edge_dists.iter().filter(|&&e| e == 0.2).count(), 1);
        assert!(matches!(
            r.interior_tangent_ball(Point::new(0.0, 0.0), 0.1),
            Err(Error::Corner { .. })
        ));
        assert!(r.interior_tangent_ball(Point::new(1.0, 0.0), 0.6).is_err());
        // Too close to the side edge for a unique tangency.
        assert!(r.interior_tangent_ball(Point::new(0.1, 0.0), 0.2).is_err());
    }

    #[test]
    fn boundary_samples_avoid_corners() {
        let r = Domain::rectangle(2.0, 1.0).unwrap();
        for count in [4, 6, 12, 30] {
            let s = r.boundary_samples(count);
            assert_eq!(s.len(), count);
            for b in s {
                assert!(r.is_on_boundary(b.point));
                assert!(r.outward_normal(b.point).is_ok());
            }
        }
    }

    #[test]
    fn quadrature_integrates_constants() {
        let g = Grid::build(Domain::rectangle(2.0, 1.0).unwrap(), 7).unwrap();
        let total: f64 = g.quadrature_weights().iter().sum();
        assert!((total - 2.0).abs() < 1e-12);
        let g = Grid::build(Domain::disk(1.0).unwrap(), 199).unwrap();
        let total: f64 = g.quadrature_weights().iter().sum();
        assert!((total - PI).abs() < 1e-4);
    }

    #[test]
    fn interpolation_is_exact_for_affine() {
        let g = Arc::new(Grid::build(Domain::rectangle(2.0, 1.0).unwrap(), 5).unwrap());
        let f = Field::from_fn(&g, |p| 1.0 + 2.0 * p.x - 3.0 * p.y);
        let p = Point::new(0.77, 0.31);
        assert!((f.at(p).unwrap() - (1.0 + 1.54 - 0.93)).abs() < 1e-12);
    }
}
