//! Numerical laboratory for the diffusive Hamilton-Jacobi equation
//! `u_t - Lap u = |grad u|^p` with zero Dirichlet data, followed past
//! gradient blowup through its global viscosity solution.

pub mod constructions;
pub mod diagnostics;
pub mod eigen;
pub mod error;
pub mod geometry;
pub mod hamiltonian;
pub mod harness;
mod linalg;
pub mod selftest;
pub mod solver;
pub mod threshold;

pub use error::{Error, Result};
pub use geometry::{BoundaryPoint, Domain, Field, Grid, Layout, Point};
pub use hamiltonian::HamiltonianParams;
