//! Seeded structure suite: the ordering and contraction properties of the
//! scheme checked on random one-dimensional data.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{Domain, Grid};
use crate::hamiltonian::HamiltonianParams;
use crate::solver::Engine;

pub const MAX_PRINCIPLE_TOL: f64 = 1e-10;
pub const CONTRACTION_TOL: f64 = 1e-10;
pub const COMPARISON_TOL: f64 = 1e-12;
pub const J_ORDER_TOL: f64 = 1e-9;
/// Relative to `sup |v|`; the discrete scaling inequality is exact up to roundoff.
pub const SCALING_TOL: f64 = 1e-12;

const J_LEVELS: [u64; 4] = [2, 8, 32, 128];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteParams {
    pub seed: u64,
    pub cases: usize,
    pub n_interior: usize,
    pub p: f64,
    pub t_max: f64,
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams {
            seed: 0,
            cases: 100,
            n_interior: 201,
            p: 3.0,
            t_max: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub tolerance: f64,
    /// Largest amount by which the inequality failed (negative: held with room).
    pub worst: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub params: SuiteParams,
    pub checks: Vec<CheckResult>,
    pub steps: usize,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// `sum_k a_k max(0, 1 - ((x - m_k) / w_k)^2)^2` with one to three random terms.
fn random_bumps(rng: &mut ChaCha8Rng, xs: &[f64], max_amp: f64) -> Vec<f64> {
    let terms = rng.gen_range(1..=3);
    let mut u = vec![0.0; xs.len()];
    for _ in 0..terms {
        let a = rng.gen_range(0.0..max_amp);
        let m = rng.gen_range(-0.8..0.8);
        let w = rng.gen_range(0.1..1.0);
        for (v, x) in u.iter_mut().zip(xs) {
            let s = (1.0 - ((x - m) / w).powi(2)).max(0.0);
            *v += a * s * s;
        }
    }
    u
}

#[derive(Default, Clone, Copy)]
struct Worst {
    max_principle: f64,
    contraction: f64,
    comparison: f64,
    j_order: f64,
    scaling: f64,
    steps: usize,
}

impl Worst {
    fn merge(self, o: Worst) -> Worst {
        Worst {
            max_principle: self.max_principle.max(o.max_principle),
            contraction: self.contraction.max(o.contraction),
            comparison: self.comparison.max(o.comparison),
            j_order: self.j_order.max(o.j_order),
            scaling: self.scaling.max(o.scaling),
            steps: self.steps + o.steps,
        }
    }
}

fn run_case(grid: &Arc<Grid>, params: &SuiteParams, case: usize) -> Result<Worst> {
    let mut rng = ChaCha8Rng::seed_from_u64(
        params
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(case as u64),
    );
    let xs: Vec<f64> = grid.points().iter().map(|q| q.x).collect();
    let u0 = random_bumps(&mut rng, &xs, 2.0);
    let extra = random_bumps(&mut rng, &xs, 1.0);
    let v0: Vec<f64> = u0.iter().zip(&extra).map(|(a, b)| a + b).collect();
    let w0 = random_bumps(&mut rng, &xs, 2.0);
    let lambda = rng.gen_range(1.0..2.0);
    let s0: Vec<f64> = u0.iter().map(|v| lambda * v).collect();
    let exact = HamiltonianParams::new(params.p, None)?;
    // members: u, v >= u, w, lambda u, then u at increasing j
    let mut states = vec![(exact, u0.clone()), (exact, v0), (exact, w0), (exact, s0)];
    for j in J_LEVELS {
        states.push((exact.with_j(Some(j)), u0.clone()));
    }
    let mut engine = Engine::new(grid, 0.9, states)?;
    let sup = |u: &[f64]| u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let dist = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
    };
    let initial_sup: Vec<f64> = (0..engine.len()).map(|k| sup(engine.state(k))).collect();
    let d_uw = dist(engine.state(0), engine.state(2));
    let d_uv = dist(engine.state(0), engine.state(1));
    let mut w = Worst {
        max_principle: f64::NEG_INFINITY,
        contraction: f64::NEG_INFINITY,
        comparison: f64::NEG_INFINITY,
        j_order: f64::NEG_INFINITY,
        scaling: f64::NEG_INFINITY,
        steps: 0,
    };
    while engine.time() < params.t_max {
        engine.step(params.t_max - engine.time())?;
        for (k, s0) in initial_sup.iter().enumerate() {
            w.max_principle = w.max_principle.max(sup(engine.state(k)) - s0);
        }
        let (u, v) = (engine.state(0), engine.state(1));
        w.contraction = w
            .contraction
            .max(dist(u, engine.state(2)) - d_uw)
            .max(dist(u, v) - d_uv);
        w.comparison = w.comparison.max(
            u.iter()
                .zip(v)
                .fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b)),
        );
        let scale = sup(engine.state(3)).max(1.0);
        w.scaling = w.scaling.max(
            u.iter()
                .zip(engine.state(3))
                .fold(f64::NEG_INFINITY, |m, (a, b)| {
                    m.max((lambda * a - b) / scale)
                }),
        );
        let mut chain: Vec<usize> = (4..4 + J_LEVELS.len()).collect();
        chain.push(0);
        for pair in chain.windows(2) {
            let (lo, hi) = (engine.state(pair[0]), engine.state(pair[1]));
            w.j_order = w.j_order.max(
                lo.iter()
                    .zip(hi)
                    .fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b)),
            );
        }
    }
    w.steps = engine.steps();
    Ok(w)
}

/// Runs every case (concurrently; merged in case order) and reports the worst
/// violation of each property.
pub fn structure_suite(params: &SuiteParams) -> Result<SuiteReport> {
    let grid = Arc::new(Grid::build(
        Domain::interval(-1.0, 1.0)?,
        params.n_interior,
    )?);
    let results: Vec<Worst> = (0..params.cases)
        .into_par_iter()
        .map(|case| run_case(&grid, params, case))
        .collect::<Result<_>>()?;
    let w = results.into_iter().reduce(Worst::merge).unwrap_or_default();
    let check = |name: &str, tolerance: f64, worst: f64| CheckResult {
        name: name.into(),
        tolerance,
        worst,
        passed: worst <= tolerance,
    };
    Ok(SuiteReport {
        params: params.clone(),
        checks: vec![
            check("maximum_principle", MAX_PRINCIPLE_TOL, w.max_principle),
            check("contraction", CONTRACTION_TOL, w.contraction),
            check("comparison", COMPARISON_TOL, w.comparison),
            check("j_monotonicity", J_ORDER_TOL, w.j_order),
            check("lambda_scaling", SCALING_TOL, w.scaling),
        ],
        steps: w.steps,
    })
}
