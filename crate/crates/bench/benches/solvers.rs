use std::sync::Arc;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use gbu_core::constructions::build_barrier;
use gbu_core::eigen::numeric_eigenpair;
use gbu_core::solver::{solve_regularized, viscosity_limit, Engine, SolverParams, ViscosityParams};
use gbu_core::{Domain, Field, Grid, HamiltonianParams};

fn quartic(grid: &Arc<Grid>, amp: f64) -> Field {
    Field::from_fn(grid, |q| amp * (1.0 - q.x * q.x).powi(2)).with_zero_boundary()
}

fn explicit_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("engine_step");
    for n in [201usize, 801] {
        let grid = Arc::new(Grid::build(Domain::interval(-1.0, 1.0).unwrap(), n).unwrap());
        let u0 = quartic(&grid, 1.0);
        let hp = HamiltonianParams::new(3.0, None).unwrap();
        group.bench_with_input(BenchmarkId::new("line", n), &n, |b, _| {
            let mut engine = Engine::new(&grid, 0.9, vec![(hp, u0.values.clone())]).unwrap();
            b.iter(|| black_box(engine.step(f64::INFINITY).unwrap()));
        });
    }
    let grid = Arc::new(Grid::build(Domain::rectangle(1.0, 1.0).unwrap(), 101).unwrap());
    let u0 = Field::from_fn(&grid, |q| (q.x * (1.0 - q.x) * q.y * (1.0 - q.y)) * 16.0);
    let hp = HamiltonianParams::new(3.0, None).unwrap();
    group.bench_function("plane/101", |b| {
        let mut engine = Engine::new(&grid, 0.9, vec![(hp, u0.values.clone())]).unwrap();
        b.iter(|| black_box(engine.step(f64::INFINITY).unwrap()));
    });
    group.finish();
}

fn classical_run(c: &mut Criterion) {
    let grid = Arc::new(Grid::build(Domain::interval(-1.0, 1.0).unwrap(), 201).unwrap());
    let u0 = quartic(&grid, 2.0);
    let params = SolverParams::new(HamiltonianParams::new(3.0, None).unwrap(), 0.5, &grid);
    c.bench_function("solve_regularized/201", |b| {
        b.iter(|| black_box(solve_regularized(&u0, &params).unwrap().steps))
    });
}

fn j_sweep(c: &mut Criterion) {
    let grid = Arc::new(Grid::build(Domain::interval(-1.0, 1.0).unwrap(), 101).unwrap());
    let u0 = quartic(&grid, 2.0);
    let vp = ViscosityParams::new(3.0, 0.1, &grid);
    let mut group = c.benchmark_group("viscosity_limit");
    group.sample_size(10);
    group.bench_function("101", |b| {
        b.iter(|| black_box(viscosity_limit(&u0, &vp).unwrap().cauchy_gap))
    });
    group.finish();
}

fn elliptic(c: &mut Criterion) {
    let grid = Arc::new(Grid::build(Domain::rectangle(1.0, 1.0).unwrap(), 79).unwrap());
    let zero = Field::zeros(&grid);
    let mut group = c.benchmark_group("elliptic");
    group.sample_size(20);
    group.bench_function("barrier/79", |b| {
        b.iter(|| black_box(build_barrier(&grid, &zero, 3.0).unwrap().c1))
    });
    group.bench_function("eigen/79", |b| {
        b.iter(|| black_box(numeric_eigenpair(&grid, 1e-8).unwrap().lambda1))
    });
    group.finish();
}

criterion_group!(benches, explicit_step, classical_run, j_sweep, elliptic);
criterion_main!(benches);
