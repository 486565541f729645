use std::sync::Arc;

use gbu_core::eigen::{analytic_eigenpair, eigen_mass};
use gbu_core::hamiltonian::f_j;
use gbu_core::solver::Engine;
use gbu_core::{Domain, Field, Grid, HamiltonianParams, Point};
use proptest::prelude::*;

fn line(n: usize) -> Arc<Grid> {
    Arc::new(Grid::build(Domain::interval(-1.0, 1.0).unwrap(), n).unwrap())
}

fn domains() -> impl Strategy<Value = Domain> {
    prop_oneof![
        Just(Domain::interval(-1.0, 1.0).unwrap()),
        Just(Domain::disk(1.0).unwrap()),
        Just(Domain::rectangle(2.0, 1.0).unwrap()),
    ]
}

/// Nonnegative data with zero boundary values: nodal weights times a hat.
fn data(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..2.0, 5).prop_map(move |c| {
        (0..n + 2)
            .map(|i| {
                let x = -1.0 + 2.0 * i as f64 / (n + 1) as f64;
                let hat = (1.0 - x * x).max(0.0);
                hat * c
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a * ((k + 1) as f64 * x).cos().powi(2))
                    .sum::<f64>()
            })
            .collect()
    })
}

fn sample_point(d: &Domain, s: f64, t: f64) -> Point {
    match *d {
        Domain::Interval { a, b } => Point::on_line(a + (b - a) * s),
        Domain::Disk { radius, .. } => {
            let r = radius * s.sqrt();
            let th = std::f64::consts::TAU * t;
            Point::new(r * th.cos(), r * th.sin())
        }
        Domain::Rectangle { lx, ly } => Point::new(lx * s, ly * t),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_one_lipschitz(d in domains(), a in (0.0f64..1.0, 0.0f64..1.0), b in (0.0f64..1.0, 0.0f64..1.0)) {
        let (x, y) = (sample_point(&d, a.0, a.1), sample_point(&d, b.0, b.1));
        let (dx, dy) = (d.distance_to_boundary(x).unwrap(), d.distance_to_boundary(y).unwrap());
        prop_assert!((dx - dy).abs() <= x.dist(y) + 1e-12);
    }

    #[test]
    fn tangent_ball_touches_once(d in domains(), s in 0.05f64..0.95, rho in 0.01f64..0.45) {
        let samples = d.boundary_samples(40);
        let x0 = samples[((s * samples.len() as f64) as usize).min(samples.len() - 1)].point;
        let x1 = match d.interior_tangent_ball(x0, rho) {
            Ok(x1) => x1,
            Err(gbu_core::Error::RadiusTooLarge { .. }) => {
                prop_assume!(matches!(d, Domain::Rectangle { .. }));
                return Ok(());
            }
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert!((x1.dist(x0) - rho).abs() < 1e-12);
        prop_assert!((d.distance_to_boundary(x1).unwrap() - rho).abs() < 1e-12);
    }

    #[test]
    fn eigen_mass_is_linear(u in data(41), v in data(41), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let g = line(41);
        let ep = analytic_eigenpair(&g);
        let fu = Field::from_values(&g, u).unwrap();
        let fv = Field::from_values(&g, v).unwrap();
        let comb: Vec<f64> = fu.values.iter().zip(&fv.values).map(|(x, y)| a * x + b * y).collect();
        let lhs = eigen_mass(&Field::from_values(&g, comb).unwrap(), &ep).unwrap();
        let rhs = a * eigen_mass(&fu, &ep).unwrap() + b * eigen_mass(&fv, &ep).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn truncation_is_ordered(s in 0.0f64..200.0, p in 2.1f64..6.0, j in 1u64..100, k in 1u64..100) {
        let (lo, hi) = (j.min(k), j.max(k));
        let a = f_j(s, &HamiltonianParams::new(p, Some(lo)).unwrap()).unwrap();
        let b = f_j(s, &HamiltonianParams::new(p, Some(hi)).unwrap()).unwrap();
        let full = f_j(s, &HamiltonianParams::new(p, None).unwrap()).unwrap();
        prop_assert!(a <= b && b <= full);
        if s <= lo as f64 {
            prop_assert_eq!(a, full);
        }
    }

    #[test]
    fn one_step_is_monotone(u in data(61), extra in data(61), p in 2.5f64..5.0) {
        let g = line(61);
        let v: Vec<f64> = u.iter().zip(&extra).map(|(a, b)| a + b).collect();
        let hp = HamiltonianParams::new(p, None).unwrap();
        let mut e = Engine::new(&g, 0.9, vec![(hp, u), (hp, v)]).unwrap();
        e.step(f64::INFINITY).unwrap();
        for (a, b) in e.state(0).iter().zip(e.state(1)) {
            prop_assert!(*a <= *b + 1e-12);
        }
    }

    #[test]
    fn runs_compare_contract_and_scale(u in data(61), w in data(61), lambda in 1.0f64..2.0, j in 1u64..64) {
        let g = line(61);
        let hp = HamiltonianParams::new(3.0, None).unwrap();
        let v: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a + b).collect();
        let s: Vec<f64> = u.iter().map(|a| lambda * a).collect();
        let d0 = u.iter().zip(&w).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let sup0 = u.iter().fold(0.0f64, |m, a| m.max(*a));
        let members = vec![
            (hp, u.clone()),
            (hp, v),
            (hp, w),
            (hp, s),
            (hp.with_j(Some(j)), u.clone()),
            (hp.with_j(Some(2 * j)), u),
        ];
        let mut e = Engine::new(&g, 0.9, members).unwrap();
        while e.time() < 0.02 {
            e.step(0.02 - e.time()).unwrap();
            let (u, v, w, s) = (e.state(0), e.state(1), e.state(2), e.state(3));
            let (uj, u2j) = (e.state(4), e.state(5));
            prop_assert!(u.iter().all(|x| *x <= sup0 + 1e-10 && *x >= 0.0));
            let d = u.iter().zip(w).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            prop_assert!(d <= d0 + 1e-10);
            for i in 0..u.len() {
                prop_assert!(u[i] <= v[i] + 1e-12);
                prop_assert!(lambda * u[i] <= s[i] + 1e-12 * (1.0 + s[i]));
                prop_assert!(uj[i] <= u2j[i] + 1e-9 && u2j[i] <= u[i] + 1e-9);
            }
        }
    }

    #[test]
    fn scheme_is_scale_invariant(rho in 0.2f64..0.9, amp in 0.5f64..4.0) {
        let p = 3.0;
        let beta = 0.5;
        let unit = Arc::new(Grid::build(Domain::disk(1.0).unwrap(), 40).unwrap());
        let small = Arc::new(Grid::build(Domain::disk(rho).unwrap(), 40).unwrap());
        let bump = |r: f64| amp * (0.25 - r * r).max(0.0).powi(2);
        let hp = HamiltonianParams::new(p, None).unwrap();
        let u0: Vec<f64> = unit.points().iter().map(|q| bump(q.norm())).collect();
        let w0: Vec<f64> = u0.iter().map(|v| rho.powf(beta) * v).collect();
        let mut a = Engine::new(&unit, 0.9, vec![(hp, u0)]).unwrap();
        let mut b = Engine::new(&small, 0.9, vec![(hp, w0)]).unwrap();
        for _ in 0..200 {
            let dt = a.step(f64::INFINITY).unwrap();
            let dt_b = b.step(f64::INFINITY).unwrap();
            prop_assert!((dt_b - rho * rho * dt).abs() <= 1e-12 * dt_b);
        }
        let scale = rho.powf(beta);
        for (x, y) in a.state(0).iter().zip(b.state(0)) {
            prop_assert!((scale * x - y).abs() <= 1e-9 * (1.0 + y.abs()));
        }
    }
}
