//! Structural invariants of intensities and factorial measures.

use gibbs::measure::eval_by_representation;
use gibbs::{
    hamiltonian, BoundaryCondition, CountingMeasure, PairPotential, PapangelouModel, Point, Window,
};
use proptest::prelude::*;

fn to_measure(coords: &[(f64, f64)]) -> CountingMeasure {
    coords
        .iter()
        .map(|&(x, y)| Point::new(&[x, y]).unwrap())
        .collect()
}

fn config(max: usize) -> impl Strategy<Value = CountingMeasure> {
    prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 0..=max).prop_map(|v| to_measure(&v))
}

fn point() -> impl Strategy<Value = Point> {
    (0.0..1.0f64, 0.0..1.0f64).prop_map(|(x, y)| Point::new(&[x, y]).unwrap())
}

/// Points on a 3x3 grid so that configurations carry multiplicities.
fn grid_config(max: usize) -> impl Strategy<Value = CountingMeasure> {
    prop::collection::vec((0u8..3, 0u8..3), 0..=max).prop_map(|v| {
        v.iter()
            .map(|&(x, y)| Point::new(&[x as f64, y as f64]).unwrap())
            .collect()
    })
}

fn model() -> impl Strategy<Value = PapangelouModel> {
    prop_oneof![
        (0.1..4.0f64).prop_map(|z| PapangelouModel::poisson(z).unwrap()),
        (0.1..4.0f64, 0.0..=1.0f64, 0.01..0.5f64)
            .prop_map(|(z, c, r)| PapangelouModel::strauss(z, c, r).unwrap()),
        (0.1..4.0f64, 0.01..0.3f64).prop_map(|(z, r)| PapangelouModel::hard_sphere(z, r).unwrap()),
        (0.1..4.0f64, 0.01..0.4f64, 0.0..3.0f64).prop_map(|(z, radius, gamma)| {
            PapangelouModel::pair_potential(z, PairPotential::Step { radius, gamma }).unwrap()
        }),
        (0.1..4.0f64, 0.01..0.1f64).prop_map(|(z, sigma)| {
            PapangelouModel::pair_potential(
                z,
                PairPotential::InversePower {
                    sigma,
                    exponent: 4.0,
                },
            )
            .unwrap()
        }),
    ]
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}

fn falling(n: usize, m: usize) -> usize {
    if m > n {
        0
    } else {
        (n - m + 1..=n).product()
    }
}

proptest! {
    #[test]
    fn cocycle(m in model(), mu in config(6), x in point(), y in point()) {
        let lhs = m.kappa(&x, &mu) * m.kappa(&y, &mu.add(x));
        let rhs = m.kappa(&y, &mu) * m.kappa(&x, &mu.add(y));
        prop_assert!(close(lhs, rhs, 1e-12), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn kappa_m_ignores_order(m in model(), xs in config(5), mu in config(4), seed in any::<u64>()) {
        let mut perm = xs.points().to_vec();
        let n = perm.len();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a = m.kappa_m(xs.points(), &mu);
        let b = m.kappa_m(&perm, &mu);
        prop_assert!(close(a, b, 1e-12), "{} vs {}", a, b);
    }

    #[test]
    fn energy_adds(m in model(), mu in config(4), nu in config(4), psi in config(4)) {
        let lhs = hamiltonian(&m, &mu.plus(&nu), &psi);
        let rhs = hamiltonian(&m, &mu, &psi) + hamiltonian(&m, &nu, &psi.plus(&mu));
        prop_assert!(close(lhs, rhs, 1e-9), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn infinite_energy_is_hereditary(m in model(), mu in config(5), nu in config(3), psi in config(3)) {
        if hamiltonian(&m, &mu, &psi).is_infinite() {
            prop_assert!(hamiltonian(&m, &mu.plus(&nu), &psi).is_infinite());
        }
    }

    #[test]
    fn kappa_respects_stability_bound(m in model(), mu in config(8), x in point()) {
        if let Some(theta) = m.local_stability_bound(&x) {
            prop_assert!(m.kappa(&x, &mu) <= theta);
        }
    }

    #[test]
    fn finite_range_ignores_far_points(m in model(), mu in config(8), x in point()) {
        if let Some(r) = m.interaction_range() {
            let near: CountingMeasure = mu.points().iter().copied().filter(|y| x.dist(y) <= r).collect();
            prop_assert_eq!(m.kappa(&x, &mu), m.kappa(&x, &near));
        }
    }

    #[test]
    fn restriction_adds_boundary(m in model(), mu in config(4), psi in config(4), x in point()) {
        let c = Window::new(vec![0.2, 0.2], vec![0.8, 0.8]).unwrap();
        let outside: CountingMeasure = psi.points().iter().copied().filter(|p| !c.contains(p)).collect();
        let bc = BoundaryCondition::new(outside.clone(), &c).unwrap();
        let restricted = m.restricted(&c, &bc);
        let expected = if c.contains(&x) { m.kappa(&x, &outside.plus(&mu)) } else { 0.0 };
        prop_assert!(close(restricted.kappa(&x, &mu), expected, 1e-15));
    }

    #[test]
    fn factorial_counts_are_falling_factorials(mu in grid_config(6), m in 0usize..8) {
        prop_assert_eq!(mu.factorial_tuples(m).count(), falling(mu.len(), m));
    }

    #[test]
    fn restriction_commutes_with_tuples(mu in grid_config(6), m in 1usize..4, hi in 0u8..3) {
        let b = Window::new(vec![-0.5, -0.5], vec![hi as f64 + 0.5, 2.5]).unwrap();
        let direct: Vec<Vec<Point>> = mu.restrict(&b).factorial_tuples(m).collect();
        let filtered: Vec<Vec<Point>> = mu
            .factorial_tuples(m)
            .filter(|t| t.iter().all(|p| b.contains(p)))
            .collect();
        prop_assert_eq!(direct, filtered);
    }

    #[test]
    fn merge_identity(a in grid_config(3), b in grid_config(3)) {
        let f = |t: &[Point]| -> f64 {
            let s: f64 = t.iter().map(|p| 3.0 * p.coords()[0] + p.coords()[1] + 1.0).sum();
            s * s
        };
        let n = a.len() + b.len();
        let lhs = a.plus(&b).factorial_integral(n, f);
        let mut rhs = 0.0;
        for x in a.factorial_tuples(a.len()) {
            for y in b.factorial_tuples(b.len()) {
                let joined: Vec<Point> = x.iter().chain(&y).copied().collect();
                rhs += f(&joined);
            }
        }
        let binom = falling(n, a.len()) / falling(a.len(), a.len());
        prop_assert_eq!(lhs, binom as f64 * rhs);
    }

    #[test]
    fn representation_recovers_function(mu in grid_config(6)) {
        let weight = |m: &CountingMeasure| m.points().iter().map(|p| p.coords()[0] + 3.0 * p.coords()[1]).sum::<f64>();
        prop_assert_eq!(eval_by_representation(weight, &mu), weight(&mu));
        let two_power = |m: &CountingMeasure| 2f64.powi(m.len() as i32);
        prop_assert_eq!(eval_by_representation(two_power, &mu), two_power(&mu));
    }

    #[test]
    fn add_then_remove_round_trips(mu in grid_config(5), x in (0u8..3, 0u8..3)) {
        let p = Point::new(&[x.0 as f64, x.1 as f64]).unwrap();
        prop_assert!(mu.add(p).remove_point(&p).multiset_eq(&mu));
    }
}
