use carnot_core::graded::from_fn;
use carnot_core::poly::monomials_up_to;
use carnot_core::solver::{discretize_l, solve_dirichlet_values, SolverOptions};
use carnot_core::{build_grid, taylor_poly, CarnotGroup, GradedPolynomial};
use proptest::prelude::*;

fn groups() -> impl Strategy<Value = CarnotGroup> {
    prop_oneof![Just(CarnotGroup::heisenberg()), Just(CarnotGroup::engel())]
}

fn with_points(k: usize) -> impl Strategy<Value = (CarnotGroup, Vec<Vec<f64>>)> {
    groups().prop_flat_map(move |g| {
        let n = g.dimension();
        (
            Just(g),
            prop::collection::vec(prop::collection::vec(-1.0f64..1.0, n), k),
        )
    })
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

proptest! {
    #[test]
    fn associativity((g, p) in with_points(3)) {
        let left = g.multiply(&g.multiply(&p[0], &p[1]).unwrap(), &p[2]).unwrap();
        let right = g.multiply(&p[0], &g.multiply(&p[1], &p[2]).unwrap()).unwrap();
        prop_assert!(close(&left, &right, 1e-13));
    }

    #[test]
    fn inverse_is_negation((g, p) in with_points(1)) {
        let inv = g.inverse(&p[0]).unwrap();
        prop_assert!(close(&inv, &p[0].iter().map(|x| -x).collect::<Vec<_>>(), 0.0));
        prop_assert!(g.multiply(&p[0], &inv).unwrap().iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn dilation_is_a_homomorphism((g, p) in with_points(2), r in 0.05f64..5.0) {
        let lhs = g.dilate(r, &g.multiply(&p[0], &p[1]).unwrap()).unwrap();
        let rhs = g.multiply(&g.dilate(r, &p[0]).unwrap(), &g.dilate(r, &p[1]).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn norm_is_homogeneous_and_symmetric((g, p) in with_points(1), r in 0.05f64..5.0) {
        let n = g.gauge_norm(&p[0]);
        let scaled = g.gauge_norm(&g.dilate(r, &p[0]).unwrap());
        prop_assert!((scaled - r * n).abs() <= 1e-12 * r * n.max(1e-300));
        prop_assert!((g.gauge_norm(&g.inverse(&p[0]).unwrap()) - n).abs() <= 1e-14 * (1.0 + n));
    }

    #[test]
    fn distance_is_left_invariant((g, p) in with_points(3)) {
        let d = g.distance(&p[0], &p[1]);
        let wd = g.distance(&g.multiply(&p[2], &p[0]).unwrap(), &g.multiply(&p[2], &p[1]).unwrap());
        prop_assert!((d - wd).abs() <= 1e-12 * (1.0 + d));
    }

    #[test]
    fn taylor_is_a_projection(
        g in groups(),
        coefs in prop::collection::vec(-1.0f64..1.0, 64),
        degree in 1u32..=4,
        s in prop::collection::vec(-0.5f64..0.5, 4),
    ) {
        let dim = g.dimension();
        let p = GradedPolynomial::from_terms(
            dim,
            monomials_up_to(g.weights(), degree).into_iter().zip(coefs.iter().cycle()).map(|(e, &c)| (e, c)),
        );
        let tp = taylor_poly(&g, &p, &s[..dim], degree).unwrap();
        prop_assert!(tp.global(&g).max_coefficient_distance(&p) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solver_is_linear(c in -3.0f64..3.0, k in 0.5f64..3.0, shift in -1.0f64..1.0) {
        let g = CarnotGroup::heisenberg();
        let problem = build_grid(&g, &[0.0; 3], 1.0, 11).unwrap();
        let nodes = problem.node_points();
        let crossings = problem.crossing_points();
        let f1: Vec<f64> = nodes.iter().map(|p| (k * p[0]).sin() + p[2]).collect();
        let f2: Vec<f64> = nodes.iter().map(|p| 1.0 + p[1] * p[1]).collect();
        let g1: Vec<f64> = crossings.iter().map(|p| p[0] + shift).collect();
        let g2: Vec<f64> = crossings.iter().map(|p| (p[1] * k).cos()).collect();
        let opts = SolverOptions { tol: 1e-13, ..SolverOptions::default() };
        let u1 = solve_dirichlet_values(&problem, &f1, &g1, &opts).unwrap();
        let u2 = solve_dirichlet_values(&problem, &f2, &g2, &opts).unwrap();
        let mix = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + c * y).collect::<Vec<_>>();
        let u = solve_dirichlet_values(&problem, &mix(&f1, &f2), &mix(&g1, &g2), &opts).unwrap();
        let want = mix(u1.values(), u2.values());
        let scale = want.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let err = u.values().iter().zip(&want).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-9 * scale, "{err}");
    }

    #[test]
    fn discrete_operator_is_exact_on_horizontal_quadratics(
        g in groups(),
        a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, d in -2.0f64..2.0, e in -2.0f64..2.0,
    ) {
        let problem = build_grid(&g, &vec![0.0; g.dimension()], 1.0, 9).unwrap();
        let op = discretize_l(&problem);
        let u = from_fn(move |p: &[f64]| a * p[0] * p[0] + b * p[1] * p[1] + c * p[0] * p[1] + d * p[0] + e);
        let lu = op.apply_function(&u);
        let want = 2.0 * (a + b);
        prop_assert!(lu.values().iter().all(|v| (v - want).abs() < 1e-8 * (1.0 + want.abs())));
    }
}
