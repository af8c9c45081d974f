//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! Every criterion carries a pinned tolerance and a wall-clock budget; a
//! criterion passes only when both hold.

use std::time::{Duration, Instant};

use carnot_core::cascade::split_estimate;
use carnot_core::graded::{from_fn, remainder_slope, RemainderSlope};
use carnot_core::modulus::{dini_integral, schauder_rhs, synthetic_de_giorgi_suite, DiniWeight};
use carnot_core::poly::monomials_up_to;
use carnot_core::solver::{
    discretize_l, max_principle_check, mean_value_check, sobolev_ratio, solve_dirichlet, BallSampling,
};
use carnot_core::{
    build_grid, run_cascade, taylor_poly, test_function, theorem_check, CarnotError, CarnotGroup, CascadeConfig,
    DiscreteField, GradedPolynomial, GroupSpec, TestKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn spread(v: &[f64]) -> f64 {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(0.0, f64::max);
    hi / lo
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

const GROUP_TOL: f64 = 1e-12;

fn group_algebra() -> Outcome {
    let mut worst = Vec::new();
    for (name, g) in [("h1", CarnotGroup::heisenberg()), ("engel", CarnotGroup::engel())] {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mut assoc, mut inv, mut dil, mut norm) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..1000 {
            let p = g.random_in_ball(&mut rng, 1.0);
            let q = g.random_in_ball(&mut rng, 1.0);
            let w = g.random_in_ball(&mut rng, 1.0);
            let r: f64 = rng.gen_range(0.1..4.0);
            let l = g.multiply(&g.multiply(&p, &q).unwrap(), &w).unwrap();
            let rr = g.multiply(&p, &g.multiply(&q, &w).unwrap()).unwrap();
            assoc = assoc.max(max_diff(&l, &rr));
            let pi = g.inverse(&p).unwrap();
            inv = inv.max(
                g.multiply(&p, &pi)
                    .unwrap()
                    .iter()
                    .chain(g.multiply(&pi, &p).unwrap().iter())
                    .fold(0.0, |m, x| m.max(x.abs())),
            );
            let lhs = g.dilate(r, &g.multiply(&p, &q).unwrap()).unwrap();
            let rhs = g
                .multiply(&g.dilate(r, &p).unwrap(), &g.dilate(r, &q).unwrap())
                .unwrap();
            dil = dil.max(max_diff(&lhs, &rhs) / lhs.iter().fold(1.0f64, |m, x| m.max(x.abs())));
            let n = g.gauge_norm(&p);
            norm = norm.max((g.gauge_norm(&g.dilate(r, &p).unwrap()) - r * n).abs() / (r * n));
        }
        worst.push((name, assoc.max(inv).max(dil).max(norm)));
    }
    let max = worst.iter().map(|w| w.1).fold(0.0, f64::max);
    outcome(
        max <= GROUP_TOL,
        format!(
            "max error h1 {:.2e}, engel {:.2e} (tol {GROUP_TOL:.0e})",
            worst[0].1, worst[1].1
        ),
    )
}

fn symbolic_discrete() -> Outcome {
    let g = CarnotGroup::heisenberg();
    let problem = build_grid(&g, &[0.0; 3], 1.0, 33).unwrap();
    let op = discretize_l(&problem);
    let lu = op.apply_function(&from_fn(|p: &[f64]| 0.5 * p[0] * p[0]));
    let mask = op.full_stencil_mask();
    let nodes = mask.iter().filter(|&&m| m).count();
    let err = lu
        .values()
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(v, _)| (v - 1.0).abs())
        .fold(0.0, f64::max);
    outcome(
        err <= 1e-10 && nodes > 0,
        format!("|L_h(x^2/2) - 1| = {err:.2e} on {nodes} full-stencil nodes (tol 1e-10)"),
    )
}

/// `u = exp(c·x)` on H¹ with `X = ∂x − (y/2)∂t`, `Y = ∂y + (x/2)∂t`:
/// `X²u = (c1 − c3 y/2)² u` and `Y²u = (c2 + c3 x/2)² u`.
fn solver_order() -> Outcome {
    let g = CarnotGroup::heisenberg();
    let c = [0.7, 0.4, 0.1];
    let u = from_fn(move |p: &[f64]| (c[0] * p[0] + c[1] * p[1] + c[2] * p[2]).exp());
    let f = from_fn(move |p: &[f64]| {
        let e = (c[0] * p[0] + c[1] * p[1] + c[2] * p[2]).exp();
        let a = c[0] - c[2] * p[1] / 2.0;
        let b = c[1] + c[2] * p[0] / 2.0;
        (a * a + b * b) * e
    });
    let mut pts = Vec::new();
    for n in [17, 33, 65] {
        let problem = build_grid(&g, &[0.0; 3], 1.0, n).unwrap();
        let sol = solve_dirichlet(&problem, &f, &u).unwrap();
        let exact = DiscreteField::from_function(&problem, &u);
        pts.push((problem.spacing()[0], sol.difference(&exact).unwrap().max_abs()));
    }
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (h, e)| (a + h.ln(), b + e.ln()));
    let (mx, my) = (mx / 3.0, my / 3.0);
    let slope = pts.iter().map(|(h, e)| (h.ln() - mx) * (e.ln() - my)).sum::<f64>()
        / pts.iter().map(|(h, _)| (h.ln() - mx).powi(2)).sum::<f64>();
    outcome(
        slope >= 1.5,
        format!(
            "L-inf errors {:.2e}, {:.2e}, {:.2e}; order {slope:.3} (need >= 1.5)",
            pts[0].1, pts[1].1, pts[2].1
        ),
    )
}

fn max_principle() -> Outcome {
    let g = CarnotGroup::heisenberg();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let zero = from_fn(|_: &[f64]| 0.0);
    let problems = [33, 65].map(|n| build_grid(&g, &[0.0; 3], 1.0, n).unwrap());
    let mut ratios = Vec::new();
    for _ in 0..10 {
        let s: f64 = rng.gen_range(0.5..2.0);
        let a: f64 = rng.gen_range(0.0..0.5);
        let k: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let f = from_fn(move |p: &[f64]| {
            let arg = k[0] * p[0] + k[1] * p[1] + k[2] * p[2] + phase;
            s * (1.0 - a * 0.5 * (1.0 + arg.sin()))
        });
        for problem in &problems {
            let u = solve_dirichlet(problem, &f, &zero).unwrap();
            ratios.push(max_principle_check(problem, &u, &f, &zero).ratio);
        }
    }
    let finite = ratios.iter().all(|r| r.is_finite() && *r > 0.0);
    let sp = spread(&ratios);
    outcome(
        finite && sp <= 2.0,
        format!("20 ratios in n = 33, 65; spread {sp:.3} (need <= 2)"),
    )
}

fn de_giorgi() -> Outcome {
    let suite = synthetic_de_giorgi_suite(20, 17).unwrap();
    let mut ok = 0;
    for case in &suite {
        let s = &case.sequence;
        let d = s.c.powf(1.0 / s.alpha) * s.phi0.powf((s.beta - 1.0) / s.alpha) * 2f64.powf(s.beta / (s.beta - 1.0));
        let grid: Vec<f64> = (0..=300).map(|j| s.k0 + 2.0 * d * j as f64 / 300.0).collect();
        let mut holds = true;
        for (i, &k) in grid.iter().enumerate() {
            for &h in &grid[i + 1..] {
                if s.phi(h) > s.c * (h - k).powf(-s.alpha) * s.phi(k).powf(s.beta) * (1.0 + 1e-9) {
                    holds = false;
                }
            }
        }
        let monotone = grid.windows(2).all(|w| s.phi(w[1]) <= s.phi(w[0]));
        let vanished = grid.iter().filter(|&&h| h >= s.k0 + d).all(|&h| s.phi(h) == 0.0);
        if holds && monotone && vanished && (case.threshold - d).abs() <= 1e-12 * d {
            ok += 1;
        }
    }
    let params = suite
        .iter()
        .map(|c| (c.sequence.alpha, c.sequence.beta))
        .collect::<Vec<_>>();
    let alpha_range = params
        .iter()
        .fold((f64::MAX, 0.0f64), |(a, b), p| (a.min(p.0), b.max(p.0)));
    outcome(
        ok == suite.len(),
        format!(
            "{ok}/{} sequences satisfy the recurrence and vanish by k0 + d (alpha in [{:.2}, {:.2}])",
            suite.len(),
            alpha_range.0,
            alpha_range.1
        ),
    )
}

fn taylor() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for g in [CarnotGroup::heisenberg(), CarnotGroup::engel()] {
        let dim = g.dimension();
        for degree in 0..=4 {
            for _ in 0..4 {
                let p = GradedPolynomial::from_terms(
                    dim,
                    monomials_up_to(g.weights(), degree)
                        .into_iter()
                        .map(|e| (e, rng.gen_range(-1.0..1.0))),
                );
                let xi = g.random_in_ball(&mut rng, 0.5);
                let tp = taylor_poly(&g, &p, &xi, degree).unwrap();
                for _ in 0..5 {
                    let eta = g.random_in_ball(&mut rng, 1.0);
                    worst = worst.max((tp.eval(&g, &eta) - p.eval(&eta)).abs());
                }
            }
        }
    }
    let g = CarnotGroup::heisenberg();
    let e = from_fn(|p: &[f64]| p[0].exp());
    let slope = match remainder_slope(&g, &e, &[0.0; 3], 2, &[0.4, 0.2, 0.1, 0.05, 0.025], 64, 1).unwrap() {
        RemainderSlope::Slope { slope, .. } => slope,
        RemainderSlope::Exact => 0.0,
    };
    outcome(
        worst <= 1e-10 && slope >= 2.8,
        format!("projection error {worst:.2e} (tol 1e-10); exp(x) remainder slope {slope:.3} (need >= 2.8)"),
    )
}

fn mean_value() -> Outcome {
    let g = CarnotGroup::heisenberg();
    let library: Vec<_> = [
        TestKind::Holder(0.5),
        TestKind::Holder(0.25),
        TestKind::Lipschitz,
        TestKind::LogDini,
        TestKind::NonDini,
        TestKind::Constant(1.0),
    ]
    .into_iter()
    .map(|k| test_function(k).unwrap())
    .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let draws: Vec<(usize, Vec<f64>, Vec<f64>)> = (0..10_000)
        .map(|_| {
            let f = rng.gen_range(0..library.len());
            let xi = g.random_in_ball(&mut rng, 0.5);
            let len = rng.gen_range(1e-3f64.ln()..0.25f64.ln()).exp();
            let eta = g.dilate(len, &g.random_unit_point(&mut rng)).unwrap();
            (f, xi, eta.into_inner())
        })
        .collect();
    let sampling = BallSampling::default();
    let ratios: Vec<f64> = draws
        .par_iter()
        .map(|(f, xi, eta)| mean_value_check(&g, &library[*f], xi, eta, 1.0, &sampling).unwrap())
        .collect();
    let batches: Vec<f64> = ratios
        .chunks(1000)
        .map(|c| c.iter().cloned().fold(0.0, f64::max))
        .collect();
    let c = batches.iter().cloned().fold(0.0, f64::max);
    let finite = ratios.iter().all(|r| r.is_finite());
    let sp = spread(&batches);
    outcome(
        finite && sp <= 2.0 && ratios.iter().all(|&r| r <= c),
        format!("10^4 draws, fitted C = {c:.4}; batch maxima spread {sp:.3} (need <= 2)"),
    )
}

fn sobolev() -> Outcome {
    let g = CarnotGroup::heisenberg();
    let bump = |scale: f64, amp: f64| {
        let gg = g.clone();
        from_fn(move |x: &[f64]| {
            let y = [x[0] / scale, x[1] / scale, x[2] / (scale * scale)];
            amp * (1.0 - gg.gauge_norm(&y).powi(4)).max(0.0).powi(2)
        })
    };
    let base_problem = build_grid(&g, &[0.0; 3], 1.0, 33).unwrap();
    let base = sobolev_ratio(&base_problem, &bump(1.0, 1.0), 2.0).unwrap();
    let amp = sobolev_ratio(&base_problem, &bump(1.0, 5.0), 2.0).unwrap();
    let scaled = sobolev_ratio(&build_grid(&g, &[0.0; 3], 0.25, 33).unwrap(), &bump(0.25, 1.0), 2.0).unwrap();
    let refined = sobolev_ratio(&build_grid(&g, &[0.0; 3], 1.0, 65).unwrap(), &bump(1.0, 1.0), 2.0).unwrap();
    let rel = |x: f64| (x - base).abs() / base;
    let worst = rel(amp).max(rel(scaled)).max(rel(refined));
    outcome(
        base.is_finite() && worst <= 0.05,
        format!(
            "ratio {base:.5}; relative change amplitude {:.1e}, dilation {:.1e}, refinement {:.1e} (tol 5%)",
            rel(amp),
            rel(scaled),
            rel(refined)
        ),
    )
}

const NULL_TOL: f64 = 1e-7;

fn cascade_null() -> Outcome {
    let mut c = CascadeConfig::new(GroupSpec::heisenberg(), TestKind::Constant(1.0));
    c.k_max = 5;
    let report = run_cascade(&c).unwrap();
    let mut worst = 0.0f64;
    for l in report.levels.iter().filter(|l| l.k <= 5) {
        worst = worst.max(l.sup_v);
        for v in [l.sup_w, l.sup_xw, l.sup_xxw].into_iter().flatten() {
            worst = worst.max(v);
        }
    }
    let mut worst_i = 0.0f64;
    let mut splits = 0;
    for e in 4..=8 {
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let s = split_estimate(&c, &[0.5f64.powi(e), 0.0, 0.0], i, j).unwrap();
            worst_i = worst_i.max(s.i1).max(s.i2).max(s.i3);
            splits += 1;
        }
    }
    outcome(
        worst <= NULL_TOL && worst_i <= NULL_TOL,
        format!("sup|v_k|, sup|X^I w_k| <= {worst:.1e}; I1, I2, I3 <= {worst_i:.1e} over {splits} splits (tol 1e-7)"),
    )
}

fn cascade_decay() -> Outcome {
    let mut c = CascadeConfig::new(GroupSpec::heisenberg(), TestKind::Holder(0.5));
    c.k_max = 5;
    c.n_per_ball = 25;
    let report = run_cascade(&c).unwrap();
    let v: Vec<f64> = report.levels.iter().filter(|l| l.k <= 5).map(|l| l.ratio_v).collect();
    let w: Vec<f64> = report
        .levels
        .iter()
        .filter(|l| l.k <= 5)
        .filter_map(|l| l.ratio_xxw)
        .collect();
    let ok = v.len() == 6 && w.len() == 6 && v.iter().chain(&w).all(|r| r.is_finite() && *r > 0.0);
    let (sv, sw) = (spread(&v), spread(&w));
    outcome(
        ok && sv <= 10.0 && sw <= 10.0,
        format!("max/min of sup|v_k| ratio {sv:.3}, of sup|XXw_k| ratio {sw:.3} over k = 0..5 (need <= 10)"),
    )
}

fn theorem() -> Outcome {
    let constants = |kind: TestKind| -> Vec<(Option<f64>, Option<f64>)> {
        [33, 65]
            .into_iter()
            .map(|n| {
                let mut c = CascadeConfig::new(GroupSpec::heisenberg(), kind);
                c.n_per_ball = n;
                let r = theorem_check(&c, 500).unwrap();
                (r.c_holder, r.c_log)
            })
            .collect()
    };
    let stable = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0 => Some(a.max(b) / a.min(b)),
        _ => None,
    };
    let h = constants(TestKind::Holder(0.5));
    let l = constants(TestKind::Lipschitz);
    let sh = stable(h[0].0, h[1].0);
    let sl = stable(l[0].1, l[1].1);
    let passed = sh.is_some_and(|s| s <= 2.0) && sl.is_some_and(|s| s <= 2.0);
    let show = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:.4}"));
    outcome(
        passed,
        format!(
            "holder(1/2) C {} -> {} (ratio {}); lipschitz log-form C {} -> {} (ratio {}), n = 33 -> 65; need <= 2",
            show(h[0].0),
            show(h[1].0),
            show(sh),
            show(l[0].1),
            show(l[1].1),
            show(sl)
        ),
    )
}

fn negative_control() -> Outcome {
    let tf = test_function(TestKind::NonDini).unwrap();
    let omega = tf.modulus();
    let integral = dini_integral(&omega, 0.0, 0.5, DiniWeight::InvR);
    let rhs = schauder_rhs(0.01, &omega, 1.0, tf.sup_norm(), 1.0);
    let control = schauder_rhs(
        0.01,
        &test_function(TestKind::LogDini).unwrap().modulus(),
        1.0,
        1.0,
        1.0,
    );
    let diverges = matches!(integral, Err(CarnotError::Divergent { .. }));
    let propagated = matches!(rhs, Err(CarnotError::Divergent { .. }));
    outcome(
        diverges && propagated && control.is_ok(),
        format!(
            "non_dini integral divergent: {diverges}; rhs divergent: {propagated}; log_dini rhs finite: {}",
            control.is_ok()
        ),
    )
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("group algebra invariants", Duration::from_secs(1), group_algebra),
        (
            "symbolic/discrete consistency",
            Duration::from_secs(5),
            symbolic_discrete,
        ),
        ("solver convergence order", Duration::from_secs(120), solver_order),
        ("maximum principle ratio", Duration::from_secs(300), max_principle),
        ("De Giorgi vanishing", Duration::from_secs(1), de_giorgi),
        ("Taylor projection and remainder", Duration::from_secs(30), taylor),
        ("mean value constant", Duration::from_secs(30), mean_value),
        ("Sobolev ratio invariance", Duration::from_secs(60), sobolev),
        ("cascade null test", Duration::from_secs(180), cascade_null),
        ("cascade decay ratios", Duration::from_secs(600), cascade_decay),
        ("second-derivative estimate constant", Duration::from_secs(900), theorem),
        ("non-Dini negative control", Duration::from_secs(1), negative_control),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let passed = out.passed && elapsed <= *budget;
        failed += usize::from(!passed);
        println!(
            "{} {:>2} {name}: {} [{:.2} s, budget {} s]",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
