use carnot_core::cascade::{second_derivative_limit, split_estimate, translated_cascade};
use carnot_core::graded::{remainder_slope, taylor_poly, DerivativeWord, RemainderSlope};
use carnot_core::modulus::synthetic_de_giorgi_suite;
use carnot_core::poly::monomials_up_to;
use carnot_core::solver::{
    build_grid, convergence_study, harmonic_derivative_bound, max_principle_check, mean_value_check, sobolev_ratio,
    solve_dirichlet, BallSampling, ExponentialSolution, SolverOptions,
};
use carnot_core::{
    fit_exponent, graded::from_fn, run_cascade, test_function, theorem_check, CarnotError, CarnotGroup, CascadeConfig,
    GradedPolynomial, GroupFunction, TestKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::artifacts::{num, opt, Artifacts, CsvTable};
use crate::config::{Command, ExperimentConfig};
use crate::RunError;

pub(crate) fn dispatch(config: &ExperimentConfig, a: &mut Artifacts) -> Result<(), RunError> {
    match config.command()? {
        Command::GroupCheck => group_check(config, a),
        Command::Taylor => taylor(config, a),
        Command::Solve => solve(config, a),
        Command::Lemmas => lemmas(config, a),
        Command::Cascade => cascade(config, a),
        Command::Schauder => schauder(config, a),
        Command::Report => {
            group_check(config, a)?;
            taylor(config, a)?;
            solve(config, a)?;
            lemmas(config, a)?;
            cascade(config, a)?;
            schauder(config, a)
        }
    }
}

fn rng(config: &ExperimentConfig, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(config.seed);
    r.set_stream(stream);
    r
}

fn group_check(config: &ExperimentConfig, a: &mut Artifacts) -> Result<(), RunError> {
    let g = config.carnot_group()?;
    let report = g.invariant_suite(config.trials, config.seed);
    let mut t = CsvTable::new(
        "invariants",
        &[
            ("invariant", "identity checked on random points of B_1(0)"),
            (
                "max_error",
                "largest violation; absolute for coordinates, relative for norms",
            ),
            ("tolerance", "admissible error"),
            ("passed", "max_error <= tolerance"),
        ],
    );
    for (name, err) in report.rows() {
        let ok = err <= config.tolerance;
        t.push(vec![name.into(), num(err), num(config.tolerance), ok.to_string()]);
        a.check(
            name,
            ok,
            format!(
                "max-error {} over {} samples (tol {})",
                num(err),
                config.trials,
                num(config.tolerance)
            ),
        );
    }
    let c = g.quasi_triangle_constant(&mut rng(config, 1), config.trials);
    a.line("quasi_triangle", format!("largest d(p,r)/(d(p,q)+d(q,r)) = {}", num(c)));
    a.table(t);
    a.result("group_check", &report);
    a.result("quasi_triangle_constant", c);
    Ok(())
}

const PROJECTION_CASES: usize = 20;
const TAYLOR_DEGREE: u32 = 4;

fn taylor(config: &ExperimentConfig, a: &mut Artifacts) -> Result<(), RunError> {
    let g = config.carnot_group()?;
    let dim = g.dimension();
    let monomials = monomials_up_to(g.weights(), TAYLOR_DEGREE);
    let mut r = rng(config, 2);
    let mut proj = CsvTable::new(
        "taylor_projection",
        &[
            ("case", "random polynomial index"),
            ("degree", "homogeneous degree of the expansion"),
            ("max_coefficient_error", "largest coefficient of P_n(p, xi) - p"),
        ],
    );
    let mut worst = 0.0f64;
    for case in 0..PROJECTION_CASES {
        let p = GradedPolynomial::from_terms(dim, monomials.iter().map(|e| (e.clone(), r.gen_range(-1.0..1.0))));
        let xi = g.random_in_ball(&mut r, 0.5);
        let tp = taylor_poly(&g, &p, &xi, TAYLOR_DEGREE)?;
        let err = tp.global(&g).max_coefficient_distance(&p);
        worst = worst.max(err);
        proj.push(vec![case.to_string(), TAYLOR_DEGREE.to_string(), num(err)]);
    }
    a.check(
        "taylor_projection",
        worst <= 1e-9,
        format!(
            "{PROJECTION_CASES} polynomials of degree <= {TAYLOR_DEGREE}, max coefficient error {}",
            num(worst)
        ),
    );
    let mut rem = CsvTable::new(
        "taylor_remainder",
        &[
            ("n", "Taylor degree"),
            ("slope", "log-log slope of the sup remainder against the radius"),
            ("r2", "coefficient of determination of the fit"),
            ("expected", "n + 1"),
        ],
    );
    let radii = [0.4, 0.2, 0.1, 0.05, 0.025];
    let e = from_fn(|p: &[f64]| p[0].exp());
    let origin = vec![0.0; dim];
    for n in 1..=3u32 {
        match remainder_slope(&g, &e, &origin, n, &radii, 64, config.seed)? {
            RemainderSlope::Slope { slope, r2 } => {
                rem.push(vec![n.to_string(), num(slope), num(r2), (n + 1).to_string()]);
                a.check(
                    "taylor_remainder",
                    slope >= n as f64 + 0.8,
                    format!("exp(x1), n = {n}: slope {slope:.4} (r2 {r2:.6}), expected {}", n + 1),
                );
            }
            RemainderSlope::Exact => a.violation("taylor_remainder", format!("exp(x1), n = {n}: remainder vanished")),
        }
    }
    a.table(proj);
    a.table(rem);
    a.result("taylor_projection_max_error", worst);
    Ok(())
}

fn solve(config: &ExperimentConfig, a: &mut Artifacts) -> Result<(), RunError> {
    let g = config.carnot_group()?;
    let u = ExponentialSolution::standard(&g);
    let study = convergence_study(&g, &u, &config.grid_sizes, &SolverOptions::default())?;
    let mut t = CsvTable::new(
        "convergence",
        &[
            ("n", "nodes per axis"),
            ("h", "first-layer spacing"),
            ("max_error", "nodal L-infinity error against exp(c.x)"),
            ("method", "solver that produced the solution"),
            ("iterations", "Krylov iterations"),
        ],
    );
    for r in &study.rows {
        t.push(vec![
            r.n.to_string(),
            num(r.h),
            num(r.max_error),
            format!("{:?}", r.method),
            r.iterations.to_string(),
        ]);
        a.line("solve", format!("n = {}: max error {}", r.n, num(r.max_error)));
    }
    a.check(
        "solve_order",
        study.order.slope >= 1.5,
        format!("empirical order {:.4} (r2 {:.6})", study.order.slope, study.order.r2),
    );
    a.table(t);
    a.result("convergence", &study);
    Ok(())
}

fn smooth_random_rhs(g: &CarnotGroup, r: &mut ChaCha8Rng) -> impl GroupFunction + Clone {
    let dim = g.dimension();
    let s: f64 = r.gen_range(0.5..2.0);
    let amp: f64 = r.gen_range(0.0..0.5);
    let k: Vec<f64> = (0..dim).map(|_| r.gen_range(-3.0..3.0)).collect();
    let phase: f64 = r.gen_range(0.0..std::f64::consts::TAU);
    from_fn(move |p: &[f64]| {
        let arg: f64 = p.iter().zip(&k).map(|(x, y)| x * y).sum::<f64>() + phase;
        s * (1.0 - amp * 0.5 * (1.0 + arg.sin()))
    })
}

const MAX_PRINCIPLE_CASES: usize = 10;
const MEAN_VALUE_BATCHES: usize = 10;

fn lemmas(config: &ExperimentConfig, a: &mut Artifacts) -> Result<(), RunError> {
    let g = config.carnot_group()?;
    let dim = g.dimension();
    let origin = vec![0.0; dim];
    let fine = 2 * config.n - 1;
    let zero = from_fn(|_: &[f64]| 0.0);

    let mut mp = CsvTable::new(
        "max_principle",
        &[
            ("case", "random right-hand side index"),
            ("n", "nodes per axis"),
            ("sup_u", "sup |u| over the nodes"),
            ("sup_f", "sup |f| over the nodes"),
            ("volume", "quadrature volume of the ball"),
            ("ratio", "(sup|u| - sup|g|)+ / (sup|f| |ball|^(2/Q) 2^((Q+2)/4)), g = 0"),
        ],
    );
    let mut r = rng(config, 3);
    let coarse_problem = build_grid(&g, &origin, 1.0, config.n)?;
    let fine_problem = build_grid(&g, &origin, 1.0, fine)?;
    let mut ratios = Vec::new();
    for case in 0..MAX_PRINCIPLE_CASES {
        let f = smooth_random_rhs(&g, &mut r);
        for problem in [&coarse_problem, &fine_problem] {
            let u = solve_dirichlet(problem, &f, &zero)?;
            let rep = max_principle_check(problem, &u, &f, &zero);
            ratios.push(rep.ratio);
            mp.push(vec![
                case.to_string(),
                problem.n_per_axis().to_string(),
                num(rep.sup_u),
                num(rep.sup_f),
                num(rep.volume),
                num(rep.ratio),
            ]);
        }
    }
    let (lo, hi) = min_max(&ratios);
    a.check(
        "max_principle",
        hi.is_finite() && lo > 0.0 && hi / lo <= 2.0,
        format!(
            "{MAX_PRINCIPLE_CASES} right-hand sides, n = {} and {fine}: ratio in [{}, {}], spread {:.4}",
            config.n,
            num(lo),
            num(hi),
            hi / lo
        ),
    );
    a.table(mp);

    let suite = synthetic_de_giorgi_suite(20, config.seed)?;
    let mut dg = CsvTable::new(
        "de_giorgi",
        &[
            ("case", "synthetic sequence index"),
            ("c", "recurrence constant C"),
            ("alpha", "exponent alpha"),
            ("beta", "exponent beta"),
            ("k0", "start level"),
            ("phi0", "phi(k0)"),
            ("threshold", "d from de_giorgi_threshold"),
            ("vanishes_at", "first level where phi is zero"),
            (
                "recurrence_ratio",
                "largest phi(h)(h-k)^alpha / (C phi(k)^beta); at most 1",
            ),
            ("passed", "recurrence holds and phi(k0 + d) = 0"),
        ],
    );
    for (j, c) in suite.iter().enumerate() {
        let s = &c.sequence;
        dg.push(vec![
            j.to_string(),
            num(s.c),
            num(s.alpha),
            num(s.beta),
            num(s.k0),
            num(s.phi0),
            num(c.threshold),
            num(s.vanishes_at),
            num(c.recurrence_ratio),
            c.passed().to_string(),
        ]);
    }
    let passed = suite.iter().filter(|c| c.passed()).count();
    a.check(
        "de_giorgi",
        passed == suite.len(),
        format!("{passed}/{} sequences vanish by k0 + d", suite.len()),
    );
    a.table(dg);

    let kinds = [
        TestKind::Holder(0.5),
        TestKind::Holder(0.25),
        TestKind::Lipschitz,
        TestKind::LogDini,
        TestKind::NonDini,
        TestKind::Constant(1.0),
    ];
    let library = kinds.iter().map(|&k| test_function(k)).collect::<Result<Vec<_>, _>>()?;
    let sampling = BallSampling::default();
    let mut r = rng(config, 4);
    let per_batch = config.trials.div_ceil(MEAN_VALUE_BATCHES);
    let mut mv = CsvTable::new(
        "mean_value",
        &[
            ("batch", "batch index"),
            ("draws", "random (xi, eta, f) draws in the batch"),
            (
                "max_ratio",
                "largest |f(xi eta) - f(xi)| / (|eta| sup_{B_|eta|(xi)} |Xf|)",
            ),
        ],
    );
    let mut batch_max = Vec::new();
    let mut done = 0;
    for b in 0..MEAN_VALUE_BATCHES {
        let draws = per_batch.min(config.trials - done);
        if draws == 0 {
            break;
        }
        let mut m = 0.0f64;
        for _ in 0..draws {
            let f = &library[r.gen_range(0..library.len())];
            let xi = g.random_in_ball(&mut r, 0.5);
            let len = (r.gen_range(1e-3f64.ln()..0.25f64.ln())).exp();
            let eta = g.dilate(len, &g.random_unit_point(&mut r))?;
            m = m.max(mean_value_check(&g, f, &xi, &eta, 1.0, &sampling)?);
        }
        done += draws;
        batch_max.push(m);
        mv.push(vec![b.to_string(), draws.to_string(), num(m)]);
    }
    let (lo, hi) = min_max(&batch_max);
    a.check(
        "mean_value",
        hi.is_finite() && lo > 0.0 && hi / lo <= 2.0,
        format!(
            "{done} draws: fitted C = {}, batch maxima spread {:.4}",
            num(hi),
            hi / lo
        ),
    );
    a.table(mv);

    let mut sob = CsvTable::new(
        "sobolev",
        &[
            ("variant", "bump variant"),
            ("n", "nodes per axis"),
            ("radius", "ball radius"),
            ("ratio", "||f||_{p*} / ||Xf||_p with p = 2"),
        ],
    );
    let bump = |scale: f64, amp: f64| {
        let gg = g.clone();
        from_fn(move |x: &[f64]| {
            let y = gg.dilate(1.0 / scale, x).expect("positive dilation");
            amp * (1.0 - gg.gauge_norm(&y).powi(4)).max(0.0).powi(2)
        })
    };
    let base = sobolev_ratio(&coarse_problem, &bump(1.0, 1.0), 2.0)?;
    let amp = sobolev_ratio(&coarse_problem, &bump(1.0, 3.0), 2.0)?;
    let scaled = sobolev_ratio(&build_grid(&g, &origin, 0.5, config.n)?, &bump(0.5, 1.0), 2.0)?;
    let refined = sobolev_ratio(&fine_problem, &bump(1.0, 1.0), 2.0)?;
    for (name, n, radius, v) in [
        ("base", config.n, 1.0, base),
        ("amplitude_3", config.n, 1.0, amp),
        ("dilated_half", config.n, 0.5, scaled),
        ("refined", fine, 1.0, refined),
    ] {
        sob.push(vec![name.into(), n.to_string(), num(radius), num(v)]);
    }
    let rel = |x: f64| (x - base).abs() / base;
    a.check(
        "sobolev",
        rel(amp) <= 0.05 && rel(scaled) <= 0.05 && rel(refined) <= 0.05,
        format!(
            "bump ratio {}; amplitude {:.2e}, dilation {:.2e}, refinement {:.2e} relative change",
            num(base),
            rel(amp),
            rel(scaled),
            rel(refined)
        ),
    );
    a.table(sob);

    let x1 = GradedPolynomial::var(dim, 0);
    let x1x2 = &x1 * &GradedPolynomial::var(dim, 1);
    let h1 = harmonic_derivative_bound(&g, &x1, &origin, 1.0, &DerivativeWord(vec![0]), &sampling)?;
    let h2 = harmonic_derivative_bound(&g, &x1x2, &origin, 1.0, &DerivativeWord(vec![0, 1]), &sampling)?;
    let h3 = harmonic_derivative_bound(&g, &x1x2, &origin, 2.0, &DerivativeWord(vec![0, 1]), &sampling)?;
    a.check(
        "harmonic",
        (h1 - 1.0).abs() < 1e-9,
        format!("u = x1, I = (1), r = 1: ratio {}", num(h1)),
    );
    a.check(
        "harmonic",
        (h2 - h3).abs() <= 1e-9 * h2.max(1.0),
        format!(
            "u = x1 x2, I = (1, 2): ratio {} at r = 1, {} at r = 2",
            num(h2),
            num(h3)
        ),
    );
    a.result("max_principle_ratios", &ratios);
    a.result("de_giorgi", &suite);
    a.result("mean_value_batch_max", &batch_max);
    a.result("sobolev", [base, amp, scaled, refined]);
    a.result("harmonic", [h1, h2, h3]);
    Ok(())
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

fn cascade_config(config: &ExperimentConfig) -> Result<CascadeConfig, RunError> {
    let mut c = CascadeConfig::new(config.group_spec()?, config.test_kind()?);
    c.rho = config.rho;
    c.k_max = config.k_max;
    c.n_per_ball = config.n;
    c.mode = config.mode;
    c.seed = config.seed;
    if let Some(xi0) = &config.xi0 {
        c.xi0 = xi0.clone();
    }
    Ok(c)
}

const SPLIT_SWEEP: [i32; 5] = [4, 5, 6, 7, 8];

fn cascade(config: &ExperimentConfig, a: &mut Artifacts) -> Result<(), RunError> {
    let cc = cascade_config(config)?;
    let report = run_cascade(&cc)?;
    a.table(CsvTable {
        name: "cascade_levels".into(),
        columns: vec![
            ("k", "level; radius rho^k"),
            ("radius", "rho^k"),
            ("sup_v", "sup |u - u_k| over the level nodes"),
            ("bound_v", "rho^(2k) omega(rho^k)"),
            ("ratio_v", "sup_v / bound_v"),
            ("sup_w", "sup |u_k - u_(k+1)| over B_(rho^(k+2))"),
            ("sup_xw", "sup |X w_k| over B_(rho^(k+2))"),
            ("sup_xxw", "sup |X X w_k| over B_(rho^(k+2))"),
            ("bound_xw", "rho^k omega(rho^k)"),
            ("bound_xxw", "omega(rho^k)"),
            ("ratio_xw", "sup_xw / bound_xw"),
            ("ratio_xxw", "sup_xxw / bound_xxw"),
            ("w_nodes", "nodes used for the w_k sups"),
            ("w_masked_nodes", "nodes skipped because a stencil did not fit"),
            ("iterations", "Krylov iterations of the level solve"),
            ("relative_residual", "final relative residual of the level solve"),
        ],
        rows: report
            .to_csv()
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(String::from).collect())
            .collect(),
    });
    let mut bounded = true;
    for (name, range) in [
        ("ratio_v", report.ratio_range(|l| Some(l.ratio_v))),
        ("ratio_xxw", report.ratio_range(|l| l.ratio_xxw)),
        ("ratio_xw", report.ratio_range(|l| l.ratio_xw)),
    ] {
        match range {
            Some((lo, hi)) if hi.is_finite() => {
                let spread = if lo > 0.0 {
                    format!("{:.4}", hi / lo)
                } else {
                    "n/a".into()
                };
                a.line(
                    "cascade",
                    format!(
                        "{name} over k = 0..={}: [{}, {}], max/min {spread}",
                        cc.k_max,
                        num(lo),
                        num(hi)
                    ),
                );
            }
            Some((_, hi)) => {
                bounded = false;
                a.violation("cascade", format!("{name} is unbounded ({hi})"));
            }
            None => a.line("cascade", format!("{name}: no levels")),
        }
    }
    if bounded {
        a.line("cascade", "ok all ratios finite");
    }

    let limits = second_derivative_limit(&report);
    let mut lt = CsvTable::new(
        "cascade_limit",
        &[
            ("i", "first horizontal index"),
            ("j", "second horizontal index"),
            ("reference", "X_i X_j u(0)"),
            ("last", "X_i X_j u_k(0) at the finest level"),
            ("extrapolated", "geometric extrapolation of the level values"),
            ("error", "|extrapolated - reference|"),
            (
                "max_fitted_constant",
                "largest |X_iX_j u_k(0) - X_iX_j u(0)| / sum_(l>=k) omega(rho^l)",
            ),
            ("status", "converged, insufficient_levels or non_monotone"),
        ],
    );
    for e in &limits {
        let status = serde_json::to_value(e.status)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default();
        lt.push(vec![
            e.i.to_string(),
            e.j.to_string(),
            num(e.reference),
            num(*e.values.last().unwrap_or(&f64::NAN)),
            num(e.extrapolated),
            num(e.error),
            num(e.fitted_constants.iter().cloned().fold(0.0, f64::max)),
            status,
        ]);
    }
    let worst = limits.iter().map(|e| e.error).fold(0.0, f64::max);
    a.line(
        "cascade_limit",
        format!("max |lim X_iX_j u_k(0) - X_iX_j u(0)| = {}", num(worst)),
    );
    a.table(lt);

    if config.xi0.is_some() {
        let tr = translated_cascade(&cc)?;
        let mut tt = CsvTable::new(
            "cascade_translated",
            &[
                ("k", "level"),
                (
                    "difference",
                    "sup |X X u_k(xi0) - X X u'_k(xi0)|; empty when xi0 leaves the level ball",
                ),
                (
                    "corrected_difference",
                    "difference less the interpolation error estimates",
                ),
                ("ratio", "difference / omega(rho^k)"),
            ],
        );
        for t in &tr.translated {
            tt.push(vec![
                t.k.to_string(),
                opt(t.difference),
                opt(t.corrected_difference),
                opt(t.ratio),
            ]);
        }
        let rs: Vec<f64> = tr.translated.iter().filter_map(|t| t.ratio).collect();
        let (lo, hi) = min_max(&rs);
        a.line(
            "cascade_translated",
            format!(
                "{} levels with xi0 inside: ratio in [{}, {}]",
                rs.len(),
                num(lo),
                num(hi)
            ),
        );
        a.table(tt);
        a.result("translated", &tr.translated);
    }

    let mut st = CsvTable::new(
        "cascade_split",
        &[
            ("d0", "|xi0|, xi0 on the first axis"),
            ("k", "level used for the split"),
            ("i1", "|XXu(xi0) - XXu_k(xi0)|"),
            ("i2", "|XXu_k(xi0) - XXu_k(0)|"),
            ("i3", "|XXu_k(0) - XXu(0)|"),
            ("lhs", "|XXu(xi0) - XXu(0)| for (i, j) = (1, 1)"),
            ("rhs", "Dini right-hand side with C = 1; empty when divergent"),
            ("ratio", "lhs / rhs"),
            ("triangle_gap", "i1 + i2 + i3 - lhs"),
        ],
    );
    let dim = config.carnot_group()?.dimension();
    let mut split_ratios = Vec::new();
    for e in SPLIT_SWEEP {
        let mut xi0 = vec![0.0; dim];
        xi0[0] = 0.5f64.powi(e);
        let s = match split_estimate(&cc, &xi0, 0, 0) {
            Ok(s) => s,
            Err(CarnotError::LevelOutOfRange { level, max }) => {
                a.line(
                    "cascade_split",
                    format!("d0 = 2^-{e}: level {level} beyond {max}, skipped"),
                );
                continue;
            }
            Err(err) => return Err(err.into()),
        };
        split_ratios.extend(s.ratio);
        st.push(vec![
            num(s.d0),
            s.k.to_string(),
            num(s.i1),
            num(s.i2),
            num(s.i3),
            num(s.lhs),
            opt(s.rhs),
            opt(s.ratio),
            num(s.triangle_gap),
        ]);
        if s.triangle_gap < -1e-12 * (1.0 + s.lhs) {
            a.violation(
                "cascade_split",
                format!("d0 = {}: triangle gap {}", num(s.d0), num(s.triangle_gap)),
            );
        }
    }
    if !split_ratios.is_empty() {
        let (lo, hi) = min_max(&split_ratios);
        a.line(
            "cascade_split",
            format!("lhs/rhs over the sweep in [{}, {}]", num(lo), num(hi)),
        );
    }
    a.table(st);
    a.result("cascade", &report);
    a.result("cascade_limit", &limits);
    Ok(())
}

fn schauder(config: &ExperimentConfig, a: &mut Artifacts) -> Result<(), RunError> {
    let cc = cascade_config(config)?;
    let report = theorem_check(&cc, config.pairs)?;
    let mut t = CsvTable::new(
        "schauder_pairs",
        &[
            ("d", "gauge distance d(xi, eta)"),
            ("lhs", "max_ij |X_iX_j u(xi) - X_iX_j u(eta)|"),
            ("rhs_dini", "Dini form with C = 1; empty when divergent or d >= 1"),
            ("rhs_holder", "d^(alpha/2) (sup|u| + Holder norm of f)"),
            ("rhs_log", "logarithmic Lipschitz form"),
            ("chain_links", "links of the chain from xi to eta"),
            ("rhs_chain", "Dini form summed over the chain links"),
        ],
    );
    for p in &report.pairs {
        t.push(vec![
            num(p.d),
            num(p.lhs),
            opt(p.rhs_dini),
            opt(p.rhs_holder),
            opt(p.rhs_log),
            p.chain_links.to_string(),
            opt(p.rhs_chain),
        ]);
    }
    a.table(t);
    a.line(
        "schauder",
        format!(
            "{} pairs in B_1/2(0), n = {}, sup|u| = {}, sup|f| = {}, resampled {}",
            report.pairs.len(),
            report.n_per_axis,
            num(report.sup_u),
            num(report.sup_f),
            report.resampled
        ),
    );
    for (name, c) in [
        ("C_dini", report.c_dini),
        ("C_holder", report.c_holder),
        ("C_log", report.c_log),
        ("C_chain", report.c_chain),
    ] {
        match c {
            Some(v) if v.is_finite() => a.line("schauder", format!("fitted {name} = {}", num(v))),
            Some(v) => a.violation("schauder", format!("{name} = {v}")),
            None => a.line("schauder", format!("{name}: not applicable to {}", config.rhs)),
        }
    }
    let pts: Vec<(f64, f64)> = report
        .pairs
        .iter()
        .filter(|p| p.lhs > 0.0)
        .map(|p| (p.d, p.lhs))
        .collect();
    if let Ok(fit) = fit_exponent(&pts, true) {
        a.line(
            "schauder",
            format!("log-log slope of lhs against d: {:.4} (r2 {:.4})", fit.slope, fit.r2),
        );
        a.result("lhs_slope", fit);
    }
    a.result(
        "schauder",
        serde_json::json!({
            "n_per_axis": report.n_per_axis,
            "sup_u": report.sup_u,
            "sup_f": report.sup_f,
            "holder_norm": report.holder_norm,
            "resampled": report.resampled,
            "c_dini": report.c_dini,
            "c_holder": report.c_holder,
            "c_log": report.c_log,
            "c_chain": report.c_chain,
        }),
    );
    Ok(())
}
