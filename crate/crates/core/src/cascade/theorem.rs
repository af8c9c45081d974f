use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CarnotError, Result};
use crate::graded::GroupFunction;
use crate::group::CarnotGroup;
use crate::modulus::{holder_rhs, schauder_rhs, test_function};
use crate::solver::{build_grid, solve_dirichlet_with};

use super::config::CascadeConfig;
use super::engine::second_fields;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub d: f64,
    /// `max_ij |X_iX_j u(ξ) − X_iX_j u(η)|`
    pub lhs: f64,
    /// Dini form with `C = 1`; absent when the pair is too far apart or the integral diverges.
    pub rhs_dini: Option<f64>,
    /// `d^{α/2} (sup|u| + ‖f‖_{C^{0,α}})`, also for `α = 1`.
    pub rhs_holder: Option<f64>,
    /// The logarithmically corrected Lipschitz form.
    pub rhs_log: Option<f64>,
    /// Links of the chain from `ξ` to `η`, each shorter than `1/(4b²)`.
    pub chain_links: usize,
    /// Sum of the Dini form over the links.
    pub rhs_chain: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub n_per_axis: usize,
    pub seed: u64,
    pub sup_u: f64,
    pub sup_f: f64,
    pub holder_norm: Option<f64>,
    pub pairs: Vec<PairRecord>,
    /// Pairs redrawn because a derivative stencil did not fit at an endpoint.
    pub resampled: usize,
    pub c_dini: Option<f64>,
    pub c_holder: Option<f64>,
    pub c_log: Option<f64>,
    pub c_chain: Option<f64>,
}

impl TheoremReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("d,lhs,rhs_dini,rhs_holder,rhs_log,chain_links,rhs_chain\n");
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.17e}"));
        for p in &self.pairs {
            let _ = writeln!(
                s,
                "{:.17e},{:.17e},{},{},{},{},{}",
                p.d,
                p.lhs,
                opt(p.rhs_dini),
                opt(p.rhs_holder),
                opt(p.rhs_log),
                p.chain_links,
                opt(p.rhs_chain)
            );
        }
        s
    }
}

fn max_ratio(pairs: &[PairRecord], rhs: impl Fn(&PairRecord) -> Option<f64>) -> Option<f64> {
    let mut best: Option<f64> = None;
    for p in pairs {
        if let Some(r) = rhs(p) {
            let c = if r > 0.0 { p.lhs / r } else { 0.0 };
            best = Some(best.map_or(c, |b: f64| b.max(c)));
        }
    }
    best
}

fn dini_form(group_d: f64, omega: &crate::modulus::AnalyticModulus, sup_u: f64, sup_f: f64) -> Result<Option<f64>> {
    if !(group_d > 0.0 && group_d < 1.0) {
        return Ok(None);
    }
    match schauder_rhs(group_d, omega, sup_u, sup_f, 1.0) {
        Ok(v) => Ok(Some(v)),
        Err(CarnotError::Divergent { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Solves `L u = f` on `B_1(0)` with the manufactured boundary values and
/// measures `Ĉ = max lhs / rhs` over `pair_budget` pairs in `B_{1/2}(0)`.
///
/// The chained estimate joins `ξ` to `η` along the one-parameter subgroup
/// `t ↦ ξ · (t z)`, `z = ξ^{-1}η`, cut into `L` equal links.
pub fn theorem_check(config: &CascadeConfig, pair_budget: usize) -> Result<TheoremReport> {
    let group = CarnotGroup::new(config.group.clone())?;
    config.validate(&group)?;
    let tf = test_function(config.rhs)?;
    let solution = tf.manufactured();
    let dim = group.dimension();
    let problem = build_grid(&group, &vec![0.0; dim], 1.0, config.n_per_ball)?;
    let u = solve_dirichlet_with(&problem, &tf, &solution, &config.solver)?;
    let second = second_fields(&u)?;
    let sup_u = u.max_abs();
    let sup_f = problem
        .node_points()
        .iter()
        .map(|p| tf.value(p).abs())
        .fold(0.0, f64::max);
    let omega = tf.modulus();
    let alpha = tf.holder_exponent();
    let holder_norm = tf.holder_norm();
    let link_max = 1.0 / (4.0 * config.b * config.b);
    let m = group.horizontal_dim();
    let hessian = |p: &[f64]| -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(m * m);
        for row in &second {
            for f in row {
                out.push(f.sample(p).ok()?);
            }
        }
        Some(out)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pairs = Vec::with_capacity(pair_budget);
    let mut resampled = 0;
    let mut attempts = 0;
    while pairs.len() < pair_budget {
        attempts += 1;
        if attempts > 100 * pair_budget.max(1) {
            return Err(CarnotError::InvalidParameter(
                "could not draw pairs inside the derivative mask".into(),
            ));
        }
        let xi = group.random_in_ball(&mut rng, 0.5);
        let eta = group.random_in_ball(&mut rng, 0.5);
        let d = group.distance(&xi, &eta);
        if d == 0.0 {
            continue;
        }
        let (Some(a), Some(b)) = (hessian(&xi), hessian(&eta)) else {
            resampled += 1;
            continue;
        };
        let lhs = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let z = group.multiply(&group.inverse(&xi)?, &eta)?;
        let mut links = 1usize;
        let link_d = |l: usize| group.gauge_norm(&z.iter().map(|c| c / l as f64).collect::<Vec<_>>());
        while link_d(links) >= link_max {
            links += 1;
        }
        let rhs_chain = dini_form(link_d(links), &omega, sup_u, sup_f)?.map(|r| r * links as f64);
        let (rhs_holder, rhs_log) = match (alpha, holder_norm, d < 1.0) {
            (Some(al), Some(hn), true) => {
                let plain = d.powf(al / 2.0) * (sup_u + hn);
                let log = if al == 1.0 {
                    Some(holder_rhs(d, 1.0, sup_u, hn, 1.0)?)
                } else {
                    None
                };
                (Some(plain), log)
            }
            _ => (None, None),
        };
        pairs.push(PairRecord {
            rhs_dini: dini_form(d, &omega, sup_u, sup_f)?,
            xi,
            eta,
            d,
            lhs,
            rhs_holder,
            rhs_log,
            chain_links: links,
            rhs_chain,
        });
    }
    Ok(TheoremReport {
        n_per_axis: config.n_per_ball,
        seed: config.seed,
        sup_u,
        sup_f,
        holder_norm,
        c_dini: max_ratio(&pairs, |p| p.rhs_dini),
        c_holder: max_ratio(&pairs, |p| p.rhs_holder),
        c_log: max_ratio(&pairs, |p| p.rhs_log),
        c_chain: max_ratio(&pairs, |p| p.rhs_chain),
        pairs,
        resampled,
    })
}
