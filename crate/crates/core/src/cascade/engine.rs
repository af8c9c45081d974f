use rayon::prelude::*;

use crate::error::{CarnotError, Result};
use crate::graded::from_fn;
use crate::group::CarnotGroup;
use crate::modulus::AnalyticModulus;
use crate::solver::{
    build_grid, horizontal_derivative, second_derivative, solve_dirichlet_values, solve_dirichlet_with, DiscreteField,
    DiscreteProblem, SolveStats,
};

use super::config::{CascadeConfig, CascadeMode, Manufactured};

/// The reference `u`: exact, or a solve on `B_1(0)` sampled by interpolation.
pub(crate) enum Reference<'a> {
    Exact(&'a dyn Manufactured),
    Solved {
        source: &'a dyn Manufactured,
        u: DiscreteField,
        second: Vec<Vec<DiscreteField>>,
    },
}

impl<'a> Reference<'a> {
    pub(crate) fn build(config: &CascadeConfig, base: &DiscreteProblem, source: &'a dyn Manufactured) -> Result<Self> {
        match config.mode {
            CascadeMode::Manufactured => Ok(Reference::Exact(source)),
            CascadeMode::Solved => {
                let f = from_fn(|p: &[f64]| source.f(p));
                let g = from_fn(|p: &[f64]| source.u(p));
                let u = solve_dirichlet_with(base, &f, &g, &config.solver)?;
                let second = second_fields(&u)?;
                Ok(Reference::Solved { source, u, second })
            }
        }
    }

    pub(crate) fn f(&self, p: &[f64]) -> f64 {
        match self {
            Reference::Exact(s) | Reference::Solved { source: s, .. } => s.f(p),
        }
    }

    pub(crate) fn modulus(&self) -> AnalyticModulus {
        match self {
            Reference::Exact(s) | Reference::Solved { source: s, .. } => s.modulus(),
        }
    }

    /// `u(p)` and an interpolation error estimate. Points on `∂B_1(0)` take the
    /// prescribed boundary value in solved mode.
    pub(crate) fn u(&self, p: &[f64]) -> Result<(f64, f64)> {
        match self {
            Reference::Exact(s) => Ok((s.u(p), 0.0)),
            Reference::Solved { source, u, .. } => match u.sample_with_error(p) {
                Ok(v) => Ok(v),
                Err(CarnotError::OutsideHull) if u.problem().group().gauge_norm(p) >= 1.0 - 1e-9 => {
                    Ok((source.u(p), 0.0))
                }
                Err(e) => Err(e),
            },
        }
    }

    pub(crate) fn second(&self, i: usize, j: usize, p: &[f64]) -> Result<f64> {
        match self {
            Reference::Exact(s) => Ok(s.second(i, j, p)),
            Reference::Solved { second, .. } => second[i][j].sample(p),
        }
    }

    /// `sup_{B_1(0)} |u|` and `sup_{B_1(0)} |f|` over the nodes of `base`.
    pub(crate) fn sups(&self, base: &DiscreteProblem) -> (f64, f64) {
        let nodes = base.node_points();
        let sup_f = nodes.par_iter().map(|p| self.f(p).abs()).reduce(|| 0.0, f64::max);
        let sup_u = match self {
            Reference::Exact(s) => nodes.par_iter().map(|p| s.u(p).abs()).reduce(|| 0.0, f64::max),
            Reference::Solved { u, .. } => u.max_abs(),
        };
        (sup_u, sup_f)
    }
}

pub(crate) fn second_fields(u: &DiscreteField) -> Result<Vec<Vec<DiscreteField>>> {
    let m = u.problem().group().horizontal_dim();
    (0..m)
        .map(|i| (0..m).map(|j| second_derivative(u, i, j)).collect())
        .collect()
}

/// One frozen-coefficient solve `L u_k = f(center)` on `B_r(center)` with `u_k = u` on the sphere.
pub(crate) struct Level {
    pub k: usize,
    pub problem: DiscreteProblem,
    pub u: DiscreteField,
    pub first: Vec<DiscreteField>,
    pub second: Vec<Vec<DiscreteField>>,
    pub stats: SolveStats,
    pub frozen_rhs: f64,
    /// Largest interpolation error estimate in the boundary data.
    pub boundary_interpolation_error: f64,
    /// `sup |u − u_k|` over the interior nodes.
    pub sup_v: f64,
    pub v_interpolation_error: f64,
}

impl Level {
    pub(crate) fn second_at(&self, i: usize, j: usize, p: &[f64]) -> Result<f64> {
        self.second[i][j].sample(p)
    }

    /// `X_i X_j u_k` at `p` for all `(i, j)`.
    pub(crate) fn hessian_at(&self, p: &[f64]) -> Result<Vec<Vec<f64>>> {
        let m = self.second.len();
        (0..m)
            .map(|i| (0..m).map(|j| self.second_at(i, j, p)).collect())
            .collect()
    }
}

pub(crate) fn base_problem(group: &CarnotGroup, config: &CascadeConfig) -> Result<DiscreteProblem> {
    build_grid(group, &vec![0.0; group.dimension()], 1.0, config.n_per_ball)
}

pub(crate) fn solve_level(
    config: &CascadeConfig,
    base: &DiscreteProblem,
    reference: &Reference<'_>,
    center: &[f64],
    k: usize,
) -> Result<Level> {
    let radius = config.rho.powi(k as i32);
    let problem = base.rescaled(center, radius)?;
    let frozen_rhs = reference.f(center);
    let boundary: Vec<(f64, f64)> = problem
        .crossing_points()
        .par_iter()
        .map(|p| reference.u(p))
        .collect::<Result<_>>()?;
    let g: Vec<f64> = boundary.iter().map(|b| b.0).collect();
    let boundary_interpolation_error = boundary.iter().map(|b| b.1).fold(0.0, f64::max);
    let f = vec![frozen_rhs; problem.interior_count()];
    let u = solve_dirichlet_values(&problem, &f, &g, &config.solver)?;
    let stats = u.stats().cloned().expect("solver attaches statistics");
    let v: Vec<(f64, f64)> = problem
        .node_points()
        .par_iter()
        .zip(u.values().par_iter())
        .map(|(p, uk)| reference.u(p).map(|(r, e)| ((r - uk).abs(), e)))
        .collect::<Result<_>>()?;
    let sup_v = v.iter().map(|x| x.0).fold(0.0, f64::max);
    let v_interpolation_error = v.iter().map(|x| x.1).fold(0.0, f64::max);
    let m = problem.group().horizontal_dim();
    let first = (0..m).map(|i| horizontal_derivative(&u, i)).collect::<Result<_>>()?;
    let second = second_fields(&u)?;
    Ok(Level {
        k,
        problem,
        u,
        first,
        second,
        stats,
        frozen_rhs,
        boundary_interpolation_error,
        sup_v,
        v_interpolation_error,
    })
}

/// Sups of `w_k = u_k − u_{k+1}` and its first and second horizontal
/// derivatives over the level-`(k+1)` nodes inside `B_{ρ^{k+2}}(center)` that
/// are also level-`k` nodes, so both fields are compared without interpolation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct WStats {
    pub sup_w: f64,
    pub sup_xw: f64,
    pub sup_xxw: f64,
    pub nodes: usize,
    /// Shared nodes in the ball skipped because a derivative stencil did not fit.
    pub masked: usize,
}

pub(crate) fn w_stats(config: &CascadeConfig, coarse: &Level, fine: &Level) -> WStats {
    let r = config.rho.powi(fine.k as i32 + 1);
    let p = &fine.problem;
    let m = fine.first.len();
    let per_node: Vec<Option<Option<(f64, f64, f64)>>> = (0..p.interior_count())
        .into_par_iter()
        .map(|i| {
            if p.node_distance(i) > r {
                return None;
            }
            let x = p.node_point(i);
            let uc = coarse.u.node_at(&x)?;
            let eval = || -> Option<(f64, f64, f64)> {
                let w = (uc - fine.u.values()[i]).abs();
                let mut xw = 0.0f64;
                let mut xxw = 0.0f64;
                for a in 0..m {
                    xw = xw.max((coarse.first[a].node_at(&x)? - fine.first[a].get(i)?).abs());
                    for b in 0..m {
                        xxw = xxw.max((coarse.second[a][b].node_at(&x)? - fine.second[a][b].get(i)?).abs());
                    }
                }
                Some((w, xw, xxw))
            };
            Some(eval())
        })
        .collect();
    let mut s = WStats::default();
    for entry in per_node.into_iter().flatten() {
        match entry {
            Some((w, xw, xxw)) => {
                s.nodes += 1;
                s.sup_w = s.sup_w.max(w);
                s.sup_xw = s.sup_xw.max(xw);
                s.sup_xxw = s.sup_xxw.max(xxw);
            }
            None => s.masked += 1,
        }
    }
    s
}
