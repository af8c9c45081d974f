use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CarnotError, Result};
use crate::graded::GroupFunction;
use crate::linalg::{bicgstab, gmres, SolveMethod};

use super::field::{DiscreteField, SolveStats};
use super::grid::DiscreteProblem;
use super::operator::discretize_l;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative residual target of the row-scaled system.
    pub tol: f64,
    pub max_iter: usize,
    pub gmres_restart: usize,
    /// Grids with at most this many nodes per axis may fall back to a dense solve.
    pub dense_fallback_max_n: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
            gmres_restart: 60,
            dense_fallback_max_n: 17,
        }
    }
}

/// Solves `L u = f` in the ball with `u = g` on the gauge sphere.
pub fn solve_dirichlet<F, G>(problem: &DiscreteProblem, f: &F, g: &G) -> Result<DiscreteField>
where
    F: GroupFunction + ?Sized,
    G: GroupFunction + ?Sized,
{
    solve_dirichlet_with(problem, f, g, &SolverOptions::default())
}

pub fn solve_dirichlet_with<F, G>(
    problem: &DiscreteProblem,
    f: &F,
    g: &G,
    options: &SolverOptions,
) -> Result<DiscreteField>
where
    F: GroupFunction + ?Sized,
    G: GroupFunction + ?Sized,
{
    let fv: Vec<f64> = (0..problem.interior_count())
        .into_par_iter()
        .map(|i| f.value(&problem.node_point(i)))
        .collect();
    let gv: Vec<f64> = (0..problem.boundary_count())
        .into_par_iter()
        .map(|c| g.value(&problem.crossing_point(c)))
        .collect();
    solve_dirichlet_values(problem, &fv, &gv, options)
}

/// As [`solve_dirichlet`], from right-hand side values at the interior nodes
/// and boundary values at the crossings.
pub fn solve_dirichlet_values(
    problem: &DiscreteProblem,
    f: &[f64],
    g: &[f64],
    options: &SolverOptions,
) -> Result<DiscreteField> {
    if f.len() != problem.interior_count() {
        return Err(CarnotError::DimensionMismatch {
            expected: problem.interior_count(),
            got: f.len(),
        });
    }
    if g.len() != problem.boundary_count() {
        return Err(CarnotError::DimensionMismatch {
            expected: problem.boundary_count(),
            got: g.len(),
        });
    }
    if let Some(bad) = f.iter().chain(g).find(|v| !v.is_finite()) {
        return Err(CarnotError::InvalidParameter(format!("non-finite data value {bad}")));
    }
    let op = discretize_l(problem);
    let asm = op.assembled();
    let inv_scale = problem.radius().powi(2);
    let bg = asm.b.mul_vec(g);
    let rhs: Vec<f64> = (0..f.len())
        .map(|i| asm.row_scale[i] * (f[i] * inv_scale - bg[i]))
        .collect();
    let x0 = vec![0.0; rhs.len()];
    let ilu = asm.ilu();
    let first = bicgstab(&asm.scaled, &rhs, &x0, ilu, options.tol, options.max_iter);
    let mut history = first.residual_history.clone();
    let mut iterations = first.iterations;
    if first.converged {
        let res = first.final_residual();
        return Ok(finish(problem, first.x, SolveMethod::BiCgStab, first.iterations, res));
    }
    let second = gmres(
        &asm.scaled,
        &rhs,
        &x0,
        ilu,
        options.tol,
        options.max_iter,
        options.gmres_restart,
    );
    history.extend(&second.residual_history);
    iterations += second.iterations;
    if second.converged {
        let res = second.final_residual();
        return Ok(finish(problem, second.x, SolveMethod::Gmres, iterations, res));
    }
    if problem.n_per_axis() <= options.dense_fallback_max_n {
        if let Some(lu) = asm.dense() {
            let x = lu.solve(&rhs);
            let r = asm.scaled.mul_vec(&x);
            let res = r.iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
                / rhs.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            return Ok(finish(problem, x, SolveMethod::Dense, iterations, res));
        }
    }
    Err(CarnotError::SolverNonConvergence {
        iterations,
        final_residual: history.last().copied().unwrap_or(f64::INFINITY),
        residual_history: history,
    })
}

fn finish(
    problem: &DiscreteProblem,
    x: Vec<f64>,
    method: SolveMethod,
    iterations: usize,
    residual: f64,
) -> DiscreteField {
    DiscreteField::new(problem.clone(), x).with_stats(SolveStats {
        method,
        iterations,
        relative_residual: residual,
    })
}
