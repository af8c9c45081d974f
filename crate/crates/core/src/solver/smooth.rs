use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fit::{fit_exponent, LineFit};
use crate::graded::{from_fn, GroupFunction};
use crate::group::CarnotGroup;
use crate::linalg::SolveMethod;
use crate::poly::GradedPolynomial;

use super::field::DiscreteField;
use super::grid::build_grid;
use super::solve::{solve_dirichlet_with, SolverOptions};

/// `u(x) = exp(c·x)` with `L u` in closed form, for convergence studies.
///
/// With `X_i = Σ_k a_ik ∂_k`, `X_i X_i u = u ((a_i·c)² + Σ_{k,l} a_ik ∂_k a_il c_l)`.
#[derive(Clone, Debug)]
pub struct ExponentialSolution {
    c: Vec<f64>,
    fields: Vec<Vec<GradedPolynomial>>,
    field_derivatives: Vec<Vec<Vec<GradedPolynomial>>>,
}

impl ExponentialSolution {
    pub fn new(group: &CarnotGroup, c: Vec<f64>) -> Self {
        let fields: Vec<Vec<GradedPolynomial>> = group
            .horizontal_fields()
            .iter()
            .map(|f| f.coefficients.clone())
            .collect();
        let field_derivatives = fields
            .iter()
            .map(|a| {
                (0..c.len())
                    .map(|k| a.iter().map(|al| al.derivative(k)).collect())
                    .collect()
            })
            .collect();
        Self {
            c,
            fields,
            field_derivatives,
        }
    }

    /// A fixed direction with every coordinate active.
    pub fn standard(group: &CarnotGroup) -> Self {
        let c = (0..group.dimension()).map(|k| 0.7 - 0.3 * k as f64).collect();
        Self::new(group, c)
    }

    /// `L u(p)`.
    pub fn source(&self, p: &[f64]) -> f64 {
        let u = self.value(p);
        let mut s = 0.0;
        for (a, da) in self.fields.iter().zip(&self.field_derivatives) {
            let ai: Vec<f64> = a.iter().map(|q| q.eval(p)).collect();
            let ac: f64 = ai.iter().zip(&self.c).map(|(x, y)| x * y).sum();
            s += ac * ac;
            for (k, dak) in da.iter().enumerate() {
                let dc: f64 = dak.iter().zip(&self.c).map(|(q, cl)| q.eval(p) * cl).sum();
                s += ai[k] * dc;
            }
        }
        u * s
    }
}

impl GroupFunction for ExponentialSolution {
    fn value(&self, p: &[f64]) -> f64 {
        p.iter().zip(&self.c).map(|(x, c)| x * c).sum::<f64>().exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::{word_derivative_numeric, DerivativeWord};

    #[test]
    fn source_matches_numeric_sublaplacian() {
        for g in [CarnotGroup::heisenberg(), CarnotGroup::engel()] {
            let u = ExponentialSolution::standard(&g);
            let p: Vec<f64> = (0..g.dimension()).map(|k| 0.2 - 0.1 * k as f64).collect();
            let mut numeric = 0.0;
            for i in 0..g.horizontal_dim() {
                numeric += word_derivative_numeric(&g, &u, &p, &DerivativeWord(vec![i, i])).unwrap();
            }
            assert!((numeric - u.source(&p)).abs() < 1e-5, "{numeric} vs {}", u.source(&p));
        }
    }

    #[test]
    fn heisenberg_refinement_is_second_order() {
        let g = CarnotGroup::heisenberg();
        let u = ExponentialSolution::standard(&g);
        let s = convergence_study(&g, &u, &[13, 25], &SolverOptions::default()).unwrap();
        assert!(s.rows[1].max_error < s.rows[0].max_error);
        assert!(s.order.slope > 1.5, "{s:?}");
    }
}

/// Nodal `L∞` error of one grid in a refinement study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub max_error: f64,
    pub method: SolveMethod,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    /// Log-log slope of error against spacing.
    pub order: LineFit,
}

/// Solves for `u` on `B_1(0)` at each grid size and fits the error order.
pub fn convergence_study(
    group: &CarnotGroup,
    u: &ExponentialSolution,
    sizes: &[usize],
    options: &SolverOptions,
) -> Result<ConvergenceStudy> {
    let f = from_fn(|p: &[f64]| u.source(p));
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let problem = build_grid(group, &vec![0.0; group.dimension()], 1.0, n)?;
        let sol = solve_dirichlet_with(&problem, &f, u, options)?;
        let exact = DiscreteField::from_function(&problem, u);
        let max_error = sol.difference(&exact)?.max_abs();
        let stats = sol.stats().cloned().expect("solver attaches statistics");
        rows.push(ConvergenceRow {
            n,
            h: problem.spacing()[0],
            max_error,
            method: stats.method,
            iterations: stats.iterations,
        });
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.h, r.max_error)).collect();
    let order = if pts.len() == 2 {
        let s = (pts[1].1 / pts[0].1).ln() / (pts[1].0 / pts[0].0).ln();
        LineFit {
            slope: s,
            intercept: pts[0].1.ln() - s * pts[0].0.ln(),
            r2: 1.0,
        }
    } else {
        fit_exponent(&pts, true)?
    };
    Ok(ConvergenceStudy { rows, order })
}
