use serde::{Deserialize, Serialize};

use crate::error::{CarnotError, Result};
use crate::graded::{apply_word, sublaplacian_apply, DerivativeWord, GroupFunction};
use crate::group::{CarnotGroup, GroupSpec};
use crate::modulus::{test_function, AnalyticModulus, ManufacturedSolution, TestKind};
use crate::poly::GradedPolynomial;
use crate::solver::SolverOptions;

/// Where the reference solution `u` comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CascadeMode {
    /// `u` and its derivatives are evaluated exactly.
    Manufactured,
    /// `u` is solved on `B_1(0)` from `f` and the exact boundary values, then
    /// interpolated.
    Solved,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeConfig {
    pub group: GroupSpec,
    pub rho: f64,
    pub k_max: usize,
    pub n_per_ball: usize,
    pub mode: CascadeMode,
    pub rhs: TestKind,
    /// Base point of the translated family.
    pub xi0: Vec<f64>,
    /// Mean-value constant; `|ξ0| ≤ 1/(4b²)` is required.
    pub b: f64,
    pub seed: u64,
    /// Values at or below this count as zero when the bound they are compared to vanishes.
    pub null_tol: f64,
    pub solver: SolverOptions,
}

impl CascadeConfig {
    pub fn new(group: GroupSpec, rhs: TestKind) -> Self {
        let dim = group.dimension();
        Self {
            group,
            rho: 0.5,
            k_max: 5,
            n_per_ball: 25,
            mode: CascadeMode::Manufactured,
            rhs,
            xi0: vec![0.0; dim],
            b: 1.0,
            seed: 42,
            null_tol: 1e-7,
            solver: SolverOptions {
                tol: 1e-12,
                ..SolverOptions::default()
            },
        }
    }

    pub fn validate(&self, group: &CarnotGroup) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(CarnotError::InvalidParameter(format!(
                "ρ must lie in (0, 1), got {}",
                self.rho
            )));
        }
        if self.n_per_ball < 9 {
            return Err(CarnotError::InvalidParameter(format!(
                "n_per_ball must be at least 9, got {}",
                self.n_per_ball
            )));
        }
        if !(self.b >= 1.0) {
            return Err(CarnotError::InvalidParameter(format!(
                "b must be at least 1, got {}",
                self.b
            )));
        }
        if self.xi0.len() != group.dimension() {
            return Err(CarnotError::DimensionMismatch {
                expected: group.dimension(),
                got: self.xi0.len(),
            });
        }
        let limit = 1.0 / (4.0 * self.b * self.b);
        let d0 = group.gauge_norm(&self.xi0);
        if d0 > limit * (1.0 + 1e-12) {
            return Err(CarnotError::InvalidParameter(format!(
                "|ξ0| = {d0} exceeds 1/(4b²) = {limit}"
            )));
        }
        Ok(())
    }
}

/// An exact solution of `L u = f` with its second horizontal derivatives.
pub trait Manufactured: Sync {
    fn u(&self, p: &[f64]) -> f64;
    fn f(&self, p: &[f64]) -> f64;
    /// `X_i X_j u(p)`.
    fn second(&self, i: usize, j: usize, p: &[f64]) -> f64;
    fn modulus(&self) -> AnalyticModulus;
}

impl Manufactured for ManufacturedSolution {
    fn u(&self, p: &[f64]) -> f64 {
        self.value(p)
    }

    fn f(&self, p: &[f64]) -> f64 {
        self.f.value(p)
    }

    fn second(&self, i: usize, j: usize, p: &[f64]) -> f64 {
        self.second_derivative(i, j, p)
    }

    fn modulus(&self) -> AnalyticModulus {
        self.f.modulus()
    }
}

/// A polynomial `u` with constant `L u`, differentiated symbolically.
#[derive(Clone, Debug)]
pub struct PolynomialSolution {
    u: GradedPolynomial,
    f: f64,
    seconds: Vec<Vec<GradedPolynomial>>,
}

impl PolynomialSolution {
    pub fn new(group: &CarnotGroup, u: GradedPolynomial) -> Result<Self> {
        let lu = sublaplacian_apply(group, &u).prune(1e-14);
        let f = lu.coefficient(&vec![0; group.dimension()]);
        if lu.terms().any(|(e, _)| e.iter().any(|&x| x > 0)) {
            return Err(CarnotError::InvalidParameter("L u must be constant".into()));
        }
        let m = group.horizontal_dim();
        let mut seconds = Vec::with_capacity(m);
        for i in 0..m {
            let mut row = Vec::with_capacity(m);
            for j in 0..m {
                row.push(apply_word(group, &DerivativeWord(vec![i, j]), &u)?);
            }
            seconds.push(row);
        }
        Ok(Self { u, f, seconds })
    }
}

impl Manufactured for PolynomialSolution {
    fn u(&self, p: &[f64]) -> f64 {
        self.u.eval(p)
    }

    fn f(&self, _: &[f64]) -> f64 {
        self.f
    }

    fn second(&self, i: usize, j: usize, p: &[f64]) -> f64 {
        self.seconds[i][j].eval(p)
    }

    fn modulus(&self) -> AnalyticModulus {
        AnalyticModulus::Zero
    }
}

pub(crate) fn config_solution(config: &CascadeConfig) -> Result<ManufacturedSolution> {
    Ok(test_function(config.rhs)?.manufactured())
}
