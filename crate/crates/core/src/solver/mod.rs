//! Finite-difference Dirichlet problems for the sub-Laplacian on gauge balls.

mod field;
mod grid;
mod lemmas;
mod operator;
mod smooth;
mod solve;

pub use field::{horizontal_derivative, second_derivative, DiscreteField, SolveStats};
pub use grid::{build_grid, Arm, Direction, DiscreteProblem, GridHeader, GridStructure};
pub use lemmas::*;
pub use operator::{discretize_l, LinearOperatorHandle};
pub use smooth::{convergence_study, ConvergenceRow, ConvergenceStudy, ExponentialSolution};
pub use solve::{solve_dirichlet, solve_dirichlet_values, solve_dirichlet_with, SolverOptions};
