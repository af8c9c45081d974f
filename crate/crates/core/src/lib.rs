pub mod cascade;
pub mod error;
pub mod fit;
pub mod graded;
pub mod group;
pub mod linalg;
pub mod modulus;
pub mod poly;
pub mod solver;

pub use cascade::{run_cascade, theorem_check, CascadeConfig, CascadeMode, CascadeReport, TheoremReport};
pub use error::{CarnotError, Result};
pub use fit::{fit_exponent, LineFit};
pub use graded::{
    apply_field, apply_word, remainder_slope, sublaplacian_apply, taylor_poly, DerivativeWord, GroupFunction,
    RemainderSlope, TaylorPolynomial,
};
pub use group::InvariantReport;
pub use group::{Bracket, CarnotGroup, GroupSpec, Point, VectorField};
pub use modulus::{test_function, AnalyticModulus, DiniValue, DiniWeight, TestFunction, TestKind};
pub use poly::{GradedPolynomial, Polynomial};
pub use solver::{build_grid, solve_dirichlet, DiscreteField, DiscreteProblem, SolverOptions};
