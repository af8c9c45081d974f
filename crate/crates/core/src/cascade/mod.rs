mod config;
mod engine;
mod report;
mod theorem;

pub use config::{CascadeConfig, CascadeMode, Manufactured, PolynomialSolution};
pub use report::{
    run_cascade, run_cascade_with, second_derivative_limit, split_estimate, split_estimate_with, split_level,
    translated_cascade, translated_cascade_with, CascadeReport, LevelRecord, LimitEntry, LimitStatus, SplitRecord,
    TranslatedRecord,
};
pub use theorem::{theorem_check, PairRecord, TheoremReport};
