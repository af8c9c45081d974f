mod dense;
mod krylov;
mod sparse;

pub use dense::DenseLu;
pub use krylov::{bicgstab, gmres, KrylovOutcome, SolveMethod};
pub use sparse::{CsrMatrix, Ilu0};
