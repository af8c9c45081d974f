mod de_giorgi;
mod dini;
mod library;
mod profile;

pub use de_giorgi::{de_giorgi_threshold, synthetic_de_giorgi_suite, DeGiorgiCase, SequenceShape, SyntheticSequence};
pub use dini::{dini_integral, holder_rhs, schauder_rhs, DiniValue, DiniWeight, NODES_PER_DECADE};
pub use library::{test_function, ManufacturedSolution, TestFunction, TestKind, LOG_DINI_CAP, NON_DINI_CAP};
pub use profile::{dyadic_scales, estimate_modulus, AnalyticModulus, Modulus, ModulusProfile, Provenance};
