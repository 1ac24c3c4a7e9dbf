//! Certificates for the quadratic symmetric moment cone `C_{n,d}` and its dual
//! nonnegativity cone `P_{n,d}` on products of unit balls.

#[cfg(feature = "cli")]
pub mod cli;
pub mod error;
pub mod exact_d1;
pub mod fuzz;
pub mod halfdeg;
pub mod linalg;
pub mod measures;
pub mod model;
pub mod moment;
pub mod sandwich;
pub mod slice;
pub mod sos;
pub mod spin;
pub mod trust_region;
pub mod verdict;

pub use error::{ConeError, Result};
pub use model::{
    evaluate, moments_of_configuration, pair, power_sums, rescale_moments, Configuration, MomentVector,
    ProblemDims, RescaledMomentVector, SymmetricQuadratic,
};
pub use verdict::{ConeVerdict, Status, Witness};
