//! Product formulas for spherical Bessel functions and for Bessel-type
//! hypergeometric functions of one and two real symmetric matrix arguments,
//! realized as samplers, densities and quadrature/Monte Carlo verifiers.

pub mod bessel;
pub mod conditional;
pub mod error;
pub mod hypergeometric;
pub mod linalg;
pub mod mc;
pub mod partition;
pub mod quadrature;
pub mod report;
pub mod sampling;
pub mod stats;
pub mod verify;
pub mod zonal;

pub use conditional::{CornerMatrix, WeylHistogram};
pub use error::{Error, Result};
pub use hypergeometric::SeriesValue;
pub use linalg::{EigenDecomposition, OrthogonalMatrix, PsdMatrix, RealMatrix, StiefelFrame, SymmetricMatrix};
pub use mc::McEstimate;
pub use partition::Partition;
pub use report::VerificationReport;
pub use sampling::{RandomStream, StiefelMethod};
