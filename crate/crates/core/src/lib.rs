//! Exponential-family random graph models for signed networks with local
//! dependence: variational block recovery, pseudo-likelihood estimation,
//! simulation and model assessment.
//!
//! The numerical types are generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the aliases below fix `f64`.

pub mod error;
pub mod estimator;
pub mod evaluation;
pub mod linalg;
pub mod network;
pub mod pipeline;
pub mod sampler;
pub mod scalar;
pub mod ssbm;
pub mod statistics;

pub use error::{Error, Result};
pub use network::{BlockAssignment, DyadValue, Sign, SignedNetwork};
pub use statistics::ModelSpec;

/// Version of the model-specification and coefficient file formats.
pub const FORMAT_VERSION: &str = "1";

pub type Coefficients = estimator::Coefficients<f64>;
pub type FitResult = estimator::FitResult<f64>;
pub type Matrix = linalg::Matrix<f64>;
pub type MembershipProbabilities = ssbm::MembershipProbabilities<f64>;
pub type VariationalFit = ssbm::VariationalFit<f64>;
pub type Estimate = pipeline::Estimate<f64>;
pub type PooledResult = pipeline::PooledResult<f64>;
