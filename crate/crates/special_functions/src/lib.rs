//! Modified Bessel functions of the third kind, evaluated in log space, and
//! the first two moments of the generalized inverse Gaussian distribution.

mod bessel;
mod gig;

pub use bessel::{bessel_k_ratio, log_bessel_k};
pub use gig::{gig_moments, gig_moments_with_floor, GigExpectations, DEFAULT_B_FLOOR};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialFunctionError {
    #[error("argument must be positive and finite, got x = {0}")]
    NonPositiveArgument(f64),
    #[error("order must be finite, got {0}")]
    NonFiniteOrder(f64),
    #[error("GIG parameter {name} must be positive and finite, got {value}")]
    InvalidGigParameter { name: &'static str, value: f64 },
}
