//! Multivariate shifted asymmetric Laplace (SAL) laws and their contaminated
//! two-component extension (cSAL): log densities, samplers, and the
//! posterior probability that a point came from the reference component.
//!
//! A SAL vector is `W = mu + V alpha + sqrt(V) N` with `V ~ Exp(1)` and
//! `N ~ N(0, Sigma)`. The contaminant of a cSAL law shares `mu` and has
//! scale `eta Sigma` and skewness `sqrt(eta) alpha`.

mod kernel;
mod params;
mod sample;

pub use kernel::{MahalanobisParts, SalKernel};
pub use params::{CsalParams, SalParams};
pub use sample::{csal_sample, sal_sample};

use special_functions::SpecialFunctionError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistributionError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("scale matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("contamination proportion must lie in [0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("inflation must be finite and at least 1, got {0}")]
    InvalidEta(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error(transparent)]
    Special(#[from] SpecialFunctionError),
}

pub(crate) const MODE_TOLERANCE: f64 = 1e-12;

/// A log density value. `degenerate` marks evaluation at the location of a
/// law with `p >= 2`, where the density diverges and `value` is `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDensity {
    pub value: f64,
    pub degenerate: bool,
}

pub fn sal_log_density(w: &[f64], params: &SalParams) -> Result<LogDensity, DistributionError> {
    let kernel = SalKernel::new(params)?;
    let parts = kernel.parts_at(w, params.mu.as_slice())?;
    Ok(LogDensity {
        value: kernel.log_density(&parts, 1.0)?,
        degenerate: parts.degenerate,
    })
}

pub fn csal_log_density(w: &[f64], params: &CsalParams) -> Result<LogDensity, DistributionError> {
    let kernel = SalKernel::new(&params.base)?;
    let parts = kernel.parts_at(w, params.base.mu.as_slice())?;
    let (good, bad) = kernel.component_log_densities(&parts, params.delta, params.eta)?;
    Ok(LogDensity {
        value: log_add(good, bad),
        degenerate: parts.degenerate,
    })
}

/// `(1 - delta) f_SAL(w; mu, Sigma, alpha) / f_cSAL(w)`.
///
/// At the location of a law with `p >= 2` both terms diverge; their ratio
/// tends to `eta^-1`, so the limit `(1-delta) / ((1-delta) + delta/eta)` is
/// returned there.
pub fn posterior_typical_probability(
    w: &[f64],
    params: &CsalParams,
) -> Result<f64, DistributionError> {
    let kernel = SalKernel::new(&params.base)?;
    let parts = kernel.parts_at(w, params.base.mu.as_slice())?;
    Ok(kernel.typical_probability(&parts, params.delta, params.eta)?)
}

/// `ln(e^a + e^b)` with `-inf` and `+inf` inputs handled.
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a == f64::INFINITY || b == f64::INFINITY {
        return f64::INFINITY;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}
