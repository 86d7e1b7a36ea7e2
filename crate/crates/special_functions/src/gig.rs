//! Moments of the generalized inverse Gaussian law with density
//! proportional to `w^(nu-1) exp(-(a w + b / w) / 2)`.

use crate::bessel::bessel_k_ratio;
use crate::SpecialFunctionError;

pub const DEFAULT_B_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GigExpectations {
    /// E[W]
    pub e1: f64,
    /// E[1/W]
    pub e2: f64,
    /// `b` was below the floor and was raised to it.
    pub clamped: bool,
}

pub fn gig_moments(a: f64, b: f64, order: f64) -> Result<GigExpectations, SpecialFunctionError> {
    gig_moments_with_floor(a, b, order, DEFAULT_B_FLOOR)
}

/// `E[W] = sqrt(b/a) K_{nu+1}(z)/K_nu(z)` and
/// `E[1/W] = sqrt(a/b) K_{nu+1}(z)/K_nu(z) - 2 nu / b`, with `z = sqrt(ab)`.
/// The second is evaluated as `sqrt(a/b) K_{nu-1}(z)/K_nu(z)`, the same
/// quantity by the three-term recurrence, which avoids cancellation when
/// `z` is small.
pub fn gig_moments_with_floor(
    a: f64,
    b: f64,
    order: f64,
    floor: f64,
) -> Result<GigExpectations, SpecialFunctionError> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(SpecialFunctionError::InvalidGigParameter { name: "a", value: a });
    }
    if !(b >= 0.0) || !b.is_finite() {
        return Err(SpecialFunctionError::InvalidGigParameter { name: "b", value: b });
    }
    if !order.is_finite() {
        return Err(SpecialFunctionError::NonFiniteOrder(order));
    }
    let clamped = b < floor;
    let b = if clamped { floor } else { b };
    let z = (a * b).sqrt();
    let up = bessel_k_ratio(order, z)?;
    let down = bessel_k_ratio(order - 1.0, z)?;
    Ok(GigExpectations {
        e1: (b / a).sqrt() * up,
        e2: (a / b).sqrt() / down,
        clamped,
    })
}
