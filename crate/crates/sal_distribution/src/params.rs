use nalgebra::{DMatrix, DVector};

use crate::DistributionError;

#[derive(Debug, Clone, PartialEq)]
pub struct SalParams {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub alpha: DVector<f64>,
}

impl SalParams {
    pub fn new(
        mu: DVector<f64>,
        sigma: DMatrix<f64>,
        alpha: DVector<f64>,
    ) -> Result<Self, DistributionError> {
        let p = mu.len();
        if sigma.nrows() != p || sigma.ncols() != p {
            return Err(DistributionError::DimensionMismatch { expected: p, got: sigma.nrows() });
        }
        if alpha.len() != p {
            return Err(DistributionError::DimensionMismatch { expected: p, got: alpha.len() });
        }
        if mu.iter().chain(alpha.iter()).chain(sigma.iter()).any(|v| !v.is_finite()) {
            return Err(DistributionError::NonFinite("SAL parameters"));
        }
        let scale = sigma.amax().max(f64::MIN_POSITIVE);
        if (&sigma - sigma.transpose()).amax() > 1e-10 * scale {
            return Err(DistributionError::NotPositiveDefinite);
        }
        if sigma.clone().cholesky().is_none() {
            return Err(DistributionError::NotPositiveDefinite);
        }
        Ok(Self { mu, sigma, alpha })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mean(&self) -> DVector<f64> {
        &self.mu + &self.alpha
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        &self.sigma + &self.alpha * self.alpha.transpose()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsalParams {
    pub base: SalParams,
    pub delta: f64,
    pub eta: f64,
}

impl CsalParams {
    /// `delta` in [0, 1); `delta = 0` is the uncontaminated law.
    pub fn new(base: SalParams, delta: f64, eta: f64) -> Result<Self, DistributionError> {
        if !(0.0..1.0).contains(&delta) {
            return Err(DistributionError::InvalidDelta(delta));
        }
        if !(eta >= 1.0) || !eta.is_finite() {
            return Err(DistributionError::InvalidEta(eta));
        }
        Ok(Self { base, delta, eta })
    }

    pub fn uncontaminated(base: SalParams) -> Self {
        Self { base, delta: 0.0, eta: 1.0 }
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// The contaminant law `(mu, eta Sigma, sqrt(eta) alpha)`.
    pub fn contaminant(&self) -> SalParams {
        SalParams {
            mu: self.base.mu.clone(),
            sigma: &self.base.sigma * self.eta,
            alpha: &self.base.alpha * self.eta.sqrt(),
        }
    }
}
