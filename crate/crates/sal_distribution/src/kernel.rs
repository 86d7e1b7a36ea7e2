//! Precomputed pieces of a SAL law (Cholesky factor, whitened skewness,
//! normalizing constant) so an engine can evaluate many points cheaply.

use std::f64::consts::{LN_2, PI};

use nalgebra::{DMatrix, DVector};
use special_functions::{gig_moments, gig_moments_with_floor, log_bessel_k, GigExpectations};

use crate::{log_add, DistributionError, SalParams, MODE_TOLERANCE};

/// Squared Mahalanobis distance `b = r' Sigma^-1 r` and cross term
/// `q = r' Sigma^-1 alpha` of a centred point `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MahalanobisParts {
    pub b: f64,
    pub q: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct SalKernel {
    p: usize,
    nu: f64,
    chol: Vec<f64>,
    log_det: f64,
    alpha_white: Vec<f64>,
    a: f64,
}

impl SalKernel {
    pub fn new(params: &SalParams) -> Result<Self, DistributionError> {
        Self::from_scale(&params.sigma, &params.alpha)
    }

    pub fn from_scale(sigma: &DMatrix<f64>, alpha: &DVector<f64>) -> Result<Self, DistributionError> {
        let p = sigma.nrows();
        if sigma.ncols() != p || alpha.len() != p {
            return Err(DistributionError::DimensionMismatch { expected: p, got: alpha.len() });
        }
        let l = sigma
            .clone()
            .cholesky()
            .ok_or(DistributionError::NotPositiveDefinite)?
            .unpack();
        let mut chol = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..=i {
                chol[i * p + j] = l[(i, j)];
            }
        }
        let log_det = 2.0 * (0..p).map(|i| l[(i, i)].ln()).sum::<f64>();
        let mut kernel = Self {
            p,
            nu: (2.0 - p as f64) / 2.0,
            chol,
            log_det,
            alpha_white: vec![0.0; p],
            a: 0.0,
        };
        let mut w = vec![0.0; p];
        kernel.whiten(alpha.as_slice(), &mut w);
        kernel.a = 2.0 + w.iter().map(|v| v * v).sum::<f64>();
        kernel.alpha_white = w;
        if !kernel.log_det.is_finite() || !kernel.a.is_finite() {
            return Err(DistributionError::NonFinite("scale or skewness"));
        }
        Ok(kernel)
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    /// Bessel order `(2 - p) / 2`.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `2 + alpha' Sigma^-1 alpha`.
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    fn whiten(&self, r: &[f64], out: &mut [f64]) {
        let p = self.p;
        for i in 0..p {
            let row = &self.chol[i * p..i * p + i];
            let s: f64 = row.iter().zip(&out[..i]).map(|(l, v)| l * v).sum();
            out[i] = (r[i] - s) / self.chol[i * p + i];
        }
    }

    /// Parts of an already centred point `r = w - mu`.
    pub fn parts(&self, r: &[f64]) -> MahalanobisParts {
        debug_assert_eq!(r.len(), self.p);
        let mut stack = [0.0; 16];
        let mut heap;
        let s: &mut [f64] = if self.p <= 16 {
            &mut stack[..self.p]
        } else {
            heap = vec![0.0; self.p];
            &mut heap
        };
        self.whiten(r, s);
        let b = s.iter().map(|v| v * v).sum();
        let q = s.iter().zip(&self.alpha_white).map(|(x, y)| x * y).sum();
        let norm2: f64 = r.iter().map(|v| v * v).sum();
        MahalanobisParts {
            b,
            q,
            degenerate: self.p >= 2 && norm2 < MODE_TOLERANCE * MODE_TOLERANCE,
        }
    }

    pub fn parts_at(&self, w: &[f64], mu: &[f64]) -> Result<MahalanobisParts, DistributionError> {
        if w.len() != self.p {
            return Err(DistributionError::DimensionMismatch { expected: self.p, got: w.len() });
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(DistributionError::NonFinite("evaluation point"));
        }
        let r: Vec<f64> = w.iter().zip(mu).map(|(a, b)| a - b).collect();
        Ok(self.parts(&r))
    }

    /// Log density of the law with scale `eta Sigma` and skewness
    /// `sqrt(eta) alpha` (the reference law at `eta = 1`).
    pub fn log_density(&self, parts: &MahalanobisParts, eta: f64) -> Result<f64, DistributionError> {
        let p = self.p as f64;
        let b = parts.b / eta;
        let q = parts.q / eta.sqrt();
        let log_det = self.log_det + p * eta.ln();
        if self.p == 1 {
            // K_{1/2} closed form; finite at the mode
            return Ok(q - 0.5 * log_det - 0.5 * self.a.ln() - (self.a * b).sqrt());
        }
        if parts.degenerate || b <= 0.0 {
            return Ok(f64::INFINITY);
        }
        let z = (self.a * b).sqrt();
        Ok(LN_2 + q - 0.5 * p * (2.0 * PI).ln() - 0.5 * log_det
            + 0.5 * self.nu * (b.ln() - self.a.ln())
            + log_bessel_k(self.nu, z)?)
    }

    /// `(ln[(1-delta) f_ref], ln[delta f_contaminant])`.
    pub fn component_log_densities(
        &self,
        parts: &MahalanobisParts,
        delta: f64,
        eta: f64,
    ) -> Result<(f64, f64), DistributionError> {
        let good = (1.0 - delta).ln() + self.log_density(parts, 1.0)?;
        let bad = if delta > 0.0 {
            delta.ln() + self.log_density(parts, eta)?
        } else {
            f64::NEG_INFINITY
        };
        Ok((good, bad))
    }

    pub fn typical_probability(
        &self,
        parts: &MahalanobisParts,
        delta: f64,
        eta: f64,
    ) -> Result<f64, DistributionError> {
        if delta == 0.0 {
            return Ok(1.0);
        }
        if parts.degenerate || (self.p >= 2 && parts.b <= 0.0) {
            return Ok((1.0 - delta) / ((1.0 - delta) + delta / eta));
        }
        let (good, bad) = self.component_log_densities(parts, delta, eta)?;
        Ok((good - log_add(good, bad)).exp().clamp(0.0, 1.0))
    }

    /// Moments of the latent scale given the point, for the law inflated by
    /// `eta`: GIG with `a`, `b / eta` and order `nu`.
    pub fn gig(&self, parts: &MahalanobisParts, eta: f64) -> Result<GigExpectations, DistributionError> {
        Ok(gig_moments(self.a, parts.b / eta, self.nu)?)
    }

    /// As [`SalKernel::gig`] with an explicit floor on the scaled distance.
    pub fn gig_with_floor(
        &self,
        parts: &MahalanobisParts,
        eta: f64,
        floor: f64,
    ) -> Result<GigExpectations, DistributionError> {
        Ok(gig_moments_with_floor(self.a, parts.b / eta, self.nu, floor)?)
    }
}
