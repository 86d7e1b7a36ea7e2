use nalgebra::{DMatrix, DVector};
use sal_distribution::{CsalParams, SalParams};

use crate::FitError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Sal,
    Csal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Joint model of covariates and responses.
    Cwm,
    /// Responses given fixed covariates only.
    Mrm,
}

/// Regression law of a component: `Y | x` is cSAL with location
/// `beta' (1, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionParams {
    /// (1 + d_X) x d_Y; the first row holds the intercepts.
    pub beta: DMatrix<f64>,
    pub sigma_y: DMatrix<f64>,
    pub alpha_y: DVector<f64>,
    pub delta_y: f64,
    pub eta_y: f64,
}

impl RegressionParams {
    pub fn d_x(&self) -> usize {
        self.beta.nrows() - 1
    }

    pub fn d_y(&self) -> usize {
        self.beta.ncols()
    }

    /// `beta' (1, x)` written into `out`.
    pub fn mean_into(&self, x: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let mut s = self.beta[(0, k)];
            for (j, xj) in x.iter().enumerate() {
                s += self.beta[(j + 1, k)] * xj;
            }
            *o = s;
        }
    }

    pub fn mean(&self, x: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.d_y());
        self.mean_into(x, out.as_mut_slice());
        out
    }

    /// The cSAL law of `Y` at covariate value `x`.
    pub fn law_at(&self, x: &[f64]) -> CsalParams {
        CsalParams {
            base: SalParams {
                mu: self.mean(x),
                sigma: self.sigma_y.clone(),
                alpha: self.alpha_y.clone(),
            },
            delta: self.delta_y,
            eta: self.eta_y,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CwmComponent {
    pub weight: f64,
    /// Marginal law of the covariates; `None` for the MRM family.
    pub x_law: Option<CsalParams>,
    pub y_law: RegressionParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CwmModel {
    pub components: Vec<CwmComponent>,
    pub variant: Variant,
    pub family: Family,
    pub d_x: usize,
    pub d_y: usize,
}

impl CwmModel {
    pub fn g(&self) -> usize {
        self.components.len()
    }

    /// Free parameters: mixing weights, then per component the covariate
    /// law (CWM only) and the regression law, each with two contamination
    /// parameters in the cSAL variant.
    pub fn free_parameters(&self) -> usize {
        let (dx, dy, g) = (self.d_x, self.d_y, self.g());
        let extra = match self.variant {
            Variant::Sal => 0,
            Variant::Csal => 2,
        };
        let x_part = match self.family {
            Family::Cwm => dx + dx * (dx + 1) / 2 + dx + extra,
            Family::Mrm => 0,
        };
        let y_part = (1 + dx) * dy + dy * (dy + 1) / 2 + dy + extra;
        (g - 1) + g * (x_part + y_part)
    }

    pub fn validate(&self) -> Result<(), FitError> {
        let bad = |msg: String| Err(FitError::InvalidData(msg));
        if self.components.is_empty() {
            return bad("model has no components".into());
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-10 {
            return bad(format!("weights sum to {total}"));
        }
        for (g, c) in self.components.iter().enumerate() {
            if !(c.weight > 0.0 && c.weight < 1.0) && self.g() > 1 {
                return bad(format!("component {g} weight {} outside (0,1)", c.weight));
            }
            let y = &c.y_law;
            if y.beta.nrows() != self.d_x + 1 || y.beta.ncols() != self.d_y {
                return bad(format!("component {g} beta has wrong shape"));
            }
            if y.sigma_y.nrows() != self.d_y || y.alpha_y.len() != self.d_y {
                return bad(format!("component {g} regression law has wrong dimension"));
            }
            if y.sigma_y.clone().cholesky().is_none() {
                return bad(format!("component {g} sigma_y is not positive definite"));
            }
            if !(y.eta_y >= 1.0) || !(0.0..1.0).contains(&y.delta_y) {
                return bad(format!("component {g} regression contamination out of range"));
            }
            match (&c.x_law, self.family) {
                (Some(x), Family::Cwm) => {
                    if x.dim() != self.d_x {
                        return bad(format!("component {g} x_law has wrong dimension"));
                    }
                    if x.base.sigma.clone().cholesky().is_none() {
                        return bad(format!("component {g} sigma_x is not positive definite"));
                    }
                    if !(x.eta >= 1.0) || !(0.0..1.0).contains(&x.delta) {
                        return bad(format!("component {g} covariate contamination out of range"));
                    }
                }
                (None, Family::Mrm) => {}
                _ => return bad(format!("component {g} x_law does not match the family")),
            }
        }
        Ok(())
    }
}
