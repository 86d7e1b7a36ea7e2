//! Mixtures of SAL and contaminated SAL regressions with fixed covariates,
//! and the covariate-conditional view of a cluster-weighted model.

use cwm_engine::{CwmModel, Dataset, Family, FitConfig, FitError, FitResult, Variant};
use sal_distribution::{csal_log_density, log_add, CsalParams, DistributionError};

/// Fits the regression-only family: the CWM machinery with every covariate
/// term removed.
pub fn fit_mrm(dataset: &Dataset, config: &FitConfig) -> Result<FitResult, FitError> {
    let mut c = config.clone();
    c.family = Family::Mrm;
    cwm_engine::fit(dataset, &c)
}

/// The mixture of regressions obtained by dropping the covariate laws.
pub fn mrm_from_cwm(model: &CwmModel) -> CwmModel {
    let mut m = model.clone();
    m.family = Family::Mrm;
    for c in m.components.iter_mut() {
        c.x_law = None;
    }
    m
}

/// `Y | X = x` under a CWM: a `G`-component mixture with covariate-dependent
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMixture {
    pub weights: Vec<f64>,
    pub laws: Vec<CsalParams>,
}

impl ConditionalMixture {
    pub fn component_log_density(&self, g: usize, y: &[f64]) -> Result<f64, DistributionError> {
        Ok(csal_log_density(y, &self.laws[g])?.value)
    }

    pub fn log_density(&self, y: &[f64]) -> Result<f64, DistributionError> {
        let mut total = f64::NEG_INFINITY;
        for (g, w) in self.weights.iter().enumerate() {
            total = log_add(total, w.ln() + self.component_log_density(g, y)?);
        }
        Ok(total)
    }
}

fn effective(law: &CsalParams, variant: Variant) -> CsalParams {
    match variant {
        Variant::Sal => CsalParams::uncontaminated(law.base.clone()),
        Variant::Csal => law.clone(),
    }
}

/// Weights proportional to `pi_g f(x; g)`, normalized in log space, with
/// the per-component regression laws at `x`.
pub fn conditional_from_cwm(model: &CwmModel, x: &[f64]) -> Result<ConditionalMixture, FitError> {
    if model.family != Family::Cwm {
        return Err(FitError::InvalidConfig("conditional weights need a CWM".into()));
    }
    if x.len() != model.d_x {
        return Err(FitError::InvalidData(format!("x has length {}, expected {}", x.len(), model.d_x)));
    }
    let mut logw = Vec::with_capacity(model.g());
    let mut laws = Vec::with_capacity(model.g());
    for c in &model.components {
        let xl = c.x_law.as_ref().ok_or_else(|| FitError::InvalidData("component lacks x_law".into()))?;
        let lx = csal_log_density(x, &effective(xl, model.variant))?.value;
        logw.push(c.weight.ln() + lx);
        laws.push(effective(&c.y_law.law_at(x), model.variant));
    }
    let finite_top = logw.iter().copied().filter(|l| l.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let weights = if logw.iter().any(|&l| l == f64::INFINITY) {
        // at a covariate location the divergent components share the mass
        let k = logw.iter().filter(|&&l| l == f64::INFINITY).count() as f64;
        logw.iter().map(|&l| if l == f64::INFINITY { 1.0 / k } else { 0.0 }).collect()
    } else {
        if !finite_top.is_finite() {
            return Err(FitError::InvalidData("x has zero density under every component".into()));
        }
        let s: f64 = logw.iter().map(|l| (l - finite_top).exp()).sum();
        logw.iter().map(|l| (l - finite_top).exp() / s).collect()
    };
    Ok(ConditionalMixture { weights, laws })
}
