use std::collections::HashSet;

use crate::cm::{cm_step_1, cm_step_2, CmDiagnostics, Frozen};
use crate::{
    aitken_check, audit, classify_responsibilities, e_step, init_from_labels, kmeans_partition, streams,
    Classification, CwmModel, Dataset, EStep, Family, FitError, Responsibilities, Variant,
};

/// Decrease of the log-likelihood treated as a defect rather than rounding.
const MONOTONE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub g: usize,
    pub variant: Variant,
    pub family: Family,
    pub max_iter: usize,
    pub epsilon: f64,
    pub mu_guard: f64,
    pub u0_v0: f64,
    pub eta0: f64,
    pub seed: u64,
    pub n_starts: usize,
    pub sigma_jitter: f64,
    /// ECM iterations of a contaminated run before the stopping rule is
    /// consulted. The run starts next to the uncontaminated solution, where
    /// the likelihood is nearly flat in the contamination parameters.
    pub csal_burn_in: usize,
}

impl FitConfig {
    pub fn new(g: usize, variant: Variant, family: Family, seed: u64) -> Self {
        Self {
            g,
            variant,
            family,
            max_iter: 1000,
            epsilon: 1e-5,
            mu_guard: 1e-5,
            u0_v0: 0.001,
            eta0: 1.001,
            seed,
            n_starts: 5,
            sigma_jitter: 1e-8,
            csal_burn_in: 50,
        }
    }

    pub fn validate(&self) -> Result<(), FitError> {
        let bad = |m: &str| Err(FitError::InvalidConfig(m.into()));
        if self.g == 0 {
            return bad("g must be at least 1");
        }
        if self.max_iter == 0 || self.n_starts == 0 {
            return bad("max_iter and n_starts must be positive");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.eta0 > 1.0 && self.eta0.is_finite()) {
            return bad("eta0 must exceed 1");
        }
        if !(self.u0_v0 > 0.0 && self.u0_v0 < 1.0) {
            return bad("u0_v0 must lie in (0, 1)");
        }
        if !(self.mu_guard >= 0.0) || !(self.sigma_jitter > 0.0) {
            return bad("mu_guard must be non-negative and sigma_jitter positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitDiagnostics {
    /// (row, component) cells capped in the final E-step.
    pub capped: Vec<(usize, usize)>,
    /// Whether capping happened at any iteration.
    pub capped_any: bool,
    pub cm: CmDiagnostics,
    pub init_flagged: bool,
    /// Latent-scale evaluations whose distance hit the floor, final E-step.
    pub clamped_gig: usize,
    /// The contaminated run ended below its SAL seed, so the SAL solution
    /// (with negligible contamination) was returned instead.
    pub nesting_fallback: bool,
    pub failed_starts: usize,
    pub duplicate_starts: usize,
    /// Start (k-means seed index) that produced the returned fit.
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: CwmModel,
    pub loglik_trace: Vec<f64>,
    pub resp: Responsibilities,
    pub classifications: Vec<Classification>,
    pub converged: bool,
    pub n_iter: usize,
    pub bic: f64,
    /// Components whose covariate location was held by the guard at some
    /// iteration.
    pub frozen_mu_components: Vec<usize>,
    /// Components whose regression coefficients were held by the guard at
    /// some iteration.
    pub frozen_beta_components: Vec<usize>,
    /// Final log-likelihood of the SAL fit a contaminated fit started from.
    pub seed_loglik: Option<f64>,
    pub diagnostics: FitDiagnostics,
}

impl FitResult {
    pub fn loglik(&self) -> f64 {
        *self.loglik_trace.last().expect("trace holds the initial value")
    }
}

pub fn bic_of(model: &CwmModel, loglik: f64, n: usize) -> f64 {
    -2.0 * loglik + model.free_parameters() as f64 * (n as f64).ln()
}

/// SAL fits run EM from `n_starts` k-means partitions and keep the best;
/// contaminated fits run that first and continue by ECM from the winner.
pub fn fit(dataset: &Dataset, config: &FitConfig) -> Result<FitResult, FitError> {
    config.validate()?;
    if config.g > dataset.n() {
        return Err(FitError::InvalidConfig(format!(
            "g = {} exceeds the {} rows",
            config.g,
            dataset.n()
        )));
    }
    let sal = fit_sal(dataset, config)?;
    match config.variant {
        Variant::Sal => Ok(sal),
        Variant::Csal => fit_contaminated_from(dataset, &sal, config),
    }
}

fn fit_sal(dataset: &Dataset, config: &FitConfig) -> Result<FitResult, FitError> {
    let joint = dataset.joint();
    let mut seen = HashSet::new();
    let mut best: Option<FitResult> = None;
    let (mut failed, mut duplicates) = (0, 0);
    let mut last_err = None;
    for s in 0..config.n_starts {
        let seed = streams::derive_seed(config.seed, &[s as u64]);
        let attempt = kmeans_partition(&joint, config.g, seed).and_then(|labels| {
            if !seen.insert(labels.clone()) {
                return Ok(None);
            }
            let (model, flagged) =
                init_from_labels(dataset, &labels, config.g, config.family, config.sigma_jitter)?;
            let mut r = run(dataset, model, config)?;
            r.diagnostics.init_flagged = flagged;
            r.diagnostics.start = s;
            Ok(Some(r))
        });
        match attempt {
            Ok(None) => duplicates += 1,
            Ok(Some(r)) => {
                if best.as_ref().is_none_or(|b| r.loglik() > b.loglik()) {
                    best = Some(r);
                }
            }
            Err(e @ FitError::MonotonicityViolation { .. }) => return Err(e),
            Err(e @ FitError::InvalidConfig(_)) | Err(e @ FitError::TooFewDistinctPoints { .. }) => {
                return Err(e)
            }
            Err(e) => {
                failed += 1;
                last_err = Some(e);
            }
        }
    }
    let mut best = best.ok_or_else(|| {
        FitError::AllStartsFailed(last_err.map(|e| e.to_string()).unwrap_or_default())
    })?;
    best.diagnostics.failed_starts = failed;
    best.diagnostics.duplicate_starts = duplicates;
    Ok(best)
}

/// A single fit started from a user-supplied partition instead of k-means.
pub fn fit_from_labels(
    dataset: &Dataset,
    labels: &[usize],
    config: &FitConfig,
) -> Result<FitResult, FitError> {
    config.validate()?;
    if labels.len() != dataset.n() {
        return Err(FitError::InvalidConfig(format!(
            "{} labels for {} rows",
            labels.len(),
            dataset.n()
        )));
    }
    let (model, flagged) =
        init_from_labels(dataset, labels, config.g, config.family, config.sigma_jitter)?;
    let mut sal = run(dataset, model, config)?;
    sal.diagnostics.init_flagged = flagged;
    match config.variant {
        Variant::Sal => Ok(sal),
        Variant::Csal => fit_contaminated_from(dataset, &sal, config),
    }
}

/// ECM for the contaminated variant, started from a finished SAL fit with
/// every contamination proportion at `u0_v0` and inflation at `eta0`.
pub fn fit_contaminated_from(
    dataset: &Dataset,
    sal_fit: &FitResult,
    config: &FitConfig,
) -> Result<FitResult, FitError> {
    config.validate()?;
    if sal_fit.model.variant != Variant::Sal {
        return Err(FitError::InvalidConfig("seed fit must be a SAL fit".into()));
    }
    let mut model = sal_fit.model.clone();
    model.variant = Variant::Csal;
    for c in model.components.iter_mut() {
        if let Some(x) = c.x_law.as_mut() {
            x.delta = config.u0_v0;
            x.eta = config.eta0;
        }
        c.y_law.delta_y = config.u0_v0;
        c.y_law.eta_y = config.eta0;
    }
    let seed_ll = sal_fit.loglik();
    let mut result = run(dataset, model, config)?;
    result.diagnostics.start = sal_fit.diagnostics.start;
    result.diagnostics.init_flagged = sal_fit.diagnostics.init_flagged;
    if result.loglik() < seed_ll {
        let mut model = sal_fit.model.clone();
        model.variant = Variant::Csal;
        for c in model.components.iter_mut() {
            if let Some(x) = c.x_law.as_mut() {
                x.delta = crate::DELTA_MIN;
                x.eta = 1.0;
            }
            c.y_law.delta_y = crate::DELTA_MIN;
            c.y_law.eta_y = 1.0;
        }
        let est = e_step(dataset, &model)?;
        let mut trace = result.loglik_trace.clone();
        trace.push(est.loglik);
        result = finish(dataset, model, est, trace, result.converged, result.n_iter, result.diagnostics);
        result.diagnostics.nesting_fallback = true;
    }
    result.seed_loglik = Some(seed_ll);
    audit::record_nesting(seed_ll, result.loglik());
    Ok(result)
}

/// EM (SAL) or ECM (cSAL) iterations from `model` until the Aitken rule
/// fires or `max_iter` is reached.
fn run(dataset: &Dataset, mut model: CwmModel, config: &FitConfig) -> Result<FitResult, FitError> {
    let frozen = Frozen::none(model.g());
    model.validate()?;
    let mut est = e_step(dataset, &model)?;
    let mut trace = vec![est.loglik];
    let mut diag = FitDiagnostics { capped_any: !est.capped.is_empty(), ..Default::default() };
    let mut converged = false;
    let mut n_iter = 0;
    while n_iter < config.max_iter {
        n_iter += 1;
        let (mut next, d1) = cm_step_1(dataset, &est.resp, &model, &frozen, config.mu_guard, config.sigma_jitter)?;
        diag.cm.merge(&d1);
        // a scale matrix that needs lifting mid-run is collapsing onto a
        // handful of points: a spurious, unbounded-likelihood solution
        if let Some(&k) = d1.jittered.first() {
            return Err(FitError::DegenerateComponent { component: k, reason: "scale matrix collapsed".into() });
        }
        if next.variant == Variant::Csal {
            let (m2, d2) = cm_step_2(dataset, &est.resp, &next)?;
            diag.cm.merge(&d2);
            next = m2;
        }
        let new_est = e_step(dataset, &next)?;
        diag.capped_any |= !new_est.capped.is_empty();
        let prev = *trace.last().expect("nonempty");
        trace.push(new_est.loglik);
        if new_est.loglik < prev - MONOTONE_TOLERANCE {
            audit::record_trace(&trace);
            return Err(FitError::MonotonicityViolation { iteration: n_iter, drop: prev - new_est.loglik });
        }
        model = next;
        est = new_est;
        let t = trace.len();
        let burn = if model.variant == Variant::Csal { config.csal_burn_in } else { 0 };
        if t >= 3 && n_iter >= burn && aitken_check(trace[t - 3], trace[t - 2], trace[t - 1], config.epsilon) {
            converged = true;
            break;
        }
    }
    audit::record_trace(&trace);
    Ok(finish(dataset, model, est, trace, converged, n_iter, diag))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    dataset: &Dataset,
    model: CwmModel,
    est: EStep,
    trace: Vec<f64>,
    converged: bool,
    n_iter: usize,
    mut diagnostics: FitDiagnostics,
) -> FitResult {
    diagnostics.capped = est.capped.clone();
    diagnostics.clamped_gig = est.resp.gig_x.clamped_count()
        + est.resp.gig_x_tilde.clamped_count()
        + est.resp.gig_y.clamped_count()
        + est.resp.gig_y_tilde.clamped_count();
    let loglik = *trace.last().expect("nonempty");
    FitResult {
        bic: bic_of(&model, loglik, dataset.n()),
        classifications: classify_responsibilities(&est.resp, model.variant),
        frozen_mu_components: diagnostics.cm.guarded_mu.clone(),
        frozen_beta_components: diagnostics.cm.guarded_beta.clone(),
        model,
        loglik_trace: trace,
        resp: est.resp,
        converged,
        n_iter,
        seed_loglik: None,
        diagnostics,
    }
}
