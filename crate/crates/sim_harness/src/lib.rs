//! Simulation scenarios for contaminated two-component regressions and the
//! replication driver that fits, aligns and scores each model.

use cwm_engine::{
    fit, fit_contaminated_from, streams, Category, CwmComponent, CwmModel, Dataset, Family, FitConfig,
    FitError, FitResult, RegressionParams, Variant,
};
use metrics::{bias_mse, detection_rates, MetricsError, ParameterSummary};
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;
use sal_distribution::{CsalParams, SalParams};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("every replication failed")]
    AllFailed,
}

/// Kind of atypical point substituted into the clean sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Response outliers at the second component's covariate center.
    A,
    /// Good leverage points on the second component's regression line.
    B,
    /// Bad leverage points.
    C,
    /// Uniform noise over the square (-8, 8)^2.
    D,
}

impl Scenario {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "a" => Some(Self::A),
            "b" => Some(Self::B),
            "c" => Some(Self::C),
            "d" => Some(Self::D),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::A => "a",
            Self::B => "b",
            Self::C => "c",
            Self::D => "d",
        }
    }

    /// Categories counted as detecting a substituted point.
    pub fn detects(self, c: Category) -> bool {
        match self {
            Self::A => matches!(c, Category::Outlier | Category::BadLeverage),
            Self::B => c == Category::GoodLeverage,
            Self::C => c == Category::BadLeverage,
            Self::D => c.is_atypical(),
        }
    }

    fn kind(self) -> AtypicalKind {
        match self {
            Self::A => AtypicalKind::Outlier,
            Self::B => AtypicalKind::GoodLeverage,
            Self::C => AtypicalKind::BadLeverage,
            Self::D => AtypicalKind::Noise,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dependence {
    /// Both components share the covariate law.
    Independent,
    /// Covariate centers at -3 and 3.
    Dependent,
}

impl Dependence {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ind" => Some(Self::Independent),
            "dep" => Some(Self::Dependent),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Independent => "ind",
            Self::Dependent => "dep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub dependence: Dependence,
    pub n: usize,
    pub contamination_rate: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(scenario: Scenario, dependence: Dependence, n: usize, seed: u64) -> Self {
        Self { scenario, dependence, n, contamination_rate: 0.01, seed }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n < 50 {
            return Err(HarnessError::InvalidSpec(format!("n = {} is below 50", self.n)));
        }
        if !(self.contamination_rate > 0.0 && self.contamination_rate < 0.5) {
            return Err(HarnessError::InvalidSpec("contamination rate must lie in (0, 0.5)".into()));
        }
        Ok(())
    }

    pub fn n_atypical(&self) -> usize {
        (self.contamination_rate * self.n as f64).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtypicalKind {
    None,
    Outlier,
    GoodLeverage,
    BadLeverage,
    Noise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDataset {
    pub dataset: Dataset,
    /// Generating component of every row, substituted rows included.
    pub component_truth: Vec<usize>,
    pub atypical_truth: Vec<bool>,
    pub atypical_kind: Vec<AtypicalKind>,
}

fn sal1(mu: f64, s2: f64, alpha: f64) -> SalParams {
    SalParams {
        mu: DVector::from_element(1, mu),
        sigma: DMatrix::from_element(1, 1, s2),
        alpha: DVector::from_element(1, alpha),
    }
}

/// The generating two-component SAL CWM.
pub fn scenario_params(dependence: Dependence) -> CwmModel {
    let mu = match dependence {
        Dependence::Independent => [0.0, 0.0],
        Dependence::Dependent => [-3.0, 3.0],
    };
    let comp = |w: f64, mu: f64, b0: f64, b1: f64, alpha_y: f64| CwmComponent {
        weight: w,
        x_law: Some(CsalParams::uncontaminated(sal1(mu, 1.0, 0.2))),
        y_law: RegressionParams {
            beta: DMatrix::from_column_slice(2, 1, &[b0, b1]),
            sigma_y: DMatrix::from_element(1, 1, 0.5),
            alpha_y: DVector::from_element(1, alpha_y),
            delta_y: 0.0,
            eta_y: 1.0,
        },
    };
    CwmModel {
        components: vec![comp(0.4, mu[0], -2.0, -0.2, -0.2), comp(0.6, mu[1], 2.0, 0.2, 0.2)],
        variant: Variant::Sal,
        family: Family::Cwm,
        d_x: 1,
        d_y: 1,
    }
}

/// Clean draws from [`scenario_params`] with `round(rate n)` uniformly
/// chosen rows replaced per the scenario.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<SimulatedDataset, HarnessError> {
    spec.validate()?;
    let model = scenario_params(spec.dependence);
    let mut rng = streams::stream(spec.seed, &[0x5a]);
    let (mut x, mut y, labels) = cwm_engine::sample_cwm(&model, spec.n, &mut rng)?;
    let mut truth = vec![false; spec.n];
    let mut kind = vec![AtypicalKind::None; spec.n];
    let mu2 = model.components[1].x_law.as_ref().expect("CWM").base.mu[0];
    let mut picked = sample_indices(&mut rng, spec.n, spec.n_atypical()).into_vec();
    picked.sort_unstable();
    for i in picked {
        let (xi, yi) = match spec.scenario {
            Scenario::A => (mu2, rng.random_range(8.0..10.0)),
            Scenario::B => {
                let xs = rng.random_range(8.0..10.0);
                (xs, 2.0 + 0.2 * xs)
            }
            Scenario::C => (rng.random_range(8.0..10.0), rng.random_range(8.0..10.0)),
            Scenario::D => (rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0)),
        };
        x[(i, 0)] = xi;
        y[(i, 0)] = yi;
        truth[i] = true;
        kind[i] = spec.scenario.kind();
    }
    Ok(SimulatedDataset {
        dataset: Dataset::new(x, y)?,
        component_truth: labels,
        atypical_truth: truth,
        atypical_kind: kind,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    SalMrm,
    CsalMrm,
    SalCwm,
    CsalCwm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [Self::SalMrm, Self::CsalMrm, Self::SalCwm, Self::CsalCwm];

    pub fn name(self) -> &'static str {
        match self {
            Self::SalMrm => "SALMRM",
            Self::CsalMrm => "cSALMRM",
            Self::SalCwm => "SALCWM",
            Self::CsalCwm => "cSALCWM",
        }
    }

    pub fn variant(self) -> Variant {
        match self {
            Self::SalMrm | Self::SalCwm => Variant::Sal,
            Self::CsalMrm | Self::CsalCwm => Variant::Csal,
        }
    }

    pub fn family(self) -> Family {
        match self {
            Self::SalMrm | Self::CsalMrm => Family::Mrm,
            Self::SalCwm | Self::CsalCwm => Family::Cwm,
        }
    }
}

/// Names of the per-component parameters reported, in layout order.
pub const PARAMETER_NAMES: [&str; 5] = ["beta0_", "beta1_", "sigma_y_", "alpha_y_", "pi_"];

fn parameter_vectors(model: &CwmModel) -> Vec<Vec<f64>> {
    model
        .components
        .iter()
        .map(|c| {
            let y = &c.y_law;
            vec![y.beta[(0, 0)], y.beta[(1, 0)], y.sigma_y[(0, 0)], y.alpha_y[0], c.weight]
        })
        .collect()
}

/// One model's results on one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutcome {
    pub parameters: Vec<Vec<f64>>,
    pub predicted_atypical: Vec<bool>,
    pub tpr: f64,
    pub fpr: f64,
    pub loglik: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationOutcome {
    pub rep: usize,
    pub atypical_truth: Vec<bool>,
    /// Per requested model, in request order; `Err` holds the failure
    /// message.
    pub models: Vec<Result<ModelOutcome, String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelReport {
    pub model: ModelKind,
    pub completed: usize,
    pub failed: usize,
    pub per_parameter: Vec<ParameterSummary>,
    /// Mean per-replication rates; `None` for the uncontaminated variants,
    /// which classify every point as typical.
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationReport {
    pub spec: ScenarioSpec,
    pub n_reps: usize,
    pub models: Vec<ModelReport>,
    pub replications: Vec<ReplicationOutcome>,
}

fn outcome(sim: &SimulatedDataset, scenario: Scenario, f: &FitResult) -> Result<ModelOutcome, String> {
    let predicted: Vec<bool> = f.classifications.iter().map(|c| scenario.detects(c.category)).collect();
    let rates = detection_rates(&sim.atypical_truth, &predicted).map_err(|e| e.to_string())?;
    Ok(ModelOutcome {
        parameters: parameter_vectors(&f.model),
        predicted_atypical: predicted,
        tpr: rates.tpr,
        fpr: rates.fpr,
        loglik: f.loglik(),
    })
}

/// Fits the requested models on one replication. A contaminated model
/// continues from the SAL fit of its family, fitted once and shared.
pub fn run_replication(spec: &ScenarioSpec, rep: usize, models: &[ModelKind], g: usize) -> ReplicationOutcome {
    let data_spec = ScenarioSpec { seed: streams::derive_seed(spec.seed, &[rep as u64, 0]), ..*spec };
    let fit_seed = streams::derive_seed(spec.seed, &[rep as u64, 1]);
    let sim = match generate_scenario(&data_spec) {
        Ok(s) => s,
        Err(e) => {
            return ReplicationOutcome {
                rep,
                atypical_truth: Vec::new(),
                models: models.iter().map(|_| Err(e.to_string())).collect(),
            }
        }
    };
    let mut sal_fits: Vec<(Family, Result<FitResult, String>)> = Vec::new();
    for family in [Family::Mrm, Family::Cwm] {
        if models.iter().any(|m| m.family() == family) {
            let c = FitConfig::new(g, Variant::Sal, family, fit_seed);
            sal_fits.push((family, fit(&sim.dataset, &c).map_err(|e| e.to_string())));
        }
    }
    let results = models
        .iter()
        .map(|m| {
            let sal = sal_fits.iter().find(|(f, _)| *f == m.family()).map(|(_, r)| r).expect("fitted above");
            let sal = sal.as_ref().map_err(|e| e.clone())?;
            match m.variant() {
                Variant::Sal => outcome(&sim, spec.scenario, sal),
                Variant::Csal => {
                    let c = FitConfig::new(g, Variant::Csal, m.family(), fit_seed);
                    let f = fit_contaminated_from(&sim.dataset, sal, &c).map_err(|e| e.to_string())?;
                    outcome(&sim, spec.scenario, &f)
                }
            }
        })
        .collect();
    ReplicationOutcome { rep, atypical_truth: sim.atypical_truth, models: results }
}

/// `n_reps` independent replications with `G = 2` fits, aggregated per
/// model. Deterministic given `spec.seed` regardless of thread count.
pub fn run_replications(
    spec: &ScenarioSpec,
    n_reps: usize,
    models: &[ModelKind],
) -> Result<ReplicationReport, HarnessError> {
    spec.validate()?;
    if n_reps == 0 {
        return Err(HarnessError::InvalidSpec("n_reps must be at least 1".into()));
    }
    let replications: Vec<ReplicationOutcome> =
        (0..n_reps).into_par_iter().map(|r| run_replication(spec, r, models, 2)).collect();
    let truth = parameter_vectors(&scenario_params(spec.dependence));
    let mut reports = Vec::with_capacity(models.len());
    for (k, &m) in models.iter().enumerate() {
        let done: Vec<&ModelOutcome> = replications.iter().filter_map(|r| r.models[k].as_ref().ok()).collect();
        if done.is_empty() {
            return Err(HarnessError::AllFailed);
        }
        let estimates: Vec<Vec<Vec<f64>>> = done.iter().map(|o| o.parameters.clone()).collect();
        let per_parameter = bias_mse(&estimates, &truth, &PARAMETER_NAMES, 2)?;
        let mean = |f: fn(&ModelOutcome) -> f64| done.iter().map(|o| f(o)).sum::<f64>() / done.len() as f64;
        let rates = m.variant() == Variant::Csal;
        reports.push(ModelReport {
            model: m,
            completed: done.len(),
            failed: n_reps - done.len(),
            per_parameter,
            tpr: rates.then(|| mean(|o| o.tpr)),
            fpr: rates.then(|| mean(|o| o.fpr)),
        });
    }
    Ok(ReplicationReport { spec: *spec, n_reps, models: reports, replications })
}

impl ModelReport {
    pub fn parameter(&self, name: &str) -> Option<&ParameterSummary> {
        self.per_parameter.iter().find(|p| p.name == name)
    }
}

impl ReplicationReport {
    pub fn model(&self, m: ModelKind) -> Option<&ModelReport> {
        self.models.iter().find(|r| r.model == m)
    }
}
