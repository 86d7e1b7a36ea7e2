//! Fitting engine for SAL cluster-weighted models (EM) and their
//! contaminated extension (ECM), including the fixed-covariate mixture of
//! regressions family that shares the regression half of the algebra.

pub mod audit;
mod aitken;
mod classify;
mod cm;
mod dataset;
mod error;
mod estep;
mod fit;
mod init;
mod kmeans;
mod model;
mod sample;
pub mod streams;

pub use aitken::aitken_check;
pub use classify::{classify, classify_responsibilities, Category, Classification};
pub use cm::{cm_step_1, cm_step_2, eta_root, CmDiagnostics, Frozen};
pub use dataset::Dataset;
pub use error::FitError;
pub use estep::{e_step, observed_log_likelihood, EStep, GigTable, Responsibilities};
pub use fit::{bic_of, fit, fit_contaminated_from, fit_from_labels, FitConfig, FitDiagnostics, FitResult};
pub use init::{init_from_labels, init_salcwm};
pub use kmeans::kmeans_partition;
pub use model::{CwmComponent, CwmModel, Family, RegressionParams, Variant};
pub use sample::sample_cwm;

/// Bounds applied to every contamination-proportion update.
pub const DELTA_MIN: f64 = 1e-6;
pub const DELTA_MAX: f64 = 1.0 - 1e-6;
