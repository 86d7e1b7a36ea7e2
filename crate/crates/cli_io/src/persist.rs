//! Model JSON. Every real number is stored as a decimal string with 17
//! significant digits, which parses back to the same `f64`.

use std::path::Path;

use cwm_engine::{CwmComponent, CwmModel, Family, FitResult, RegressionParams, Variant};
use nalgebra::{DMatrix, DVector};
use sal_distribution::{CsalParams, SalParams};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub variant: String,
    pub family: String,
    pub d_x: usize,
    pub d_y: usize,
    pub components: Vec<ComponentJson>,
    pub fit: FitJson,
    /// Column names and the standardization applied at fit time, so that
    /// `classify` can read new data the same way.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<ColumnsJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentJson {
    pub weight: String,
    pub x_law: Option<XLawJson>,
    pub y_law: YLawJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XLawJson {
    pub mu: Vec<String>,
    pub sigma: Vec<Vec<String>>,
    pub alpha: Vec<String>,
    pub delta: String,
    pub eta: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YLawJson {
    pub beta: Vec<Vec<String>>,
    pub sigma_y: Vec<Vec<String>>,
    pub alpha_y: Vec<String>,
    pub delta_y: String,
    pub eta_y: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitJson {
    pub loglik: String,
    pub bic: String,
    pub n_iter: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnsJson {
    pub responses: Vec<String>,
    pub covariates: Vec<String>,
    /// `(mean, sd)` per column, responses first; absent for raw data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardization: Option<Vec<(String, String)>>,
}

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse(s: &str) -> Result<f64, CliError> {
    s.parse::<f64>().map_err(|_| CliError::Data(format!("'{s}' is not a number")))
}

fn vec_out(v: &DVector<f64>) -> Vec<String> {
    v.iter().map(|&x| num(x)).collect()
}

fn mat_out(m: &DMatrix<f64>) -> Vec<Vec<String>> {
    (0..m.nrows()).map(|i| m.row(i).iter().map(|&x| num(x)).collect()).collect()
}

fn vec_in(v: &[String], len: usize, what: &str) -> Result<DVector<f64>, CliError> {
    if v.len() != len {
        return Err(CliError::Data(format!("{what} has length {} instead of {len}", v.len())));
    }
    Ok(DVector::from_vec(v.iter().map(|s| parse(s)).collect::<Result<_, _>>()?))
}

fn mat_in(m: &[Vec<String>], rows: usize, cols: usize, what: &str) -> Result<DMatrix<f64>, CliError> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(CliError::Data(format!("{what} is not {rows} x {cols}")));
    }
    let mut out = DMatrix::zeros(rows, cols);
    for (i, r) in m.iter().enumerate() {
        for (j, s) in r.iter().enumerate() {
            out[(i, j)] = parse(s)?;
        }
    }
    Ok(out)
}

pub fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::Sal => "sal",
        Variant::Csal => "csal",
    }
}

pub fn family_name(f: Family) -> &'static str {
    match f {
        Family::Cwm => "cwm",
        Family::Mrm => "mrm",
    }
}

pub fn parse_variant(s: &str) -> Option<Variant> {
    match s {
        "sal" => Some(Variant::Sal),
        "csal" => Some(Variant::Csal),
        _ => None,
    }
}

pub fn parse_family(s: &str) -> Option<Family> {
    match s {
        "cwm" => Some(Family::Cwm),
        "mrm" => Some(Family::Mrm),
        _ => None,
    }
}

impl ModelFile {
    pub fn from_fit(fit: &FitResult, columns: Option<ColumnsJson>) -> Self {
        let m = &fit.model;
        let components = m
            .components
            .iter()
            .map(|c| ComponentJson {
                weight: num(c.weight),
                x_law: c.x_law.as_ref().map(|x| XLawJson {
                    mu: vec_out(&x.base.mu),
                    sigma: mat_out(&x.base.sigma),
                    alpha: vec_out(&x.base.alpha),
                    delta: num(x.delta),
                    eta: num(x.eta),
                }),
                y_law: YLawJson {
                    beta: mat_out(&c.y_law.beta),
                    sigma_y: mat_out(&c.y_law.sigma_y),
                    alpha_y: vec_out(&c.y_law.alpha_y),
                    delta_y: num(c.y_law.delta_y),
                    eta_y: num(c.y_law.eta_y),
                },
            })
            .collect();
        Self {
            variant: variant_name(m.variant).into(),
            family: family_name(m.family).into(),
            d_x: m.d_x,
            d_y: m.d_y,
            components,
            fit: FitJson {
                loglik: num(fit.loglik()),
                bic: num(fit.bic),
                n_iter: fit.n_iter,
                converged: fit.converged,
            },
            columns,
        }
    }

    pub fn to_model(&self) -> Result<CwmModel, CliError> {
        let variant = parse_variant(&self.variant)
            .ok_or_else(|| CliError::Data(format!("unknown variant '{}'", self.variant)))?;
        let family = parse_family(&self.family)
            .ok_or_else(|| CliError::Data(format!("unknown family '{}'", self.family)))?;
        let (dx, dy) = (self.d_x, self.d_y);
        let mut components = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let x_law = match &c.x_law {
                Some(x) => Some(CsalParams {
                    base: SalParams {
                        mu: vec_in(&x.mu, dx, "mu")?,
                        sigma: mat_in(&x.sigma, dx, dx, "sigma")?,
                        alpha: vec_in(&x.alpha, dx, "alpha")?,
                    },
                    delta: parse(&x.delta)?,
                    eta: parse(&x.eta)?,
                }),
                None => None,
            };
            let y = &c.y_law;
            components.push(CwmComponent {
                weight: parse(&c.weight)?,
                x_law,
                y_law: RegressionParams {
                    beta: mat_in(&y.beta, dx + 1, dy, "beta")?,
                    sigma_y: mat_in(&y.sigma_y, dy, dy, "sigma_y")?,
                    alpha_y: vec_in(&y.alpha_y, dy, "alpha_y")?,
                    delta_y: parse(&y.delta_y)?,
                    eta_y: parse(&y.eta_y)?,
                },
            });
        }
        let model = CwmModel { components, variant, family, d_x: dx, d_y: dy };
        model.validate().map_err(|e| CliError::Data(format!("invalid model: {e}")))?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| CliError::Data(e.to_string()))?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let s = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&s).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }
}
