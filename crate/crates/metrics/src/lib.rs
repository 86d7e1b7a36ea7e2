//! Model selection and evaluation statistics for fitted mixtures.

use std::collections::HashMap;

use cwm_engine::FitResult;
use itertools::Itertools;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no replications supplied")]
    Empty,
    #[error("replication {0}: {1}")]
    Shape(usize, String),
}

/// `-2 ln L + k ln n`; smaller is better.
pub fn bic(fit: &FitResult, n: usize) -> f64 {
    cwm_engine::bic_of(&fit.model, fit.loglik(), n)
}

fn choose2(m: u64) -> f64 {
    (m * m.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index from the contingency table of the two labelings.
/// When both partitions make the expected and maximal index coincide (both
/// trivial), identical partitions score 1 and others 0.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&i, &j) in a.iter().zip(b) {
        *table.entry((i, j)).or_default() += 1;
        *rows.entry(i).or_default() += 1;
        *cols.entry(j).or_default() += 1;
    }
    let index: f64 = table.values().map(|&m| choose2(m)).sum();
    let sa: f64 = rows.values().map(|&m| choose2(m)).sum();
    let sb: f64 = cols.values().map(|&m| choose2(m)).sum();
    let total = choose2(a.len() as u64);
    let expected = if total > 0.0 { sa * sb / total } else { 0.0 };
    let max = 0.5 * (sa + sb);
    if max == expected {
        return Ok(if index == max { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionRates {
    pub tpr: f64,
    pub fpr: f64,
    /// No true atypical points, so `tpr` was set to 0.
    pub tpr_undefined: bool,
    /// No true typical points, so `fpr` was set to 0.
    pub fpr_undefined: bool,
}

pub fn detection_rates(truth: &[bool], predicted: &[bool]) -> Result<DetectionRates, MetricsError> {
    if truth.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch(truth.len(), predicted.len()));
    }
    let (mut tp, mut fn_, mut fp, mut tn) = (0u64, 0u64, 0u64, 0u64);
    for (&t, &p) in truth.iter().zip(predicted) {
        match (t, p) {
            (true, true) => tp += 1,
            (true, false) => fn_ += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
        }
    }
    let rate = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    Ok(DetectionRates {
        tpr: rate(tp, tp + fn_),
        fpr: rate(fp, fp + tn),
        tpr_undefined: tp + fn_ == 0,
        fpr_undefined: fp + tn == 0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSummary {
    /// Parameter name with the 1-based component index appended.
    pub name: String,
    pub truth: f64,
    pub bias: f64,
    pub mse: f64,
}

/// Permutation `perm` (estimate `g` stands for true component `perm[g]`)
/// minimizing the summed squared distance between the first `beta_len`
/// entries of each estimated and true parameter vector. Ties keep the
/// lexicographically first permutation.
pub fn align_components(estimate: &[Vec<f64>], truth: &[Vec<f64>], beta_len: usize) -> Vec<usize> {
    let g = truth.len();
    let mut best = (f64::INFINITY, (0..g).collect::<Vec<_>>());
    for perm in (0..g).permutations(g) {
        let cost: f64 = (0..g)
            .map(|k| {
                estimate[k][..beta_len]
                    .iter()
                    .zip(&truth[perm[k]][..beta_len])
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
            })
            .sum();
        if cost < best.0 {
            best = (cost, perm);
        }
    }
    best.1
}

/// Bias and MSE of every component parameter over replications. Each
/// replication is a list of per-component parameter vectors laid out as
/// `names`, the first `beta_len` being regression coefficients used for
/// label alignment.
pub fn bias_mse(
    estimates: &[Vec<Vec<f64>>],
    truth: &[Vec<f64>],
    names: &[&str],
    beta_len: usize,
) -> Result<Vec<ParameterSummary>, MetricsError> {
    if estimates.is_empty() {
        return Err(MetricsError::Empty);
    }
    let g = truth.len();
    let p = names.len();
    if beta_len > p || truth.iter().any(|t| t.len() != p) {
        return Err(MetricsError::Shape(0, "truth does not match the parameter names".into()));
    }
    let mut sum = vec![vec![0.0; p]; g];
    let mut sq = vec![vec![0.0; p]; g];
    for (r, est) in estimates.iter().enumerate() {
        if est.len() != g || est.iter().any(|e| e.len() != p) {
            return Err(MetricsError::Shape(r, "estimate does not match the truth".into()));
        }
        let perm = align_components(est, truth, beta_len);
        for (k, e) in est.iter().enumerate() {
            let t = perm[k];
            for j in 0..p {
                let d = e[j] - truth[t][j];
                sum[t][j] += d;
                sq[t][j] += d * d;
            }
        }
    }
    let reps = estimates.len() as f64;
    let mut out = Vec::with_capacity(g * p);
    for k in 0..g {
        for j in 0..p {
            out.push(ParameterSummary {
                name: format!("{}{}", names[j], k + 1),
                truth: truth[k][j],
                bias: sum[k][j] / reps,
                mse: sq[k][j] / reps,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub bic: f64,
    pub ari: Option<f64>,
    pub tpr: f64,
    pub fpr: f64,
    pub per_parameter: Vec<ParameterSummary>,
}
