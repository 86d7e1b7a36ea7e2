//! Expected complete-data log-likelihood of one univariate SAL part, written
//! from the normal variance-mean mixture: given `W = w` a typical point is
//! `N(m + w alpha, w s2)` and a contaminant is `N(m + w sqrt(eta) alpha,
//! w eta s2)`, with the conditional moments of `W` and `1/W` supplied.

use crate::{golden_section_max, nelder_mead_max};

/// Per-observation weights and latent moments for one part.
#[derive(Debug, Clone)]
pub struct PartWeights {
    /// `z (1 - post)`
    pub good: Vec<f64>,
    /// `z post`
    pub bad: Vec<f64>,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub e1_tilde: Vec<f64>,
    pub e2_tilde: Vec<f64>,
}

pub fn part_q(resid: &[f64], alpha: f64, s2: f64, eta: f64, w: &PartWeights) -> f64 {
    let mut q = 0.0;
    let se = eta.sqrt();
    for (i, &r) in resid.iter().enumerate() {
        q += w.good[i]
            * (-0.5 * s2.ln() - w.e2[i] * r * r / (2.0 * s2) + r * alpha / s2
                - w.e1[i] * alpha * alpha / (2.0 * s2));
        q += w.bad[i]
            * (-0.5 * (eta * s2).ln() - w.e2_tilde[i] * r * r / (2.0 * eta * s2)
                + r * alpha / (se * s2)
                - w.e1_tilde[i] * alpha * alpha / (2.0 * s2));
    }
    q
}

/// Maximizer of [`part_q`] at fixed `eta` over the location coefficients
/// (residual `target_i - design_i . coef`), the skewness and the scale.
/// Returns `(coef, alpha, s2)`.
pub fn part_q_argmax(
    design: &[Vec<f64>],
    target: &[f64],
    eta: f64,
    w: &PartWeights,
    start: (&[f64], f64, f64),
) -> (Vec<f64>, f64, f64) {
    let k = start.0.len();
    let resid = |coef: &[f64]| -> Vec<f64> {
        design
            .iter()
            .zip(target)
            .map(|(d, t)| t - d.iter().zip(coef).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    };
    let f = |th: &[f64]| part_q(&resid(&th[..k]), th[k], th[k + 1].exp(), eta, w);
    let mut x0 = start.0.to_vec();
    x0.push(start.1);
    x0.push(start.2.ln());
    let th = nelder_mead_max(&f, &x0, 0.3);
    (th[..k].to_vec(), th[k], th[k + 1].exp())
}

/// Maximizer over `eta >= 1` of the inflation-dependent terms of
/// [`part_q`], all other parameters fixed.
pub fn part_eta_argmax(resid: &[f64], alpha: f64, s2: f64, w: &PartWeights) -> f64 {
    let f = |eta: f64| {
        let se = eta.sqrt();
        resid
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                w.bad[i] * (-0.5 * eta.ln() - w.e2_tilde[i] * r * r / (2.0 * eta * s2) + r * alpha / (se * s2))
            })
            .sum::<f64>()
    };
    golden_section_max(&f, 1.0, 1e6)
}

/// Maximizer over `(0, 1)` of `sum good ln(1 - d) + bad ln d`.
pub fn proportion_argmax(w: &PartWeights) -> f64 {
    let (g, b): (f64, f64) = (w.good.iter().sum(), w.bad.iter().sum());
    golden_section_max(&|d: f64| g * (1.0 - d).ln() + b * d.ln(), 1e-12, 1.0 - 1e-12)
}
