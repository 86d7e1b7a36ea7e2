use nalgebra::{DMatrix, DVector};
use sal_distribution::{CsalParams, SalParams};

use crate::cm::{enforce_pd, solve_or_pinv};
use crate::{kmeans_partition, CwmComponent, CwmModel, Dataset, Family, FitError, RegressionParams, Variant};

/// Symmetric SAL start (`alpha = 0`) from a hard partition: cluster shares,
/// cluster means and MLE covariances of `x`, and per-cluster least squares
/// of `y` on `(1, x)` with the residual covariance.
///
/// The flag reports whether any covariance needed jitter or any least
/// squares system a pseudo-inverse.
pub fn init_from_labels(
    dataset: &Dataset,
    labels: &[usize],
    g: usize,
    family: Family,
    sigma_jitter: f64,
) -> Result<(CwmModel, bool), FitError> {
    let n = dataset.n();
    if labels.len() != n {
        return Err(FitError::InvalidData("one label per row required".into()));
    }
    let (dx, dy) = (dataset.d_x(), dataset.d_y());
    let mut flagged = false;
    let mut components = Vec::with_capacity(g);
    for k in 0..g {
        let rows: Vec<usize> = (0..n).filter(|&i| labels[i] == k).collect();
        if rows.is_empty() {
            return Err(FitError::DegenerateComponent { component: k, reason: "empty cluster".into() });
        }
        let m = rows.len() as f64;
        let sub = dataset.select_rows(&rows);
        let x_law = match family {
            Family::Cwm => {
                let mu = DVector::from_fn(dx, |j, _| sub.x().column(j).mean());
                let centred = DMatrix::from_fn(rows.len(), dx, |i, j| sub.x()[(i, j)] - mu[j]);
                let (sigma, jit) = enforce_pd(centred.transpose() * &centred / m, sigma_jitter);
                flagged |= jit;
                Some(CsalParams { base: SalParams { mu, sigma, alpha: DVector::zeros(dx) }, delta: 0.0, eta: 1.0 })
            }
            Family::Mrm => None,
        };
        let design = DMatrix::from_fn(rows.len(), dx + 1, |i, j| if j == 0 { 1.0 } else { sub.x()[(i, j - 1)] });
        let (beta, pinv) = solve_or_pinv(&(design.transpose() * &design), &(design.transpose() * sub.y()));
        flagged |= pinv;
        let resid = sub.y() - &design * &beta;
        let (sigma_y, jit) = enforce_pd(resid.transpose() * &resid / m, sigma_jitter);
        flagged |= jit;
        components.push(CwmComponent {
            weight: m / n as f64,
            x_law,
            y_law: RegressionParams { beta, sigma_y, alpha_y: DVector::zeros(dy), delta_y: 0.0, eta_y: 1.0 },
        });
    }
    let model = CwmModel { components, variant: Variant::Sal, family, d_x: dx, d_y: dy };
    Ok((model, flagged))
}

/// k-means on `[x | y]` followed by [`init_from_labels`].
pub fn init_salcwm(dataset: &Dataset, g: usize, seed: u64) -> Result<CwmModel, FitError> {
    let labels = kmeans_partition(&dataset.joint(), g, seed)?;
    Ok(init_from_labels(dataset, &labels, g, Family::Cwm, 1e-8)?.0)
}
