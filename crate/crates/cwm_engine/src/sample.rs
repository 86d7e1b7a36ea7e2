use nalgebra::DMatrix;
use rand::Rng;
use sal_distribution::csal_sample;

use crate::{CwmModel, Family, FitError};

/// Draws from a CWM: component, then covariates, then the response at
/// those covariates. Returns `(x, y, labels)`.
pub fn sample_cwm<R: Rng + ?Sized>(
    model: &CwmModel,
    n: usize,
    rng: &mut R,
) -> Result<(DMatrix<f64>, DMatrix<f64>, Vec<usize>), FitError> {
    if model.family != Family::Cwm {
        return Err(FitError::InvalidConfig("only a CWM has a covariate law to sample".into()));
    }
    model.validate()?;
    let mut x = DMatrix::zeros(n, model.d_x);
    let mut y = DMatrix::zeros(n, model.d_y);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let t: f64 = rng.random();
        let mut acc = 0.0;
        let mut k = model.g() - 1;
        for (j, c) in model.components.iter().enumerate() {
            acc += c.weight;
            if t < acc {
                k = j;
                break;
            }
        }
        let comp = &model.components[k];
        let (xi, _) = csal_sample(comp.x_law.as_ref().expect("validated CWM"), 1, rng);
        let xi: Vec<f64> = xi.iter().copied().collect();
        let (yi, _) = csal_sample(&comp.y_law.law_at(&xi), 1, rng);
        x.row_mut(i).copy_from_slice(&xi);
        y.row_mut(i).iter_mut().zip(yi.iter()).for_each(|(a, b)| *a = *b);
        labels.push(k);
    }
    Ok((x, y, labels))
}
