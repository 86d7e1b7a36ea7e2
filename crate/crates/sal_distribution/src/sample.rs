use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::{CsalParams, SalParams};

/// `n` draws of `mu + V alpha + sqrt(V) L Z`, one row each.
pub fn sal_sample<R: Rng + ?Sized>(params: &SalParams, n: usize, rng: &mut R) -> DMatrix<f64> {
    let l = lower_factor(params);
    let p = params.dim();
    let mut out = DMatrix::zeros(n, p);
    for i in 0..n {
        let row = draw(&params.mu, &l, &params.alpha, 1.0, rng);
        out.row_mut(i).copy_from(&row.transpose());
    }
    out
}

/// Draws from the cSAL mixture; the flags mark rows from the contaminant.
pub fn csal_sample<R: Rng + ?Sized>(
    params: &CsalParams,
    n: usize,
    rng: &mut R,
) -> (DMatrix<f64>, Vec<bool>) {
    let base = &params.base;
    let l = lower_factor(base);
    let mut out = DMatrix::zeros(n, base.dim());
    let mut flags = Vec::with_capacity(n);
    for i in 0..n {
        let bad = rng.random::<f64>() < params.delta;
        let eta = if bad { params.eta } else { 1.0 };
        let row = draw(&base.mu, &l, &base.alpha, eta, rng);
        out.row_mut(i).copy_from(&row.transpose());
        flags.push(bad);
    }
    (out, flags)
}

fn lower_factor(params: &SalParams) -> DMatrix<f64> {
    params
        .sigma
        .clone()
        .cholesky()
        .expect("SalParams guarantees a positive definite scale")
        .unpack()
}

fn draw<R: Rng + ?Sized>(
    mu: &DVector<f64>,
    l: &DMatrix<f64>,
    alpha: &DVector<f64>,
    eta: f64,
    rng: &mut R,
) -> DVector<f64> {
    let v: f64 = rng.sample(Exp1);
    let z = DVector::from_fn(mu.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    let s = eta.sqrt();
    mu + alpha * (v * s) + (l * z) * (v.sqrt() * s)
}
