#![allow(dead_code)]

use cwm_engine::{CwmComponent, CwmModel, Dataset, Family, RegressionParams, Variant};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sal_distribution::{CsalParams, SalParams};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sal1(mu: f64, s2: f64, alpha: f64) -> SalParams {
    SalParams::new(
        DVector::from_element(1, mu),
        DMatrix::from_element(1, 1, s2),
        DVector::from_element(1, alpha),
    )
    .unwrap()
}

pub fn regression1(b0: f64, b1: f64, s2: f64, alpha: f64, delta: f64, eta: f64) -> RegressionParams {
    RegressionParams {
        beta: DMatrix::from_column_slice(2, 1, &[b0, b1]),
        sigma_y: DMatrix::from_element(1, 1, s2),
        alpha_y: DVector::from_element(1, alpha),
        delta_y: delta,
        eta_y: eta,
    }
}

/// Two univariate SAL regressions with separated covariates.
pub fn two_component_model(mu_gap: f64) -> CwmModel {
    let comp = |w: f64, mu: f64, b0: f64, b1: f64, a: f64| CwmComponent {
        weight: w,
        x_law: Some(CsalParams::uncontaminated(sal1(mu, 1.0, 0.2))),
        y_law: regression1(b0, b1, 0.5, a, 0.0, 1.0),
    };
    CwmModel {
        components: vec![
            comp(0.4, -mu_gap / 2.0, -2.0, -0.2, -0.2),
            comp(0.6, mu_gap / 2.0, 2.0, 0.2, 0.2),
        ],
        variant: Variant::Sal,
        family: Family::Cwm,
        d_x: 1,
        d_y: 1,
    }
}

pub fn sample(model: &CwmModel, n: usize, seed: u64) -> (Dataset, Vec<usize>) {
    let (x, y, labels) = cwm_engine::sample_cwm(model, n, &mut rng(seed)).unwrap();
    (Dataset::new(x, y).unwrap(), labels)
}
