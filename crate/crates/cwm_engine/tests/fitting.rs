mod common;

use common::{regression1, rng, sal1, sample, two_component_model};
use cwm_engine::{
    audit, e_step, fit, kmeans_partition, Category, CwmComponent, CwmModel, Dataset, Family, FitConfig, Variant,
};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use sal_distribution::CsalParams;

/// Univariate SAL density in closed form (order 1/2 Bessel function).
fn sal1_density(r: f64, s2: f64, alpha: f64) -> f64 {
    let a = 2.0 + alpha * alpha / s2;
    let b = r * r / s2;
    (r * alpha / s2 - (a * b).sqrt()).exp() / (a * s2).sqrt()
}

fn csal1_density(r: f64, s2: f64, alpha: f64, delta: f64, eta: f64) -> f64 {
    (1.0 - delta) * sal1_density(r, s2, alpha) + delta * sal1_density(r, eta * s2, eta.sqrt() * alpha)
}

fn contaminated_pair() -> CwmModel {
    let comp = |w: f64, mu: f64, b0: f64, b1: f64, d: f64, e: f64| CwmComponent {
        weight: w,
        x_law: Some(CsalParams::new(sal1(mu, 0.8, 0.3), d, e).unwrap()),
        y_law: regression1(b0, b1, 0.4, -0.2, d / 2.0, e + 1.0),
    };
    CwmModel {
        components: vec![comp(0.3, -1.0, 0.5, 1.0, 0.1, 5.0), comp(0.7, 1.5, -1.0, 0.3, 0.2, 2.0)],
        variant: Variant::Csal,
        family: Family::Cwm,
        d_x: 1,
        d_y: 1,
    }
}

#[test]
fn log_likelihood_matches_closed_form_mixture() {
    let m = contaminated_pair();
    let xs = [-1.2, 0.0, 0.7, 3.1];
    let ys = [0.1, 2.5, -0.6, -0.2];
    let data = Dataset::new(DMatrix::from_column_slice(4, 1, &xs), DMatrix::from_column_slice(4, 1, &ys)).unwrap();
    let mut expected = 0.0;
    for i in 0..4 {
        let mut f = 0.0;
        for c in &m.components {
            let xl = c.x_law.as_ref().unwrap();
            let y = &c.y_law;
            let fx = csal1_density(xs[i] - xl.base.mu[0], xl.base.sigma[(0, 0)], xl.base.alpha[0], xl.delta, xl.eta);
            let ry = ys[i] - y.beta[(0, 0)] - y.beta[(1, 0)] * xs[i];
            let fy = csal1_density(ry, y.sigma_y[(0, 0)], y.alpha_y[0], y.delta_y, y.eta_y);
            f += c.weight * fx * fy;
        }
        expected += f.ln();
    }
    let est = e_step(&data, &m).unwrap();
    assert!((est.loglik - expected).abs() < 1e-12 * expected.abs(), "{} vs {expected}", est.loglik);
    for i in 0..4 {
        let s: f64 = est.resp.z.row(i).sum();
        assert!((s - 1.0).abs() < 1e-10);
    }
}

#[test]
fn posterior_limits() {
    let (data, _) = sample(&two_component_model(4.0), 60, 3);
    let mut one = two_component_model(4.0);
    one.components.truncate(1);
    one.components[0].weight = 1.0;
    let est = e_step(&data, &one).unwrap();
    assert!(est.resp.z.iter().all(|&z| z == 1.0));

    let mut m = contaminated_pair();
    for c in m.components.iter_mut() {
        c.x_law.as_mut().unwrap().delta = 1e-9;
        c.y_law.delta_y = 1e-9;
    }
    let (data, _) = sample(&contaminated_pair(), 60, 4);
    let est = e_step(&data, &m).unwrap();
    assert!(est.resp.u.iter().chain(est.resp.v.iter()).all(|&p| p <= 1e-6));
}

#[test]
fn kmeans_matches_exhaustive_search() {
    let pts = [[0.0, 0.1], [0.3, -0.2], [5.0, 5.2], [0.2, 0.4], [4.6, 5.1], [5.3, 4.8]];
    let m = DMatrix::from_row_iterator(6, 2, pts.iter().flatten().copied());
    let labels = kmeans_partition(&m, 2, 11).unwrap();
    let truth = test_oracles::brute_force_two_means(&pts.iter().map(|p| p.to_vec()).collect::<Vec<_>>());
    assert_eq!(labels, truth);
}

#[test]
fn single_component_coefficients_within_three_standard_errors() {
    let mut m = two_component_model(0.0);
    m.components.truncate(1);
    m.components[0].weight = 1.0;
    let n = 2000;
    let (data, _) = sample(&m, n, 21);
    let f = fit(&data, &FitConfig::new(1, Variant::Sal, Family::Cwm, 5)).unwrap();
    assert!(f.converged);
    let b = &f.model.components[0].y_law.beta;
    // least-squares standard errors; the error variance is s2 + alpha^2
    let var_e = 0.5 + 0.04;
    let var_x = 1.0 + 0.04;
    let se0 = (var_e / n as f64).sqrt();
    let se1 = (var_e / (n as f64 * var_x)).sqrt();
    assert!((b[(0, 0)] + 2.0).abs() < 3.0 * se0, "{b}");
    assert!((b[(1, 0)] + 0.2).abs() < 3.0 * se1, "{b}");
}

#[test]
fn traces_are_monotone_and_contaminated_fits_nest() {
    for seed in 0..4 {
        let (data, _) = sample(&contaminated_pair(), 300, 40 + seed);
        for variant in [Variant::Sal, Variant::Csal] {
            let f = fit(&data, &FitConfig::new(2, variant, Family::Cwm, seed)).unwrap();
            for w in f.loglik_trace.windows(2) {
                assert!(w[1] >= w[0] - audit::SLACK, "seed {seed}: {} -> {}", w[0], w[1]);
            }
            if let Some(s) = f.seed_loglik {
                assert!(f.loglik() >= s - audit::SLACK);
            }
        }
    }
}

#[test]
fn row_order_does_not_change_the_fit() {
    let (data, _) = sample(&two_component_model(3.0), 200, 8);
    let mut idx: Vec<usize> = (0..200).collect();
    idx.shuffle(&mut rng(1));
    let shuffled = data.select_rows(&idx);
    for variant in [Variant::Sal, Variant::Csal] {
        let c = FitConfig::new(2, variant, Family::Cwm, 2);
        let a = fit(&data, &c).unwrap();
        let b = fit(&shuffled, &c).unwrap();
        assert!((a.loglik() - b.loglik()).abs() < 1e-8 * a.loglik().abs(), "{} {}", a.loglik(), b.loglik());
        for (k, &i) in idx.iter().enumerate() {
            assert_eq!(a.classifications[i], b.classifications[k]);
        }
    }
}

#[test]
fn separated_components_are_recovered_and_mostly_typical() {
    let (data, labels) = sample(&two_component_model(6.0), 500, 13);
    let f = fit(&data, &FitConfig::new(2, Variant::Csal, Family::Cwm, 1)).unwrap();
    let agree = f.classifications.iter().zip(&labels).filter(|(c, &l)| c.component == l).count();
    let agree = agree.max(500 - agree);
    assert!(agree >= 490, "{agree}");
    let typical = f.classifications.iter().filter(|c| c.category == Category::Typical).count();
    assert!(typical as f64 >= 0.99 * 500.0, "{typical}");
}

#[test]
fn kmeans_start_beats_random_labels() {
    use rand::Rng;
    let (data, _) = sample(&two_component_model(5.0), 300, 17);
    let mut wins = 0;
    for seed in 0..20 {
        let km = cwm_engine::init_salcwm(&data, 2, seed).unwrap();
        let mut r = rng(500 + seed);
        let labels: Vec<usize> = (0..300).map(|_| r.random_range(0..2)).collect();
        let (rand_model, _) = cwm_engine::init_from_labels(&data, &labels, 2, Family::Cwm, 1e-8).unwrap();
        let a = cwm_engine::observed_log_likelihood(&data, &km).unwrap();
        let b = cwm_engine::observed_log_likelihood(&data, &rand_model).unwrap();
        wins += usize::from(a >= b);
    }
    assert_eq!(wins, 20);
}

#[test]
fn trace_reproduces_observed_log_likelihood() {
    let (data, _) = sample(&contaminated_pair(), 250, 9);
    let f = fit(&data, &FitConfig::new(2, Variant::Csal, Family::Cwm, 3)).unwrap();
    let ll = cwm_engine::observed_log_likelihood(&data, &f.model).unwrap();
    assert!((ll - f.loglik()).abs() <= 1e-10 * ll.abs());
    assert!(f.model.components.iter().all(|c| c.y_law.eta_y >= 1.0 && c.x_law.as_ref().unwrap().eta >= 1.0));
    for i in 0..250 {
        assert!((f.resp.z.row(i).sum() - 1.0).abs() < 1e-10);
    }
}
