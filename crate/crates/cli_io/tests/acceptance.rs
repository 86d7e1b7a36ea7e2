//! Criteria 1 to 12, one PASS/FAIL line each. Criterion 5 reads the
//! process-wide audit after every other criterion has run its fits.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use cli_io::commands::{ais_study, load_ais, with_ais_noise, AIS_NOISE_POINTS};
use cwm_engine::{
    audit, cm_step_1, cm_step_2, e_step, init_from_labels, CwmComponent, CwmModel, Dataset, Family, Frozen,
    RegressionParams, Variant,
};
use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sal_distribution::{csal_log_density, sal_log_density, sal_sample, CsalParams, SalParams};
use sim_harness::{run_replications, Dependence, ModelKind, Scenario, ScenarioSpec};
use special_functions::gig_moments;
use test_oracles::{
    gig_moments_quadrature, integrate, integrate_pieces, part_eta_argmax, part_q_argmax, proportion_argmax,
    PartWeights,
};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn sal1(mu: f64, s2: f64, alpha: f64) -> SalParams {
    SalParams::new(dvector![mu], dmatrix![s2], dvector![alpha]).unwrap()
}

/// Distance at which the log density has fallen 60 below its value at
/// `start`.
fn reach(f: &dyn Fn(f64) -> f64, start: f64) -> f64 {
    let top = f(start);
    let mut r = 1.0;
    while f(r) > top - 60.0 {
        r *= 1.5;
    }
    r
}

fn density_normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst1 = 0.0f64;
    for _ in 0..20 {
        let base = sal1(rng.random_range(-2.0..2.0), rng.random_range(0.2..3.0), rng.random_range(-2.0..2.0));
        let c = CsalParams::new(base, rng.random_range(0.01..0.4), rng.random_range(1.0..30.0)).unwrap();
        let mu = c.base.mu[0];
        let sal = |w: f64| sal_log_density(&[w], &c.base).unwrap().value;
        let csal = |w: f64| csal_log_density(&[w], &c).unwrap().value;
        for ld in [&sal as &dyn Fn(f64) -> f64, &csal] {
            let hi = reach(&|r| ld(mu + r), 0.0);
            let lo = reach(&|r| ld(mu - r), 0.0);
            let total = integrate_pieces(&|w| ld(w).exp(), &[mu - lo, mu, mu + hi], 1e-12);
            worst1 = worst1.max((total - 1.0).abs());
        }
    }
    let mut worst2 = 0.0f64;
    let angles = 256;
    for _ in 0..5 {
        let s11 = rng.random_range(0.5..2.0);
        let s22 = rng.random_range(0.5..2.0);
        let s12: f64 = rng.random_range(-0.5..0.5) * (s11 * s22 as f64).sqrt();
        let base = SalParams::new(
            dvector![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
            dmatrix![s11, s12; s12, s22],
            dvector![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
        )
        .unwrap();
        let c = CsalParams::new(base.clone(), rng.random_range(0.05..0.3), rng.random_range(1.5..8.0)).unwrap();
        let (m0, m1) = (base.mu[0], base.mu[1]);
        let sal = |w: &[f64]| sal_log_density(w, &base).unwrap().value;
        let csal = |w: &[f64]| csal_log_density(w, &c).unwrap().value;
        for ld in [&sal as &dyn Fn(&[f64]) -> f64, &csal] {
            let mut total = 0.0;
            for k in 0..angles {
                let th = 2.0 * std::f64::consts::PI * k as f64 / angles as f64;
                let (u0, u1) = (th.cos(), th.sin());
                let along = |r: f64| ld(&[m0 + r * u0, m1 + r * u1]);
                let rmax = reach(&along, 1e-3);
                let radial = |r: f64| if r == 0.0 { 0.0 } else { r * along(r).exp() };
                total += integrate(&radial, 0.0, rmax, 1e-10);
            }
            total *= 2.0 * std::f64::consts::PI / angles as f64;
            worst2 = worst2.max((total - 1.0).abs());
        }
    }
    ensure(worst1 < 1e-6 && worst2 < 1e-4, format!("max |1-D mass - 1| {worst1:.2e}, max |2-D mass - 1| {worst2:.2e}"))
}

fn moments() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let n = 100_000;
    let (mut worst_z, mut worst_f) = (0.0f64, 0.0f64);
    for k in 0..10 {
        let p = 1 + k % 3;
        let a = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
        let sigma = &a * a.transpose() + DMatrix::identity(p, p) * 0.3;
        let mu = DVector::from_fn(p, |_, _| rng.random_range(-3.0..3.0));
        let alpha = DVector::from_fn(p, |_, _| rng.random_range(-1.5..1.5));
        let params = SalParams::new(mu.clone(), sigma.clone(), alpha.clone()).unwrap();
        let x = sal_sample(&params, n, &mut rng);
        let mean = &mu + &alpha;
        let cov = &sigma + &alpha * alpha.transpose();
        let m = DVector::from_fn(p, |j, _| x.column(j).mean());
        let mut s = DMatrix::zeros(p, p);
        for row in x.row_iter() {
            let d = row.transpose() - &m;
            s += &d * d.transpose();
        }
        s /= n as f64 - 1.0;
        for j in 0..p {
            worst_z = worst_z.max((m[j] - mean[j]).abs() / (cov[(j, j)] / n as f64).sqrt());
        }
        worst_f = worst_f.max((&s - &cov).norm() / cov.norm());
    }
    ensure(worst_z < 4.0 && worst_f < 0.05, format!("max mean z-score {worst_z:.2}, max relative Frobenius error {worst_f:.4}"))
}

fn gig_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for &a in &[0.1, 1.0, 10.0] {
        for &b in &[0.1, 1.0, 10.0] {
            for &nu in &[-2.0, -0.5, 0.0, 0.5, 2.0] {
                let g = gig_moments(a, b, nu).map_err(|e| e.to_string())?;
                let (e1, e2) = gig_moments_quadrature(a, b, nu);
                worst = worst.max(((g.e1 - e1) / e1).abs()).max(((g.e2 - e2) / e2).abs());
            }
        }
    }
    ensure(worst < 1e-8, format!("max relative error {worst:.2e} over 45 grid points"))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn q_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let mut r = ChaCha8Rng::seed_from_u64(200 + seed);
        let n = r.random_range(6..=10);
        let xs: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut r)).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let e: f64 = StandardNormal.sample(&mut r);
                1.0 + 0.5 * x + 0.7 * e + 0.3 * r.random::<f64>()
            })
            .collect();
        let data = Dataset::new(DMatrix::from_column_slice(n, 1, &xs), DMatrix::from_column_slice(n, 1, &ys)).unwrap();
        let (mut model, _) = init_from_labels(&data, &vec![0; n], 1, Family::Cwm, 1e-8).map_err(|e| e.to_string())?;
        model.variant = Variant::Csal;
        {
            let c = &mut model.components[0];
            let xl = c.x_law.as_mut().unwrap();
            xl.base.alpha[0] = 0.3;
            xl.delta = 0.2;
            xl.eta = 3.0;
            c.y_law.alpha_y[0] = -0.25;
            c.y_law.delta_y = 0.15;
            c.y_law.eta_y = 4.0;
        }
        let est = e_step(&data, &model).map_err(|e| e.to_string())?;
        let resp = &est.resp;
        let weights = |post: &DMatrix<f64>, g: &cwm_engine::GigTable, gt: &cwm_engine::GigTable| PartWeights {
            good: (0..n).map(|i| resp.z[(i, 0)] * (1.0 - post[(i, 0)])).collect(),
            bad: (0..n).map(|i| resp.z[(i, 0)] * post[(i, 0)]).collect(),
            e1: (0..n).map(|i| g.get(i, 0).e1).collect(),
            e2: (0..n).map(|i| g.get(i, 0).e2).collect(),
            e1_tilde: (0..n).map(|i| gt.get(i, 0).e1).collect(),
            e2_tilde: (0..n).map(|i| gt.get(i, 0).e2).collect(),
        };
        let wx = weights(&resp.v, &resp.gig_x, &resp.gig_x_tilde);
        let wy = weights(&resp.u, &resp.gig_y, &resp.gig_y_tilde);
        let (next, _) = cm_step_1(&data, resp, &model, &Frozen::none(1), 1e-5, 1e-8).map_err(|e| e.to_string())?;
        let (old, new) = (&model.components[0], &next.components[0]);
        let (oxl, nxl) = (old.x_law.as_ref().unwrap(), new.x_law.as_ref().unwrap());
        let ones = vec![vec![1.0]; n];
        let (mu, ax, sx) =
            part_q_argmax(&ones, &xs, oxl.eta, &wx, (&[oxl.base.mu[0]], oxl.base.alpha[0], oxl.base.sigma[(0, 0)]));
        let design: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x]).collect();
        let oy = &old.y_law;
        let (beta, ay, sy) = part_q_argmax(
            &design,
            &ys,
            oy.eta_y,
            &wy,
            (&[oy.beta[(0, 0)], oy.beta[(1, 0)]], oy.alpha_y[0], oy.sigma_y[(0, 0)]),
        );
        let ny = &new.y_law;
        let (after, _) = cm_step_2(&data, resp, &next).map_err(|e| e.to_string())?;
        let rx: Vec<f64> = xs.iter().map(|x| x - nxl.base.mu[0]).collect();
        let ry: Vec<f64> = (0..n).map(|i| ys[i] - ny.mean(&[xs[i]])[0]).collect();
        let a = &after.components[0];
        for e in [
            rel(nxl.base.mu[0], mu[0]),
            rel(nxl.base.alpha[0], ax),
            rel(nxl.base.sigma[(0, 0)], sx),
            rel(nxl.delta, proportion_argmax(&wx)),
            rel(ny.beta[(0, 0)], beta[0]),
            rel(ny.beta[(1, 0)], beta[1]),
            rel(ny.alpha_y[0], ay),
            rel(ny.sigma_y[(0, 0)], sy),
            rel(ny.delta_y, proportion_argmax(&wy)),
            rel(a.x_law.as_ref().unwrap().eta, part_eta_argmax(&rx, nxl.base.alpha[0], nxl.base.sigma[(0, 0)], &wx)),
            rel(a.y_law.eta_y, part_eta_argmax(&ry, ny.alpha_y[0], ny.sigma_y[(0, 0)], &wy)),
        ] {
            worst = worst.max(e);
        }
    }
    ensure(worst < 1e-6, format!("max relative discrepancy {worst:.2e} over 10 instances, 11 updates each"))
}

fn conditional_equals_regression_mixture() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x_law = CsalParams::new(
            sal1(rng.random_range(-2.0..2.0), rng.random_range(0.2..3.0), rng.random_range(-1.0..1.0)),
            rng.random_range(0.0..0.4),
            rng.random_range(1.0..10.0),
        )
        .unwrap();
        let mut reg = || RegressionParams {
            beta: DMatrix::from_column_slice(2, 1, &[rng.random_range(-3.0..3.0), rng.random_range(-2.0..2.0)]),
            sigma_y: DMatrix::from_element(1, 1, rng.random_range(0.1..2.0)),
            alpha_y: DVector::from_element(1, rng.random_range(-1.0..1.0)),
            delta_y: rng.random_range(0.0..0.4),
            eta_y: rng.random_range(1.0..10.0),
        };
        let (r1, r2) = (reg(), reg());
        let w = rng.random_range(0.05..0.95);
        let cwm = CwmModel {
            components: vec![
                CwmComponent { weight: w, x_law: Some(x_law.clone()), y_law: r1.clone() },
                CwmComponent { weight: 1.0 - w, x_law: Some(x_law), y_law: r2.clone() },
            ],
            variant: Variant::Csal,
            family: Family::Cwm,
            d_x: 1,
            d_y: 1,
        };
        let (x, y) = (rng.random_range(-5.0..5.0), rng.random_range(-8.0..8.0));
        let lhs = mrm_engine::conditional_from_cwm(&cwm, &[x])
            .map_err(|e| e.to_string())?
            .log_density(&[y])
            .map_err(|e| e.to_string())?;
        // static-weight regression mixture, summed directly
        let f = |r: &RegressionParams| csal_log_density(&[y], &r.law_at(&[x])).unwrap().value.exp();
        let rhs = (w * f(&r1) + (1.0 - w) * f(&r2)).ln();
        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
    }
    ensure(worst <= 1e-10, format!("max relative gap {worst:.2e} over 100 points"))
}

fn find<'a>(
    r: &'a sim_harness::ReplicationReport,
    m: ModelKind,
) -> Result<&'a sim_harness::ModelReport, String> {
    r.model(m).ok_or_else(|| format!("{} missing", m.name()))
}

fn bias(r: &sim_harness::ModelReport, name: &str) -> Result<f64, String> {
    r.parameter(name).map(|p| p.bias).ok_or_else(|| format!("{name} missing"))
}

fn scenario_a_independence() -> Outcome {
    let spec = ScenarioSpec::new(Scenario::A, Dependence::Independent, 500, 7);
    let r = run_replications(&spec, 100, &[ModelKind::SalCwm, ModelKind::CsalCwm]).map_err(|e| e.to_string())?;
    let (sal, csal) = (find(&r, ModelKind::SalCwm)?, find(&r, ModelKind::CsalCwm)?);
    let (bs, bc) = (bias(sal, "beta0_1")?, bias(csal, "beta0_1")?);
    let (tpr, fpr) = (csal.tpr.unwrap_or(f64::NAN), csal.fpr.unwrap_or(f64::NAN));
    ensure(
        bc.abs() <= 0.20 && bc.abs() < bs.abs() && tpr >= 0.90 && fpr <= 0.05,
        format!(
            "bias beta0_1 cSALCWM {bc:.4} vs SALCWM {bs:.4}; TPR {tpr:.3}; FPR {fpr:.4}; completed {}/{} and {}/{}",
            csal.completed, r.n_reps, sal.completed, r.n_reps
        ),
    )
}

fn scenario_a_dependence() -> Outcome {
    let spec = ScenarioSpec::new(Scenario::A, Dependence::Dependent, 250, 8);
    let r = run_replications(&spec, 100, &[ModelKind::SalMrm, ModelKind::CsalCwm]).map_err(|e| e.to_string())?;
    let (mrm, csal) = (find(&r, ModelKind::SalMrm)?, find(&r, ModelKind::CsalCwm)?);
    let (bm, bc) = (bias(mrm, "beta0_2")?, bias(csal, "beta0_2")?);
    ensure(
        bm <= -0.8 && bc.abs() <= 0.15,
        format!(
            "bias beta0_2 SALMRM {bm:.4} ({} completed), cSALCWM {bc:.4} ({} completed)",
            mrm.completed, csal.completed
        ),
    )
}

fn scenario_d_detection() -> Outcome {
    let spec = ScenarioSpec::new(Scenario::D, Dependence::Independent, 250, 9);
    let r = run_replications(&spec, 100, &[ModelKind::CsalMrm, ModelKind::CsalCwm]).map_err(|e| e.to_string())?;
    let cwm = find(&r, ModelKind::CsalCwm)?.tpr.unwrap_or(f64::NAN);
    let mrm = find(&r, ModelKind::CsalMrm)?.tpr.unwrap_or(f64::NAN);
    ensure(cwm >= 2.0 * mrm, format!("TPR cSALCWM {cwm:.3} vs cSALMRM {mrm:.3}"))
}

fn ais_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/ais.csv")
}

fn ais_clean() -> Outcome {
    let (data, sex) = load_ais(&ais_path()).map_err(|e| e.to_string())?;
    let s = ais_study(&data, &sex, 1, 5).map_err(|e| e.to_string())?;
    let sal: Vec<_> = (1..=3).map(|g| s.get(ModelKind::SalCwm, g).map(|f| f.bic)).collect();
    let best_g = sal
        .iter()
        .enumerate()
        .filter_map(|(k, b)| b.map(|b| (k + 1, b)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(g, _)| g);
    let ari = |m| s.get(m, 2).map(|f| f.ari).unwrap_or(f64::NAN);
    let (a_sal, a_csal) = (ari(ModelKind::SalCwm), ari(ModelKind::CsalCwm));
    ensure(
        best_g == Some(2) && a_sal >= 0.90 && a_csal >= 0.90,
        format!("SALCWM BIC by G {sal:.3?}, minimum at G = {best_g:?}; G = 2 ARI SALCWM {a_sal:.3}, cSALCWM {a_csal:.3}"),
    )
}

fn ais_noise() -> Outcome {
    let (data, sex) = load_ais(&ais_path()).map_err(|e| e.to_string())?;
    let noisy = with_ais_noise(&data, AIS_NOISE_POINTS, 1).map_err(|e| e.to_string())?;
    let s = ais_study(&noisy, &sex, 1, 5).map_err(|e| e.to_string())?;
    let c2 = s.get(ModelKind::CsalCwm, 2).ok_or("cSALCWM G = 2 failed")?;
    let s2 = s.get(ModelKind::SalCwm, 2).ok_or("SALCWM G = 2 failed")?;
    let best = s.min_bic().ok_or("no fit")?;
    ensure(
        c2.noise_flagged >= 7 && best.model == ModelKind::CsalCwm && best.g == 2 && c2.ari > s2.ari,
        format!(
            "noise flagged {}/{}; lowest BIC {} G = {} ({:.3}) vs cSALCWM G = 2 {:.3}; ARI cSALCWM {:.3} vs SALCWM {:.3}",
            c2.noise_flagged,
            AIS_NOISE_POINTS,
            best.model.name(),
            best.g,
            best.bic,
            c2.bic,
            c2.ari,
            s2.ari
        ),
    )
}

fn run_bin(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_salcwm")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.path().is_file())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect();
    v.sort();
    v
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ais = ais_path();
    let ais = ais.to_str().unwrap();
    let mut compared = 0;
    for run in ["a", "b"] {
        let d = |name: &str| tmp.path().join(run).join(name).to_string_lossy().into_owned();
        run_bin(&[
            "fit", "--input", ais, "--responses", "RCC,WCC", "--covariates", "BMI,LBM", "--g", "1,2", "--variant",
            "csal", "--seed", "5", "--out", &d("fit"),
        ])?;
        run_bin(&["classify", "--model", &format!("{}/model.json", d("fit")), "--input", ais, "--out", &d("classify/c.csv")])?;
        run_bin(&["simulate", "--scenario", "b", "--n", "200", "--reps", "3", "--seed", "5", "--out", &d("simulate")])?;
        run_bin(&["ais-demo", "--input", ais, "--with-noise", "--seed", "5", "--out", &d("ais")])?;
    }
    for sub in ["fit", "classify", "simulate", "ais"] {
        let (a, b) = (dir_bytes(&tmp.path().join("a").join(sub)), dir_bytes(&tmp.path().join("b").join(sub)));
        if a.is_empty() || a != b {
            return Err(format!("{sub} outputs differ between runs"));
        }
        compared += a.len();
    }
    Ok(format!("{compared} output files byte-identical across two runs of fit, classify, simulate and ais-demo"))
}

fn monotonicity_and_nesting() -> Outcome {
    let a = audit::snapshot();
    ensure(
        a.fits_checked > 0 && a.monotone_violations == 0 && a.nesting_violations == 0,
        format!(
            "{} fits, {} steps, {} decreases beyond {:e} (largest {:.2e}); {} nested fits, {} below their seed",
            a.fits_checked,
            a.steps_checked,
            a.monotone_violations,
            audit::SLACK,
            a.worst_decrease,
            a.nested_fits,
            a.nesting_violations
        ),
    )
}

#[test]
fn acceptance_criteria() {
    // criterion 5 runs last so that it sees the fits of all the others
    let criteria: [(u32, &str, fn() -> Outcome); 12] = [
        (1, "density normalization", density_normalization),
        (2, "moment identities", moments),
        (3, "GIG moments vs quadrature", gig_oracle),
        (4, "CM updates vs numerical maximization", q_oracle),
        (6, "conditional of shared-covariate CWM equals regression mixture", conditional_equals_regression_mixture),
        (7, "scenario (a), independence, n = 500", scenario_a_independence),
        (8, "scenario (a), dependence, n = 250", scenario_a_dependence),
        (9, "scenario (d) detection, n = 250", scenario_d_detection),
        (10, "AIS clean study", ais_clean),
        (11, "AIS noise study", ais_noise),
        (12, "CLI determinism", determinism),
        (5, "monotonicity and nesting across all fits", monotonicity_and_nesting),
    ];
    let mut results = Vec::new();
    for (id, name, f) in criteria {
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t.elapsed().as_secs_f64();
        results.push((id, name, r, secs));
    }
    results.sort_by_key(|r| r.0);
    let mut failed = Vec::new();
    for (id, name, r, secs) in &results {
        let (tag, msg) = match r {
            Ok(m) => ("PASS", m),
            Err(m) => ("FAIL", m),
        };
        println!("criterion {id:>2} {tag} {name} [{secs:.1} s]: {msg}");
        if r.is_err() {
            failed.push(*id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
