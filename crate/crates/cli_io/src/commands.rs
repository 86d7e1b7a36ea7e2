use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cwm_engine::{
    classify_responsibilities, e_step, fit, fit_contaminated_from, streams, Category, Dataset, Family, FitConfig,
    FitResult, Variant,
};
use metrics::adjusted_rand_index;
use nalgebra::DMatrix;
use rand::Rng;
use sim_harness::{Dependence, ModelKind, Scenario, ScenarioSpec};

use crate::data::{load_csv, standardize, Scaling, Table};
use crate::persist::{family_name, num, variant_name, ColumnsJson, ModelFile};
use crate::CliError;

pub const AIS_RESPONSES: [&str; 2] = ["RCC", "WCC"];
pub const AIS_COVARIATES: [&str; 4] = ["BMI", "SSF", "Bfat", "LBM"];
/// Noise box, in the order RCC, WCC, BMI, SSF, Bfat, LBM.
pub const AIS_NOISE_BOX: [(f64, f64); 6] =
    [(3.0, 10.0), (2.0, 20.0), (15.0, 40.0), (25.0, 230.0), (5.0, 45.0), (30.0, 120.0)];
pub const AIS_NOISE_POINTS: usize = 10;

#[derive(Debug, Clone)]
pub struct FitArgs {
    pub input: PathBuf,
    pub responses: Vec<String>,
    pub covariates: Vec<String>,
    pub g_range: Vec<usize>,
    pub variant: Variant,
    pub family: Family,
    pub seed: u64,
    pub n_starts: usize,
    pub epsilon: f64,
    pub standardize: bool,
    pub out: PathBuf,
}

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub scenario: Scenario,
    pub dependence: Dependence,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone)]
pub struct ClassifyArgs {
    pub model: PathBuf,
    pub input: PathBuf,
    pub responses: Option<Vec<String>>,
    pub covariates: Option<Vec<String>>,
    pub out: PathBuf,
}

#[derive(Debug, Clone)]
pub struct AisArgs {
    pub input: PathBuf,
    pub with_noise: bool,
    pub noise_points: usize,
    pub seed: u64,
    pub n_starts: usize,
    pub out: PathBuf,
}

fn config(g: usize, variant: Variant, family: Family, seed: u64, n_starts: usize, epsilon: f64) -> FitConfig {
    let mut c = FitConfig::new(g, variant, family, seed);
    c.n_starts = n_starts;
    c.epsilon = epsilon;
    c
}

fn fit_one(data: &Dataset, c: &FitConfig) -> Result<FitResult, cwm_engine::FitError> {
    match c.family {
        Family::Cwm => fit(data, c),
        Family::Mrm => mrm_engine::fit_mrm(data, c),
    }
}

fn out_dir(p: &Path) -> Result<(), CliError> {
    fs::create_dir_all(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let err = |e: csv::Error| CliError::Data(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

fn f6(v: f64) -> String {
    format!("{v:.6}")
}

fn opt(v: Option<f64>) -> String {
    v.map(f6).unwrap_or_else(|| "NA".into())
}

/// Per-point table: MAP component with its `z`, `u` and `v`.
fn classification_rows(resp: &cwm_engine::Responsibilities, variant: Variant) -> Vec<Vec<String>> {
    classify_responsibilities(resp, variant)
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = c.component;
            vec![
                i.to_string(),
                (k + 1).to_string(),
                c.category.as_str().to_string(),
                format!("{:.10}", resp.z[(i, k)]),
                format!("{:.10}", resp.u[(i, k)]),
                format!("{:.10}", resp.v[(i, k)]),
            ]
        })
        .collect()
}

const CLASS_HEADER: [&str; 6] = ["row", "component", "category", "z", "u", "v"];

fn category_counts(fit: &FitResult) -> String {
    let mut s = String::new();
    for cat in [Category::Typical, Category::Outlier, Category::GoodLeverage, Category::BadLeverage] {
        let n = fit.classifications.iter().filter(|c| c.category == cat).count();
        let _ = write!(s, " {}={n}", cat.as_str());
    }
    s
}

/// Fits every G of the range and writes the per-G BIC table plus the
/// model, classification and summary of the lowest-BIC fit.
pub fn fit_command(a: &FitArgs) -> Result<(), CliError> {
    if a.g_range.is_empty() || a.g_range.contains(&0) {
        return Err(CliError::Usage("--g needs positive component counts".into()));
    }
    let raw = load_csv(&a.input, &a.responses, &a.covariates)?;
    let (data, scaling) = if a.standardize {
        let (d, s) = standardize(&raw);
        (d, Some(s))
    } else {
        (raw, None)
    };
    out_dir(&a.out)?;
    let mut rows = Vec::new();
    let mut best: Option<FitResult> = None;
    let mut last_err = None;
    for &g in &a.g_range {
        let c = config(g, a.variant, a.family, a.seed, a.n_starts, a.epsilon);
        match fit_one(&data, &c) {
            Ok(f) => {
                rows.push(vec![
                    g.to_string(),
                    variant_name(a.variant).into(),
                    family_name(a.family).into(),
                    "ok".into(),
                    f6(f.loglik()),
                    f6(f.bic),
                    f.model.free_parameters().to_string(),
                    f.n_iter.to_string(),
                    f.converged.to_string(),
                ]);
                if best.as_ref().is_none_or(|b| f.bic < b.bic) {
                    best = Some(f);
                }
            }
            Err(e) => {
                let mut r = vec![g.to_string(), variant_name(a.variant).into(), family_name(a.family).into()];
                r.push(format!("failed: {e}"));
                r.extend(std::iter::repeat_n("NA".to_string(), 5));
                rows.push(r);
                last_err = Some(e);
            }
        }
    }
    write_csv(
        &a.out.join("bic.csv"),
        &["g", "variant", "family", "status", "loglik", "bic", "parameters", "iterations", "converged"],
        &rows,
    )?;
    let best = match best {
        Some(b) => b,
        None => return Err(last_err.map(CliError::from).unwrap_or_else(|| CliError::Fit("no fit".into()))),
    };
    let columns = ColumnsJson {
        responses: a.responses.clone(),
        covariates: a.covariates.clone(),
        standardization: scaling
            .as_ref()
            .map(|s| s.y.iter().chain(&s.x).map(|&(m, sd)| (num(m), num(sd))).collect()),
    };
    ModelFile::from_fit(&best, Some(columns)).save(&a.out.join("model.json"))?;
    write_csv(&a.out.join("classification.csv"), &CLASS_HEADER, &classification_rows(&best.resp, a.variant))?;

    let mut s = String::new();
    let _ = writeln!(s, "input: {}", a.input.display());
    let _ = writeln!(s, "rows: {}  responses: {}  covariates: {}", data.n(), a.responses.join(","), a.covariates.join(","));
    let _ = writeln!(s, "model: {} {}  standardized: {}", variant_name(a.variant), family_name(a.family), a.standardize);
    let _ = writeln!(s, "{:>3} {:>16} {:>16}", "G", "loglik", "BIC");
    for r in &rows {
        let _ = writeln!(s, "{:>3} {:>16} {:>16}", r[0], r[4], r[5]);
    }
    let _ = writeln!(s, "selected G = {} (BIC {:.6}), converged: {}", best.model.g(), best.bic, best.converged);
    let _ = writeln!(s, "categories:{}", category_counts(&best));
    fs::write(a.out.join("summary.txt"), s)?;
    Ok(())
}

/// Applies a saved model to a CSV and writes the per-point classification.
pub fn classify_command(a: &ClassifyArgs) -> Result<(), CliError> {
    let file = ModelFile::load(&a.model)?;
    let model = file.to_model()?;
    let saved = file.columns.as_ref();
    let responses = a
        .responses
        .clone()
        .or_else(|| saved.map(|c| c.responses.clone()))
        .ok_or_else(|| CliError::Usage("model has no column names; pass --responses".into()))?;
    let covariates = a
        .covariates
        .clone()
        .or_else(|| saved.map(|c| c.covariates.clone()))
        .ok_or_else(|| CliError::Usage("model has no column names; pass --covariates".into()))?;
    let mut data = load_csv(&a.input, &responses, &covariates)?;
    if data.d_x() != model.d_x || data.d_y() != model.d_y {
        return Err(CliError::Data("column counts do not match the model".into()));
    }
    if let Some(st) = saved.and_then(|c| c.standardization.as_ref()) {
        let parsed: Vec<(f64, f64)> = st
            .iter()
            .map(|(m, s)| Ok((m.parse::<f64>()?, s.parse::<f64>()?)))
            .collect::<Result<_, std::num::ParseFloatError>>()
            .map_err(|e| CliError::Data(format!("bad standardization entry: {e}")))?;
        if parsed.len() != model.d_x + model.d_y {
            return Err(CliError::Data("standardization has the wrong length".into()));
        }
        let scaling = Scaling { y: parsed[..model.d_y].to_vec(), x: parsed[model.d_y..].to_vec() };
        data = scaling.apply(&data)?;
    }
    let est = e_step(&data, &model)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        out_dir(dir)?;
    }
    write_csv(&a.out, &CLASS_HEADER, &classification_rows(&est.resp, model.variant))
}

/// Runs the four models on `reps` replications of a scenario and writes
/// the bias/MSE and detection tables.
pub fn simulate_command(a: &SimulateArgs) -> Result<(), CliError> {
    let spec = ScenarioSpec::new(a.scenario, a.dependence, a.n, a.seed);
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if a.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let report = sim_harness::run_replications(&spec, a.reps, &ModelKind::ALL).map_err(|e| CliError::Fit(e.to_string()))?;
    out_dir(&a.out)?;
    let mut bias_rows = Vec::new();
    let mut det_rows = Vec::new();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "scenario {} ({}), n = {}, replications = {}, seed = {}",
        a.scenario.as_str(),
        a.dependence.as_str(),
        a.n,
        a.reps,
        a.seed
    );
    let _ = writeln!(s, "{:<10} {:<10} {:>10} {:>10} {:>10}", "model", "parameter", "truth", "bias", "mse");
    for m in &report.models {
        for p in &m.per_parameter {
            bias_rows.push(vec![m.model.name().into(), p.name.clone(), f6(p.truth), f6(p.bias), f6(p.mse)]);
            let _ = writeln!(s, "{:<10} {:<10} {:>10.3} {:>10.3} {:>10.3}", m.model.name(), p.name, p.truth, p.bias, p.mse);
        }
        det_rows.push(vec![
            m.model.name().into(),
            m.completed.to_string(),
            m.failed.to_string(),
            opt(m.tpr),
            opt(m.fpr),
        ]);
    }
    let _ = writeln!(s, "{:<10} {:>9} {:>7} {:>8} {:>8}", "model", "completed", "failed", "TPR", "FPR");
    for r in &det_rows {
        let _ = writeln!(s, "{:<10} {:>9} {:>7} {:>8} {:>8}", r[0], r[1], r[2], r[3], r[4]);
    }
    write_csv(&a.out.join("bias_mse.csv"), &["model", "parameter", "truth", "bias", "mse"], &bias_rows)?;
    write_csv(&a.out.join("detection.csv"), &["model", "completed", "failed", "tpr", "fpr"], &det_rows)?;
    fs::write(a.out.join("summary.txt"), s)?;
    Ok(())
}

/// One SAL or cSAL CWM fit of the AIS study.
#[derive(Debug, Clone, PartialEq)]
pub struct AisFit {
    pub model: ModelKind,
    pub g: usize,
    pub loglik: f64,
    pub bic: f64,
    /// ARI against sex over the original rows only.
    pub ari: f64,
    pub atypical: usize,
    /// Injected rows classified non-typical.
    pub noise_flagged: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AisStudy {
    pub fits: Vec<AisFit>,
    /// `(model, G, message)` of fits that failed.
    pub failures: Vec<(ModelKind, usize, String)>,
}

impl AisStudy {
    pub fn get(&self, model: ModelKind, g: usize) -> Option<&AisFit> {
        self.fits.iter().find(|f| f.model == model && f.g == g)
    }

    pub fn min_bic(&self) -> Option<&AisFit> {
        self.fits.iter().min_by(|a, b| a.bic.total_cmp(&b.bic))
    }
}

/// The AIS responses and covariates plus sex codes (0, 1 in order of first
/// appearance).
pub fn load_ais(path: &Path) -> Result<(Dataset, Vec<usize>), CliError> {
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let data = load_csv(path, &names(&AIS_RESPONSES), &names(&AIS_COVARIATES))?;
    let sex = Table::read(path)?.strings("sex")?;
    let mut levels: Vec<&String> = Vec::new();
    let codes = sex
        .iter()
        .map(|v| match levels.iter().position(|l| *l == v) {
            Some(k) => k,
            None => {
                levels.push(v);
                levels.len() - 1
            }
        })
        .collect();
    Ok((data, codes))
}

/// `data` with `count` points drawn uniformly from the noise box appended.
pub fn with_ais_noise(data: &Dataset, count: usize, seed: u64) -> Result<Dataset, CliError> {
    if data.d_y() != 2 || data.d_x() != 4 {
        return Err(CliError::Data("noise box needs the two AIS responses and four covariates".into()));
    }
    let mut rng = streams::stream(seed, &[0x4e4f_4953]);
    let n = data.n();
    let mut x = DMatrix::zeros(n + count, 4);
    let mut y = DMatrix::zeros(n + count, 2);
    x.rows_mut(0, n).copy_from(data.x());
    y.rows_mut(0, n).copy_from(data.y());
    for i in n..n + count {
        let p: Vec<f64> = AIS_NOISE_BOX.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
        y[(i, 0)] = p[0];
        y[(i, 1)] = p[1];
        for j in 0..4 {
            x[(i, j)] = p[2 + j];
        }
    }
    Dataset::new(x, y).map_err(|e| CliError::Data(e.to_string()))
}

/// SALCWM and cSALCWM (seeded by the SALCWM fit) for G = 1, 2, 3. Rows from
/// `sex.len()` onwards are injected noise.
pub fn ais_study(data: &Dataset, sex: &[usize], seed: u64, n_starts: usize) -> Result<AisStudy, CliError> {
    let n0 = sex.len();
    if n0 > data.n() {
        return Err(CliError::Data("more labels than rows".into()));
    }
    let mut study = AisStudy { fits: Vec::new(), failures: Vec::new() };
    for g in 1..=3 {
        let c = config(g, Variant::Sal, Family::Cwm, seed, n_starts, 1e-5);
        let sal = match fit(data, &c) {
            Ok(f) => f,
            Err(e) => {
                for m in [ModelKind::SalCwm, ModelKind::CsalCwm] {
                    study.failures.push((m, g, e.to_string()));
                }
                continue;
            }
        };
        let csal = fit_contaminated_from(data, &sal, &FitConfig { variant: Variant::Csal, ..c });
        for (m, f) in [(ModelKind::SalCwm, Ok(sal.clone())), (ModelKind::CsalCwm, csal)] {
            match f {
                Ok(f) => {
                    let labels: Vec<usize> = f.classifications[..n0].iter().map(|c| c.component).collect();
                    let ari = adjusted_rand_index(&labels, sex).map_err(|e| CliError::Data(e.to_string()))?;
                    study.fits.push(AisFit {
                        model: m,
                        g,
                        loglik: f.loglik(),
                        bic: f.bic,
                        ari,
                        atypical: f.classifications.iter().filter(|c| c.category.is_atypical()).count(),
                        noise_flagged: f.classifications[n0..].iter().filter(|c| c.category.is_atypical()).count(),
                    });
                }
                Err(e) => study.failures.push((m, g, e.to_string())),
            }
        }
    }
    Ok(study)
}

fn study_rows(study: &AisStudy) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = study
        .fits
        .iter()
        .map(|f| {
            vec![
                f.model.name().into(),
                f.g.to_string(),
                "ok".into(),
                f6(f.loglik),
                f6(f.bic),
                f6(f.ari),
                f.atypical.to_string(),
                f.noise_flagged.to_string(),
            ]
        })
        .collect();
    for (m, g, e) in &study.failures {
        let mut r = vec![m.name().to_string(), g.to_string(), format!("failed: {e}")];
        r.extend(std::iter::repeat_n("NA".to_string(), 5));
        rows.push(r);
    }
    rows
}

fn study_text(s: &mut String, title: &str, study: &AisStudy) {
    let _ = writeln!(s, "{title}");
    let _ = writeln!(s, "{:<9} {:>2} {:>14} {:>12} {:>7} {:>9} {:>6}", "model", "G", "loglik", "BIC", "ARI", "atypical", "noise");
    for f in &study.fits {
        let _ = writeln!(
            s,
            "{:<9} {:>2} {:>14.3} {:>12.3} {:>7.3} {:>9} {:>6}",
            f.model.name(),
            f.g,
            f.loglik,
            f.bic,
            f.ari,
            f.atypical,
            f.noise_flagged
        );
    }
    for (m, g, e) in &study.failures {
        let _ = writeln!(s, "{:<9} {:>2} failed: {e}", m.name(), g);
    }
    if let Some(b) = study.min_bic() {
        let _ = writeln!(s, "lowest BIC: {} G = {} ({:.3})", b.model.name(), b.g, b.bic);
    }
}

const STUDY_HEADER: [&str; 8] = ["model", "g", "status", "loglik", "bic", "ari", "atypical", "noise_flagged"];

/// Clean-data study and, with `with_noise`, the noise-injection study.
pub fn ais_demo_command(a: &AisArgs) -> Result<(), CliError> {
    let (data, sex) = load_ais(&a.input)?;
    out_dir(&a.out)?;
    let clean = ais_study(&data, &sex, a.seed, a.n_starts)?;
    write_csv(&a.out.join("ais_clean.csv"), &STUDY_HEADER, &study_rows(&clean))?;
    let mut s = String::new();
    let _ = writeln!(s, "AIS: {} rows, responses {}, covariates {}", data.n(), AIS_RESPONSES.join(","), AIS_COVARIATES.join(","));
    study_text(&mut s, "clean data", &clean);
    if a.with_noise {
        let noisy = with_ais_noise(&data, a.noise_points, a.seed)?;
        let header: Vec<&str> = AIS_RESPONSES.iter().chain(&AIS_COVARIATES).copied().collect();
        let pts: Vec<Vec<String>> = (data.n()..noisy.n())
            .map(|i| noisy.y_row(i).iter().chain(noisy.x_row(i)).map(|&v| f6(v)).collect())
            .collect();
        write_csv(&a.out.join("noise_points.csv"), &header, &pts)?;
        let study = ais_study(&noisy, &sex, a.seed, a.n_starts)?;
        write_csv(&a.out.join("ais_noise.csv"), &STUDY_HEADER, &study_rows(&study))?;
        let _ = writeln!(s);
        let title = format!(
            "with {} uniform noise points (ARI on original rows; rerun with --noise-points 20 for the larger noise count)",
            a.noise_points
        );
        study_text(&mut s, &title, &study);
    }
    fs::write(a.out.join("summary.txt"), s)?;
    Ok(())
}
