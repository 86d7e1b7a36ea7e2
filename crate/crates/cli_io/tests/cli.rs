use std::fs;
use std::path::Path;
use std::process::Command;

use cli_io::commands::{load_ais, with_ais_noise, AIS_NOISE_BOX};
use cli_io::{load_csv, standardize, CliError, ModelFile};
use cwm_engine::{fit, Family, FitConfig, Variant};

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn ais() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/ais.csv")
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_salcwm"))
}

#[test]
fn three_row_file_loads_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.csv");
    fs::write(&p, "x,y\n1,2\n3,4.5\n-1,0\n").unwrap();
    let d = load_csv(&p, &names(&["y"]), &names(&["x"])).unwrap();
    assert_eq!((d.n(), d.d_x(), d.d_y()), (3, 1, 1));
    assert_eq!(d.x_row(2), &[-1.0]);
    assert_eq!(d.y_row(1), &[4.5]);
}

#[test]
fn ais_file_has_expected_shape() {
    let d = load_csv(&ais(), &names(&["RCC", "WCC"]), &names(&["BMI", "SSF", "Bfat", "LBM"])).unwrap();
    assert_eq!((d.n(), d.d_x(), d.d_y()), (202, 4, 2));
    let (_, sex) = load_ais(&ais()).unwrap();
    assert_eq!(sex.iter().filter(|&&s| s == 0).count(), 100);
}

#[test]
fn bad_cells_name_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.csv");
    fs::write(&p, "x,y\n1,2\n3,\n").unwrap();
    let e = load_csv(&p, &names(&["y"]), &names(&["x"])).unwrap_err();
    assert!(matches!(&e, CliError::Data(m) if m.contains("row 3")), "{e}");
    fs::write(&p, "x,y\n1,2\nfoo,1\n").unwrap();
    let e = load_csv(&p, &names(&["y"]), &names(&["x"])).unwrap_err();
    assert!(matches!(&e, CliError::Data(m) if m.contains("row 3") && m.contains("foo")), "{e}");
    assert!(matches!(load_csv(&p, &names(&["z"]), &names(&["x"])), Err(CliError::Data(_))));
    assert!(matches!(load_csv(&p, &names(&["x"]), &names(&["x"])), Err(CliError::Usage(_))));
}

#[test]
fn standardized_columns_have_unit_spread() {
    let d = load_csv(&ais(), &names(&["RCC"]), &names(&["SSF"])).unwrap();
    let (s, scaling) = standardize(&d);
    let c = s.x().column(0);
    let mean = c.sum() / 202.0;
    let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 201.0;
    assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
    assert_eq!(scaling.apply(&d).unwrap(), s);
}

#[test]
fn model_json_round_trip_is_exact() {
    let d = load_csv(&ais(), &names(&["RCC", "WCC"]), &names(&["BMI", "LBM"])).unwrap();
    for (variant, family) in [(Variant::Csal, Family::Cwm), (Variant::Sal, Family::Mrm)] {
        let f = fit(&d, &FitConfig::new(2, variant, family, 3)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        ModelFile::from_fit(&f, None).save(&p).unwrap();
        let back = ModelFile::load(&p).unwrap().to_model().unwrap();
        assert_eq!(back, f.model);
    }
}

#[test]
fn noise_points_fall_in_the_box() {
    let d = load_csv(&ais(), &names(&["RCC", "WCC"]), &names(&["BMI", "SSF", "Bfat", "LBM"])).unwrap();
    let noisy = with_ais_noise(&d, 20, 9).unwrap();
    assert_eq!(noisy.n(), 222);
    for i in 202..222 {
        let p: Vec<f64> = noisy.y_row(i).iter().chain(noisy.x_row(i)).copied().collect();
        for (v, (lo, hi)) in p.iter().zip(AIS_NOISE_BOX) {
            assert!(*v >= lo && *v < hi);
        }
    }
    assert_eq!(noisy.select_rows(&(0..202).collect::<Vec<_>>()), d);
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let code = |args: &[&str]| bin().args(args).output().unwrap().status.code();
    assert_eq!(code(&["fit"]), Some(1));
    assert_eq!(code(&["bogus"]), Some(1));
    let o = out.to_str().unwrap();
    let a = ais();
    let a = a.to_str().unwrap();
    assert_eq!(code(&["fit", "--input", a, "--responses", "RCC", "--covariates", "BMI", "--variant", "x", "--out", o]), Some(1));
    assert_eq!(code(&["fit", "--input", "/nonexistent.csv", "--responses", "RCC", "--covariates", "BMI", "--out", o]), Some(2));
    assert_eq!(code(&["fit", "--input", a, "--responses", "RCC", "--covariates", "nope", "--out", o]), Some(2));
    // two rows cannot support a three-component fit
    let tiny = dir.path().join("t.csv");
    fs::write(&tiny, "x,y\n1,2\n2,3\n").unwrap();
    let t = tiny.to_str().unwrap();
    assert_eq!(code(&["fit", "--input", t, "--responses", "y", "--covariates", "x", "--g", "3", "--out", o]), Some(3));
    assert_eq!(code(&["--help"]), Some(0));
}

#[test]
fn fit_then_classify_reproduces_the_labels() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit");
    let a = ais();
    let status = bin()
        .args(["fit", "--input", a.to_str().unwrap(), "--responses", "RCC,WCC", "--covariates", "BMI,LBM"])
        .args(["--g", "1,2", "--variant", "csal", "--standardize", "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let bic = fs::read_to_string(out.join("bic.csv")).unwrap();
    assert_eq!(bic.lines().count(), 3);
    let class = fs::read_to_string(out.join("classification.csv")).unwrap();
    assert_eq!(class.lines().count(), 203);
    let again = dir.path().join("again.csv");
    let status = bin()
        .args(["classify", "--model", out.join("model.json").to_str().unwrap(), "--input", a.to_str().unwrap()])
        .args(["--out", again.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let comp = |s: &str| s.lines().map(|l| l.split(',').take(3).collect::<Vec<_>>().join(",")).collect::<Vec<_>>();
    assert_eq!(comp(&fs::read_to_string(again).unwrap()), comp(&class));
}

#[test]
fn simulate_smoke_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let status = bin()
        .args(["simulate", "--scenario", "a", "--n", "200", "--reps", "1", "--seed", "4", "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let det = fs::read_to_string(out.join("detection.csv")).unwrap();
    assert_eq!(det.lines().count(), 5);
    assert!(det.lines().any(|l| l.starts_with("SALCWM,") && l.ends_with(",NA,NA")));
    assert_eq!(fs::read_to_string(out.join("bias_mse.csv")).unwrap().lines().count(), 1 + 4 * 10);
}
