use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dctif(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dctif")).args(args).env_remove("DCTIF_DATA_DIR").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV with its `# config:` line and header removed.
fn rows(text: &str) -> Vec<Vec<String>> {
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config:"), "{text}");
    lines.next().unwrap();
    lines.filter(|l| !l.starts_with('#')).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn coeffs_golden_check_passes() {
    let o = dctif(&["coeffs", "--tabs", "4", "--s", "4", "--alpha", "1/4", "--golden-check"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o));
    assert_eq!(r[0][5..], ["-2", "15", "3", "0"]);
}

#[test]
fn coeffs_golden_check_fails_for_small_window() {
    let o = dctif(&["coeffs", "--golden-check", "--w", "5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAILED"));
}

#[test]
fn coeffs_odd_tabs_sum_to_scale() {
    let o = dctif(&["coeffs", "--tabs", "5", "--s", "4", "--alpha", "1/4"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 3);
    for row in r {
        assert_eq!(row.len(), 5 + 5);
        assert_eq!(row[5..].iter().map(|v| v.parse::<i32>().unwrap()).sum::<i32>(), 16);
    }
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["coeffs", "--tabs", "99"][..],
        &["coeffs", "--tabs", "4"],
        &["coeffs", "--tabs", "4", "--s", "4", "--alpha", "1/3"],
        &["eval", "--x", "1", "--preset", "nope"],
        &["nn", "--eps", "0.3"],
        &["nn", "--arch", "4by5"],
        &["nn", "--dataset", "mnist"],
        &["frobnicate"],
    ] {
        assert_eq!(dctif(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn eval_reports_error_and_symmetry() {
    let o = dctif(&["eval", "--x", "0", "--x", "1.0", "--x", "-1.0", "--preset", "hi-acc"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!((r[0][3].as_str(), r[0][5].parse::<f64>().unwrap()), ("0", 0.0));
    assert!(r[1][5].parse::<f64>().unwrap() <= 1.5e-5);
    assert_eq!(r[2][3].parse::<f64>().unwrap(), -r[1][3].parse::<f64>().unwrap());
}

#[test]
fn sweep_paper_grid() {
    let o = dctif(&["sweep", "--presets", "paper"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 5);
    let lo = &r[0];
    assert_eq!(&lo[..3], ["2", "2", "4"]);
    assert_eq!(lo[8], "1216");
}

#[test]
fn sweep_grid_file() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.csv");
    fs::write(&grid, "tabs,j,s,eps\n# two points\n2,2,4,0.0002\n4,2,6,0.00001,7\n9,2,4,0.0002\n").unwrap();
    let o = dctif(&["sweep", "--grid-file", grid.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(rows(&text).len(), 2);
    assert!(text.contains("# skipped: tabs=9"));

    fs::write(&grid, "2,2\n").unwrap();
    assert_eq!(dctif(&["sweep", "--grid-file", grid.to_str().unwrap()]).status.code(), Some(2));
}

fn norm_mse_non_increasing(r: &[Vec<String>]) -> bool {
    let v: Vec<f64> = r.iter().map(|row| row[8].parse().unwrap()).collect();
    let inversions: Vec<f64> = v.windows(2).filter(|w| w[1] > w[0]).map(|w| w[1] - w[0]).collect();
    inversions.len() <= 1 && inversions.iter().all(|&d| d <= 1e-4)
}

#[test]
fn nn_study_rows_and_ordering() {
    let o = dctif(&["nn", "--dataset", "sinc", "--arch", "4x5", "--eps", "all", "--seed", "7", "--epochs", "300"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 6);
    let eps: Vec<&str> = r.iter().map(|row| row[2].as_str()).collect();
    assert_eq!(eps, ["0.04", "0.02", "0.01", "0.001", "0.0001", "exact"]);
    assert_eq!(r[5][8].parse::<f64>().unwrap(), 0.0);
    assert!(norm_mse_non_increasing(&r));
}

#[test]
fn nn_untrained() {
    let o = dctif(&["nn", "--dataset", "sinc", "--epochs", "0"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert!(r.iter().all(|row| row[9] == "0"));
}

#[test]
fn output_is_deterministic() {
    let args = ["nn", "--dataset", "sigmoid", "--arch", "2x3", "--epochs", "20", "--seed", "3"];
    let a = dctif(&args);
    let b = dctif(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let s1 = dctif(&["sweep", "--presets", "trend"]);
    let s2 = dctif(&["sweep", "--presets", "trend"]);
    assert_eq!(s1.stdout, s2.stdout);
}

#[test]
fn config_file_defaults_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# defaults\ntabs = 6\ns = 5\ncoeffs.golden_check = true\nnn.epochs = 3\n").unwrap();
    let c = cfg.to_str().unwrap();

    let o = dctif(&["--config", c, "coeffs"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("# config: command=coeffs tabs=6 j=2 s=5 w=16"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("golden check passed"));

    let o = dctif(&["coeffs", "--config", c, "--tabs", "4"]);
    assert!(stdout(&o).starts_with("# config: command=coeffs tabs=4 j=2 s=5"));

    fs::write(&cfg, "bogus = 1\n").unwrap();
    assert_eq!(dctif(&["--config", c, "coeffs", "--tabs", "4", "--s", "4"]).status.code(), Some(2));
}

#[test]
fn out_flag_writes_file_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("samples.csv");
    let o = dctif(&["dump", "--preset", "lo-acc", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(rows(&text).len(), 76);
    let o = dctif(&["dump", "--preset", "hi-acc", "--what", "coeffs"]);
    assert_eq!(rows(&stdout(&o)).len(), 3);
}

fn write_cancer(dir: &Path) {
    let mut text = String::new();
    for i in 0..100 {
        let malignant = i % 2 == 0;
        let v = if malignant { 8 + i % 3 } else { 1 + i % 3 };
        let bare = if i == 5 { "?".to_string() } else { v.to_string() };
        text += &format!("{i},{v},{v},{v},{v},{v},{bare},{v},{v},1,{}\n", if malignant { 4 } else { 2 });
    }
    fs::write(dir.join("breast-cancer-wisconsin.data"), text).unwrap();
}

#[test]
fn cancer_from_data_dir_env() {
    let dir = tempfile::tempdir().unwrap();
    write_cancer(dir.path());
    let o = Command::new(env!("CARGO_BIN_EXE_dctif"))
        .args(["nn", "--dataset", "cancer", "--eps", "0.01,exact", "--epochs", "50", "--seed", "1"])
        .env("DCTIF_DATA_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 2);
    assert_eq!(r[0][1], "1x3");
    assert!(r[1][7].parse::<f64>().unwrap() >= 90.0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing attributes"));
}

#[test]
fn missing_data_file_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = dctif(&["nn", "--dataset", "cancer", "--data-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("breast-cancer-wisconsin.data"));
}
