use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use scarquench::basis::neel;
use scarquench::io::EigenvectorFile;
use scarquench::{PostQuench, Route};
use serde_json::Value;

fn scarquench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scarquench"))
        .args(args)
        .env_remove("SCARQUENCH_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Data rows of a CSV file (header comment and column line skipped).
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().skip(2).map(|l| l.split(',').map(String::from).collect()).collect()
}

fn neel_deff(len: usize) -> f64 {
    let post = PostQuench::new(len, 1e-9, Route::Sectors).unwrap();
    post.effective_dimension(&post.basis.product_state(neel(len)).unwrap()).unwrap()
}

#[test]
fn basis_dimension() {
    let o = scarquench(&["basis", "--L", "8"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("dimension=47"));
}

#[test]
fn odd_length_is_an_argument_error() {
    let o = scarquench(&["basis", "--L", "7"]);
    assert_eq!(o.status.code(), Some(2));
    let diag: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(diag["error"], "invalid_argument");
}

#[test]
fn unparseable_flag_is_an_argument_error() {
    assert_eq!(scarquench(&["basis", "--L", "eight"]).status.code(), Some(2));
    assert_eq!(scarquench(&["scan", "--step", "0"]).status.code(), Some(2));
}

#[test]
fn basis_dump() {
    let o = scarquench(&["basis", "--L", "4", "--dump"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# scarquench 0.1.0 {"));
    assert!(lines[0].contains(r#""L":4"#));
    assert_eq!(lines[1], "index,bitstring,popcount");
    assert_eq!(lines.len() - 2, 7);
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# chain\nL = 10\n").unwrap();
    let c = cfg.to_str().unwrap();
    assert!(stdout(&scarquench(&["basis", "--config", c])).contains("dimension=123"));
    assert!(stdout(&scarquench(&["basis", "--config", c, "--L", "6"])).contains("dimension=18"));
    fs::write(&cfg, "L = 10\nnonsense = 3\n").unwrap();
    assert_eq!(scarquench(&["basis", "--config", c]).status.code(), Some(2));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("env_out");
    let o = Command::new(env!("CARGO_BIN_EXE_scarquench"))
        .args(["groundstate", "--L", "8"])
        .env("SCARQUENCH_OUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(target.join("resolution.json").exists());
}

#[test]
fn quench_neel_baseline_l14() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = scarquench(&["quench", "--L", "14", "--delta", "-1", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&dir.path().join("report.json"));
    let deff = report["result"]["deff"].as_f64().unwrap();
    assert!((deff - neel_deff(14)).abs() < 1e-10);
    assert!((deff - 9.346296286834534).abs() < 1e-9);
    assert!(report["result"]["energy_expectation"].as_f64().unwrap().abs() < 1e-10);
    assert_eq!(report["scarquench"], "0.1.0");
    for name in ["loschmidt.csv", "overlaps.csv", "obs_z1.csv", "obs_y1.csv"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.starts_with("# scarquench 0.1.0 {"), "{name}");
    }
    assert_eq!(rows(&dir.path().join("loschmidt.csv")).len(), 2001);
    assert_eq!(rows(&dir.path().join("overlaps.csv")).len(), 843);
}

#[test]
fn quench_polarized_does_not_revive_l12() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = scarquench(&["quench", "--L", "12", "--delta", "+1", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let echo: Vec<f64> = rows(&dir.path().join("loschmidt.csv")).iter().map(|r| r[1].parse().unwrap()).collect();
    let first_low = echo.iter().position(|&v| v < 0.05).expect("initial decay below 0.05");
    let later_max = echo[first_low..].iter().cloned().fold(0.0, f64::max);
    assert!(later_max < 0.05, "revival to {later_max} after the initial decay");
}

#[test]
fn quench_threefold_degeneracy_aborts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = scarquench(&["quench", "--L", "14", "--g2x", "0.3", "--g2y", "0.3", "--out", out]);
    assert_eq!(o.status.code(), Some(3));
    let diag: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(diag["error"], "resolution_abort");
}

#[test]
fn full_route_beyond_dense_limit_is_a_resource_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = scarquench(&["quench", "--L", "22", "--route", "full", "--out", out]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn single_point_scan_equals_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = scarquench(&[
        "scan",
        "--L",
        "12",
        "--g2x-min",
        "0",
        "--g2x-max",
        "0",
        "--g2y-min",
        "0",
        "--g2y-max",
        "0",
        "--out",
        out,
    ]);
    assert_eq!(o.status.code(), Some(0));
    let opt = read_json(&dir.path().join("optimum.json"));
    assert_eq!(opt["result"]["g2x"], 0.0);
    assert_eq!(opt["result"]["g2y"], 0.0);
    assert!((opt["result"]["deff"].as_f64().unwrap() - neel_deff(12)).abs() < 1e-10);
}

#[test]
fn coarse_scan_beats_baseline_and_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o =
            scarquench(&["scan", "--L", "12", "--step", "0.2", "--threads", "1", "--out", d.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(rows(&a.path().join("deff_map.csv")).len(), 121);
    let opt = read_json(&a.path().join("optimum.json"));
    assert!(opt["result"]["deff"].as_f64().unwrap() < neel_deff(12));
    for name in ["delta_map.csv", "deff_map.csv", "failures.csv", "optimum.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn spectrum_with_vectors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = scarquench(&["spectrum", "--L", "8", "--vectors", "--dump-operator", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(rows(&dir.path().join("spectrum.csv")).len(), 47);
    let op = fs::read_to_string(dir.path().join("operator.csv")).unwrap();
    assert!(op.lines().next().unwrap().contains(r#""model":"pxp""#));
    let f = EigenvectorFile::read(&mut fs::File::open(dir.path().join("eigenvectors.bin")).unwrap()).unwrap();
    assert_eq!((f.len, f.dim, f.count()), (8, 47, 47));
    let sum: f64 = f.eigenvalues.iter().sum();
    assert!(sum.abs() < 1e-10);
}

#[test]
fn spectrum_routes_agree() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["spectrum", "--L", "10", "--model", "prequench", "--g2x", "0.1", "--g2y", "-0.2"];
    for (d, route) in [(&a, "full"), (&b, "sectors")] {
        let mut v = args.to_vec();
        v.extend(["--route", route, "--out", d.path().to_str().unwrap()]);
        assert_eq!(scarquench(&v).status.code(), Some(0));
    }
    let collect = |d: &Path| {
        let mut e: Vec<f64> = rows(&d.join("spectrum.csv")).iter().map(|r| r[2].parse().unwrap()).collect();
        e.sort_by(f64::total_cmp);
        e
    };
    let (ea, eb) = (collect(a.path()), collect(b.path()));
    assert_eq!(ea.len(), 123);
    assert!(ea.iter().zip(&eb).all(|(x, y)| (x - y).abs() < 1e-8));
}

#[test]
fn scaling_fixed_mode() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = scarquench(&["scaling", "--L", "8,10", "--mode", "fixed", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&dir.path().join("scaling.csv"));
    assert_eq!(r.len(), 2);
    assert!((r[1][4].parse::<f64>().unwrap() - neel_deff(10)).abs() < 1e-10);
}
