use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mintori::meshio;
use mintori_core::torus::{MeshInfo, TorusMesh};
use mintori_core::{AmbientPoint, C64};
use serde_json::Value;
use tempfile::TempDir;

const SMALL: &str = "v = [2, 3]\n[scan]\nlevels = 40\nmargin_low = 0.1\n[mesh]\nrows = 48\ncols = 48\n";

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_mintori"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,xi_angle,t_return,f_drift_max"));
    lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
}

#[test]
fn info_exit_codes() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), "", &["info"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("admissible: yes"));

    let o = run(dir.path(), "v = [1, 1]\n", &["info"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("inadmissible: line meets a vertex"));

    let o = run(dir.path(), "v = [1, -1]\n", &["info"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    let value = |key: &str| -> f64 {
        let line = out.lines().find(|l| l.starts_with(key)).unwrap();
        line.rsplit(" = ").next().unwrap().parse().unwrap()
    };
    assert!(value("t1 =") < 0.0 && 0.0 < value("t2 ="));
    assert!((value("t1 =") + value("t2 =")).abs() < 1e-15);

    assert_eq!(code(&run(dir.path(), "v = [1, -1]\nlevel = 3\n", &["info"])), 1);
    assert_eq!(code(&run(dir.path(), "v = [1, \n", &["info"])), 1);
    assert_eq!(code(&run(dir.path(), "[tolerances]\nintegrator = -1.0\n", &["info"])), 1);
}

#[test]
fn thread_variable_is_validated() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_mintori")).arg("info").env("MINTORI_THREADS", "many").output().unwrap();
    assert_eq!(code(&o), 1);
    let _ = dir;
}

#[test]
fn scan_accounting_and_determinism() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), SMALL, &["scan"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("out");
    let first = fs::read(out.join("scan.csv")).unwrap();
    let rows = csv_rows(&out.join("scan.csv"));
    let failures = fs::read_to_string(out.join("scan_failures.log")).unwrap().lines().count();
    assert_eq!(rows.len() + failures, 40);
    for f in ["xi.svg", "phase.svg"] {
        let svg = fs::read_to_string(out.join(f)).unwrap();
        assert!(svg.contains("config_sha256"));
    }
    assert!(stdout(&o).contains("13/3"));

    let o = run(dir.path(), SMALL, &["scan"]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(out.join("scan.csv")).unwrap(), first);

    // --levels overrides the config
    let o = run(dir.path(), SMALL, &["--levels", "7", "scan"]);
    assert_eq!(code(&o), 0);
    assert_eq!(csv_rows(&out.join("scan.csv")).len(), 7);
}

#[test]
fn mirrored_scan_is_reciprocal() {
    let dir = TempDir::new().unwrap();
    let cfg = "v = [2, 3]\n[scan]\nlevels = 12\nmargin_low = 0.1\nmirror = true\n";
    let o = run(dir.path(), cfg, &["scan"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("out/scan.csv"));
    assert_eq!(rows.len(), 24);
    for r in rows.iter().filter(|r| r[0] > 0.0) {
        let m = rows.iter().find(|x| x[0] == -r[0]).expect("mirrored level present");
        let sum = (r[1] + m[1]).rem_euclid(TAU);
        assert!(sum.min(TAU - sum) < 1e-6, "{} {}", r[1], m[1]);
    }
}

#[test]
fn scan_with_no_usable_level_exits_3() {
    let dir = TempDir::new().unwrap();
    let cfg = "v = [2, 3]\n[scan]\nlevels = 1\nmargin_low = 1e-5\nmargin_high = 0.99998\n";
    let o = run(dir.path(), cfg, &["scan"]);
    assert_eq!(code(&o), 3, "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn construct_writes_certified_torus() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), SMALL, &["construct", "--p", "13", "--q", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("out");
    let report = json(&out.join("torus_p13_q3.report.json"));
    for key in ["lagrangian_defect", "mean_curvature_defect", "killing_variation", "hausdorff_to_clifford"] {
        assert!(report[key].is_f64(), "{key}");
    }
    assert!(report["killing_variation"].as_f64().unwrap() > 0.0);
    assert!(report["lagrangian_defect"].as_f64().unwrap() < 1e-6);
    assert!(report["mean_curvature_defect"].as_f64().unwrap() < 1e-4);
    assert_eq!(report["passed"], Value::Bool(true));
    assert_eq!(report["resolution"]["rows"], 48);
    assert!(report["orbit"]["closure"].as_f64().unwrap() < 1e-6);
    assert!(report["config_sha256"].as_str().unwrap().len() == 64);

    // lossless round trip
    let path = out.join("torus_p13_q3.mesh");
    let text = fs::read_to_string(&path).unwrap();
    let mesh = meshio::read(&path).unwrap();
    let hash = text.lines().find_map(|l| l.strip_prefix("# config_sha256 ")).map(str::to_owned);
    assert_eq!(meshio::to_string(&mesh, hash.as_deref()), text);

    let o = run(dir.path(), SMALL, &["verify", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("PASS"));
}

#[test]
fn mirrored_target_has_matching_defects() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run(dir.path(), SMALL, &["construct", "--p", "13", "--q", "3"])), 0);
    assert_eq!(code(&run(dir.path(), SMALL, &["construct", "--p", "-13", "--q", "3"])), 0);
    let a = json(&dir.path().join("out/torus_p13_q3.report.json"));
    let b = json(&dir.path().join("out/torus_pm13_q3.report.json"));
    assert!((a["orbit"]["level"].as_f64().unwrap() + b["orbit"]["level"].as_f64().unwrap()).abs() < 1e-9);
    for key in ["lagrangian_defect", "mean_curvature_defect"] {
        let (x, y) = (a[key].as_f64().unwrap(), b[key].as_f64().unwrap());
        let floor = 1e-13;
        assert!(x.max(floor) <= 2.0 * y.max(floor) && y.max(floor) <= 2.0 * x.max(floor), "{key}: {x} vs {y}");
    }
    let (x, y) = (a["killing_variation"].as_f64().unwrap(), b["killing_variation"].as_f64().unwrap());
    assert!((x - y).abs() < 1e-6 * x);
}

#[test]
fn construct_without_bracket_exits_4() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), SMALL, &["construct", "--p", "5", "--q", "1"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    let o = run(dir.path(), "v = [1, -1]\n[scan]\nlevels = 8\nmargin_low = 0.1\n", &["construct", "--p", "1", "--q", "1"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(stderr(&o).contains("every level"));
}

#[test]
fn clifford_export_verifies() {
    let dir = TempDir::new().unwrap();
    let cfg = "v = [2, 3]\n[mesh]\nrows = 64\ncols = 64\n";
    let o = run(dir.path(), cfg, &["export-clifford"]);
    assert_eq!(code(&o), 0);
    let path = dir.path().join("out/clifford.mesh");
    let o = run(dir.path(), cfg, &["verify", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&dir.path().join("out/clifford.verify.json"));
    assert!(r["mean_curvature_defect"].as_f64().unwrap() < 1e-6);
    assert!(r["killing_variation"].as_f64().unwrap() < 1e-10);
    assert_eq!(r["resolution"]["rows"], 64);
    assert_eq!(r["resolution"]["cols"], 64);
    assert!(r["resolution"]["step_u"].as_f64().unwrap() > 0.0);
}

fn perturbed(dir: &Path) -> PathBuf {
    let n = 48;
    let mut pts = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (TAU * i as f64 / n as f64, TAU * j as f64 / n as f64);
            let r = 1.0 + 1e-2 * b.sin();
            pts.push(AmbientPoint::unit(vec![C64::new(1.0, 0.0), C64::from_polar(r, a), C64::from_polar(1.0, b)]).unwrap());
        }
    }
    let mesh = TorusMesh::from_points(n, n, pts, MeshInfo::external()).unwrap();
    let path = dir.join("perturbed.mesh");
    meshio::write(&path, &mesh, None).unwrap();
    path
}

#[test]
fn verify_rejects_perturbed_and_malformed_meshes() {
    let dir = TempDir::new().unwrap();
    let path = perturbed(dir.path());
    let o = run(dir.path(), "", &["verify", path.to_str().unwrap()]);
    assert_eq!(code(&o), 6, "{}", stderr(&o));
    assert!(stdout(&o).contains("FAIL"));
    let r = json(&dir.path().join("out/perturbed.verify.json"));
    assert!(r["lagrangian_defect"].as_f64().unwrap() > 1e-4);
    assert_eq!(r["resolution"]["method"], "grid");

    let bad = dir.path().join("bad.mesh");
    fs::write(&bad, "# mintori-mesh 1\n# n 2\ngrid,0,0,1,0\n").unwrap();
    assert_eq!(code(&run(dir.path(), "", &["verify", bad.to_str().unwrap()])), 1);
    let missing = dir.path().join("missing.mesh");
    assert_eq!(code(&run(dir.path(), "", &["verify", missing.to_str().unwrap()])), 1);
    let _ = PI;
}
