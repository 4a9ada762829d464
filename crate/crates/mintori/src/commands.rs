//! The five subcommands. Each writes its human-readable summary to `out` and
//! its artifacts under the configured output directory.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use mintori_core::dynamics::{
    find_periodic, integrate, level_grid, locate_brackets, rational_targets, xi_at_level, FlowOptions, PeriodicOrbit,
    ScanRow, StopCondition,
};
use mintori_core::geometry::calabi_profile;
use mintori_core::reduced::ReducedModel;
use mintori_core::subtorus::{build_polytope, killing_witness, make_frame, KillingWitness, MomentPolytope, WeightVector};
use mintori_core::torus::{clifford_with_step, reconstruct, ClosedOrbit, TorusMesh};
use mintori_core::verify::{certify, Thresholds};
use mintori_core::{Error, FubiniStudy};

use crate::config::RunConfig;
use crate::output::{num, write_atomic};
use crate::report::{OrbitInfo, ReportJson};
use crate::svg::{render, Plot, Series};
use crate::{error_class, meshio, CliError};

/// Caps the global rayon pool at `MINTORI_THREADS` when set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("MINTORI_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("MINTORI_THREADS must be a positive integer, got {raw:?}")))?;
    // a pool that already exists (repeated calls in one process) is kept
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Manifold, frame and reduced model for a configuration.
pub struct Setup {
    pub cfg: RunConfig,
    pub fs: FubiniStudy,
    pub polytope: MomentPolytope,
    pub model: ReducedModel,
    pub hash: String,
}

impl Setup {
    pub fn new(cfg: RunConfig) -> Result<Self, CliError> {
        let fs = FubiniStudy::new(cfg.n);
        let polytope = build_polytope(&fs);
        let weight = WeightVector::new(cfg.v.clone()).map_err(|e| CliError::Input(format!("v: {e}")))?;
        let frame = make_frame(&weight, &polytope).map_err(|e| match e {
            Error::Inadmissible(_) => CliError::Admissibility(if cfg.n == 2 {
                "line meets a vertex".into()
            } else {
                "line meets an (n-2)-face".into()
            }),
            other => CliError::Input(other.to_string()),
        })?;
        let model = ReducedModel::new(fs.clone(), frame).map_err(|e| CliError::Input(e.to_string()))?;
        let hash = cfg.hash();
        Ok(Setup { cfg, fs, polytope, model, hash })
    }

    pub fn scan_options(&self) -> FlowOptions {
        let t = &self.cfg.tolerances;
        FlowOptions { tol: t.integrator, drift_budget: t.drift, event_tol: t.event, ..FlowOptions::default() }
    }

    pub fn refine_options(&self) -> FlowOptions {
        FlowOptions { tol: self.cfg.tolerances.refine, ..self.scan_options() }
    }

    pub fn f_plus(&self) -> Result<f64, CliError> {
        self.model.f_plus().map_err(|e| CliError::Input(e.to_string()))
    }

    fn out_dir(&self) -> &Path {
        &self.cfg.output.dir
    }

    /// Positive scan levels, or their mirrors.
    pub fn levels(&self, mirrored: bool) -> Result<Vec<f64>, CliError> {
        let s = &self.cfg.scan;
        let fp = self.f_plus()?;
        let mut l = level_grid(fp, s.margin_low, 1.0 - s.margin_high, s.levels);
        if mirrored {
            l.iter_mut().for_each(|x| *x = -*x);
            l.reverse();
        }
        Ok(l)
    }

    pub fn scan_levels(&self, levels: &[f64]) -> Vec<ScanRow> {
        let opts = self.scan_options();
        levels
            .par_iter()
            .map(|&s| ScanRow { s, result: xi_at_level(&self.model, s, &opts) })
            .collect()
    }
}

fn vec_str(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.12}")).collect();
    format!("({})", parts.join(", "))
}

pub fn cmd_info(cfg: RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let fs = FubiniStudy::new(cfg.n);
    let polytope = build_polytope(&fs);
    let t = fs.einstein_constant();
    let mut s = String::new();
    let _ = writeln!(s, "CP^{} with the Fubini-Study metric", cfg.n);
    let _ = writeln!(s, "Einstein constant t = {}", num(t));
    let (u, du) = calabi_profile(1.0, cfg.l, cfg.n, t).map_err(|e| CliError::Input(e.to_string()))?;
    let _ = writeln!(s, "Calabi profile at r^2 = 1 (l = {}): u = {}, u' = {}", cfg.l, num(u), num(du));
    let _ = writeln!(s, "moment polytope vertices:");
    for (k, (v, e)) in polytope.vertices().iter().zip(polytope.exact_vertices()).enumerate() {
        let exact: Vec<String> = e.iter().map(|r| r.to_string()).collect();
        let _ = writeln!(s, "  e_{k}: {}  exact ({})", vec_str(v), exact.join(", "));
    }
    let _ = writeln!(s, "vertex residual: {:.3e}", polytope.exactness_residual());
    let _ = writeln!(s, "weight v = {:?}", cfg.v);
    out.write_all(s.as_bytes())?;
    let setup = match Setup::new(cfg) {
        Ok(x) => x,
        Err(e) => {
            writeln!(out, "admissible: no")?;
            return Err(e);
        }
    };
    let frame = setup.model.frame();
    let mut s = String::new();
    let _ = writeln!(s, "admissible: yes");
    let _ = writeln!(s, "kernel basis: {:?}", frame.basis);
    let w: Vec<String> = frame.w.iter().map(|r| r.to_string()).collect();
    let _ = writeln!(s, "w = ({})", w.join(", "));
    let _ = writeln!(s, "t1 = {} = {}", frame.t1_exact, num(frame.t1));
    let _ = writeln!(s, "t2 = {} = {}", frame.t2_exact, num(frame.t2));
    let _ = writeln!(s, "f_+ = {}", num(setup.f_plus()?));
    match killing_witness(&setup.fs, frame) {
        Ok(wit) => {
            let _ = writeln!(
                s,
                "Killing witness a = {:?}: |X_a|^2 from {} to {} (relative spread {:.3e})",
                wit.a_int,
                num(mintori_core::geometry::torus_field(&wit.low, &wit.a).norm().powi(2)),
                num(mintori_core::geometry::torus_field(&wit.high, &wit.a).norm().powi(2)),
                wit.relative_spread
            );
        }
        Err(e) => {
            let _ = writeln!(s, "Killing witness: none ({e}); subtorus orbits along the segment are congruent");
        }
    }
    let _ = writeln!(s, "config_sha256 = {}", setup.hash);
    out.write_all(s.as_bytes())?;
    Ok(())
}

/// Scan rows as CSV: `s, xi_angle, t_return, f_drift_max`, failures omitted.
pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut s = String::from("s,xi_angle,t_return,f_drift_max\n");
    for r in rows {
        if let Ok(rec) = &r.result {
            let _ = writeln!(s, "{},{},{},{}", num(r.s), num(rec.xi_angle), num(rec.t_return), num(rec.max_drift));
        }
    }
    s
}

fn phase_portrait(setup: &Setup, levels: &[f64]) -> Vec<Series> {
    let opts = setup.scan_options();
    levels
        .par_iter()
        .filter_map(|&s| {
            let seed = setup.model.seed_on_level(s).ok()?;
            let tr = integrate(&setup.model, &seed, StopCondition::Returns(1), &opts).ok()?;
            let center = if s > 0.0 { 0.0 } else { std::f64::consts::PI };
            let points = tr.states.iter().map(|(_, y)| (y[0], y[1] - center)).collect();
            Some(Series { label: String::new(), points, markers: false })
        })
        .collect()
}

pub struct ScanSummary {
    pub rows: Vec<ScanRow>,
    pub failures: usize,
}

pub fn cmd_scan(setup: &Setup, out: &mut dyn Write) -> Result<ScanSummary, CliError> {
    let fp = setup.f_plus()?;
    let mut levels = setup.levels(false)?;
    if setup.cfg.scan.mirror {
        let mut m = setup.levels(true)?;
        m.append(&mut levels);
        levels = m;
    }
    let rows = setup.scan_levels(&levels);
    let failures = rows.iter().filter(|r| r.result.is_err()).count();
    let mut log = String::new();
    for r in &rows {
        if let Err(e) = &r.result {
            let _ = writeln!(log, "s={} class={} {e}", num(r.s), error_class(e));
        }
    }
    let dir = setup.out_dir();
    write_atomic(&dir.join("scan.csv"), scan_csv(&rows).as_bytes())?;
    write_atomic(&dir.join("scan_failures.log"), log.as_bytes())?;
    eprint!("{log}");

    let ok: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.result.as_ref().ok().map(|rec| (r.s / fp, rec.xi_unwrapped / std::f64::consts::TAU)))
        .collect();
    let plot = Plot {
        title: "holonomy along the levels of f",
        x_label: "s / f_+",
        y_label: "xi / 2 pi (unwrapped)",
        series: vec![Series { label: format!("v = {:?}", setup.cfg.v), points: ok.clone(), markers: true }],
        h_lines: Vec::new(),
        config_hash: &setup.hash,
    };
    write_atomic(&dir.join("xi.svg"), render(&plot).as_bytes())?;
    let portrait_levels: Vec<f64> = levels.iter().step_by((levels.len() / 12).max(1)).copied().collect();
    let plot = Plot {
        title: "level curves of f in the (tau, theta) chart",
        x_label: "tau",
        y_label: "theta - theta_center",
        series: phase_portrait(setup, &portrait_levels),
        h_lines: Vec::new(),
        config_hash: &setup.hash,
    };
    write_atomic(&dir.join("phase.svg"), render(&plot).as_bytes())?;

    let mut s = String::new();
    let _ = writeln!(s, "scanned {} levels, {} failed", rows.len(), failures);
    if failures == rows.len() {
        out.write_all(s.as_bytes())?;
        return Err(CliError::Scan("every level failed".into()));
    }
    let pos: Vec<f64> = ok.iter().filter(|p| p.0 > 0.0).map(|p| p.1).collect();
    if let (Some(lo), Some(hi)) = (pos.iter().copied().reduce(f64::min), pos.iter().copied().reduce(f64::max)) {
        let _ = writeln!(s, "rotation number xi/2pi on f > 0 spans [{lo:.9}, {hi:.9}]");
        let targets = rational_targets(lo, hi, setup.cfg.search.q_max);
        let _ = writeln!(s, "{} targets p/q with q <= {}:", targets.len(), setup.cfg.search.q_max);
        for (p, q) in targets {
            let br = locate_brackets(&rows, p, q);
            let br: Vec<String> = br.iter().map(|b| format!("[{:.6}, {:.6}]", b.0 / fp, b.1 / fp)).collect();
            let _ = writeln!(s, "  {p}/{q}: s/f_+ in {}", br.join(" "));
        }
    }
    let _ = writeln!(s, "wrote {}", dir.join("scan.csv").display());
    out.write_all(s.as_bytes())?;
    Ok(ScanSummary { rows, failures })
}

/// Periodic orbit for `p/q`; negative `p` selects the mirrored side `f < 0`.
pub fn locate_orbit(setup: &Setup, p: i64, q: u32) -> Result<PeriodicOrbit, CliError> {
    if q == 0 || p == 0 {
        return Err(CliError::Input("need p != 0 and q > 0".into()));
    }
    let mirrored = p < 0;
    let brackets: Vec<(f64, f64)> = if setup.cfg.search.brackets.is_empty() {
        let rows = setup.scan_levels(&setup.levels(mirrored)?);
        if rows.iter().all(|r| r.result.is_err()) {
            return Err(CliError::Scan("every level failed".into()));
        }
        let target = std::f64::consts::TAU * p.abs() as f64 / q as f64;
        let hits: Vec<f64> = rows.iter().filter_map(|r| r.result.as_ref().ok()).map(|r| r.xi_unwrapped.abs()).collect();
        if hits.len() > 1 && hits.iter().all(|x| (x - target).abs() < 1e-8) {
            return Err(CliError::Bracket(format!(
                "holonomy equals 2 pi {p}/{q} on every level; the orbits are congruent and there is no isolated level"
            )));
        }
        locate_brackets(&rows, p.abs(), q)
    } else {
        setup.cfg.search.brackets.iter().filter(|b| (b[0] < 0.0) == mirrored).map(|b| (b[0], b[1])).collect()
    };
    let Some(&bracket) = brackets.first() else {
        return Err(CliError::Bracket(format!("no level bracket for {p}/{q}")));
    };
    find_periodic(&setup.model, p.abs(), q, bracket, &setup.refine_options()).map_err(|e| match e {
        Error::Closure { .. } => CliError::Closure(e.to_string()),
        other => CliError::Bracket(format!("{p}/{q}: {other}")),
    })
}

pub fn build_mesh(setup: &Setup, orbit: &PeriodicOrbit) -> Result<TorusMesh, CliError> {
    let m = &setup.cfg.mesh;
    reconstruct(&setup.model, &ClosedOrbit::from(orbit), m.rows, m.cols, m.delta, &setup.refine_options()).map_err(
        |e| match e {
            Error::Closure { .. } => CliError::Closure(e.to_string()),
            Error::Domain(_) | Error::Dimension { .. } => CliError::Input(e.to_string()),
            other => CliError::Certification(other.to_string()),
        },
    )
}

pub struct Constructed {
    pub orbit: PeriodicOrbit,
    pub mesh: TorusMesh,
    pub report: ReportJson,
    pub mesh_path: PathBuf,
    pub report_path: PathBuf,
}

fn witness(setup: &Setup) -> Result<KillingWitness, Error> {
    killing_witness(&setup.fs, setup.model.frame())
}

pub fn cmd_construct(setup: &Setup, p: i64, q: u32, out: &mut dyn Write) -> Result<Constructed, CliError> {
    if setup.cfg.n != 2 {
        return Err(CliError::Input("tori are meshed for n = 2 only".into()));
    }
    let fp = setup.f_plus()?;
    let orbit = locate_orbit(setup, p, q)?;
    writeln!(
        out,
        "{p}/{q}: level s = {} (s/f_+ = {:.12}), closure {:.3e}, period {}",
        num(orbit.level),
        orbit.level / fp,
        orbit.closure,
        num(orbit.period)
    )?;
    let mesh = build_mesh(setup, &orbit)?;
    let wit = witness(setup).map_err(|e| CliError::Certification(format!("no Killing witness: {e}")))?;
    let m = &setup.cfg.mesh;
    let reference = clifford_with_step(2, m.rows, m.cols, m.delta).map_err(|e| CliError::Input(e.to_string()))?;
    let cert = certify(&mesh, &wit.a, &reference).map_err(|e| CliError::Certification(e.to_string()))?;
    let passed = cert.passes(&Thresholds::default());
    let info = OrbitInfo {
        p,
        q,
        level: orbit.level,
        level_over_f_plus: orbit.level / fp,
        xi_unwrapped: orbit.xi_unwrapped,
        t_return: orbit.t_return,
        period: orbit.period,
        closure: orbit.closure,
        max_drift: orbit.max_drift,
    };
    let report = ReportJson::new(&cert, passed, Some(info), setup.hash.clone());
    let stem = if p < 0 { format!("torus_pm{}_q{q}", -p) } else { format!("torus_p{p}_q{q}") };
    let dir = setup.out_dir();
    let mesh_path = dir.join(format!("{stem}.mesh"));
    let report_path = dir.join(format!("{stem}.report.json"));
    meshio::write(&mesh_path, &mesh, Some(&setup.hash))?;
    write_atomic(&report_path, report.to_json().as_bytes())?;
    let moment: Vec<(f64, f64)> = (0..mesh.rows())
        .map(|i| {
            let pm = mesh.point(i, 0).moduli_sq();
            (pm[1], pm[2])
        })
        .collect();
    let plot = Plot {
        title: &format!("moment image of the {p}/{q} torus"),
        x_label: "|z_1|^2",
        y_label: "|z_2|^2",
        series: vec![Series { label: String::new(), points: moment, markers: false }],
        h_lines: vec![(1.0 / 3.0, "Clifford".into())],
        config_hash: &setup.hash,
    };
    write_atomic(&dir.join(format!("{stem}.svg")), render(&plot).as_bytes())?;
    write!(out, "{}", summary(&report))?;
    writeln!(out, "wrote {} and {}", mesh_path.display(), report_path.display())?;
    if !passed {
        return Err(CliError::Certification(format!("{p}/{q} did not meet the thresholds")));
    }
    Ok(Constructed { orbit, mesh, report, mesh_path, report_path })
}

fn summary(r: &ReportJson) -> String {
    format!(
        "lagrangian_defect = {}\nmean_curvature_defect = {}\nkilling_variation = {}\nhausdorff_to_clifford = {}\n\
         resolution {}x{} ({}, steps {} / {})\n",
        num(r.lagrangian_defect),
        num(r.mean_curvature_defect),
        num(r.killing_variation),
        num(r.hausdorff_to_clifford),
        r.resolution.rows,
        r.resolution.cols,
        r.resolution.method,
        num(r.resolution.step_u),
        num(r.resolution.step_v),
    )
}

/// Recomputes every defect of a mesh file. Flat tori pass: only the
/// Lagrangian and minimal conditions are gated.
pub fn cmd_verify(setup: &Setup, mesh_path: &Path, out: &mut dyn Write) -> Result<ReportJson, CliError> {
    let mesh = meshio::read(mesh_path)?;
    if mesh.n() != 2 {
        return Err(CliError::Input("tori are meshed for n = 2 only".into()));
    }
    let a = match witness(setup) {
        Ok(w) => w.a,
        Err(_) => mintori_core::TorusAlgebraVec::from_ints(&setup.model.frame().basis[0]),
    };
    let reference = clifford_with_step(2, mesh.rows(), mesh.cols(), setup.cfg.mesh.delta)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let cert = certify(&mesh, &a, &reference).map_err(|e| CliError::Certification(e.to_string()))?;
    let th = Thresholds { killing: None, ..Thresholds::default() };
    let passed = cert.passes(&th);
    let report = ReportJson::new(&cert, passed, None, setup.hash.clone());
    let stem = mesh_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "mesh".into());
    let report_path = setup.out_dir().join(format!("{stem}.verify.json"));
    write_atomic(&report_path, report.to_json().as_bytes())?;
    write!(out, "{}", summary(&report))?;
    writeln!(out, "{}", if passed { "PASS" } else { "FAIL" })?;
    if !passed {
        return Err(CliError::Certification("defects above threshold".into()));
    }
    Ok(report)
}

pub fn cmd_export_clifford(cfg: &RunConfig, out: &mut dyn Write) -> Result<PathBuf, CliError> {
    if cfg.n != 2 {
        return Err(CliError::Input("tori are meshed for n = 2 only".into()));
    }
    let m = &cfg.mesh;
    let mesh = clifford_with_step(2, m.rows, m.cols, m.delta).map_err(|e| CliError::Input(e.to_string()))?;
    let path = cfg.output.dir.join("clifford.mesh");
    meshio::write(&path, &mesh, Some(&cfg.hash()))?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(path)
}
