//! Numerical certification of meshed tori: Lagrangian and minimal defects,
//! the Killing-length proxy for non-flatness, Hausdorff distances and orbit
//! volumes.
//!
//! Derivatives are taken on the projector `P = z z*`, which is independent
//! of the phase of the representative. For a horizontal lift, `(I - P) P' z`
//! is the tangent vector and `(I - P) P'' z` its covariant derivative, so
//! second fundamental forms come out of plain finite differences. Every
//! quantity is computed with stencil spacing `m = 1` and `m = 2` and combined
//! by Richardson extrapolation; the raw `m = 1` values are kept for order
//! studies.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64 as C64;
#[allow(unused_imports)] // inherent f64 methods shadow Float when std is linked
use num_traits::{Float, Zero};

use crate::error::{Error, Result};
use crate::geometry::{torus_field, AmbientPoint, FubiniStudy, TorusAlgebraVec};
use crate::kdtree::KdTree;
use crate::linalg::{det_real, herm};
use crate::subtorus::SubtorusFrame;
use crate::torus::{TorusMesh, REACH};

/// Largest accepted ratio of principal stretches of the discrete immersion.
pub const MAX_CONDITION: f64 = 1e6;
/// Largest accepted gap between the `m = 1` and `m = 2` curvature estimates.
pub const MAX_RICHARDSON_GAP: f64 = 1.0;

type Mat = Vec<C64>;

fn projector(z: &[C64]) -> Mat {
    let d = z.len();
    let mut p = vec![C64::zero(); d * d];
    for i in 0..d {
        for j in 0..d {
            p[i * d + j] = z[i] * z[j].conj();
        }
    }
    p
}

fn combo(terms: &[(f64, &Mat)]) -> Mat {
    let mut out = vec![C64::zero(); terms[0].1.len()];
    for (c, m) in terms {
        for (o, x) in out.iter_mut().zip(m.iter()) {
            *o += x * *c;
        }
    }
    out
}

/// `(I - P) A z` for the base point `z`.
fn horizontal(a: &Mat, z: &[C64]) -> Vec<C64> {
    let d = z.len();
    let az: Vec<C64> = (0..d).map(|i| (0..d).map(|j| a[i * d + j] * z[j]).sum()).collect();
    let c = herm(&az, z);
    az.iter().zip(z).map(|(x, zi)| x - zi * c).collect()
}

fn re(u: &[C64], v: &[C64]) -> f64 {
    herm(u, v).re
}

fn sub_scaled(u: &mut [C64], v: &[C64], c: f64) {
    for (a, b) in u.iter_mut().zip(v) {
        *a -= b * c;
    }
}

/// Local geometry at one node from one stencil spacing.
struct Jet {
    lagrangian: f64,
    mean: Vec<C64>,
    gauss: f64,
    condition: f64,
}

fn jet<S: Fn(i32, i32) -> Vec<C64>>(sample: &S, m: i32, hu: f64, hv: f64) -> Result<Jet> {
    let z = sample(0, 0);
    let p = |a: i32, b: i32| projector(&sample(a, b));
    let p0 = projector(&z);
    let (mu, mv) = (m as f64 * hu, m as f64 * hv);
    let pu = combo(&[(0.5 / mu, &p(m, 0)), (-0.5 / mu, &p(-m, 0))]);
    let pv = combo(&[(0.5 / mv, &p(0, m)), (-0.5 / mv, &p(0, -m))]);
    let puu = combo(&[(0.25 / (mu * mu), &p(2 * m, 0)), (-0.5 / (mu * mu), &p0), (0.25 / (mu * mu), &p(-2 * m, 0))]);
    let pvv = combo(&[(0.25 / (mv * mv), &p(0, 2 * m)), (-0.5 / (mv * mv), &p0), (0.25 / (mv * mv), &p(0, -2 * m))]);
    let c = 0.25 / (mu * mv);
    let puv = combo(&[(c, &p(m, m)), (-c, &p(m, -m)), (-c, &p(-m, m)), (c, &p(-m, -m))]);

    let xu = horizontal(&pu, &z);
    let xv = horizontal(&pv, &z);
    let (guu, guv, gvv) = (re(&xu, &xu), re(&xu, &xv), re(&xv, &xv));
    let det = guu * gvv - guv * guv;
    let tr = guu + gvv;
    let disc = (0.25 * (guu - gvv).powi(2) + guv * guv).sqrt();
    let (lmax, lmin) = (0.5 * tr + disc, 0.5 * tr - disc);
    if !(lmin > 0.0) || !det.is_finite() || !(det > 0.0) {
        return Err(Error::DegenerateMesh("tangent vectors are dependent"));
    }
    let condition = (lmax / lmin).sqrt();

    let lagrangian = herm(&xu, &xv).im / (guu * gvv).sqrt();

    // normal parts of the second derivatives
    let normal = |a: &Mat| -> Vec<C64> {
        let mut y = horizontal(a, &z);
        let (bu, bv) = (re(&y, &xu), re(&y, &xv));
        let cu = (gvv * bu - guv * bv) / det;
        let cv = (guu * bv - guv * bu) / det;
        sub_scaled(&mut y, &xu, cu);
        sub_scaled(&mut y, &xv, cv);
        y
    };
    let iuu = normal(&puu);
    let ivv = normal(&pvv);
    let iuv = normal(&puv);
    let mean: Vec<C64> = (0..z.len())
        .map(|k| (iuu[k] * gvv - iuv[k] * (2.0 * guv) + ivv[k] * guu) / det)
        .collect();
    let gauss = 1.0 + (re(&iuu, &ivv) - re(&iuv, &iuv)) / det;
    Ok(Jet { lagrangian, mean, gauss, condition })
}

/// Defects at a single node of a parametrized surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeDefects {
    pub lagrangian: f64,
    pub mean_curvature: f64,
    pub lagrangian_raw: f64,
    pub mean_curvature_raw: f64,
    /// `|H_1 - H_2|` between the two stencil spacings.
    pub gap: f64,
    /// Intrinsic curvature from the Gauss equation, `m = 1`.
    pub gauss: f64,
    pub condition: f64,
}

/// Defects of the surface `sample(a, b) = F(u0 + a hu, v0 + b hv)` at
/// `(u0, v0)`. Samples are needed for `|a|, |b| <= 4`.
pub fn surface_defects<S: Fn(i32, i32) -> Vec<C64>>(sample: S, hu: f64, hv: f64) -> Result<NodeDefects> {
    let j1 = jet(&sample, 1, hu, hv)?;
    let j2 = jet(&sample, 2, hu, hv)?;
    let rich: Vec<C64> = j1.mean.iter().zip(&j2.mean).map(|(a, b)| (a * 4.0 - b) / 3.0).collect();
    let diff: Vec<C64> = j1.mean.iter().zip(&j2.mean).map(|(a, b)| a - b).collect();
    let nrm = |u: &[C64]| re(u, u).max(0.0).sqrt();
    Ok(NodeDefects {
        lagrangian: ((4.0 * j1.lagrangian - j2.lagrangian) / 3.0).abs(),
        mean_curvature: nrm(&rich),
        lagrangian_raw: j1.lagrangian.abs(),
        mean_curvature_raw: nrm(&j1.mean),
        gap: nrm(&diff),
        gauss: j1.gauss,
        condition: j1.condition.max(j2.condition),
    })
}

/// How derivatives are sampled on a mesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Parametric when the mesh carries a row stencil, grid otherwise.
    Auto,
    /// Neighbouring grid points.
    Grid,
    /// Row stencil at its own step, columns by the exact circle action.
    Parametric,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshDefects {
    pub parametric: bool,
    pub step_u: f64,
    pub step_v: f64,
    pub lagrangian: f64,
    pub mean_curvature: f64,
    pub lagrangian_raw: f64,
    pub mean_curvature_raw: f64,
    pub gap: f64,
    pub gauss_min: f64,
    pub gauss_max: f64,
    pub condition: f64,
}

fn node_sampler<'a>(mesh: &'a TorusMesh, parametric: bool, i: usize, j: usize) -> impl Fn(i32, i32) -> Vec<C64> + 'a {
    let (rows, cols) = (mesh.rows() as i64, mesh.cols() as i64);
    let phi0 = TAU * j as f64 / cols as f64;
    let st = mesh.stencil();
    let delta = st.map_or(0.0, |s| s.delta);
    move |a: i32, b: i32| {
        if parametric {
            st.expect("parametric sampling needs a stencil").sample(i, a, phi0 + b as f64 * delta)
        } else {
            let r = (i as i64 + a as i64).rem_euclid(rows) as usize;
            let c = (j as i64 + b as i64).rem_euclid(cols) as usize;
            mesh.point(r, c).coords().to_vec()
        }
    }
}

fn resolve(mesh: &TorusMesh, method: Method) -> Result<(bool, f64, f64)> {
    let parametric = match method {
        Method::Auto => mesh.stencil().is_some(),
        Method::Grid => false,
        Method::Parametric => {
            if mesh.stencil().is_none() {
                return Err(Error::Domain("mesh has no row stencil"));
            }
            true
        }
    };
    if parametric {
        let d = mesh.stencil().map(|s| s.delta).unwrap_or(0.0);
        Ok((true, d, d))
    } else {
        if mesh.rows() < 2 * 2 * REACH || mesh.cols() < 2 * 2 * REACH {
            return Err(Error::DegenerateMesh("grid too small for the difference stencils"));
        }
        let (hu, hv) = mesh.spacing();
        Ok((false, hu, hv))
    }
}

/// All defects of a mesh in one sweep.
pub fn mesh_defects(mesh: &TorusMesh, method: Method) -> Result<MeshDefects> {
    let (parametric, hu, hv) = resolve(mesh, method)?;
    let mut out = MeshDefects {
        parametric,
        step_u: hu,
        step_v: hv,
        lagrangian: 0.0,
        mean_curvature: 0.0,
        lagrangian_raw: 0.0,
        mean_curvature_raw: 0.0,
        gap: 0.0,
        gauss_min: f64::INFINITY,
        gauss_max: f64::NEG_INFINITY,
        condition: 0.0,
    };
    for i in 0..mesh.rows() {
        for j in 0..mesh.cols() {
            let d = surface_defects(node_sampler(mesh, parametric, i, j), hu, hv)?;
            if d.condition > MAX_CONDITION {
                return Err(Error::DegenerateMesh("immersion condition number above bound"));
            }
            out.lagrangian = out.lagrangian.max(d.lagrangian);
            out.mean_curvature = out.mean_curvature.max(d.mean_curvature);
            out.lagrangian_raw = out.lagrangian_raw.max(d.lagrangian_raw);
            out.mean_curvature_raw = out.mean_curvature_raw.max(d.mean_curvature_raw);
            out.gap = out.gap.max(d.gap);
            out.gauss_min = out.gauss_min.min(d.gauss);
            out.gauss_max = out.gauss_max.max(d.gauss);
            out.condition = out.condition.max(d.condition);
        }
    }
    Ok(out)
}

/// Worst condition number of the discrete tangent frame on the grid points.
pub fn immersion_condition(mesh: &TorusMesh) -> Result<f64> {
    let (parametric, hu, hv) = resolve(mesh, Method::Auto)?;
    let mut worst: f64 = 0.0;
    for i in 0..mesh.rows() {
        for j in 0..mesh.cols() {
            let c = jet(&node_sampler(mesh, parametric, i, j), 1, hu, hv)?.condition;
            worst = worst.max(c);
        }
    }
    if worst > MAX_CONDITION {
        return Err(Error::DegenerateMesh("immersion condition number above bound"));
    }
    Ok(worst)
}

pub fn lagrangian_defect_with(mesh: &TorusMesh, method: Method) -> Result<f64> {
    Ok(mesh_defects(mesh, method)?.lagrangian)
}

/// Sup of `|omega(X_u, X_v)| / (|X_u| |X_v|)`.
pub fn lagrangian_defect(mesh: &TorusMesh) -> Result<f64> {
    lagrangian_defect_with(mesh, Method::Auto)
}

pub fn mean_curvature_defect_with(mesh: &TorusMesh, method: Method) -> Result<f64> {
    let d = mesh_defects(mesh, method)?;
    if d.gap > MAX_RICHARDSON_GAP {
        return Err(Error::Resolution { gap: d.gap });
    }
    Ok(d.mean_curvature)
}

/// Sup-norm of the mean curvature vector.
pub fn mean_curvature_defect(mesh: &TorusMesh) -> Result<f64> {
    mean_curvature_defect_with(mesh, Method::Auto)
}

/// `max - min` of `|X_a|^2` over the mesh points.
pub fn killing_variation(mesh: &TorusMesh, a: &TorusAlgebraVec) -> f64 {
    let (lo, hi) = mesh.points().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), z| {
        let l = torus_field(z, a).norm().powi(2);
        (lo.min(l), hi.max(l))
    });
    hi - lo
}

/// Real coordinates of `z z*`, isometric for the Frobenius norm.
fn projector_coords(z: &AmbientPoint) -> Vec<f64> {
    let c = z.coords();
    let mut out = Vec::with_capacity(c.len() * c.len());
    for zi in c {
        out.push(zi.norm_sqr());
    }
    let s = core::f64::consts::SQRT_2;
    for i in 0..c.len() {
        for j in i + 1..c.len() {
            let e = c[i] * c[j].conj();
            out.push(s * e.re);
            out.push(s * e.im);
        }
    }
    out
}

fn directed(from: &[AmbientPoint], to: &[AmbientPoint]) -> f64 {
    let dim = to[0].coords().len().pow(2);
    let coords: Vec<f64> = to.iter().flat_map(projector_coords).collect();
    let tree = KdTree::new(dim, coords);
    // The chordal distance of projectors is monotone in the Fubini–Study
    // distance, so the worst pair can be tracked in chordal terms. A query
    // that finds any point closer than the current worst cannot raise it.
    let mut worst = (0.0, 0, 0);
    for (i, z) in from.iter().enumerate() {
        let (k, d2) = tree.nearest_until(&projector_coords(z), worst.0).expect("nonempty mesh");
        if d2 > worst.0 {
            worst = (d2, i, k);
        }
    }
    if worst.0 == 0.0 {
        return 0.0;
    }
    from[worst.1].fs_distance(&to[worst.2])
}

/// Symmetric Hausdorff distance between the point sets of two meshes.
pub fn hausdorff_to(a: &TorusMesh, b: &TorusMesh) -> f64 {
    directed(a.points(), b.points()).max(directed(b.points(), a.points()))
}

/// `(2 pi)^n sqrt(det G)` for the Gram matrix of `X_{e_1}, .., X_{e_n}` at `z`.
pub fn orbit_volume(z: &AmbientPoint) -> f64 {
    let n = z.n();
    let x: Vec<_> = (0..n).map(|k| torus_field(z, &TorusAlgebraVec::basis(n, k))).collect();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] = re(x[i].w(), x[j].w());
        }
    }
    TAU.powi(n as i32) * det_real(&g, n).max(0.0).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct VolumeProfile {
    /// `(tau, volume)` for the levels `tau v`.
    pub rows: Vec<(f64, f64)>,
    pub argmax: f64,
}

/// Orbit volumes along the segment `tau v` of the moment polytope.
pub fn orbit_volume_profile(fs: &FubiniStudy, frame: &SubtorusFrame, taus: &[f64]) -> Result<VolumeProfile> {
    let mut rows = Vec::with_capacity(taus.len());
    for &tau in taus {
        rows.push((tau, orbit_volume(&frame.orbit_point(fs, tau)?)));
    }
    let argmax = rows
        .iter()
        .copied()
        .fold((f64::NAN, f64::NEG_INFINITY), |best, r| if r.1 > best.1 { r } else { best })
        .0;
    Ok(VolumeProfile { rows, argmax })
}

/// Uniform grid of `count` interior levels of `[t1, t2]`.
pub fn segment_grid(frame: &SubtorusFrame, count: usize) -> Vec<f64> {
    (0..count).map(|i| frame.t1 + (frame.t2 - frame.t1) * (i as f64 + 0.5) / count as f64).collect()
}

/// Acceptance thresholds for a certificate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub lagrangian: f64,
    pub mean_curvature: f64,
    /// Minimal Killing variation, or `None` when flat tori are acceptable.
    pub killing: Option<f64>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { lagrangian: 1e-6, mean_curvature: 1e-4, killing: Some(1e-6) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertReport {
    pub lagrangian_defect: f64,
    pub mean_curvature_defect: f64,
    pub killing_variation: f64,
    pub hausdorff_to_clifford: f64,
    pub rows: usize,
    pub cols: usize,
    pub parametric: bool,
    pub step_u: f64,
    pub step_v: f64,
    pub lagrangian_raw: f64,
    pub mean_curvature_raw: f64,
    pub richardson_gap: f64,
    pub gauss_min: f64,
    pub gauss_max: f64,
    pub condition: f64,
    pub killing_field: Vec<f64>,
}

impl CertReport {
    pub fn passes(&self, th: &Thresholds) -> bool {
        self.lagrangian_defect < th.lagrangian
            && self.mean_curvature_defect < th.mean_curvature
            && th.killing.is_none_or(|k| self.killing_variation > k)
    }
}

/// Full certificate of `mesh` with Killing field `a`, measured against the
/// Clifford mesh `clifford`.
pub fn certify(mesh: &TorusMesh, a: &TorusAlgebraVec, clifford: &TorusMesh) -> Result<CertReport> {
    if a.a.len() != mesh.n() {
        return Err(Error::Dimension { expected: mesh.n(), got: a.a.len() });
    }
    let d = mesh_defects(mesh, Method::Auto)?;
    if d.gap > MAX_RICHARDSON_GAP {
        return Err(Error::Resolution { gap: d.gap });
    }
    Ok(CertReport {
        lagrangian_defect: d.lagrangian,
        mean_curvature_defect: d.mean_curvature,
        killing_variation: killing_variation(mesh, a),
        hausdorff_to_clifford: hausdorff_to(mesh, clifford),
        rows: mesh.rows(),
        cols: mesh.cols(),
        parametric: d.parametric,
        step_u: d.step_u,
        step_v: d.step_v,
        lagrangian_raw: d.lagrangian_raw,
        mean_curvature_raw: d.mean_curvature_raw,
        richardson_gap: d.gap,
        gauss_min: d.gauss_min,
        gauss_max: d.gauss_max,
        condition: d.condition,
        killing_field: a.a.clone(),
    })
}
