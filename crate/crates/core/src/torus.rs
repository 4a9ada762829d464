//! Doubly periodic meshes of immersed tori in `CP^2`.
//!
//! A closed trajectory of the characteristic field is swept by the circle
//! `T'' = exp(R b)`. Rows follow the trajectory in flow time and columns the
//! `T''` angle. After `q` returns the residual angle has advanced by `2 pi p`,
//! which lands on the start only up to an element of `T''`; the row phases
//! are sheared linearly in time by that element so that the grid closes up
//! exactly in both directions.
//!
//! Besides the grid, a mesh built from an analytic or integrated surface
//! keeps a row stencil: each row point re-sampled at flow offsets
//! `k * delta`, `|k| <= 4`, so defects can be evaluated by parametric finite
//! differences at a step independent of the grid spacing.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64 as C64;
#[allow(unused_imports)] // inherent f64 methods shadow these when std is linked
use num_traits::Float;

use crate::dynamics::{advance, FlowOptions, PeriodicOrbit, State};
use crate::error::{Error, Result};
use crate::geometry::AmbientPoint;
use crate::reduced::{wrap_signed, ReducedModel};

/// Offsets stored per row in a [`ParamStencil`]: `-REACH..=REACH`.
pub const REACH: usize = 4;
/// Default parametric finite-difference step.
pub const DEFAULT_DELTA: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshKind {
    Clifford,
    Orbit,
    External,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeshInfo {
    pub kind: MeshKind,
    pub weight: Vec<i64>,
    /// Integer generator of the column circle.
    pub generator: Vec<i64>,
    pub p: i64,
    pub q: u32,
    pub level: f64,
    /// Length of the row parameter over one period.
    pub row_period: f64,
}

impl MeshInfo {
    pub fn external() -> Self {
        MeshInfo {
            kind: MeshKind::External,
            weight: Vec::new(),
            generator: Vec::new(),
            p: 0,
            q: 0,
            level: f64::NAN,
            row_period: TAU,
        }
    }
}

/// Row samples at flow offsets for parametric differences.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamStencil {
    pub delta: f64,
    generator: Vec<f64>,
    /// `rows[i][k]` is the row curve at offset `(k - REACH) * delta`, column angle 0.
    rows: Vec<Vec<Vec<C64>>>,
}

impl ParamStencil {
    /// `rows[i][k]` is row `i` at flow offset `(k - REACH) * delta` and column
    /// angle 0; `generator` is the column circle as a real weight.
    pub fn new(delta: f64, generator: Vec<f64>, rows: Vec<Vec<Vec<C64>>>) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::DegenerateMesh("stencil step must be positive"));
        }
        let d = generator.len() + 1;
        if rows.iter().any(|r| r.len() != 2 * REACH + 1 || r.iter().any(|z| z.len() != d)) {
            return Err(Error::DegenerateMesh("stencil rows have the wrong shape"));
        }
        Ok(ParamStencil { delta, generator, rows })
    }

    pub fn generator(&self) -> &[f64] {
        &self.generator
    }

    pub fn rows(&self) -> &[Vec<Vec<C64>>] {
        &self.rows
    }

    /// Surface point at row `i`, flow offset `a * delta` and column angle `phi`.
    pub fn sample(&self, i: usize, a: i32, phi: f64) -> Vec<C64> {
        let k = (a + REACH as i32) as usize;
        let base = &self.rows[i][k];
        let mut z = base.clone();
        for (zk, g) in z[1..].iter_mut().zip(&self.generator) {
            *zk *= C64::from_polar(1.0, phi * g);
        }
        z
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TorusMesh {
    rows: usize,
    cols: usize,
    points: Vec<AmbientPoint>,
    pub info: MeshInfo,
    stencil: Option<ParamStencil>,
}

impl TorusMesh {
    pub fn from_points(rows: usize, cols: usize, points: Vec<AmbientPoint>, info: MeshInfo) -> Result<Self> {
        if rows < 4 || cols < 4 {
            return Err(Error::DegenerateMesh("need at least 4 x 4 samples"));
        }
        if points.len() != rows * cols {
            return Err(Error::Dimension { expected: rows * cols, got: points.len() });
        }
        let n = points[0].n();
        if points.iter().any(|p| p.n() != n) {
            return Err(Error::DegenerateMesh("mixed dimensions"));
        }
        Ok(TorusMesh { rows, cols, points, info, stencil: None })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n(&self) -> usize {
        self.points[0].n()
    }

    pub fn point(&self, i: usize, j: usize) -> &AmbientPoint {
        &self.points[i * self.cols + j]
    }

    pub fn points(&self) -> &[AmbientPoint] {
        &self.points
    }

    pub fn stencil(&self) -> Option<&ParamStencil> {
        self.stencil.as_ref()
    }

    /// Attaches a row stencil; its centre samples must reproduce column 0.
    pub fn with_stencil(mut self, stencil: ParamStencil) -> Result<Self> {
        if stencil.rows.len() != self.rows || stencil.generator.len() != self.n() {
            return Err(Error::DegenerateMesh("stencil does not match the grid"));
        }
        for i in 0..self.rows {
            let z = AmbientPoint::unit(stencil.sample(i, 0, 0.0))?;
            if z.fs_distance(self.point(i, 0)) > 1e-9 {
                return Err(Error::DegenerateMesh("stencil disagrees with the grid"));
            }
        }
        self.stencil = Some(stencil);
        Ok(self)
    }

    /// Drops the row stencil, leaving only grid samples.
    pub fn without_stencil(&self) -> Self {
        TorusMesh { stencil: None, ..self.clone() }
    }

    /// Row and column parameter spacing.
    pub fn spacing(&self) -> (f64, f64) {
        (self.info.row_period / self.rows as f64, TAU / self.cols as f64)
    }

    fn assemble(rows: usize, cols: usize, stencil: ParamStencil, info: MeshInfo) -> Self {
        let points = (0..rows)
            .flat_map(|i| {
                let st = &stencil;
                (0..cols).map(move |j| {
                    let phi = TAU * j as f64 / cols as f64;
                    AmbientPoint::unit(st.sample(i, 0, phi)).expect("stencil points are unit")
                })
            })
            .collect();
        TorusMesh { rows, cols, points, info, stencil: Some(stencil) }
    }
}

/// Clifford torus `[1 : e^{i a} : e^{i b}] / sqrt(3)` on a uniform angle grid.
pub fn clifford(n: usize, rows: usize, cols: usize) -> Result<TorusMesh> {
    clifford_with_step(n, rows, cols, DEFAULT_DELTA)
}

pub fn clifford_with_step(n: usize, rows: usize, cols: usize, delta: f64) -> Result<TorusMesh> {
    if n != 2 {
        return Err(Error::Domain("torus meshes are implemented for CP^2"));
    }
    if rows < 4 || cols < 4 {
        return Err(Error::DegenerateMesh("need at least 4 x 4 samples"));
    }
    let c = 1.0 / 3f64.sqrt();
    let stencil_rows = (0..rows)
        .map(|i| {
            let a = TAU * i as f64 / rows as f64;
            (0..=2 * REACH)
                .map(|k| {
                    let s = a + (k as f64 - REACH as f64) * delta;
                    vec![C64::new(c, 0.0), C64::from_polar(c, s), C64::new(c, 0.0)]
                })
                .collect()
        })
        .collect();
    let stencil = ParamStencil { delta, generator: vec![0.0, 1.0], rows: stencil_rows };
    let info = MeshInfo {
        kind: MeshKind::Clifford,
        weight: Vec::new(),
        generator: vec![0, 1],
        p: 0,
        q: 0,
        level: f64::NAN,
        row_period: TAU,
    };
    Ok(TorusMesh::assemble(rows, cols, stencil, info))
}

/// Closed trajectory in the chart: after `period`, `(tau, theta)` are back
/// and `psi` has advanced by `2 pi psi_turns`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedOrbit {
    pub seed: State,
    pub period: f64,
    pub psi_turns: i64,
    pub q: u32,
    pub level: f64,
}

impl From<&PeriodicOrbit> for ClosedOrbit {
    fn from(o: &PeriodicOrbit) -> Self {
        let seed = crate::dynamics::state_of(&o.seed);
        let sign = if o.level > 0.0 { 1 } else { -1 };
        ClosedOrbit { seed, period: o.period, psi_turns: sign * o.p, q: o.q, level: o.level }
    }
}

impl ClosedOrbit {
    /// `L_+` itself: `tau = theta = 0`, one turn of `psi` at speed `1/f_+`.
    pub fn l_plus(model: &ReducedModel) -> Result<Self> {
        let fp = model.f_plus()?;
        Ok(ClosedOrbit { seed: [0.0, 0.0, 0.0], period: TAU * fp, psi_turns: 1, q: 1, level: fp })
    }
}

/// Minimal-norm `m` in `Z^2` with `v . m = p`.
fn lattice_lift(v: &[i64], b: &[i64], p: i64) -> Vec<i64> {
    // v . w0 = 1 by the extended Euclidean algorithm
    let (g, x, y) = ext_gcd(v[0], v[1]);
    debug_assert_eq!(g.abs(), 1);
    let w0 = [x * g, y * g];
    let base = [p * w0[0], p * w0[1]];
    let bb = (b[0] * b[0] + b[1] * b[1]) as f64;
    let k = (-((base[0] * b[0] + base[1] * b[1]) as f64) / bb).round() as i64;
    vec![base[0] + k * b[0], base[1] + k * b[1]]
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = ext_gcd(b, a % b);
        (g, y, x - (a / b) * y)
    }
}

/// Sweeps a closed orbit by `T''` into a `rows x cols` mesh with a row stencil
/// at step `delta`.
pub fn reconstruct(
    model: &ReducedModel,
    orbit: &ClosedOrbit,
    rows: usize,
    cols: usize,
    delta: f64,
    opts: &FlowOptions,
) -> Result<TorusMesh> {
    if model.n() != 2 {
        return Err(Error::Domain("torus meshes are implemented for CP^2"));
    }
    if rows < 16 || cols < 16 {
        return Err(Error::DegenerateMesh("need at least 16 x 16 samples"));
    }
    let frame = model.frame();
    let v = frame.v.as_slice();
    let b = &frame.basis[0];
    let w = model.w().a.clone();
    let period = orbit.period;

    // closure of the chart orbit
    let end = advance(model, orbit.seed, period, 1.0, opts)?;
    let closure = (end[0] - orbit.seed[0])
        .hypot(wrap_signed(end[1] - orbit.seed[1]))
        .hypot(end[2] - orbit.seed[2] - TAU * orbit.psi_turns as f64);
    if closure > 1e-6 {
        return Err(Error::Closure { distance: closure });
    }

    let m = lattice_lift(v, b, orbit.psi_turns);
    let shear: Vec<f64> =
        (0..2).map(|k| TAU * (m[k] as f64 - orbit.psi_turns as f64 * w[k])).collect();
    let embed = |t: f64, y: &State| -> Result<Vec<C64>> {
        let p = frame.moduli_at(model.fs(), y[0]);
        if p.iter().any(|&x| x < -1e-13) {
            return Err(Error::Domain("orbit left the moment segment"));
        }
        let mut z = vec![C64::new(p[0].max(0.0).sqrt(), 0.0)];
        for k in 0..2 {
            let phase = y[2] * w[k] + t / period * shear[k];
            z.push(C64::from_polar(p[k + 1].max(0.0).sqrt(), phase));
        }
        Ok(z)
    };

    let dt = period / rows as f64;
    let mut y = orbit.seed;
    let mut stencil_rows = Vec::with_capacity(rows);
    for i in 0..rows {
        let t = dt * i as f64;
        let mut row = vec![Vec::new(); 2 * REACH + 1];
        row[REACH] = embed(t, &y)?;
        for sign in [1.0, -1.0] {
            let mut yk = y;
            for k in 1..=REACH {
                yk = advance(model, yk, delta, sign, opts)?;
                let idx = (REACH as i64 + sign as i64 * k as i64) as usize;
                row[idx] = embed(t + sign * delta * k as f64, &yk)?;
            }
        }
        stencil_rows.push(row);
        if i + 1 < rows {
            y = advance(model, y, dt, 1.0, opts)?;
        }
    }
    let generator: Vec<f64> = b.iter().map(|&x| x as f64).collect();
    let stencil = ParamStencil { delta, generator, rows: stencil_rows };
    let info = MeshInfo {
        kind: MeshKind::Orbit,
        weight: v.to_vec(),
        generator: b.clone(),
        p: orbit.psi_turns,
        q: orbit.q,
        level: orbit.level,
        row_period: period,
    };
    let mesh = TorusMesh::assemble(rows, cols, stencil, info);
    crate::verify::immersion_condition(&mesh)?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_lift_examples() {
        assert_eq!(lattice_lift(&[2, 3], &[3, -2], 13), vec![2, 3]);
        assert_eq!(lattice_lift(&[2, 3], &[3, -2], 17), vec![4, 3]);
        let m = lattice_lift(&[2, 3], &[3, -2], 21);
        assert_eq!(2 * m[0] + 3 * m[1], 21);
    }

    #[test]
    fn clifford_mesh_is_periodic() {
        let m = clifford(2, 16, 16).unwrap();
        let st = m.stencil().unwrap();
        let a = AmbientPoint::unit(st.sample(0, 0, TAU)).unwrap();
        assert!(a.fs_distance(m.point(0, 0)) < 1e-12);
    }
}
