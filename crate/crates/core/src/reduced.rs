//! The reduced three-manifold `S = X / T''` and the characteristic field.
//!
//! On the zero set `Z = mu^{-1}(R v)` a point is fixed up to `T''` by the level
//! `tau = mu(w)` and the residual angle `psi = v . (arg z_k - arg z_0)`; the
//! representative used throughout is `(sqrt p_0, sqrt p_k e^{i psi w_k})`,
//! on which `exp(alpha w)` acts as `psi -> psi + alpha`. Together with the
//! fiber phase `theta` of `e^{i theta} kappa'` this gives the chart
//! `(tau, theta, psi)` of `S`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
#[allow(unused_imports)] // inherent f64 methods shadow these when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{
    canon_eval, omega, torus_field, transport_rate, AmbientPoint, CanonicalFiberData,
    FubiniStudy, TangentVec, TorusAlgebraVec,
};
use crate::linalg::{dot, herm, solve_complex, solve_real};
use crate::subtorus::SubtorusFrame;

/// Zero-set membership tolerance on `mu`.
pub const Z_TOL: f64 = 1e-9;
/// `|tau - t_i|` below which the characteristic field is refused.
pub const ENDPOINT_MARGIN: f64 = 1e-4;
/// Tolerance used when classifying special levels.
const LEVEL_TOL: f64 = 1e-9;

pub fn wrap_angle(x: f64) -> f64 {
    let r = x - TAU * (x / TAU).floor();
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Representative of `x` in `(-pi, pi]`.
pub fn wrap_signed(x: f64) -> f64 {
    let r = wrap_angle(x);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SPoint {
    z: AmbientPoint,
    tau: f64,
    theta: f64,
    psi: f64,
}

impl SPoint {
    pub fn z(&self) -> &AmbientPoint {
        &self.z
    }

    /// Level `tau` as carried by the chart.
    pub fn chart_tau(&self) -> f64 {
        self.tau
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Residual angle in `[0, 2 pi)`.
    pub fn psi(&self) -> f64 {
        self.psi
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SVelocity {
    pub dz: TangentVec,
    pub dtheta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelKind {
    Interior,
    LPlus,
    LMinus,
    K1,
    K2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelDatum {
    pub s: f64,
    pub tau: f64,
    pub kind: LevelKind,
}

/// `(tau, theta, psi)` rates of a velocity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartRates {
    pub tau: f64,
    pub theta: f64,
    pub psi: f64,
}

#[derive(Clone, Debug)]
pub struct ReducedModel {
    fs: FubiniStudy,
    frame: SubtorusFrame,
    w: TorusAlgebraVec,
    basis: Vec<TorusAlgebraVec>,
}

impl ReducedModel {
    pub fn new(fs: FubiniStudy, frame: SubtorusFrame) -> Result<Self> {
        if fs.n() != frame.n() {
            return Err(Error::Dimension { expected: fs.n(), got: frame.n() });
        }
        let w = TorusAlgebraVec::new(frame.w_f64());
        let basis = frame.basis_f64();
        Ok(ReducedModel { fs, frame, w, basis })
    }

    pub fn fs(&self) -> &FubiniStudy {
        &self.fs
    }

    pub fn frame(&self) -> &SubtorusFrame {
        &self.frame
    }

    pub fn n(&self) -> usize {
        self.fs.n()
    }

    pub fn w(&self) -> &TorusAlgebraVec {
        &self.w
    }

    pub fn kernel_basis(&self) -> &[TorusAlgebraVec] {
        &self.basis
    }

    /// Gauge representative of the point with level `tau` and residual angle `psi`.
    pub fn point_on_z(&self, tau: f64, psi: f64) -> Result<AmbientPoint> {
        let p = self.frame.moduli_at(&self.fs, tau);
        if p.iter().any(|&x| x < -1e-13) {
            return Err(Error::Domain("level lies outside [t1, t2]"));
        }
        let w = &self.w.a;
        let mut z = Vec::with_capacity(p.len());
        z.push(C64::new(p[0].max(0.0).sqrt(), 0.0));
        for k in 1..p.len() {
            z.push(C64::from_polar(p[k].max(0.0).sqrt(), psi * w[k - 1]));
        }
        AmbientPoint::unit(z)
    }

    pub fn chart_point(&self, tau: f64, theta: f64, psi: f64) -> Result<SPoint> {
        let psi = wrap_angle(psi);
        Ok(SPoint { z: self.point_on_z(tau, psi)?, tau, theta: wrap_angle(theta), psi })
    }

    /// Distance of `mu(z)` from the line `R v`.
    pub fn z_residual(&self, z: &AmbientPoint) -> f64 {
        let mu = self.fs.moment_map(z);
        let v = self.frame.v.to_f64();
        let c = dot(&mu, &v) / dot(&v, &v);
        mu.iter().zip(&v).map(|(m, x)| (m - c * x).powi(2)).sum::<f64>().sqrt()
    }

    /// Gauge-normalized `S`-point through `z` with fiber phase `theta`.
    pub fn make_spoint(&self, z: &AmbientPoint, theta: f64) -> Result<SPoint> {
        if z.n() != self.n() {
            return Err(Error::Dimension { expected: self.n(), got: z.n() });
        }
        let residual = self.z_residual(z);
        if residual > Z_TOL {
            return Err(Error::Membership { residual });
        }
        let tau = dot(&self.fs.moment_map(z), &self.w.a);
        let c = z.coords();
        let arg = |k: usize| if c[k].norm() > 0.0 { c[k].arg() } else { 0.0 };
        let psi: f64 = self
            .frame
            .v
            .as_slice()
            .iter()
            .enumerate()
            .map(|(k, &vk)| vk as f64 * (arg(k + 1) - arg(0)))
            .sum();
        self.chart_point(tau, theta, psi)
    }

    /// `tau = mu(z) . w`, recomputed from the moment map.
    pub fn tau(&self, s: &SPoint) -> f64 {
        dot(&self.fs.moment_map(&s.z), &self.w.a)
    }

    fn fields(&self, z: &AmbientPoint) -> (Vec<TangentVec>, TangentVec) {
        let xb = self.basis.iter().map(|b| torus_field(z, b)).collect();
        (xb, torus_field(z, &self.w))
    }

    /// `h = (e^{i theta} kappa')(X_{b_1}, .., X_{b_{n-1}}, X_w)`.
    pub fn h_value(&self, s: &SPoint) -> Result<C64> {
        let (mut vecs, xw) = self.fields(&s.z);
        vecs.push(xw);
        canon_eval(&CanonicalFiberData { base: s.z.clone(), theta: s.theta }, &vecs)
    }

    pub fn f_value(&self, s: &SPoint) -> Result<f64> {
        Ok(self.h_value(s)?.re)
    }

    /// Generator of the residual circle action.
    pub fn aw_field(&self, s: &SPoint) -> SVelocity {
        SVelocity { dz: torus_field(&s.z, &self.w), dtheta: 0.0 }
    }

    /// Component of `X_w` in `H'`, the Hermitian complement of `span_C X_b`.
    fn h_prime_generator(&self, z: &AmbientPoint) -> Result<TangentVec> {
        let (xb, xw) = self.fields(z);
        let m = xb.len();
        let mut gram = vec![C64::new(0.0, 0.0); m * m];
        let mut rhs = vec![C64::new(0.0, 0.0); m];
        for i in 0..m {
            for j in 0..m {
                gram[i * m + j] = herm(xb[j].w(), xb[i].w());
            }
            rhs[i] = herm(xw.w(), xb[i].w());
        }
        let c = solve_complex(&gram, &rhs).ok_or(Error::Regularity("T'' orbit degenerates"))?;
        let mut e = xw;
        for (cj, xj) in c.iter().zip(&xb) {
            e = e.add(&xj.scale(-cj))?;
        }
        Ok(e)
    }

    fn lift(&self, s: &SPoint, dz: TangentVec) -> Result<SVelocity> {
        let dtheta = transport_rate(&s.z, dz.w())?;
        Ok(SVelocity { dz, dtheta })
    }

    /// `A_w^H`: projection of `A_w` to `H'`, lifted with parallel fiber phase.
    pub fn horizontal_aw(&self, s: &SPoint) -> Result<SVelocity> {
        let e = self.h_prime_generator(&s.z)?;
        self.lift(s, e)
    }

    /// `J A_w^H`.
    pub fn j_horizontal_aw(&self, s: &SPoint) -> Result<SVelocity> {
        let e = self.h_prime_generator(&s.z)?.j();
        self.lift(s, e)
    }

    fn check_interior(&self, s: &SPoint) -> Result<()> {
        let tau = s.tau;
        if tau - self.frame.t1 < ENDPOINT_MARGIN || self.frame.t2 - tau < ENDPOINT_MARGIN {
            return Err(Error::Regularity("endpoint-adjacent level"));
        }
        Ok(())
    }

    /// Characteristic field: `dz in H'` with `rho'(W) = 1`, solved as a real
    /// 2x2 system on the complex line `H'`, plus the parallel fiber phase.
    pub fn w_field(&self, s: &SPoint) -> Result<SVelocity> {
        self.check_interior(s)?;
        let e = self.h_prime_generator(&s.z)?;
        let (mut vecs, _) = self.fields(&s.z);
        vecs.push(e.clone());
        let r = canon_eval(&CanonicalFiberData { base: s.z.clone(), theta: s.theta }, &vecs)?;
        if r.norm() < 1e-14 {
            return Err(Error::SingularField);
        }
        // W = a e + b J e; rho'(W) = a r + b (i r)
        let ab = solve_real(&[r.re, -r.im, r.im, r.re], &[1.0, 0.0]).ok_or(Error::SingularField)?;
        let dz = e.scale(C64::new(ab[0], ab[1]));
        self.lift(s, dz)
    }

    /// `rho'(V) = kappa(X_{b_1}, .., X_{b_{n-1}}, dz)`.
    pub fn rho_prime(&self, s: &SPoint, vel: &SVelocity) -> Result<C64> {
        let (mut vecs, _) = self.fields(&s.z);
        vecs.push(vel.dz.clone());
        canon_eval(&CanonicalFiberData { base: s.z.clone(), theta: s.theta }, &vecs)
    }

    /// Rates of `(tau, theta, psi)`: `tau' = omega(X_w, dz)` by the moment
    /// identity and `psi' = v . d(arg z_k - arg z_0)`.
    pub fn chart_rates(&self, s: &SPoint, vel: &SVelocity) -> Result<ChartRates> {
        let xw = torus_field(&s.z, &self.w);
        let tau = omega(&xw, &vel.dz)?;
        let z = s.z.coords();
        let dz = vel.dz.w();
        if z.iter().any(|c| c.norm() == 0.0) {
            return Err(Error::Regularity("coordinate vanishes"));
        }
        let d0 = (dz[0] / z[0]).im;
        let psi = self
            .frame
            .v
            .as_slice()
            .iter()
            .enumerate()
            .map(|(k, &vk)| vk as f64 * ((dz[k + 1] / z[k + 1]).im - d0))
            .sum();
        Ok(ChartRates { tau, theta: vel.dtheta, psi })
    }

    pub fn circle_act(&self, s: &SPoint, alpha: f64) -> SPoint {
        SPoint { theta: wrap_angle(s.theta + alpha), ..s.clone() }
    }

    pub fn minus_act(&self, s: &SPoint) -> SPoint {
        self.circle_act(s, PI)
    }

    /// `h` at `theta = 0` on the orbit at level `tau`.
    pub fn h0(&self, tau: f64) -> Result<f64> {
        Ok(self.h_value(&self.chart_point(tau, 0.0, 0.0)?)?.re)
    }

    /// Tabulates `h_0`, checking that a second representative of each level
    /// gives the same value.
    pub fn h0_profile(&self, taus: &[f64]) -> Result<Vec<(f64, f64)>> {
        taus.iter()
            .map(|&tau| {
                let a = self.h_value(&self.chart_point(tau, 0.0, 0.0)?)?;
                let b = self.h_value(&self.chart_point(tau, 0.0, 2.399_963)?)?;
                if (a - b).norm() > 1e-9 || a.im.abs() > 1e-9 {
                    return Err(Error::ModelViolation("h_0 is not R-invariant"));
                }
                Ok((tau, a.re))
            })
            .collect()
    }

    /// Value of `f` on `L_+` (`tau = 0`, `theta = 0`).
    pub fn f_plus(&self) -> Result<f64> {
        self.h0(0.0)
    }

    /// Point on `f = s` with `theta = 0` (or `pi` for `s < 0`) and `tau > 0`.
    pub fn seed_on_level(&self, s: f64) -> Result<SPoint> {
        let fp = self.f_plus()?;
        let target = s.abs();
        if !(target > 0.0 && target < fp) {
            return Err(Error::Domain("level must lie in (f-, 0) or (0, f+)"));
        }
        let theta = if s > 0.0 { 0.0 } else { PI };
        let (mut lo, mut hi) = (0.0, self.frame.t2);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.h0(mid)? > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.chart_point(0.5 * (lo + hi), theta, 0.0)
    }

    pub fn level_datum(&self, s: &SPoint) -> Result<LevelDatum> {
        let f = self.f_value(s).unwrap_or(0.0);
        let tau = s.tau;
        let th = wrap_signed(s.theta);
        let kind = if (tau - self.frame.t1).abs() < LEVEL_TOL {
            LevelKind::K1
        } else if (self.frame.t2 - tau).abs() < LEVEL_TOL {
            LevelKind::K2
        } else if tau.abs() < LEVEL_TOL && th.abs() < LEVEL_TOL {
            LevelKind::LPlus
        } else if tau.abs() < LEVEL_TOL && (th.abs() - PI).abs() < LEVEL_TOL {
            LevelKind::LMinus
        } else {
            LevelKind::Interior
        };
        Ok(LevelDatum { s: f, tau, kind })
    }

    /// `Q = v^T G^{-1} v` with `G` the Gram matrix of the `X_{e_k}`; the
    /// closed-form `W` in this chart is `tau' = sin(theta)/(Q h_0)`,
    /// `psi' = cos(theta)/h_0`, `theta' = -t tau cos(theta)/h_0`.
    pub fn gram_q(&self, tau: f64) -> Result<f64> {
        let z = self.point_on_z(tau, 0.0)?;
        let n = self.n();
        let x: Vec<TangentVec> =
            (0..n).map(|k| torus_field(&z, &TorusAlgebraVec::basis(n, k))).collect();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                g[i * n + j] = herm(x[i].w(), x[j].w()).re;
            }
        }
        let v = self.frame.v.to_f64();
        let y = solve_real(&g, &v).ok_or(Error::Regularity("torus distribution degenerates"))?;
        Ok(dot(&v, &y))
    }
}
