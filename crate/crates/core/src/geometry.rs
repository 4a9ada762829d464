//! Fubini–Study geometry of `CP^n` in homogeneous unit representatives.
//!
//! Tangent vectors at `[z]` are horizontal lifts `w` with `<w, z> = 0`; the
//! complex structure is multiplication by `i`. The Hermitian form is
//! `h(u, v) = sum u_k conj(v_k)`, with `g = Re h` and `omega = Im h`, so that
//! `omega(Ju, u) = g(u, u)`.
//!
//! Sections of the canonical bundle are written `c * det[z, .]`; the pair
//! `(e^{ia} z, e^{-i(n+1)a} c)` describes the same form. With this gauge the
//! Chern connection reads `dc + i(n+1) Im<dz, z> c`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)] // inherent f64 methods shadow Float when std is linked
use num_traits::{Float, Zero};

use crate::error::{Error, Result};
use crate::linalg::{det_columns, herm, norm};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Norm tolerance for unit representatives and horizontality.
pub const UNIT_TOL: f64 = 1e-12;
/// Relative size below which a coordinate counts as zero for the phase gauge.
const GAUGE_EPS: f64 = 1e-14;
/// Smallest Gram–Schmidt pivot accepted for the torus distribution.
const FRAME_EPS: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct AmbientPoint {
    z: Vec<C64>,
}

/// Rescales `raw` to unit norm and rotates the first nonzero coordinate onto
/// the positive real axis.
pub fn normalize_point(raw: &[C64]) -> Result<AmbientPoint> {
    let p = AmbientPoint::unit(raw.to_vec())?;
    let scale = p.z.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let lead = p.z.iter().find(|c| c.norm() > GAUGE_EPS * scale).copied();
    let phase = lead.map(|c| c.conj() / c.norm()).unwrap_or(C64::new(1.0, 0.0));
    Ok(AmbientPoint { z: p.z.into_iter().map(|c| c * phase).collect() })
}

impl AmbientPoint {
    /// Scales to unit norm without changing the phase of the representative.
    pub fn unit(raw: Vec<C64>) -> Result<Self> {
        if raw.len() < 2 {
            return Err(Error::DegenerateInput("need at least two homogeneous coordinates"));
        }
        let r = norm(&raw);
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::DegenerateInput("zero or non-finite vector"));
        }
        if (r - 1.0).abs() <= 4.0 * f64::EPSILON {
            // already unit: keep the bits so serialized points round-trip
            return Ok(AmbientPoint { z: raw });
        }
        Ok(AmbientPoint { z: raw.into_iter().map(|c| c / r).collect() })
    }

    /// The point `(1, ..., 1)/sqrt(n+1)`, whose orbit is the Clifford torus.
    pub fn clifford(n: usize) -> Self {
        let c = 1.0 / ((n + 1) as f64).sqrt();
        AmbientPoint { z: vec![C64::new(c, 0.0); n + 1] }
    }

    /// The coordinate fixed point `[0 : .. : 1 : .. : 0]`.
    pub fn fixed_point(n: usize, k: usize) -> Self {
        let mut z = vec![C64::zero(); n + 1];
        z[k] = C64::new(1.0, 0.0);
        AmbientPoint { z }
    }

    pub fn n(&self) -> usize {
        self.z.len() - 1
    }

    pub fn coords(&self) -> &[C64] {
        &self.z
    }

    /// `|z_k|^2` for `k = 0..=n`.
    pub fn moduli_sq(&self) -> Vec<f64> {
        self.z.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Same projective point, representative multiplied by `e^{i alpha}`.
    pub fn rephase(&self, alpha: f64) -> Self {
        let u = C64::from_polar(1.0, alpha);
        AmbientPoint { z: self.z.iter().map(|c| c * u).collect() }
    }

    /// Fubini–Study distance, `arccos |<z, z'>|`, evaluated without
    /// cancellation near the diagonal.
    pub fn fs_distance(&self, other: &AmbientPoint) -> f64 {
        let c = herm(&self.z, &other.z).norm();
        let mut s2 = 0.0;
        for i in 0..self.z.len() {
            for j in i + 1..self.z.len() {
                s2 += (self.z[i] * other.z[j] - self.z[j] * other.z[i]).norm_sqr();
            }
        }
        s2.sqrt().atan2(c)
    }

    fn same_rep(&self, other: &AmbientPoint) -> bool {
        self.z.len() == other.z.len()
            && self.z.iter().zip(&other.z).all(|(a, b)| (a - b).norm() <= UNIT_TOL)
    }
}

/// Horizontal tangent vector at a fixed representative.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVec {
    base: AmbientPoint,
    w: Vec<C64>,
}

impl TangentVec {
    pub fn new(base: AmbientPoint, w: Vec<C64>) -> Result<Self> {
        if w.len() != base.z.len() {
            return Err(Error::Dimension { expected: base.z.len(), got: w.len() });
        }
        let scale = norm(&w).max(1.0);
        if herm(&w, &base.z).norm() > UNIT_TOL * scale {
            return Err(Error::Domain("tangent vector is not horizontal"));
        }
        Ok(TangentVec { base, w })
    }

    /// Horizontal projection `raw - <raw, z> z`.
    pub fn project(base: &AmbientPoint, raw: &[C64]) -> Self {
        let c = herm(raw, &base.z);
        let w = raw.iter().zip(&base.z).map(|(r, z)| r - c * z).collect();
        TangentVec { base: base.clone(), w }
    }

    pub fn zero(base: &AmbientPoint) -> Self {
        TangentVec { base: base.clone(), w: vec![C64::zero(); base.z.len()] }
    }

    pub fn base(&self) -> &AmbientPoint {
        &self.base
    }

    pub fn w(&self) -> &[C64] {
        &self.w
    }

    /// Complex structure.
    pub fn j(&self) -> Self {
        self.scale(I)
    }

    pub fn scale(&self, c: C64) -> Self {
        TangentVec { base: self.base.clone(), w: self.w.iter().map(|x| x * c).collect() }
    }

    pub fn add(&self, other: &TangentVec) -> Result<Self> {
        if !self.base.same_rep(&other.base) {
            return Err(Error::BaseMismatch);
        }
        let w = self.w.iter().zip(&other.w).map(|(a, b)| a + b).collect();
        Ok(TangentVec { base: self.base.clone(), w })
    }

    pub fn norm(&self) -> f64 {
        norm(&self.w)
    }

    /// Differential of the torus element with the given angles.
    pub fn push_forward(&self, angles: &[f64]) -> Self {
        TangentVec { base: act(&self.base, angles), w: rotate(&self.w, angles) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TorusAlgebraVec {
    pub a: Vec<f64>,
}

impl TorusAlgebraVec {
    pub fn new(a: Vec<f64>) -> Self {
        TorusAlgebraVec { a }
    }

    pub fn basis(n: usize, k: usize) -> Self {
        let mut a = vec![0.0; n];
        a[k] = 1.0;
        TorusAlgebraVec { a }
    }

    pub fn from_ints(a: &[i64]) -> Self {
        TorusAlgebraVec { a: a.iter().map(|&x| x as f64).collect() }
    }
}

/// Unit `(n,0)`-form `e^{i theta} kappa'` over `base`.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalFiberData {
    pub base: AmbientPoint,
    pub theta: f64,
}

pub fn fs_metric(u: &TangentVec, v: &TangentVec) -> Result<C64> {
    if !u.base.same_rep(&v.base) {
        return Err(Error::BaseMismatch);
    }
    Ok(herm(&u.w, &v.w))
}

pub fn metric_g(u: &TangentVec, v: &TangentVec) -> Result<f64> {
    fs_metric(u, v).map(|c| c.re)
}

pub fn omega(u: &TangentVec, v: &TangentVec) -> Result<f64> {
    fs_metric(u, v).map(|c| c.im)
}

fn rotate(z: &[C64], angles: &[f64]) -> Vec<C64> {
    assert_eq!(angles.len() + 1, z.len(), "torus element has wrong dimension");
    let mut out = z.to_vec();
    for (k, &a) in angles.iter().enumerate() {
        out[k + 1] *= C64::from_polar(1.0, a);
    }
    out
}

/// `(a_1, .., a_n) . [z_0 : z_1 : ..] = [z_0 : e^{i a_1} z_1 : ..]`.
pub fn act(z: &AmbientPoint, angles: &[f64]) -> AmbientPoint {
    AmbientPoint { z: rotate(&z.z, angles) }
}

/// Unprojected generator `i a_k z_k` of the action.
pub fn orbit_velocity(z: &AmbientPoint, a: &TorusAlgebraVec) -> Vec<C64> {
    assert_eq!(a.a.len(), z.n(), "algebra vector has wrong dimension");
    let mut w = vec![C64::zero(); z.z.len()];
    for (k, &ak) in a.a.iter().enumerate() {
        w[k + 1] = I * ak * z.z[k + 1];
    }
    w
}

/// Fundamental vector field `X_a` at `z`.
pub fn torus_field(z: &AmbientPoint, a: &TorusAlgebraVec) -> TangentVec {
    TangentVec::project(z, &orbit_velocity(z, a))
}

/// Real Gram–Schmidt of `X_{e_1}, .., X_{e_n}` with respect to `g`.
///
/// The distribution is Lagrangian, so the result is also a unitary frame.
pub fn torus_frame(z: &AmbientPoint) -> Result<Vec<Vec<C64>>> {
    let n = z.n();
    let mut frame: Vec<Vec<C64>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut x = torus_field(z, &TorusAlgebraVec::basis(n, k)).w;
        for e in &frame {
            let c = herm(&x, e).re;
            for (xi, ei) in x.iter_mut().zip(e) {
                *xi -= c * ei;
            }
        }
        let r = norm(&x);
        if r < FRAME_EPS {
            return Err(Error::Regularity("torus distribution degenerates"));
        }
        frame.push(x.into_iter().map(|c| c / r).collect());
    }
    Ok(frame)
}

/// Evaluates `(e^{i theta} kappa')(vecs)`, where `kappa'` is the unit form that
/// is real positive on oriented orthonormal frames of the torus distribution.
pub fn canon_eval(k: &CanonicalFiberData, vecs: &[TangentVec]) -> Result<C64> {
    let z = &k.base;
    if vecs.len() != z.n() {
        return Err(Error::Dimension { expected: z.n(), got: vecs.len() });
    }
    if vecs.iter().any(|v| !v.base.same_rep(z)) {
        return Err(Error::BaseMismatch);
    }
    let frame = torus_frame(z)?;
    let mut cols: Vec<&[C64]> = vec![&z.z];
    cols.extend(frame.iter().map(|e| e.as_slice()));
    let e = det_columns(&cols);
    let mut cols: Vec<&[C64]> = vec![&z.z];
    cols.extend(vecs.iter().map(|v| v.w.as_slice()));
    let d = det_columns(&cols);
    Ok(C64::from_polar(1.0, k.theta) * e.conj() / e.norm() * d)
}

/// Connection form of `kappa'` along an ambient velocity `u` (any lift):
/// `nabla_u kappa' = psi(u) kappa'`, with `psi` purely imaginary.
pub fn reference_connection(z: &AmbientPoint, u: &[C64]) -> Result<C64> {
    let n1 = z.z.len() as f64;
    let mut s = C64::zero();
    for (uk, zk) in u.iter().zip(&z.z) {
        if zk.norm() < FRAME_EPS {
            return Err(Error::Regularity("coordinate vanishes"));
        }
        s += uk / zk;
    }
    Ok(I * (n1 * herm(u, &z.z).im - s.im))
}

/// Rate of the fiber phase that keeps `e^{i theta} kappa'` parallel along `u`.
pub fn transport_rate(z: &AmbientPoint, u: &[C64]) -> Result<f64> {
    Ok((I * reference_connection(z, u)?).re)
}

/// Calabi profile `u = (t r2 + l)^{1/(n+1)}` and its derivative in `r2`.
pub fn calabi_profile(r2: f64, l: f64, n: usize, t: f64) -> Result<(f64, f64)> {
    if !(l > 0.0) {
        return Err(Error::Domain("Calabi constant must be positive"));
    }
    if !(t > 0.0) || r2 < 0.0 {
        return Err(Error::Domain("need t > 0 and r2 >= 0"));
    }
    let e = 1.0 / (n as f64 + 1.0);
    let base = t * r2 + l;
    Ok((base.powf(e), t * e * base.powf(e - 1.0)))
}

/// Fubini–Study structure on `CP^n` together with its Einstein constant,
/// which is measured from the curvature of the canonical bundle rather than
/// assumed.
#[derive(Clone, Debug, PartialEq)]
pub struct FubiniStudy {
    n: usize,
    t: f64,
}

impl FubiniStudy {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "CP^n needs n >= 1");
        let zeta: Vec<C64> =
            (0..n).map(|k| C64::new(0.35 - 0.1 * k as f64, 0.2 + 0.05 * k as f64)).collect();
        let (mut best, mut t) = (0.0, f64::NAN);
        for a in 0..2 * n {
            for b in a + 1..2 * n {
                let w = chart_omega(&zeta, a, b);
                if w.abs() > best {
                    best = w.abs();
                    t = chart_curvature(&zeta, a, b) / w;
                }
            }
        }
        FubiniStudy { n, t }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `t` with `Ric = t omega`, i.e. `i dpsi = t omega` on the canonical bundle.
    pub fn einstein_constant(&self) -> f64 {
        self.t
    }

    /// Largest deviation `|i dpsi - t omega|` over coordinate planes of the
    /// affine chart `z_0 != 0` at `z`.
    pub fn ricci_defect(&self, z: &AmbientPoint) -> Result<f64> {
        let z0 = z.z[0];
        if z0.norm() < 1e-3 {
            return Err(Error::Domain("point too close to the chart boundary"));
        }
        let zeta: Vec<C64> = z.z[1..].iter().map(|c| c / z0).collect();
        let mut worst: f64 = 0.0;
        for a in 0..2 * self.n {
            for b in a + 1..2 * self.n {
                let d = chart_curvature(&zeta, a, b) - self.t * chart_omega(&zeta, a, b);
                worst = worst.max(d.abs());
            }
        }
        Ok(worst)
    }

    /// Canonical moment map `mu = -i sigma / t`, with `sigma` read off as the
    /// vertical part of the lifted action on the canonical bundle.
    pub fn moment_map(&self, z: &AmbientPoint) -> Vec<f64> {
        (0..self.n)
            .map(|k| (-I * lift_rate(z, &TorusAlgebraVec::basis(self.n, k))).re / self.t)
            .collect()
    }

    pub fn moment(&self, z: &AmbientPoint, a: &TorusAlgebraVec) -> f64 {
        self.moment_map(z).iter().zip(&a.a).map(|(m, x)| m * x).sum()
    }

    /// `sigma_z(a) = nabla_{X_a} xi . xi` for a unit section `xi` extended
    /// invariantly along the orbit through a regular point.
    pub fn sigma(&self, z: &AmbientPoint, a: &TorusAlgebraVec) -> Result<C64> {
        torus_frame(z)?;
        Ok(lift_rate(z, a))
    }
}

/// Covariant derivative rate of `g_s . (det[z, .])` along `g_s = exp(s a)`.
///
/// The pushed form is `det(g_s)^{-1} det[g_s z, .]`, so the coefficient moves
/// by `-i sum a` while the representative moves by `i a_k z_k`.
fn lift_rate(z: &AmbientPoint, a: &TorusAlgebraVec) -> C64 {
    let zdot = orbit_velocity(z, a);
    let n1 = z.z.len() as f64;
    let coeff = -I * a.a.iter().sum::<f64>();
    coeff + I * n1 * herm(&zdot, &z.z).im
}

/// Real coordinates of the chart `zeta = z / z_0`: index `2k` is `Re zeta_k`,
/// `2k+1` is `Im zeta_k`.
fn chart_point(zeta: &[C64]) -> (Vec<C64>, f64) {
    let mut z = Vec::with_capacity(zeta.len() + 1);
    z.push(C64::new(1.0, 0.0));
    z.extend_from_slice(zeta);
    let r = norm(&z);
    (z, r)
}

fn chart_dir(n: usize, a: usize) -> Vec<C64> {
    let mut d = vec![C64::zero(); n];
    d[a / 2] = if a % 2 == 0 { C64::new(1.0, 0.0) } else { I };
    d
}

/// Unit representative `(1, zeta)/r` and its derivative along `dzeta`.
pub(crate) fn chart_lift(zeta: &[C64], dzeta: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let (y, r) = chart_point(zeta);
    let dr = zeta.iter().zip(dzeta).map(|(z, dz)| (z.conj() * dz).re).sum::<f64>() / r;
    let z: Vec<C64> = y.iter().map(|c| c / r).collect();
    let mut dz: Vec<C64> = y.iter().map(|c| -c * dr / (r * r)).collect();
    for (k, dk) in dzeta.iter().enumerate() {
        dz[k + 1] += dk / r;
    }
    (z, dz)
}

fn chart_derivative(zeta: &[C64], a: usize) -> (Vec<C64>, Vec<C64>) {
    chart_lift(zeta, &chart_dir(zeta.len(), a))
}

/// `psi(d_a) / i` for the chart section `det[(1,zeta)/r, .]`.
fn chart_connection(zeta: &[C64], a: usize) -> f64 {
    let (z, dz) = chart_derivative(zeta, a);
    (z.len() as f64) * herm(&dz, &z).im
}

fn chart_omega(zeta: &[C64], a: usize, b: usize) -> f64 {
    let (z, da) = chart_derivative(zeta, a);
    let (_, db) = chart_derivative(zeta, b);
    let p = AmbientPoint { z };
    let ua = TangentVec::project(&p, &da);
    let ub = TangentVec::project(&p, &db);
    herm(&ua.w, &ub.w).im
}

/// `i dpsi (d_a, d_b)` by fourth-order central differences.
fn chart_curvature(zeta: &[C64], a: usize, b: usize) -> f64 {
    let h = 1e-3;
    let deriv = |dir: usize, comp: usize| {
        let shift = |s: f64| {
            let d = chart_dir(zeta.len(), dir);
            let moved: Vec<C64> = zeta.iter().zip(&d).map(|(z, dz)| z + dz * s).collect();
            chart_connection(&moved, comp)
        };
        (8.0 * (shift(h) - shift(-h)) - (shift(2.0 * h) - shift(-2.0 * h))) / (12.0 * h)
    };
    -(deriv(a, b) - deriv(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[(f64, f64)]) -> AmbientPoint {
        let raw: Vec<C64> = v.iter().map(|&(a, b)| C64::new(a, b)).collect();
        normalize_point(&raw).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let p = pt(&[(2.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        assert_eq!(p.coords()[0], C64::new(1.0, 0.0));
        let p = pt(&[(0.0, 0.0), (0.0, 1.0), (0.0, 0.0)]);
        assert!((p.coords()[1] - C64::new(1.0, 0.0)).norm() < 1e-15);
        let p = pt(&[(1.0, 0.0), (1.0, 0.0), (1.0, 0.0)]);
        assert!((p.coords()[2].re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(normalize_point(&[C64::zero(); 3]).is_err());
    }

    #[test]
    fn einstein_constant_of_cp2() {
        let fs = FubiniStudy::new(2);
        assert!((fs.einstein_constant() - 6.0).abs() < 1e-8, "{}", fs.einstein_constant());
    }

    #[test]
    fn fixed_point_has_zero_field() {
        let z = AmbientPoint::fixed_point(2, 0);
        let x = torus_field(&z, &TorusAlgebraVec::new(vec![0.3, -1.2]));
        assert!(x.norm() < 1e-15);
    }

    #[test]
    fn calabi_examples() {
        let (u, du) = calabi_profile(0.0, 1.0, 1, 2.0).unwrap();
        assert_eq!(u, 1.0);
        assert!((du - 1.0).abs() < 1e-15);
        assert!(calabi_profile(1.0, 0.0, 2, 6.0).is_err());
    }

    #[test]
    fn canon_eval_positive_on_frame() {
        let z = pt(&[(0.5, 0.0), (0.3, 0.4), (-0.2, 0.6)]);
        let frame = torus_frame(&z).unwrap();
        let vecs: Vec<TangentVec> =
            frame.into_iter().map(|w| TangentVec::new(z.clone(), w).unwrap()).collect();
        let k = CanonicalFiberData { base: z.clone(), theta: 0.0 };
        let v = canon_eval(&k, &vecs).unwrap();
        assert!((v - C64::new(1.0, 0.0)).norm() < 1e-12, "{v}");
        let swapped = [vecs[1].clone(), vecs[0].clone()];
        assert!((canon_eval(&k, &swapped).unwrap() + v).norm() < 1e-12);
    }

    #[test]
    fn fs_distance_is_stable_near_diagonal() {
        let a = AmbientPoint::clifford(2);
        let b = act(&a, &[1e-9, 0.0]);
        let d = a.fs_distance(&b);
        // orbit speed of e_1 at the Clifford point is sqrt(p1 (1 - p1)) = sqrt(2)/3
        assert!((d / 1e-9 - 2f64.sqrt() / 3.0).abs() < 1e-6);
    }
}
