//! The lifted action on the total space of the canonical bundle with the
//! Calabi metric `omega_u = u pi^* omega - i t^{-1} u' b ^ conj(b)`.
//!
//! Points are written `a det[(1, zeta)/r, .]` in the affine chart `z_0 != 0`;
//! there the torus action fixes the chart gauge, so the lifted generator is
//! `(i v_k zeta_k, -i (sum v) a)`.

use alloc::vec::Vec;

use num_complex::Complex64 as C64;

use crate::error::Result;
use crate::geometry::{calabi_profile, chart_lift, AmbientPoint, FubiniStudy, TangentVec, TorusAlgebraVec};
use crate::linalg::herm;

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct CalabiPoint {
    pub zeta: Vec<C64>,
    pub a: C64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalabiTangent {
    pub dzeta: Vec<C64>,
    pub da: C64,
}

impl CalabiPoint {
    pub fn moved(&self, v: &CalabiTangent, s: f64) -> CalabiPoint {
        CalabiPoint {
            zeta: self.zeta.iter().zip(&v.dzeta).map(|(z, d)| z + d * s).collect(),
            a: self.a + v.da * s,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CalabiSpace {
    fs: FubiniStudy,
    l: f64,
}

impl CalabiSpace {
    pub fn new(fs: FubiniStudy, l: f64) -> Result<Self> {
        calabi_profile(0.0, l, fs.n(), fs.einstein_constant())?;
        Ok(CalabiSpace { fs, l })
    }

    fn profile(&self, m: &CalabiPoint) -> (f64, f64) {
        calabi_profile(m.a.norm_sqr(), self.l, self.fs.n(), self.fs.einstein_constant())
            .expect("validated at construction")
    }

    fn base(&self, m: &CalabiPoint) -> AmbientPoint {
        let (z, _) = chart_lift(&m.zeta, &m.zeta);
        AmbientPoint::unit(z).expect("chart points are nonzero")
    }

    /// `mu'(v) = u(|a|^2) mu(v)`.
    pub fn lifted_moment(&self, m: &CalabiPoint, v: &TorusAlgebraVec) -> f64 {
        self.profile(m).0 * self.fs.moment(&self.base(m), v)
    }

    pub fn lifted_field(&self, m: &CalabiPoint, v: &TorusAlgebraVec) -> CalabiTangent {
        let dzeta = m.zeta.iter().zip(&v.a).map(|(z, a)| I * a * z).collect();
        CalabiTangent { dzeta, da: -I * v.a.iter().sum::<f64>() * m.a }
    }

    pub fn omega_u(&self, m: &CalabiPoint, x: &CalabiTangent, y: &CalabiTangent) -> f64 {
        let (u, du) = self.profile(m);
        let n1 = (m.zeta.len() + 1) as f64;
        let (z, dx) = chart_lift(&m.zeta, &x.dzeta);
        let (_, dy) = chart_lift(&m.zeta, &y.dzeta);
        let p = AmbientPoint::unit(z.clone()).expect("chart points are nonzero");
        let hx = TangentVec::project(&p, &dx);
        let hy = TangentVec::project(&p, &dy);
        let base = herm(hx.w(), hy.w()).im;
        let bx = x.da + m.a * I * n1 * herm(&dx, &z).im;
        let by = y.da + m.a * I * n1 * herm(&dy, &z).im;
        u * base + 2.0 / self.fs.einstein_constant() * du * (bx * by.conj()).im
    }
}
