//! Choice of the codimension-one subtorus `T_v = exp(ker v)`.
//!
//! The moment polytope of `CP^n` is a simplex; with the canonical moment map
//! its vertices are `(delta_jk - 1/(n+1)) / 2`, which makes every incidence
//! question exactly decidable over the rationals.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent f64 methods shadow these when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::geometry::{metric_g, torus_field, AmbientPoint, FubiniStudy, TorusAlgebraVec};
use crate::linalg::{det_real, gcd, solve_in_span, solve_real, Rational};
use num_complex::Complex64 as C64;

/// Primitive nonzero integer weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightVector {
    v: Vec<i64>,
}

impl WeightVector {
    pub fn new(v: Vec<i64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::DegenerateInput("empty weight vector"));
        }
        let g = v.iter().fold(0i128, |g, &x| gcd(g, x as i128));
        if g == 0 {
            return Err(Error::DegenerateInput("weight vector is zero"));
        }
        if g != 1 {
            return Err(Error::DegenerateInput("weight vector is not primitive"));
        }
        Ok(WeightVector { v })
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.v
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.v.iter().map(|&x| x as f64).collect()
    }

    pub fn norm_sq(&self) -> i64 {
        self.v.iter().map(|x| x * x).sum()
    }
}

#[derive(Clone, Debug)]
pub struct MomentPolytope {
    n: usize,
    vertices: Vec<Vec<f64>>,
    exact: Vec<Vec<Rational>>,
    faces: Vec<Vec<Vec<usize>>>,
}

impl MomentPolytope {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Moment-map values at the coordinate fixed points, index `k` for `e_k`.
    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    /// Closed-form rational vertices in the canonical normalization.
    pub fn exact_vertices(&self) -> &[Vec<Rational>] {
        &self.exact
    }

    /// Faces of dimension `d` as vertex index sets.
    pub fn faces(&self, d: usize) -> &[Vec<usize>] {
        &self.faces[d]
    }

    /// Largest gap between computed and closed-form vertices.
    pub fn exactness_residual(&self) -> f64 {
        self.vertices
            .iter()
            .zip(&self.exact)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y.to_f64()).abs()))
            .fold(0.0, f64::max)
    }

    /// Barycentric coordinates of `x`; for this simplex they are the `|z_k|^2`.
    pub fn barycentric(&self, x: &[f64]) -> Option<Vec<f64>> {
        let m = self.n + 1;
        let mut a = vec![0.0; m * m];
        for (k, vert) in self.vertices.iter().enumerate() {
            for j in 0..self.n {
                a[j * m + k] = vert[j];
            }
            a[self.n * m + k] = 1.0;
        }
        let mut rhs = x.to_vec();
        rhs.push(1.0);
        solve_real(&a, &rhs)
    }
}

fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    rec(0, m, k, &mut cur, &mut out);
    out
}

pub fn build_polytope(fs: &FubiniStudy) -> MomentPolytope {
    let n = fs.n();
    let vertices = (0..=n).map(|k| fs.moment_map(&AmbientPoint::fixed_point(n, k))).collect();
    let d = 2 * (n as i128 + 1);
    let exact = (0..=n)
        .map(|k| {
            (1..=n)
                .map(|j| Rational::new(if j == k { n as i128 } else { -1 }, d))
                .collect()
        })
        .collect();
    let faces = (0..=n).map(|dim| subsets(n + 1, dim + 1)).collect();
    MomentPolytope { n, vertices, exact, faces }
}

fn rational_vec(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&x| Rational::int(x as i128)).collect()
}

/// True iff the line `R v` misses every `(n-2)`-face.
///
/// The origin is interior and off every face hull, so the line meets face `F`
/// iff `v` or `-v` lies in the cone over `F`; decided by exact elimination.
pub fn admissible(v: &WeightVector, p: &MomentPolytope) -> bool {
    assert_eq!(v.n(), p.n, "weight vector and polytope disagree on n");
    if p.n < 2 {
        return false;
    }
    let rhs = rational_vec(&v.v);
    !p.faces(p.n - 2).iter().any(|face| {
        let cols: Vec<Vec<Rational>> = face.iter().map(|&k| p.exact[k].clone()).collect();
        match solve_in_span(&cols, &rhs) {
            Some(c) => c.iter().all(|x| x.signum() >= 0) || c.iter().all(|x| x.signum() <= 0),
            None => false,
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubtorusFrame {
    pub v: WeightVector,
    /// Integer basis of `ker v`, oriented so that `det[b_1, .., b_{n-1}, w] > 0`.
    pub basis: Vec<Vec<i64>>,
    /// Minimal-norm solution of `v . w = 1`.
    pub w: Vec<Rational>,
    pub t1: f64,
    pub t2: f64,
    pub t1_exact: Rational,
    pub t2_exact: Rational,
    /// Coordinate `k` with `|z_k| = 0` on the fiber over `t1` (resp. `t2`).
    pub lower_facet: usize,
    pub upper_facet: usize,
}

impl SubtorusFrame {
    pub fn n(&self) -> usize {
        self.v.n()
    }

    pub fn w_f64(&self) -> Vec<f64> {
        self.w.iter().map(|x| x.to_f64()).collect()
    }

    pub fn basis_f64(&self) -> Vec<TorusAlgebraVec> {
        self.basis.iter().map(|b| TorusAlgebraVec::from_ints(b)).collect()
    }

    /// `|z_k|^2` on the zero set at moment level `tau v`.
    pub fn moduli_at(&self, fs: &FubiniStudy, tau: f64) -> Vec<f64> {
        let n1 = (self.n() + 1) as f64;
        let t = fs.einstein_constant();
        let mut p = Vec::with_capacity(self.n() + 1);
        p.push(0.0);
        for &vk in &self.v.v {
            p.push((1.0 + t * tau * vk as f64) / n1);
        }
        p[0] = 1.0 - p[1..].iter().sum::<f64>();
        p
    }

    /// Real representative of the `T`-orbit at level `tau v`.
    pub fn orbit_point(&self, fs: &FubiniStudy, tau: f64) -> Result<AmbientPoint> {
        let p = self.moduli_at(fs, tau);
        if p.iter().any(|&x| x < 0.0) {
            return Err(Error::Domain("level lies outside the moment polytope"));
        }
        AmbientPoint::unit(p.iter().map(|&x| C64::new(x.sqrt(), 0.0)).collect())
    }
}

/// Column reduction `v U = (0, .., +-1, .., 0)` with `U` unimodular.
fn unimodular_completion(v: &[i64]) -> (Vec<Vec<i128>>, usize) {
    let n = v.len();
    let mut r: Vec<i128> = v.iter().map(|&x| x as i128).collect();
    let mut cols: Vec<Vec<i128>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1 } else { 0 }).collect())
        .collect();
    loop {
        let nz: Vec<usize> = (0..n).filter(|&i| r[i] != 0).collect();
        if nz.len() == 1 {
            let i = nz[0];
            if r[i] < 0 {
                r[i] = -r[i];
                cols[i].iter_mut().for_each(|x| *x = -*x);
            }
            return (cols, i);
        }
        let i = *nz.iter().min_by_key(|&&i| r[i].abs()).expect("v is nonzero");
        for &j in &nz {
            if j != i {
                let q = r[j] / r[i];
                r[j] -= q * r[i];
                let ci = cols[i].clone();
                for (x, y) in cols[j].iter_mut().zip(ci) {
                    *x -= q * y;
                }
            }
        }
    }
}

pub fn make_frame(v: &WeightVector, p: &MomentPolytope) -> Result<SubtorusFrame> {
    if !admissible(v, p) {
        return Err(Error::Inadmissible("the line through v meets an (n-2)-face"));
    }
    let n = v.n();
    let (cols, pivot) = unimodular_completion(&v.v);
    let mut basis: Vec<Vec<i64>> = cols
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != pivot)
        .map(|(_, c)| c.iter().map(|&x| x as i64).collect())
        .collect();
    let orientation = |basis: &[Vec<i64>]| {
        let mut m = vec![0.0; n * n];
        for (j, b) in basis.iter().chain(core::iter::once(&v.v)).enumerate() {
            for i in 0..n {
                m[i * n + j] = b[i] as f64;
            }
        }
        det_real(&m, n)
    };
    if orientation(&basis) < 0.0 {
        basis[0].iter_mut().for_each(|x| *x = -*x);
    }
    let nv = Rational::int(v.norm_sq() as i128);
    let w: Vec<Rational> = v.v.iter().map(|&x| Rational::int(x as i128) / nv).collect();

    // exact endpoints from barycentric coordinates along s -> s v
    let m = n + 1;
    let cols: Vec<Vec<Rational>> = p
        .exact
        .iter()
        .map(|vert| {
            let mut c = vert.clone();
            c.push(Rational::ONE);
            c
        })
        .collect();
    let mut origin = vec![Rational::ZERO; n];
    origin.push(Rational::ONE);
    let mut tip = rational_vec(&v.v);
    tip.push(Rational::ONE);
    let l0 = solve_in_span(&cols, &origin).ok_or(Error::ModelViolation("simplex is degenerate"))?;
    let l1 = solve_in_span(&cols, &tip).ok_or(Error::ModelViolation("simplex is degenerate"))?;
    let (mut lo, mut hi): (Option<(Rational, usize)>, Option<(Rational, usize)>) = (None, None);
    for k in 0..m {
        let d = l1[k] - l0[k];
        if d.is_zero() {
            continue;
        }
        let s = -l0[k] / d;
        if d.signum() < 0 {
            if hi.is_none_or(|(h, _)| s < h) {
                hi = Some((s, k));
            }
        } else if lo.is_none_or(|(l, _)| s > l) {
            lo = Some((s, k));
        }
    }
    let (t1_exact, lower_facet) = lo.ok_or(Error::ModelViolation("segment is unbounded"))?;
    let (t2_exact, upper_facet) = hi.ok_or(Error::ModelViolation("segment is unbounded"))?;

    // floating endpoints from the computed vertices
    let b0 = p.barycentric(&vec![0.0; n]).ok_or(Error::ModelViolation("simplex is degenerate"))?;
    let b1 = p.barycentric(&v.to_f64()).ok_or(Error::ModelViolation("simplex is degenerate"))?;
    let bound = |k: usize| -b0[k] / (b1[k] - b0[k]);
    let (t1, t2) = (bound(lower_facet), bound(upper_facet));
    if !(t1 < 0.0 && 0.0 < t2) {
        return Err(Error::ModelViolation("origin is not interior to the segment"));
    }
    Ok(SubtorusFrame {
        v: v.clone(),
        basis,
        w,
        t1,
        t2,
        t1_exact,
        t2_exact,
        lower_facet,
        upper_facet,
    })
}

/// Witness for a Killing field of `T_v` with non-constant length on the zero set.
#[derive(Clone, Debug, PartialEq)]
pub struct KillingWitness {
    pub a: TorusAlgebraVec,
    pub a_int: Vec<i64>,
    pub low: AmbientPoint,
    pub high: AmbientPoint,
    /// `(max - min) / max` of `|X_a|^2` over the search.
    pub relative_spread: f64,
}

pub fn killing_length(z: &AmbientPoint, a: &TorusAlgebraVec) -> f64 {
    let x = torus_field(z, a);
    metric_g(&x, &x).expect("same base point")
}

/// Searches the orbit family `tau -> orbit_point(tau)` for a Killing field of
/// `T_v` whose squared length varies by at least `1e-3` relative.
pub fn killing_witness(fs: &FubiniStudy, frame: &SubtorusFrame) -> Result<KillingWitness> {
    let mut candidates: Vec<Vec<i64>> = frame.basis.clone();
    for i in 0..frame.basis.len() {
        for j in i + 1..frame.basis.len() {
            let (a, b) = (&frame.basis[i], &frame.basis[j]);
            candidates.push(a.iter().zip(b).map(|(x, y)| x + y).collect());
            candidates.push(a.iter().zip(b).map(|(x, y)| x - y).collect());
        }
    }
    let grid = 201;
    let margin = 0.02 * (frame.t2 - frame.t1);
    let taus: Vec<f64> = (0..grid)
        .map(|i| frame.t1 + margin + (frame.t2 - frame.t1 - 2.0 * margin) * i as f64 / (grid - 1) as f64)
        .collect();
    let mut best: Option<KillingWitness> = None;
    for cand in candidates {
        let a = TorusAlgebraVec::from_ints(&cand);
        let (mut lo, mut hi) = ((f64::INFINITY, 0.0), (f64::NEG_INFINITY, 0.0));
        for &tau in &taus {
            let len = killing_length(&frame.orbit_point(fs, tau)?, &a);
            if len < lo.0 {
                lo = (len, tau);
            }
            if len > hi.0 {
                hi = (len, tau);
            }
        }
        let spread = (hi.0 - lo.0) / hi.0;
        if best.as_ref().is_none_or(|b| spread > b.relative_spread) {
            best = Some(KillingWitness {
                a,
                a_int: cand,
                low: frame.orbit_point(fs, lo.1)?,
                high: frame.orbit_point(fs, hi.1)?,
                relative_spread: spread,
            });
        }
    }
    match best {
        Some(w) if w.relative_spread >= 1e-3 => Ok(w),
        _ => Err(Error::WitnessNotFound),
    }
}

/// Primitive weights with entries bounded by `bound` that pass [`admissible`],
/// one representative per line.
pub fn admissible_weights(p: &MomentPolytope, bound: i64) -> Vec<WeightVector> {
    let n = p.n;
    let mut out = Vec::new();
    let side = (2 * bound + 1) as usize;
    let total = side.pow(n as u32);
    for idx in 0..total {
        let mut rem = idx;
        let v: Vec<i64> = (0..n)
            .map(|_| {
                let d = (rem % side) as i64 - bound;
                rem /= side;
                d
            })
            .collect();
        let lead = v.iter().find(|&&x| x != 0).copied();
        if lead.is_none_or(|x| x < 0) {
            continue;
        }
        if let Ok(w) = WeightVector::new(v) {
            if admissible(&w, p) {
                out.push(w);
            }
        }
    }
    out
}
