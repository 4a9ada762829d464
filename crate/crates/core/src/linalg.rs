//! Small dense kernels: Hermitian products, complex determinants, real solves
//! and exact rational elimination for lattice bookkeeping.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64 as C64;
#[allow(unused_imports)] // inherent f64 methods shadow Float when std is linked
use num_traits::{Float, Zero};

/// `sum_k u_k conj(v_k)`.
pub fn herm(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm(u: &[C64]) -> f64 {
    u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Determinant of a square complex matrix given as columns.
pub fn det_columns(cols: &[&[C64]]) -> C64 {
    let n = cols.len();
    let mut m = vec![C64::zero(); n * n];
    for (j, col) in cols.iter().enumerate() {
        debug_assert_eq!(col.len(), n);
        for i in 0..n {
            m[i * n + j] = col[i];
        }
    }
    det_in_place(&mut m, n)
}

/// LU with partial pivoting on a row-major buffer.
pub fn det_in_place(m: &mut [C64], n: usize) -> C64 {
    let mut det = C64::new(1.0, 0.0);
    for k in 0..n {
        let mut piv = k;
        let mut best = m[k * n + k].norm();
        for i in k + 1..n {
            let a = m[i * n + k].norm();
            if a > best {
                best = a;
                piv = i;
            }
        }
        if best == 0.0 {
            return C64::zero();
        }
        if piv != k {
            for j in 0..n {
                m.swap(k * n + j, piv * n + j);
            }
            det = -det;
        }
        let d = m[k * n + k];
        det *= d;
        for i in k + 1..n {
            let f = m[i * n + k] / d;
            if f.is_zero() {
                continue;
            }
            for j in k + 1..n {
                let t = m[k * n + j];
                m[i * n + j] -= f * t;
            }
        }
    }
    det
}

/// Solves `A x = b` for a square real system (row-major `a`), partial pivoting.
pub fn solve_real(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| {
            m[i * n + k].abs().partial_cmp(&m[j * n + k].abs()).unwrap_or(Ordering::Equal)
        })?;
        if m[piv * n + k].abs() < 1e-300 {
            return None;
        }
        if piv != k {
            for j in 0..n {
                m.swap(k * n + j, piv * n + j);
            }
            x.swap(k, piv);
        }
        for i in k + 1..n {
            let f = m[i * n + k] / m[k * n + k];
            for j in k..n {
                m[i * n + j] -= f * m[k * n + j];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in k + 1..n {
            s -= m[k * n + j] * x[j];
        }
        x[k] = s / m[k * n + k];
    }
    Some(x)
}

/// Solves a square complex system (row-major `a`), partial pivoting.
pub fn solve_complex(a: &[C64], b: &[C64]) -> Option<Vec<C64>> {
    let n = b.len();
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| {
            m[i * n + k].norm().partial_cmp(&m[j * n + k].norm()).unwrap_or(Ordering::Equal)
        })?;
        if m[piv * n + k].norm() < 1e-300 {
            return None;
        }
        if piv != k {
            for j in 0..n {
                m.swap(k * n + j, piv * n + j);
            }
            x.swap(k, piv);
        }
        for i in k + 1..n {
            let f = m[i * n + k] / m[k * n + k];
            for j in k..n {
                let t = m[k * n + j];
                m[i * n + j] -= f * t;
            }
            let t = x[k];
            x[i] -= f * t;
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in k + 1..n {
            s -= m[k * n + j] * x[j];
        }
        x[k] = s / m[k * n + k];
    }
    Some(x)
}

/// Determinant of a small real matrix (row-major).
pub fn det_real(a: &[f64], n: usize) -> f64 {
    let mut m: Vec<C64> = a.iter().map(|&x| C64::new(x, 0.0)).collect();
    det_in_place(&mut m, n).re
}

pub fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// Exact rational with `i128` parts, always reduced with positive denominator.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    num: i128,
    den: i128,
}

impl Rational {
    pub const ZERO: Rational = Rational { num: 0, den: 1 };
    pub const ONE: Rational = Rational { num: 1, den: 1 };

    pub fn new(num: i128, den: i128) -> Self {
        assert!(den != 0, "zero denominator");
        let g = gcd(num, den).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Rational { num: s * num / g, den: s * den / g }
    }

    pub fn int(n: i128) -> Self {
        Rational { num: n, den: 1 }
    }

    pub fn numer(&self) -> i128 {
        self.num
    }

    pub fn denom(&self) -> i128 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn signum(&self) -> i128 {
        self.num.signum()
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn recip(&self) -> Self {
        Rational::new(self.den, self.num)
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl Add for Rational {
    type Output = Rational;
    fn add(self, o: Rational) -> Rational {
        Rational::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }
}

impl Sub for Rational {
    type Output = Rational;
    fn sub(self, o: Rational) -> Rational {
        self + (-o)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational { num: -self.num, den: self.den }
    }
}

impl Mul for Rational {
    type Output = Rational;
    fn mul(self, o: Rational) -> Rational {
        Rational::new(self.num * o.num, self.den * o.den)
    }
}

impl Div for Rational {
    type Output = Rational;
    fn div(self, o: Rational) -> Rational {
        Rational::new(self.num * o.den, self.den * o.num)
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, o: &Rational) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Rational {
    fn cmp(&self, o: &Rational) -> Ordering {
        (self.num * o.den).cmp(&(o.num * self.den))
    }
}

/// Exact solve of `sum_j c_j cols[j] = rhs` for linearly independent columns.
/// Returns `None` when `rhs` is outside their span.
pub fn solve_in_span(cols: &[Vec<Rational>], rhs: &[Rational]) -> Option<Vec<Rational>> {
    let rows = rhs.len();
    let m = cols.len();
    // augmented row-major matrix [A | rhs]
    let mut a: Vec<Vec<Rational>> = (0..rows)
        .map(|i| {
            let mut r: Vec<Rational> = cols.iter().map(|c| c[i]).collect();
            r.push(rhs[i]);
            r
        })
        .collect();
    let mut pivots = Vec::with_capacity(m);
    let mut row = 0;
    for col in 0..m {
        let Some(p) = (row..rows).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(row, p);
        let d = a[row][col];
        for j in col..=m {
            a[row][j] = a[row][j] / d;
        }
        for i in 0..rows {
            if i != row && !a[i][col].is_zero() {
                let f = a[i][col];
                for j in col..=m {
                    let t = a[row][j];
                    a[i][j] = a[i][j] - f * t;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    if pivots.len() < m {
        return None;
    }
    if a[row..].iter().any(|r| !r[m].is_zero()) {
        return None;
    }
    Some((0..m).map(|k| a[k][m]).collect())
}
