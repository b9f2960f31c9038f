//! Scalar real polynomials in the delay variable `x = z^-1`.
//!
//! Coefficients are stored in ascending powers of `x`. The canonical form
//! strips trailing zeros; the zero polynomial is the single coefficient `[0.0]`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl From<Vec<f64>> for Poly {
    fn from(coeffs: Vec<f64>) -> Self {
        Poly::new(coeffs)
    }
}

impl From<Poly> for Vec<f64> {
    fn from(p: Poly) -> Self {
        p.coeffs
    }
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![0.0] }
    }

    pub fn one() -> Self {
        Poly { coeffs: vec![1.0] }
    }

    pub fn constant(c: f64) -> Self {
        Poly::new(vec![c])
    }

    /// `c * x^k`
    pub fn monomial(k: usize, c: f64) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = c;
        Poly::new(coeffs)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `x^k`, zero beyond the degree.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn norm_inf(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Multiply by `x^k`.
    pub fn shift(&self, k: usize) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![0.0; k];
        coeffs.extend_from_slice(&self.coeffs);
        Poly::new(coeffs)
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    /// Roots in the `x` variable, computed as companion-matrix eigenvalues
    /// and polished with a few Newton steps. Exact zero roots are returned as
    /// exact zeros.
    pub fn roots(&self) -> Vec<Complex64> {
        self.roots_with(true)
    }

    /// Companion-matrix eigenvalues without Newton polishing. Clusters of
    /// these keep an accurate mean for multiple roots.
    pub fn raw_roots(&self) -> Vec<Complex64> {
        self.roots_with(false)
    }

    fn roots_with(&self, polish: bool) -> Vec<Complex64> {
        if self.coeffs.len() <= 1 {
            return Vec::new();
        }
        let lead_zeros = self.coeffs.iter().take_while(|c| **c == 0.0).count();
        let mut roots = vec![Complex64::new(0.0, 0.0); lead_zeros];
        let core = &self.coeffs[lead_zeros..];
        let d = core.len() - 1;
        if d == 0 {
            return roots;
        }
        let lead = core[d];
        let mut companion = DMatrix::<f64>::zeros(d, d);
        for j in 0..d {
            companion[(0, j)] = -core[d - 1 - j] / lead;
        }
        for i in 1..d {
            companion[(i, i - 1)] = 1.0;
        }
        let reduced = Poly::new(core.to_vec());
        let deriv = reduced.derivative();
        for r in companion.complex_eigenvalues().iter() {
            roots.push(if polish { polish_root(&reduced, &deriv, *r) } else { *r });
        }
        roots
    }

    /// Relative backward error of `r` as a root: `|p(r)| / sum |c_k| |r|^k`.
    pub fn root_residual(&self, r: Complex64) -> f64 {
        let mag = r.norm();
        let scale = self
            .coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * mag + c.abs());
        if scale == 0.0 {
            return 0.0;
        }
        self.eval(r).norm() / scale
    }

    /// Remove the real factor with root `r` (linear for real `r`, quadratic
    /// for a complex pair). The remainder is discarded.
    pub fn deflate(&self, r: Complex64, complex_pair: bool) -> Poly {
        let small = r.norm() <= 1.0;
        if complex_pair {
            let s = 2.0 * r.re;
            let p = r.norm_sqr();
            if small {
                divide_top(&self.coeffs, &[p, -s, 1.0])
            } else {
                divide_bottom(&self.coeffs, &[1.0, -s / p, 1.0 / p])
            }
        } else if small {
            divide_top(&self.coeffs, &[-r.re, 1.0])
        } else {
            divide_bottom(&self.coeffs, &[1.0, -1.0 / r.re])
        }
    }
}

pub(crate) fn polish_root(p: &Poly, dp: &Poly, mut r: Complex64) -> Complex64 {
    let mut best = p.eval(r).norm();
    for _ in 0..5 {
        let d = dp.eval(r);
        if d.norm() == 0.0 {
            break;
        }
        let cand = r - p.eval(r) / d;
        let val = p.eval(cand).norm();
        if val < best {
            best = val;
            r = cand;
        } else {
            break;
        }
    }
    if r.im.abs() <= 1e-14 * r.norm().max(1.0) {
        r.im = 0.0;
    }
    r
}

/// Division by a divisor whose leading coefficient is one, run from the top.
fn divide_top(c: &[f64], f: &[f64]) -> Poly {
    let d = c.len() - 1;
    let m = f.len() - 1;
    if d < m {
        return Poly::zero();
    }
    let n = d - m;
    let mut q = vec![0.0; n + 1];
    for k in (0..=n).rev() {
        let mut acc = c[k + m];
        for j in 1..=m {
            if k + j <= n {
                acc -= f[m - j] * q[k + j];
            }
        }
        q[k] = acc;
    }
    Poly::new(q)
}

/// Division by a divisor whose constant coefficient is one, run from the bottom.
fn divide_bottom(c: &[f64], f: &[f64]) -> Poly {
    let d = c.len() - 1;
    let m = f.len() - 1;
    if d < m {
        return Poly::zero();
    }
    let n = d - m;
    let mut q = vec![0.0; n + 1];
    for k in 0..=n {
        let mut acc = c[k];
        for j in 1..=m.min(k) {
            acc -= f[j] * q[k - j];
        }
        q[k] = acc;
    }
    Poly::new(q)
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if *c == 0.0 && !(self.is_zero() && k == 0) {
                continue;
            }
            let sign = if *c < 0.0 { "-" } else { "+" };
            if first {
                if *c < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{}", c.abs())?,
                1 => write!(f, "{}z^-1", c.abs())?,
                _ => write!(f, "{}z^-{}", c.abs(), k)?,
            }
        }
        Ok(())
    }
}
