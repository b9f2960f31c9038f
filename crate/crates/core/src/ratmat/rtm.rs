//! Left matrix fraction descriptions `G(z) = A(z^-1)^-1 B(z^-1)`.
//!
//! Arithmetic works through a row-wise common-denominator form: row `i` of
//! `G` is `n_i(x) / d_i(x)` with a scalar monic `d_i`. Every product, sum and
//! inverse is returned in that form (diagonal `A`), then simplified by
//! cancelling roots shared by a row denominator and all of its numerators.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matpoly::MatrixPolynomial;
use super::poly::{polish_root, Poly};
use crate::error::{Error, Result};

/// Relative root distance below which a numerator/denominator pair cancels.
pub const DEFAULT_CANCEL_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RtmRepr", into = "RtmRepr")]
pub struct RationalTransferMatrix {
    denom: MatrixPolynomial,
    numer: MatrixPolynomial,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RtmRepr {
    pub denom: MatrixPolynomial,
    pub numer: MatrixPolynomial,
}

impl TryFrom<RtmRepr> for RationalTransferMatrix {
    type Error = Error;
    fn try_from(r: RtmRepr) -> Result<Self> {
        RationalTransferMatrix::new(r.denom, r.numer)
    }
}

impl From<RationalTransferMatrix> for RtmRepr {
    fn from(g: RationalTransferMatrix) -> Self {
        RtmRepr { denom: g.denom, numer: g.numer }
    }
}

/// One row `num / den` of a transfer matrix with a scalar denominator.
#[derive(Clone, Debug, PartialEq)]
pub struct RowFraction {
    pub den: Poly,
    pub num: Vec<Poly>,
}

impl RowFraction {
    fn zero(cols: usize) -> Self {
        RowFraction { den: Poly::one(), num: vec![Poly::zero(); cols] }
    }

    fn normalized(mut self) -> Result<Self> {
        let c0 = self.den.coeff(0);
        if c0 == 0.0 {
            return Err(Error::Singular("row denominator has zero constant term".into()));
        }
        if c0 != 1.0 {
            self.den = self.den.scale(1.0 / c0);
            for n in &mut self.num {
                *n = n.scale(1.0 / c0);
            }
        }
        if self.num.iter().all(Poly::is_zero) {
            self.den = Poly::one();
        }
        Ok(self)
    }
}

impl RationalTransferMatrix {
    /// Build `denom^-1 numer`, left-normalizing so the denominator is monic.
    pub fn new(denom: MatrixPolynomial, numer: MatrixPolynomial) -> Result<Self> {
        if !denom.is_square() {
            return Err(Error::Shape("MFD denominator must be square".into()));
        }
        if denom.rows() != numer.rows() {
            return Err(Error::Shape(format!(
                "denominator is {}x{} but numerator has {} rows",
                denom.rows(),
                denom.cols(),
                numer.rows()
            )));
        }
        if denom.is_monic() {
            return Ok(RationalTransferMatrix { denom, numer });
        }
        let a0 = denom.coeff(0);
        let inv = a0
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular("denominator constant coefficient is singular".into()))?;
        let mut coeffs: Vec<DMatrix<f64>> = denom.coeffs().iter().map(|c| &inv * c).collect();
        coeffs[0] = DMatrix::identity(denom.rows(), denom.rows());
        let denom = MatrixPolynomial::new(denom.rows(), denom.cols(), coeffs)?;
        let numer = numer.premultiply(&inv)?;
        Ok(RationalTransferMatrix { denom, numer })
    }

    /// Scalar transfer function `numer(x) / denom(x)`, coefficients ascending in `x = z^-1`.
    pub fn scalar(numer: &[f64], denom: &[f64]) -> Result<Self> {
        RationalTransferMatrix::new(
            MatrixPolynomial::scalar(&Poly::new(denom.to_vec())),
            MatrixPolynomial::scalar(&Poly::new(numer.to_vec())),
        )
    }

    pub fn identity(n: usize) -> Self {
        RationalTransferMatrix { denom: MatrixPolynomial::identity(n), numer: MatrixPolynomial::identity(n) }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalTransferMatrix {
            denom: MatrixPolynomial::identity(rows),
            numer: MatrixPolynomial::zeros(rows, cols),
        }
    }

    /// Polynomial (FIR) transfer matrix.
    pub fn polynomial(numer: MatrixPolynomial) -> Self {
        RationalTransferMatrix { denom: MatrixPolynomial::identity(numer.rows()), numer }
    }

    /// Static gain.
    pub fn constant(gain: DMatrix<f64>) -> Self {
        RationalTransferMatrix::polynomial(MatrixPolynomial::constant(gain))
    }

    pub fn from_rows(rows: Vec<RowFraction>) -> Result<Self> {
        let cols = rows
            .first()
            .map(|r| r.num.len())
            .ok_or_else(|| Error::Shape("transfer matrix needs at least one row".into()))?;
        if cols == 0 || rows.iter().any(|r| r.num.len() != cols) {
            return Err(Error::Shape("rows have inconsistent widths".into()));
        }
        let rows: Vec<RowFraction> = rows.into_iter().map(RowFraction::normalized).collect::<Result<_>>()?;
        let dens: Vec<Poly> = rows.iter().map(|r| r.den.clone()).collect();
        let entries: Vec<Poly> = rows.iter().flat_map(|r| r.num.iter().cloned()).collect();
        Ok(RationalTransferMatrix {
            denom: MatrixPolynomial::diagonal(&dens),
            numer: MatrixPolynomial::from_entries(rows.len(), cols, &entries),
        })
    }

    pub fn denom(&self) -> &MatrixPolynomial {
        &self.denom
    }

    pub fn numer(&self) -> &MatrixPolynomial {
        &self.numer
    }

    pub fn rows(&self) -> usize {
        self.numer.rows()
    }

    pub fn cols(&self) -> usize {
        self.numer.cols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.numer.shape()
    }

    pub fn is_zero(&self) -> bool {
        self.numer.is_zero()
    }

    /// `G(inf)`, the constant numerator coefficient of the monic form.
    pub fn at_infinity(&self) -> DMatrix<f64> {
        self.numer.coeff(0)
    }

    /// True when `G(inf) = 0`, i.e. at least a unit delay.
    pub fn has_delay(&self) -> bool {
        self.at_infinity().iter().all(|v| *v == 0.0)
    }

    /// Top square block of `G(inf)` equals the identity (`K(inf) = I`).
    pub fn is_normalized(&self, tol: f64) -> bool {
        let (r, c) = self.shape();
        if r < c {
            return false;
        }
        let g = self.at_infinity();
        (0..c).all(|i| (0..c).all(|j| (g[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs() <= tol))
    }

    /// Row-wise common denominator form.
    pub fn row_fractions(&self) -> Vec<RowFraction> {
        if self.denom.is_diagonal() {
            let num = self.numer.entries();
            return num
                .into_iter()
                .enumerate()
                .map(|(i, n)| RowFraction { den: self.denom.entry(i, i), num: n })
                .collect();
        }
        let d = self.denom.det().expect("square denominator");
        let adj = self.denom.adjugate().expect("square denominator");
        let n = adj.mul(&self.numer).expect("conformant");
        n.entries()
            .into_iter()
            .map(|row| RowFraction { den: d.clone(), num: row })
            .collect()
    }

    /// Evaluate at `x = z^-1`.
    pub fn eval(&self, x: Complex64) -> DMatrix<Complex64> {
        if self.denom.is_diagonal() {
            let (r, c) = self.shape();
            let mut out = DMatrix::<Complex64>::zeros(r, c);
            for i in 0..r {
                let d = self.denom.entry(i, i).eval(x);
                for j in 0..c {
                    out[(i, j)] = self.numer.entry(i, j).eval(x) / d;
                }
            }
            return out;
        }
        let a = self.denom.eval(x);
        let b = self.numer.eval(x);
        a.lu().solve(&b).unwrap_or_else(|| {
            DMatrix::from_element(b.nrows(), b.ncols(), Complex64::new(f64::NAN, f64::NAN))
        })
    }

    /// Frequency response `G(e^{i theta})`.
    pub fn response(&self, theta: f64) -> DMatrix<Complex64> {
        self.eval(Complex64::from_polar(1.0, -theta))
    }

    /// Largest entrywise response difference over a frequency grid.
    pub fn max_response_deviation(&self, other: &RationalTransferMatrix, freqs: &[f64]) -> f64 {
        freqs
            .iter()
            .map(|&t| {
                let d = self.response(t) - other.response(t);
                d.iter().fold(0.0, |m: f64, v| m.max(v.norm()))
            })
            .fold(0.0, f64::max)
    }

    /// Coefficient-wise comparison of the canonical forms.
    pub fn approx_eq(&self, other: &RationalTransferMatrix, tol: f64) -> bool {
        fn close(a: &MatrixPolynomial, b: &MatrixPolynomial, tol: f64) -> bool {
            a.shape() == b.shape() && a.sub(b).map(|d| d.max_abs() <= tol).unwrap_or(false)
        }
        close(&self.denom, &other.denom, tol) && close(&self.numer, &other.numer, tol)
    }

    pub fn add(&self, other: &RationalTransferMatrix) -> Result<RationalTransferMatrix> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &RationalTransferMatrix) -> Result<RationalTransferMatrix> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &RationalTransferMatrix, sign: f64) -> Result<RationalTransferMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!(
                "cannot add {:?} and {:?} transfer matrices",
                self.shape(),
                other.shape()
            )));
        }
        let rows = self
            .row_fractions()
            .into_iter()
            .zip(other.row_fractions())
            .map(|(a, b)| {
                let (den, fa, fb) = common_denominator(&a.den, &b.den);
                let num = a
                    .num
                    .iter()
                    .zip(&b.num)
                    .map(|(na, nb)| &(na * &fa) + &(nb * &fb).scale(sign))
                    .collect();
                RowFraction { den, num }
            })
            .collect();
        RationalTransferMatrix::from_rows(rows)?.simplify(DEFAULT_CANCEL_TOL)
    }

    pub fn mul(&self, other: &RationalTransferMatrix) -> Result<RationalTransferMatrix> {
        if self.cols() != other.rows() {
            return Err(Error::Shape(format!(
                "cannot multiply {:?} by {:?} transfer matrices",
                self.shape(),
                other.shape()
            )));
        }
        let right = other.row_fractions();
        let cols = other.cols();
        let rows = self
            .row_fractions()
            .into_iter()
            .map(|left| {
                let used: Vec<usize> = (0..left.num.len()).filter(|j| !left.num[*j].is_zero()).collect();
                if used.is_empty() {
                    return RowFraction::zero(cols);
                }
                let mut uniques: Vec<Poly> = Vec::new();
                let mut which = Vec::with_capacity(used.len());
                for &j in &used {
                    match uniques.iter().position(|u| approx_same(u, &right[j].den)) {
                        Some(p) => which.push(p),
                        None => {
                            which.push(uniques.len());
                            uniques.push(right[j].den.clone());
                        }
                    }
                }
                let common = uniques.iter().fold(Poly::one(), |acc, u| &acc * u);
                let mut num = vec![Poly::zero(); cols];
                for (&j, &u) in used.iter().zip(&which) {
                    let others = uniques
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| *k != u)
                        .fold(Poly::one(), |acc, (_, p)| &acc * p);
                    let scale = &left.num[j] * &others;
                    for (acc, n2) in num.iter_mut().zip(&right[j].num) {
                        *acc = &*acc + &(&scale * n2);
                    }
                }
                RowFraction { den: &left.den * &common, num }
            })
            .collect();
        RationalTransferMatrix::from_rows(rows)?.simplify(DEFAULT_CANCEL_TOL)
    }

    /// Inverse of a square transfer matrix whose value at infinity is invertible.
    pub fn inverse(&self) -> Result<RationalTransferMatrix> {
        if self.rows() != self.cols() {
            return Err(Error::Shape("inverse of a non-square transfer matrix".into()));
        }
        let fr = self.row_fractions();
        let n = fr.len();
        let entries: Vec<Poly> = fr.iter().flat_map(|r| r.num.iter().cloned()).collect();
        let num = MatrixPolynomial::from_entries(n, n, &entries);
        let g_inf = num.coeff(0);
        let det_inf = g_inf.clone().determinant();
        let scale = g_inf.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0).powi(n as i32);
        if det_inf.abs() <= 1e-12 * scale {
            return Err(Error::ImproperInverse);
        }
        let det = num.det()?;
        let adj = num.adjugate()?;
        let dens: Vec<Poly> = fr.iter().map(|r| r.den.clone()).collect();
        let adj_d = adj.mul(&MatrixPolynomial::diagonal(&dens))?;
        let rows = adj_d
            .entries()
            .into_iter()
            .map(|row| RowFraction { den: det.clone(), num: row })
            .collect();
        RationalTransferMatrix::from_rows(rows)?.simplify(DEFAULT_CANCEL_TOL)
    }

    pub fn neg(&self) -> RationalTransferMatrix {
        RationalTransferMatrix { denom: self.denom.clone(), numer: self.numer.scale(-1.0) }
    }

    pub fn scale(&self, s: f64) -> RationalTransferMatrix {
        if s == 0.0 {
            return RationalTransferMatrix::zeros(self.rows(), self.cols());
        }
        RationalTransferMatrix { denom: self.denom.clone(), numer: self.numer.scale(s) }
    }

    /// Rows `idx` of the transfer matrix, in that order.
    pub fn select_rows(&self, idx: &[usize]) -> Result<RationalTransferMatrix> {
        let fr = self.row_fractions();
        let rows = idx
            .iter()
            .map(|&i| fr.get(i).cloned().ok_or_else(|| Error::Shape(format!("row {i} out of range"))))
            .collect::<Result<Vec<_>>>()?;
        RationalTransferMatrix::from_rows(rows)?.simplify(DEFAULT_CANCEL_TOL)
    }

    /// Columns `idx` of the transfer matrix, in that order.
    pub fn select_cols(&self, idx: &[usize]) -> Result<RationalTransferMatrix> {
        if let Some(bad) = idx.iter().find(|j| **j >= self.cols()) {
            return Err(Error::Shape(format!("column {bad} out of range")));
        }
        let rows = self
            .row_fractions()
            .into_iter()
            .map(|r| RowFraction { den: r.den, num: idx.iter().map(|&j| r.num[j].clone()).collect() })
            .collect();
        RationalTransferMatrix::from_rows(rows)?.simplify(DEFAULT_CANCEL_TOL)
    }

    /// `[G1; G2; ...]`
    pub fn vstack(blocks: &[RationalTransferMatrix]) -> Result<RationalTransferMatrix> {
        let cols = blocks.first().map(|b| b.cols()).ok_or_else(|| Error::Shape("empty stack".into()))?;
        if blocks.iter().any(|b| b.cols() != cols) {
            return Err(Error::Shape("vstack blocks have different widths".into()));
        }
        RationalTransferMatrix::from_rows(blocks.iter().flat_map(|b| b.row_fractions()).collect())
    }

    /// `[G1, G2, ...]`
    pub fn hstack(blocks: &[RationalTransferMatrix]) -> Result<RationalTransferMatrix> {
        let rows = blocks.first().map(|b| b.rows()).ok_or_else(|| Error::Shape("empty stack".into()))?;
        if blocks.iter().any(|b| b.rows() != rows) {
            return Err(Error::Shape("hstack blocks have different heights".into()));
        }
        let fracs: Vec<Vec<RowFraction>> = blocks.iter().map(|b| b.row_fractions()).collect();
        let out = (0..rows)
            .map(|i| {
                let mut acc = fracs[0][i].clone();
                for f in &fracs[1..] {
                    let (den, fa, fb) = common_denominator(&acc.den, &f[i].den);
                    let mut num: Vec<Poly> = acc.num.iter().map(|n| n * &fa).collect();
                    num.extend(f[i].num.iter().map(|n| n * &fb));
                    acc = RowFraction { den, num };
                }
                acc
            })
            .collect();
        RationalTransferMatrix::from_rows(out)?.simplify(DEFAULT_CANCEL_TOL)
    }

    /// Cancel roots shared by each row denominator and all of that row's
    /// numerators. Roots are grouped into clusters (multiplicities) whose
    /// members lie within `tol` relative distance; clusters cancel when their
    /// centers agree within `tol`.
    pub fn simplify(&self, tol: f64) -> Result<RationalTransferMatrix> {
        let rows = self.row_fractions().into_iter().map(|r| simplify_row(r, tol)).collect();
        RationalTransferMatrix::from_rows(rows)
    }

    pub fn is_scalar(&self) -> bool {
        self.shape() == (1, 1)
    }
}

fn approx_same(a: &Poly, b: &Poly) -> bool {
    if a.degree() != b.degree() {
        return false;
    }
    let scale = a.norm_inf().max(b.norm_inf()).max(1.0);
    a.coeffs().iter().zip(b.coeffs()).all(|(x, y)| (x - y).abs() <= 1e-11 * scale)
}

/// `(den, fa, fb)` with `a * fa = b * fb = den` up to rounding.
fn common_denominator(a: &Poly, b: &Poly) -> (Poly, Poly, Poly) {
    if approx_same(a, b) {
        (a.clone(), Poly::one(), Poly::one())
    } else if b.degree() == 0 && b.coeff(0) == 1.0 {
        (a.clone(), Poly::one(), a.clone())
    } else if a.degree() == 0 && a.coeff(0) == 1.0 {
        (b.clone(), b.clone(), Poly::one())
    } else {
        (a * b, b.clone(), a.clone())
    }
}

#[derive(Clone, Debug)]
struct RootCluster {
    center: Complex64,
    mult: usize,
}

impl RootCluster {
    fn is_real(&self) -> bool {
        self.center.im == 0.0
    }
}

fn close_roots(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}

/// Single-linkage clustering of the roots; returns clusters in the closed
/// upper half plane (real clusters have their center snapped to the axis).
fn root_clusters(p: &Poly, tol: f64) -> Vec<RootCluster> {
    let roots = p.raw_roots();
    let n = roots.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if close_roots(roots[i], roots[j], tol) {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[b] = a;
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<Complex64>)> = Vec::new();
    for i in 0..n {
        let l = find(&mut label, i);
        match groups.iter_mut().find(|(g, _)| *g == l) {
            Some((_, v)) => v.push(roots[i]),
            None => groups.push((l, vec![roots[i]])),
        }
    }
    let mut out = Vec::new();
    for (_, members) in groups {
        let sum: Complex64 = members.iter().sum();
        // a k-fold root is a simple root of the (k-1)-th derivative
        let mut deriv = p.clone();
        for _ in 1..members.len() {
            deriv = deriv.derivative();
        }
        let center = polish_root(&deriv, &deriv.derivative(), sum / members.len() as f64);
        let self_conjugate = members.iter().all(|r| members.iter().any(|s| close_roots(r.conj(), *s, tol)));
        if self_conjugate {
            out.push(RootCluster { center: Complex64::new(center.re, 0.0), mult: members.len() });
        } else if center.im > 0.0 {
            out.push(RootCluster { center, mult: members.len() });
        }
    }
    out
}

fn simplify_row(row: RowFraction, tol: f64) -> RowFraction {
    if row.num.iter().all(Poly::is_zero) {
        return RowFraction::zero(row.num.len());
    }
    if row.den.degree() == 0 {
        return row;
    }
    let den_clusters = root_clusters(&row.den, tol);
    let num_clusters: Vec<Option<Vec<RootCluster>>> = row
        .num
        .iter()
        .map(|n| if n.is_zero() { None } else { Some(root_clusters(n, tol)) })
        .collect();
    let mut den = row.den.clone();
    let mut num = row.num.clone();
    for dc in &den_clusters {
        // clusters must agree in type (real vs complex pair) as well as position
        let mut count = dc.mult;
        let mut matches: Vec<Option<RootCluster>> = Vec::with_capacity(num.len());
        for nc in &num_clusters {
            match nc {
                None => matches.push(None),
                Some(cl) => {
                    let m = cl
                        .iter()
                        .filter(|c| c.is_real() == dc.is_real() && close_roots(c.center, dc.center, tol))
                        .min_by(|a, b| {
                            (a.center - dc.center).norm().partial_cmp(&(b.center - dc.center).norm()).unwrap()
                        });
                    match m {
                        Some(c) => {
                            count = count.min(c.mult);
                            matches.push(Some(c.clone()));
                        }
                        None => {
                            count = 0;
                            matches.push(None);
                        }
                    }
                }
            }
        }
        if count == 0 {
            continue;
        }
        let pair = !dc.is_real();
        for _ in 0..count {
            den = den.deflate(dc.center, pair);
        }
        for (n, m) in num.iter_mut().zip(&matches) {
            if let Some(c) = m {
                for _ in 0..count {
                    *n = n.deflate(c.center, pair);
                }
            }
        }
    }
    RowFraction { den, num }
}

impl fmt::Display for RationalTransferMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fr = self.row_fractions();
        let rows: Vec<String> = fr
            .iter()
            .map(|r| {
                let cells: Vec<String> = r.num.iter().map(|n| format!("({n})/({})", r.den)).collect();
                cells.join(", ")
            })
            .collect();
        if rows.len() == 1 && self.cols() == 1 {
            write!(f, "{}", rows[0])
        } else {
            write!(f, "[{}]", rows.join("; "))
        }
    }
}

pub fn rtm_mul(g1: &RationalTransferMatrix, g2: &RationalTransferMatrix) -> Result<RationalTransferMatrix> {
    g1.mul(g2)
}

pub fn rtm_inverse(g: &RationalTransferMatrix) -> Result<RationalTransferMatrix> {
    g.inverse()
}

pub fn rtm_simplify(g: &RationalTransferMatrix, tol: f64) -> Result<RationalTransferMatrix> {
    g.simplify(tol)
}
