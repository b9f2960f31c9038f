use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::poly::Poly;
use crate::error::{Error, Result};

/// Matrix-valued polynomial `P(x) = sum_k P_k x^k` in the delay `x = z^-1`.
///
/// Trailing all-zero coefficient matrices are stripped; the zero polynomial
/// keeps a single zero matrix at degree 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixPolyRepr", into = "MatrixPolyRepr")]
pub struct MatrixPolynomial {
    rows: usize,
    cols: usize,
    coeffs: Vec<DMatrix<f64>>,
}

/// Serialized layout: every coefficient is a list of rows.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixPolyRepr {
    pub rows: usize,
    pub cols: usize,
    pub coeffs: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<MatrixPolyRepr> for MatrixPolynomial {
    type Error = Error;
    fn try_from(r: MatrixPolyRepr) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(r.coeffs.len());
        for (k, c) in r.coeffs.iter().enumerate() {
            if c.len() != r.rows || c.iter().any(|row| row.len() != r.cols) {
                return Err(Error::Shape(format!(
                    "coefficient {k} is not {}x{}",
                    r.rows, r.cols
                )));
            }
            coeffs.push(DMatrix::from_fn(r.rows, r.cols, |i, j| c[i][j]));
        }
        MatrixPolynomial::new(r.rows, r.cols, coeffs)
    }
}

impl From<MatrixPolynomial> for MatrixPolyRepr {
    fn from(p: MatrixPolynomial) -> Self {
        MatrixPolyRepr {
            rows: p.rows,
            cols: p.cols,
            coeffs: p
                .coeffs
                .iter()
                .map(|c| (0..p.rows).map(|i| (0..p.cols).map(|j| c[(i, j)]).collect()).collect())
                .collect(),
        }
    }
}

impl MatrixPolynomial {
    pub fn new(rows: usize, cols: usize, mut coeffs: Vec<DMatrix<f64>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape("matrix polynomial needs positive dimensions".into()));
        }
        if let Some(bad) = coeffs.iter().position(|c| c.nrows() != rows || c.ncols() != cols) {
            return Err(Error::Shape(format!("coefficient {bad} is not {rows}x{cols}")));
        }
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.iter().all(|v| *v == 0.0)) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(DMatrix::zeros(rows, cols));
        }
        Ok(MatrixPolynomial { rows, cols, coeffs })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        MatrixPolynomial { rows, cols, coeffs: vec![DMatrix::zeros(rows, cols)] }
    }

    pub fn identity(n: usize) -> Self {
        MatrixPolynomial { rows: n, cols: n, coeffs: vec![DMatrix::identity(n, n)] }
    }

    pub fn constant(m: DMatrix<f64>) -> Self {
        let (rows, cols) = m.shape();
        MatrixPolynomial::new(rows, cols, vec![m]).expect("constant shape")
    }

    pub fn scalar(p: &Poly) -> Self {
        MatrixPolynomial::from_entries(1, 1, std::slice::from_ref(p))
    }

    /// Build from scalar entries listed row-major.
    pub fn from_entries(rows: usize, cols: usize, entries: &[Poly]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count");
        let deg = entries.iter().map(Poly::degree).max().unwrap_or(0);
        let coeffs = (0..=deg)
            .map(|k| DMatrix::from_fn(rows, cols, |i, j| entries[i * cols + j].coeff(k)))
            .collect();
        MatrixPolynomial::new(rows, cols, coeffs).expect("entry shape")
    }

    /// Diagonal square polynomial matrix.
    pub fn diagonal(diag: &[Poly]) -> Self {
        let n = diag.len();
        let entries: Vec<Poly> = (0..n * n)
            .map(|idx| if idx / n == idx % n { diag[idx / n].clone() } else { Poly::zero() })
            .collect();
        MatrixPolynomial::from_entries(n, n, &entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    /// Coefficient matrix of `x^k`; zero beyond the degree.
    pub fn coeff(&self, k: usize) -> DMatrix<f64> {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| DMatrix::zeros(self.rows, self.cols))
    }

    pub fn entry(&self, i: usize, j: usize) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c[(i, j)]).collect())
    }

    pub fn entries(&self) -> Vec<Vec<Poly>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.entry(i, j)).collect())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].iter().all(|v| *v == 0.0)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Constant coefficient exactly equal to the identity.
    pub fn is_monic(&self) -> bool {
        self.is_square() && self.coeffs[0] == DMatrix::identity(self.rows, self.cols)
    }

    pub fn is_diagonal(&self) -> bool {
        self.is_square()
            && self.coeffs.iter().all(|c| {
                (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || c[(i, j)] == 0.0))
            })
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().flat_map(|c| c.iter()).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn add(&self, other: &MatrixPolynomial) -> Result<MatrixPolynomial> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &MatrixPolynomial) -> Result<MatrixPolynomial> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &MatrixPolynomial, sign: f64) -> Result<MatrixPolynomial> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!(
                "cannot add {:?} and {:?} polynomials",
                self.shape(),
                other.shape()
            )));
        }
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) + other.coeff(k) * sign).collect();
        MatrixPolynomial::new(self.rows, self.cols, coeffs)
    }

    pub fn mul(&self, other: &MatrixPolynomial) -> Result<MatrixPolynomial> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {:?} by {:?} polynomials",
                self.shape(),
                other.shape()
            )));
        }
        let n = self.coeffs.len() + other.coeffs.len() - 1;
        let mut coeffs = vec![DMatrix::zeros(self.rows, other.cols); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        MatrixPolynomial::new(self.rows, other.cols, coeffs)
    }

    pub fn scale(&self, s: f64) -> MatrixPolynomial {
        let coeffs = self.coeffs.iter().map(|c| c * s).collect();
        MatrixPolynomial::new(self.rows, self.cols, coeffs).expect("shape preserved")
    }

    /// Left-multiply every coefficient by a constant matrix.
    pub fn premultiply(&self, m: &DMatrix<f64>) -> Result<MatrixPolynomial> {
        if m.ncols() != self.rows {
            return Err(Error::Shape("premultiplier has wrong column count".into()));
        }
        let coeffs = self.coeffs.iter().map(|c| m * c).collect();
        MatrixPolynomial::new(m.nrows(), self.cols, coeffs)
    }

    /// Multiply by `x^k`.
    pub fn shift(&self, k: usize) -> MatrixPolynomial {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = vec![DMatrix::zeros(self.rows, self.cols); k];
        coeffs.extend(self.coeffs.iter().cloned());
        MatrixPolynomial::new(self.rows, self.cols, coeffs).expect("shape preserved")
    }

    pub fn eval(&self, x: Complex64) -> DMatrix<Complex64> {
        let mut acc = DMatrix::<Complex64>::zeros(self.rows, self.cols);
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c.map(|v| Complex64::new(v, 0.0));
        }
        acc
    }

    /// Determinant as a scalar polynomial (cofactor expansion; sizes here are small).
    pub fn det(&self) -> Result<Poly> {
        if !self.is_square() {
            return Err(Error::Shape("determinant of a non-square polynomial matrix".into()));
        }
        if self.is_diagonal() {
            return Ok((0..self.rows).fold(Poly::one(), |acc, i| &acc * &self.entry(i, i)));
        }
        let e = self.entries();
        let idx: Vec<usize> = (0..self.rows).collect();
        Ok(det_entries(&e, &idx, &idx))
    }

    /// Classical adjugate, so that `P * adj(P) = det(P) I`.
    pub fn adjugate(&self) -> Result<MatrixPolynomial> {
        if !self.is_square() {
            return Err(Error::Shape("adjugate of a non-square polynomial matrix".into()));
        }
        let n = self.rows;
        if n == 1 {
            return Ok(MatrixPolynomial::identity(1));
        }
        if self.is_diagonal() {
            let diag: Vec<Poly> = (0..n)
                .map(|i| {
                    (0..n)
                        .filter(|j| *j != i)
                        .fold(Poly::one(), |acc, j| &acc * &self.entry(j, j))
                })
                .collect();
            return Ok(MatrixPolynomial::diagonal(&diag));
        }
        let e = self.entries();
        let mut out = vec![Poly::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                let rows: Vec<usize> = (0..n).filter(|r| *r != j).collect();
                let cols: Vec<usize> = (0..n).filter(|c| *c != i).collect();
                let minor = det_entries(&e, &rows, &cols);
                out[i * n + j] = if (i + j) % 2 == 0 { minor } else { -&minor };
            }
        }
        Ok(MatrixPolynomial::from_entries(n, n, &out))
    }
}

fn det_entries(e: &[Vec<Poly>], rows: &[usize], cols: &[usize]) -> Poly {
    match rows.len() {
        0 => Poly::one(),
        1 => e[rows[0]][cols[0]].clone(),
        2 => {
            let a = &e[rows[0]][cols[0]] * &e[rows[1]][cols[1]];
            let b = &e[rows[0]][cols[1]] * &e[rows[1]][cols[0]];
            &a - &b
        }
        _ => {
            let r0 = rows[0];
            let rest: Vec<usize> = rows[1..].to_vec();
            let mut acc = Poly::zero();
            for (pos, &c) in cols.iter().enumerate() {
                if e[r0][c].is_zero() {
                    continue;
                }
                let sub_cols: Vec<usize> = cols.iter().copied().filter(|x| *x != c).collect();
                let term = &e[r0][c] * &det_entries(e, &rest, &sub_cols);
                acc = if pos % 2 == 0 { &acc + &term } else { &acc - &term };
            }
            acc
        }
    }
}

impl fmt::Display for MatrixPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rows == 1 && self.cols == 1 {
            return write!(f, "{}", self.entry(0, 0));
        }
        let e = self.entries();
        write!(f, "[")?;
        for (i, row) in e.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            let cells: Vec<String> = row.iter().map(|p| p.to_string()).collect();
            write!(f, "{}", cells.join(", "))?;
        }
        write!(f, "]")
    }
}

pub fn poly_add(p: &MatrixPolynomial, q: &MatrixPolynomial) -> Result<MatrixPolynomial> {
    p.add(q)
}

pub fn poly_mul(p: &MatrixPolynomial, q: &MatrixPolynomial) -> Result<MatrixPolynomial> {
    p.mul(q)
}

pub fn poly_eval(p: &MatrixPolynomial, z_inv: Complex64) -> DMatrix<Complex64> {
    p.eval(z_inv)
}

/// Remainder of the one-step division `C = A + x C1`; returns `C1`.
pub fn one_step_division(c: &MatrixPolynomial, a: &MatrixPolynomial) -> Result<MatrixPolynomial> {
    if !c.is_square() || c.shape() != a.shape() {
        return Err(Error::Shape("one-step division needs equal square shapes".into()));
    }
    if c.coeff(0) != a.coeff(0) {
        return Err(Error::NotMonic("constant coefficients of C and A differ".into()));
    }
    if !c.is_monic() || !a.is_monic() {
        return Err(Error::NotMonic("one-step division needs monic C and A".into()));
    }
    let n = c.coeffs.len().max(a.coeffs.len());
    let coeffs = (1..n.max(2)).map(|k| c.coeff(k) - a.coeff(k)).collect();
    MatrixPolynomial::new(c.rows, c.cols, coeffs)
}
