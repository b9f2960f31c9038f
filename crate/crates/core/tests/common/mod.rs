//! Fixtures and independent oracles shared by the property and acceptance
//! suites. Oracles evaluate raw coefficient lists directly and never call
//! the library's own evaluation or inversion.

#![allow(dead_code)]

pub mod invariants;

use lowrank::ratmat::{Poly, RationalTransferMatrix, RowFraction};
use lowrank::spectra::closed_loop_transfer;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub struct FixtureRng(ChaCha8Rng);

impl FixtureRng {
    pub fn new(seed: u64) -> Self {
        FixtureRng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform on `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }

    pub fn sign(&mut self) -> f64 {
        if self.0.next_u64() & 1 == 0 { 1.0 } else { -1.0 }
    }
}

/// Transfer matrix as row-wise raw coefficients: row `i` is
/// `num[i][j](x) / den[i](x)` with `x = z^-1`.
#[derive(Clone, Debug)]
pub struct Rows {
    pub den: Vec<Vec<f64>>,
    pub num: Vec<Vec<Vec<f64>>>,
}

impl Rows {
    pub fn rows(&self) -> usize {
        self.den.len()
    }

    pub fn cols(&self) -> usize {
        self.num[0].len()
    }

    pub fn build(&self) -> RationalTransferMatrix {
        RationalTransferMatrix::from_rows(
            self.den
                .iter()
                .zip(&self.num)
                .map(|(d, n)| RowFraction { den: Poly::new(d.clone()), num: n.iter().map(|p| Poly::new(p.clone())).collect() })
                .collect(),
        )
        .unwrap()
    }

    /// Direct evaluation at `z = e^{i theta}`.
    pub fn at(&self, theta: f64) -> DMatrix<Complex64> {
        let x = Complex64::from_polar(1.0, -theta);
        DMatrix::from_fn(self.rows(), self.cols(), |i, j| horner(&self.num[i][j], x) / horner(&self.den[i], x))
    }
}

pub fn horner(c: &[f64], x: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &v| acc * x + v)
}

pub fn conv(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `prod (1 - z_k x)` over `deg` zeros with `|z_k| <= rmax`, in real or
/// conjugate pairs.
pub fn stable_poly(rng: &mut FixtureRng, deg: usize, rmax: f64) -> Vec<f64> {
    let mut p = vec![1.0];
    let mut left = deg;
    while left > 0 {
        let r = rng.range(0.05, rmax);
        if left >= 2 && rng.unit() < 0.5 {
            let a = rng.range(0.2, std::f64::consts::PI - 0.2);
            p = conv(&p, &[1.0, -2.0 * r * a.cos(), r * r]);
            left -= 2;
        } else {
            p = conv(&p, &[1.0, -rng.sign() * r]);
            left -= 1;
        }
    }
    p
}

/// Coefficients of magnitude in `[lo, hi]` with random signs.
pub fn signed_poly(rng: &mut FixtureRng, deg: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..=deg).map(|_| rng.sign() * rng.range(lo, hi)).collect()
}

pub fn shift(p: &[f64], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; k];
    out.extend_from_slice(p);
    out
}

/// Random `n x n` row form. Strictly causal when `delay` is set.
pub fn random_rows(rng: &mut FixtureRng, n: usize, gain: f64, delay: bool) -> Rows {
    let den = (0..n).map(|_| { let d = rng.below(3); stable_poly(rng, d, 0.7) }).collect();
    let num = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let d = rng.below(2);
                    let p = signed_poly(rng, d, 0.2 * gain, gain);
                    if delay { shift(&p, 1) } else { p }
                })
                .collect()
        })
        .collect();
    Rows { den, num }
}

pub struct LoopFixture {
    pub n: usize,
    pub f_rows: Rows,
    pub h_rows: Rows,
    pub f: RationalTransferMatrix,
    pub h: RationalTransferMatrix,
}

/// Random internally stable loop with strictly causal `F`, scalar or 2x2.
pub fn loop_fixture(seed: u64, n: usize) -> LoopFixture {
    let mut rng = FixtureRng::new(seed);
    let mut gain = 0.6;
    loop {
        for _ in 0..20 {
            let f_rows = random_rows(&mut rng, n, gain, true);
            let h_rows = random_rows(&mut rng, n, gain, false);
            let (f, h) = (f_rows.build(), h_rows.build());
            if closed_loop_transfer(&f, &h).map(|c| c.is_internally_stable()).unwrap_or(false) {
                return LoopFixture { n, f_rows, h_rows, f, h };
            }
        }
        gain *= 0.7;
    }
}

/// `N(theta) = [[I, -F], [-H, I]]` from the raw coefficients.
pub fn loop_matrix(fx: &LoopFixture, theta: f64) -> DMatrix<Complex64> {
    let n = fx.n;
    let mut m = DMatrix::<Complex64>::identity(2 * n, 2 * n);
    let f = fx.f_rows.at(theta);
    let h = fx.h_rows.at(theta);
    m.view_mut((0, n), (n, n)).copy_from(&(-f));
    m.view_mut((n, 0), (n, n)).copy_from(&(-h));
    m
}

/// Random noise spectrum `|g|^2 S` with a stable scalar shaping filter and
/// a constant positive definite `S`.
pub struct NoiseShape {
    pub filter: Vec<f64>,
    pub filter_den: Vec<f64>,
    pub s: DMatrix<f64>,
}

pub fn noise_shape(rng: &mut FixtureRng, n: usize) -> NoiseShape {
    let a = DMatrix::from_fn(n, n, |_, _| rng.range(-1.0, 1.0));
    let s = &a * a.transpose() + DMatrix::identity(n, n) * 0.1;
    NoiseShape { filter: signed_poly(rng, 1, 0.1, 0.8), filter_den: stable_poly(rng, 1, 0.7), s }
}

impl NoiseShape {
    pub fn at(&self, theta: f64) -> DMatrix<Complex64> {
        let x = Complex64::from_polar(1.0, -theta);
        let g = (horner(&self.filter, x) / horner(&self.filter_den, x)).norm_sqr();
        self.s.map(|v| Complex64::new(g * v, 0.0))
    }
}

pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.norm()))
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

/// Empirical quantile with linear interpolation.
pub fn quantile(v: &[f64], q: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = q * (s.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    s[lo] + (pos - lo as f64) * (s[hi] - s[lo])
}

// Example systems, written out from their defining factors.

/// `(1 + 0.5x)(1 - 0.7x + 0.1x^2)`
pub fn w1_den() -> Vec<f64> {
    conv(&[1.0, 0.5], &[1.0, -0.7, 0.1])
}

/// `(1 + 0.1x)(1 - 0.7x + 0.1x^2)`
pub fn w2_den() -> Vec<f64> {
    conv(&[1.0, 0.1], &[1.0, -0.7, 0.1])
}

pub fn example1_rows() -> Rows {
    Rows { den: vec![w1_den(), w2_den()], num: vec![vec![vec![1.0]], vec![vec![1.0]]] }
}

pub fn example1_h_at(theta: f64) -> Complex64 {
    let x = Complex64::from_polar(1.0, -theta);
    (1.0 + 0.5 * x) / (1.0 + 0.1 * x)
}

/// `K = (1 - 0.1x - 0.1x^2) / ((1 + 0.1x) W1den)` with `F = 0.2x`.
pub fn example1_k_rows() -> Rows {
    Rows { den: vec![conv(&[1.0, 0.1], &w1_den())], num: vec![vec![vec![1.0, -0.1, -0.1]]] }
}

pub fn example2_f() -> Rows {
    Rows { den: vec![vec![1.0], vec![1.0]], num: vec![vec![vec![0.0, 0.3, 0.7, 0.3]], vec![vec![0.0, 0.15, 0.9, -0.5]]] }
}

pub fn example2_k() -> Rows {
    Rows {
        den: vec![vec![1.0, 0.3, 0.4], vec![1.0, -0.2, 0.1]],
        num: vec![vec![vec![1.0, 0.1, 0.4]], vec![vec![1.0, -0.1, 0.4]]],
    }
}

pub fn example3_f() -> Rows {
    Rows { den: vec![vec![1.0], vec![1.0]], num: vec![vec![vec![0.0, 1.0, 0.3, -0.1]], vec![vec![0.0, 2.0, -0.9, 0.06]]] }
}

pub fn example3_k() -> Rows {
    Rows {
        den: vec![vec![1.0, 0.3, 0.4], vec![1.0, -0.6, 0.1]],
        num: vec![vec![vec![1.0, -0.9, 0.2]], vec![vec![1.0, -0.1, 0.4]]],
    }
}

/// `20 log10 |.|` of each entry of a row form against a library transfer
/// matrix, worst case over `freqs`.
pub fn bode_gap_db(est: &RationalTransferMatrix, truth: &Rows, freqs: &[f64]) -> f64 {
    freqs
        .iter()
        .map(|&t| {
            let a = est.response(t);
            let b = truth.at(t);
            a.iter().zip(b.iter()).fold(0.0f64, |m, (p, q)| m.max((20.0 * (p.norm() / q.norm()).log10()).abs()))
        })
        .fold(0.0, f64::max)
}
