use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ratmat::RationalTransferMatrix;

pub const DEFAULT_FREQ_POINTS: usize = 512;
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// `theta_j = pi (j + 1/2) / n`, which stays clear of 0 and pi.
pub fn default_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| std::f64::consts::PI * (j as f64 + 0.5) / n as f64).collect()
}

/// Spectral density matrices sampled on a frequency grid.
#[derive(Clone, Debug)]
pub struct SpectrumGrid {
    pub dim: usize,
    pub freqs: Vec<f64>,
    pub values: Vec<DMatrix<Complex64>>,
    pub partition_m: Option<usize>,
}

impl SpectrumGrid {
    /// Checks that every value is Hermitian and positive semidefinite, both
    /// relative to the largest entry at that frequency.
    pub fn new(freqs: Vec<f64>, values: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if freqs.len() != values.len() || freqs.is_empty() {
            return Err(Error::Shape(format!("{} frequencies for {} values", freqs.len(), values.len())));
        }
        if freqs.iter().any(|t| !(0.0..=std::f64::consts::PI).contains(t)) {
            return Err(Error::InvalidArgument("grid frequencies must lie in [0, pi]".into()));
        }
        let dim = values[0].nrows();
        for (t, v) in freqs.iter().zip(&values) {
            if v.shape() != (dim, dim) {
                return Err(Error::Shape("spectrum values must be square and of equal size".into()));
            }
            let scale = v.iter().fold(1.0_f64, |m, z| m.max(z.norm()));
            if (v - v.adjoint()).iter().any(|z| z.norm() > 1e-10 * scale) {
                return Err(Error::Numerical(format!("spectrum not Hermitian at theta = {t}")));
            }
            let eig = v.clone().symmetric_eigenvalues();
            if eig.iter().any(|l| *l < -1e-9 * scale) {
                return Err(Error::Numerical(format!("spectrum not positive semidefinite at theta = {t}")));
            }
        }
        Ok(SpectrumGrid { dim, freqs, values, partition_m: None })
    }

    pub fn constant(value: DMatrix<Complex64>, freqs: &[f64]) -> Result<Self> {
        SpectrumGrid::new(freqs.to_vec(), vec![value; freqs.len()])
    }

    pub fn with_partition(mut self, m: usize) -> Result<Self> {
        if m == 0 || m > self.dim {
            return Err(Error::InvalidArgument(format!("partition {m} invalid for dimension {}", self.dim)));
        }
        self.partition_m = Some(m);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Re-index channels: output channel `i` is input channel `order[i]`.
    pub fn reorder(&self, order: &[usize]) -> Result<SpectrumGrid> {
        let mut seen = vec![false; self.dim];
        for &i in order {
            if i >= self.dim || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument(format!("{order:?} is not a permutation")));
            }
        }
        if order.len() != self.dim {
            return Err(Error::InvalidArgument(format!("{order:?} is not a permutation")));
        }
        let values = self
            .values
            .iter()
            .map(|v| DMatrix::from_fn(self.dim, self.dim, |i, j| v[(order[i], order[j])]))
            .collect();
        Ok(SpectrumGrid { dim: self.dim, freqs: self.freqs.clone(), values, partition_m: self.partition_m })
    }

    pub fn max_deviation(&self, other: &SpectrumGrid) -> Result<f64> {
        if self.dim != other.dim || self.freqs != other.freqs {
            return Err(Error::Shape("spectrum grids differ".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).iter().fold(0.0_f64, |m, z| m.max(z.norm())))
            .fold(0.0, f64::max))
    }
}

/// `Phi = W Lambda W^*` on the grid, with `Lambda = diag(noise_variance)`.
pub fn spectrum_from_factor(
    w: &RationalTransferMatrix,
    noise_variance: &[f64],
    freqs: &[f64],
) -> Result<SpectrumGrid> {
    if noise_variance.len() != w.cols() {
        return Err(Error::Shape(format!("{} variances for {} noise inputs", noise_variance.len(), w.cols())));
    }
    if !w.is_stable() {
        return Err(Error::Unstable("spectral factor is unstable".into()));
    }
    let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        noise_variance.len(),
        noise_variance.iter().map(|v| Complex64::new(*v, 0.0)),
    ));
    let values: Vec<DMatrix<Complex64>> = freqs
        .par_iter()
        .map(|&t| {
            let g = w.response(t);
            hermitian_part(&g * &lambda * g.adjoint())
        })
        .collect();
    SpectrumGrid::new(freqs.to_vec(), values)
}

/// Per-frequency numerical rank.
#[derive(Clone, Debug)]
pub struct RankReport {
    pub rank: usize,
    pub per_freq: Vec<usize>,
}

/// Counts singular values above `rank_tol` times the largest one at each
/// frequency; the overall rank is the maximum over the grid.
pub fn check_rank(phi: &SpectrumGrid, rank_tol: f64) -> Result<RankReport> {
    if !(rank_tol > 0.0) {
        return Err(Error::InvalidArgument("rank tolerance must be positive".into()));
    }
    let per_freq: Vec<usize> = phi.values.iter().map(|v| numerical_rank(v, rank_tol)).collect();
    Ok(RankReport { rank: per_freq.iter().copied().max().unwrap_or(0), per_freq })
}

pub(crate) fn numerical_rank(v: &DMatrix<Complex64>, rank_tol: f64) -> usize {
    let sv = v.clone().singular_values();
    let top = sv.iter().fold(0.0_f64, |m, s| m.max(*s));
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rank_tol * top).count()
}

pub(crate) fn hermitian_part(m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
}
