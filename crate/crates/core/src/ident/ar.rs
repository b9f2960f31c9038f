use nalgebra::DMatrix;

use super::lstsq::{lstsq, normal_equation_residual};
use super::report::FitReport;
use crate::error::{Error, Result};
use crate::ratmat::{MatrixPolynomial, RationalTransferMatrix};
use crate::simkit::TimeSeries;

/// Least-squares (vector) AR fit `y(t) + sum_k A_k y(t-k) = e(t)`, returning
/// `W = A(x)^-1` and the innovation covariance.
pub fn fit_ar(y: &TimeSeries, order: usize) -> Result<FitReport> {
    let d = y.channels();
    let n = y.len();
    let params = order * d * d;
    if n <= 10 * params.max(1) {
        return Err(Error::InsufficientData(format!("{n} samples for {params} AR parameters")));
    }
    let rows = n - order;
    let phi = DMatrix::from_fn(rows, order * d, |r, c| -y.get(r + order - 1 - c / d, c % d));
    let target = DMatrix::from_fn(rows, d, |r, j| y.get(r + order, j));
    let sol = lstsq(&phi, &target)?;
    if sol.is_rank_deficient() {
        return Err(Error::RankDeficient { condition: sol.condition_number });
    }
    let mut coeffs = vec![DMatrix::identity(d, d)];
    for k in 0..order {
        coeffs.push(DMatrix::from_fn(d, d, |i, j| sol.theta[(k * d + j, i)]));
    }
    let a = MatrixPolynomial::new(d, d, coeffs)?;
    let estimate = RationalTransferMatrix::new(a, MatrixPolynomial::identity(d))?;
    let resid = &target - &phi * &sol.theta;
    let cov = (resid.transpose() * &resid) / rows as f64;
    Ok(FitReport {
        estimate,
        residual_rms: (resid.norm_squared() / resid.len() as f64).sqrt(),
        cost_history: Vec::new(),
        condition_number: sol.condition_number,
        converged: true,
        rank_deficient: false,
        noise_covariance: matrix_rows(&cov),
        normal_equation_residual: normal_equation_residual(&phi, &target, &sol.theta),
        iterations: 1,
        warnings: Vec::new(),
    })
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}
