use nalgebra::DMatrix;

use super::ar::matrix_rows;
use super::lstsq::{lstsq, normal_equation_residual};
use super::report::{ChannelOrders, FitReport};
use crate::error::{Error, Result};
use crate::ratmat::{MatrixPolynomial, RationalTransferMatrix};
use crate::simkit::TimeSeries;

/// Exact (noise-free) relation `A(x) y2 = B(x) y1` fitted by least squares,
/// giving `H = A^-1 B`. Overparameterized orders leave a null space; the
/// minimum-norm solution is returned and the report flags it.
pub fn fit_deterministic_channel(y1: &TimeSeries, y2: &TimeSeries, orders: ChannelOrders) -> Result<FitReport> {
    if y1.len() != y2.len() {
        return Err(Error::Shape(format!("series lengths {} and {} differ", y1.len(), y2.len())));
    }
    let (m, p) = (y1.channels(), y2.channels());
    let n = y1.len();
    let t0 = orders.max_lag();
    if n <= t0 {
        return Err(Error::InsufficientData(format!("{n} samples for maximal lag {t0}")));
    }
    let nb = orders.n_b();
    let cols = orders.na * p + nb * m;
    let rows = n - t0;
    let phi = DMatrix::from_fn(rows, cols, |r, c| {
        let t = r + t0;
        if c < orders.na * p {
            -y2.get(t - 1 - c / p, c % p)
        } else {
            let c = c - orders.na * p;
            y1.get(t - orders.delay - c / m, c % m)
        }
    });
    let target = DMatrix::from_fn(rows, p, |r, j| y2.get(r + t0, j));
    let sol = lstsq(&phi, &target)?;
    let mut a = vec![DMatrix::identity(p, p)];
    for k in 0..orders.na {
        a.push(DMatrix::from_fn(p, p, |i, j| sol.theta[(k * p + j, i)]));
    }
    let mut b = vec![DMatrix::zeros(p, m); orders.delay];
    for k in 0..nb {
        b.push(DMatrix::from_fn(p, m, |i, j| sol.theta[(orders.na * p + k * m + j, i)]));
    }
    let estimate = RationalTransferMatrix::new(MatrixPolynomial::new(p, p, a)?, MatrixPolynomial::new(p, m, b)?)?;
    let resid = &target - &phi * &sol.theta;
    let mut warnings = Vec::new();
    if sol.is_rank_deficient() {
        warnings.push(format!(
            "regression rank {} of {}; minimum-norm solution returned",
            sol.rank,
            cols
        ));
    }
    if rows < cols {
        warnings.push(format!("{rows} equations for {cols} unknowns"));
    }
    Ok(FitReport {
        estimate,
        residual_rms: (resid.norm_squared() / resid.len() as f64).sqrt(),
        cost_history: Vec::new(),
        condition_number: sol.condition_number,
        converged: true,
        rank_deficient: sol.is_rank_deficient(),
        noise_covariance: matrix_rows(&((resid.transpose() * &resid) / rows as f64)),
        normal_equation_residual: normal_equation_residual(&phi, &target, &sol.theta),
        iterations: 1,
        warnings,
    })
}
