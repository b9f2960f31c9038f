use nalgebra::DMatrix;
use num_complex::Complex64;

use super::lstsq::lstsq;
use crate::error::{Error, Result};
use crate::simkit::TimeSeries;

/// Sample autocorrelation `r(k) / r(0)` for `k = 1..=max_lag`.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let r0: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    (1..=max_lag)
        .map(|k| {
            if k >= n || r0 == 0.0 {
                return 0.0;
            }
            (k..n).map(|t| (x[t] - mean) * (x[t - k] - mean)).sum::<f64>() / r0
        })
        .collect()
}

/// Grid average of `sigma_2 / sigma_1` of a VAR spectral estimate of `y`;
/// small values mean the process is close to rank one.
pub fn var_spectrum_rank_ratio(y: &TimeSeries, order: usize, freqs: &[f64]) -> Result<f64> {
    let d = y.channels();
    let n = y.len();
    if d < 2 {
        return Err(Error::InvalidArgument("rank ratio needs at least two channels".into()));
    }
    if n <= order * d + 1 {
        return Err(Error::InsufficientData(format!("{n} samples for a VAR({order}) in {d} channels")));
    }
    let rows = n - order;
    let phi = DMatrix::from_fn(rows, order * d, |r, c| -y.get(r + order - 1 - c / d, c % d));
    let target = DMatrix::from_fn(rows, d, |r, j| y.get(r + order, j));
    let sol = lstsq(&phi, &target)?;
    let resid = &target - &phi * &sol.theta;
    let sigma = ((resid.transpose() * &resid) / rows as f64).map(|v| Complex64::new(v, 0.0));
    let mut total = 0.0;
    for &theta in freqs {
        let x = Complex64::from_polar(1.0, -theta);
        let mut a = DMatrix::<Complex64>::identity(d, d);
        let mut xk = Complex64::new(1.0, 0.0);
        for k in 0..order {
            xk *= x;
            a += DMatrix::from_fn(d, d, |i, j| Complex64::new(sol.theta[(k * d + j, i)], 0.0)) * xk;
        }
        let a_inv = a.try_inverse().ok_or_else(|| Error::Singular("VAR polynomial singular on the grid".into()))?;
        let sv = (&a_inv * &sigma * a_inv.adjoint()).singular_values();
        let mut s: Vec<f64> = sv.iter().copied().collect();
        s.sort_by(|p, q| q.total_cmp(p));
        total += if s[0] > 0.0 { s[1] / s[0] } else { 0.0 };
    }
    Ok(total / freqs.len() as f64)
}
