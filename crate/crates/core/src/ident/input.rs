use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ar::matrix_rows;
use super::lstsq::{lstsq_vec, normal_equation_residual};
use super::pem::{fit_armax_pem, PemOptions};
use super::report::{ArmaxOrders, ChannelOrders, FitReport};
use crate::error::{Error, Result};
use crate::ratmat::{MatrixPolynomial, Poly, RationalTransferMatrix};
use crate::simkit::{filter, TimeSeries};

/// Per-output LS fit of `A_i(x) y_i = B_i(x) u`. The equation error carries
/// the coloured `K e` term, so the estimate is biased; the report says so.
pub fn fit_input_channel(y: &TimeSeries, u: &TimeSeries, orders: &[ChannelOrders]) -> Result<FitReport> {
    if y.len() != u.len() {
        return Err(Error::Shape("y and u lengths differ".into()));
    }
    let p = y.channels();
    let q = u.channels();
    let orders: Vec<ChannelOrders> = match orders.len() {
        1 => vec![orders[0]; p],
        n if n == p => orders.to_vec(),
        n => return Err(Error::Shape(format!("{n} order sets for {p} output channels"))),
    };
    if let Some(o) = orders.iter().find(|o| o.delay < 1) {
        return Err(Error::InvalidArgument(format!("input channel needs a unit delay, got {o:?}")));
    }
    let n = y.len();
    let mut dens = Vec::with_capacity(p);
    let mut nums = Vec::with_capacity(p * q);
    let mut sq = 0.0;
    let mut count = 0usize;
    let mut cond = 0.0_f64;
    let mut grad = 0.0_f64;
    let mut resid_cols = Vec::with_capacity(p);
    let t_all = orders.iter().map(|o| o.max_lag()).max().unwrap_or(0);
    for (i, o) in orders.iter().enumerate() {
        let t0 = o.max_lag();
        let nb = o.n_b();
        let cols = o.na + q * nb;
        if n <= t0 + cols {
            return Err(Error::InsufficientData(format!("{n} samples for {cols} parameters")));
        }
        let phi = DMatrix::from_fn(n - t0, cols, |r, c| {
            let t = r + t0;
            if c < o.na {
                -y.get(t - 1 - c, i)
            } else {
                let c = c - o.na;
                u.get(t - o.delay - c % nb, c / nb)
            }
        });
        let target = DVector::from_iterator(n - t0, (t0..n).map(|t| y.get(t, i)));
        let sol = lstsq_vec(&phi, &target)?;
        if sol.is_rank_deficient() {
            return Err(Error::RankDeficient { condition: sol.condition_number });
        }
        let th = sol.column(0);
        let mut a = vec![1.0];
        a.extend(th.iter().take(o.na));
        dens.push(Poly::new(a));
        for j in 0..q {
            let mut b = vec![0.0; o.delay];
            b.extend(th.iter().skip(o.na + j * nb).take(nb));
            nums.push(Poly::new(b));
        }
        let r = &target - &phi * &th;
        sq += r.norm_squared();
        count += r.len();
        cond = cond.max(sol.condition_number);
        let tcol = DMatrix::from_column_slice(target.len(), 1, target.as_slice());
        let thcol = DMatrix::from_column_slice(th.len(), 1, th.as_slice());
        grad = grad.max(normal_equation_residual(&phi, &tcol, &thcol));
        resid_cols.push(r.as_slice()[t_all - t0..].to_vec());
    }
    let estimate =
        RationalTransferMatrix::new(MatrixPolynomial::diagonal(&dens), MatrixPolynomial::from_entries(p, q, &nums))?;
    let rows = resid_cols[0].len();
    let e = DMatrix::from_fn(rows, p, |t, i| resid_cols[i][t]);
    Ok(FitReport {
        estimate,
        residual_rms: (sq / count as f64).sqrt(),
        cost_history: Vec::new(),
        condition_number: cond,
        converged: true,
        rank_deficient: false,
        noise_covariance: matrix_rows(&((e.transpose() * &e) / rows as f64)),
        normal_equation_residual: grad,
        iterations: 1,
        warnings: vec!["equation error includes the coloured noise term; F estimate is biased".into()],
    })
}

/// `ytilde = y - F u`.
pub fn residual_series(y: &TimeSeries, u: &TimeSeries, f_hat: &RationalTransferMatrix) -> Result<TimeSeries> {
    if f_hat.rows() != y.channels() || y.len() != u.len() {
        return Err(Error::Shape("residual needs matching y, u and F".into()));
    }
    y.sub(&filter(f_hat, u)?.with_labels(y.labels().to_vec())?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputPipelineOrders {
    pub f: Vec<ChannelOrders>,
    /// Degree of both `A_i` and `C_i` in each ARMA fit of the residual.
    pub k: usize,
}

#[derive(Clone, Debug)]
pub struct InputIdentification {
    pub f_hat: RationalTransferMatrix,
    pub f_report: FitReport,
    pub residual: TimeSeries,
    /// Column of per-channel normalized ARMA factors; `None` when the
    /// residual is numerically zero.
    pub k_hat: Option<RationalTransferMatrix>,
    pub k_reports: Vec<FitReport>,
    pub degenerate: bool,
}

/// Fit `F` by LS on `u`, form `ytilde`, then fit each residual channel as
/// an ARMA process with monic equal-degree polynomials.
pub fn identify_with_input(
    y: &TimeSeries,
    u: &TimeSeries,
    orders: &InputPipelineOrders,
    opts: &PemOptions,
) -> Result<InputIdentification> {
    let f_report = fit_input_channel(y, u, &orders.f)?;
    let f_hat = f_report.estimate.clone();
    let residual = residual_series(y, u, &f_hat)?;
    let scale = y.rms().max(f64::MIN_POSITIVE);
    if f_report.residual_rms <= 1e-8 * scale {
        return Ok(InputIdentification {
            f_hat,
            f_report,
            residual,
            k_hat: None,
            k_reports: Vec::new(),
            degenerate: true,
        });
    }
    let mut k_rows = Vec::with_capacity(y.channels());
    let mut k_reports = Vec::with_capacity(y.channels());
    for i in 0..y.channels() {
        let fit = fit_armax_pem(&residual.select_channels(&[i])?, None, ArmaxOrders::arma(orders.k), opts)?;
        k_rows.push(fit.k);
        k_reports.push(fit.report);
    }
    Ok(InputIdentification {
        f_hat,
        f_report,
        residual,
        k_hat: Some(RationalTransferMatrix::vstack(&k_rows)?),
        k_reports,
        degenerate: false,
    })
}
