use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ar::matrix_rows;
use super::armax::ArmaxModel;
use super::lstsq::{lstsq_vec, normal_equation_residual, LsSolution};
use super::report::{ArmaxOrders, FitReport};
use crate::error::{Error, Result};
use crate::ratmat::{is_minimum_phase_poly, MatrixPolynomial, Poly, RationalTransferMatrix, DEFAULT_STABILITY_TOL};
use crate::simkit::TimeSeries;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PemOptions {
    pub max_iter: usize,
    pub rel_tol: f64,
    pub max_halvings: usize,
    /// Order of the long ARX used for initialization; `min(20, N/20)` if unset.
    pub init_order: Option<usize>,
}

impl Default for PemOptions {
    fn default() -> Self {
        PemOptions { max_iter: 200, rel_tol: 1e-10, max_halvings: 20, init_order: None }
    }
}

#[derive(Clone, Debug)]
pub struct ArmaxFit {
    pub model: ArmaxModel,
    pub f: RationalTransferMatrix,
    pub k: RationalTransferMatrix,
    pub prediction_error: TimeSeries,
    pub report: FitReport,
}

/// Prediction-error fit of `A y1 = B y2 + C e`, one output channel at a time
/// (so `A` and `C` come out diagonal). Each channel is initialized by
/// Hannan-Rissanen and refined by damped Gauss-Newton, with `C` reflected to
/// minimum phase before every cost evaluation.
pub fn fit_armax_pem(
    y1: &TimeSeries,
    y2: Option<&TimeSeries>,
    orders: ArmaxOrders,
    opts: &PemOptions,
) -> Result<ArmaxFit> {
    if orders.na != orders.nc {
        return Err(Error::InvalidArgument(format!(
            "A and C must share a degree for K(inf) = I, got {} and {}",
            orders.na, orders.nc
        )));
    }
    let inputs: Vec<&[f64]> = match y2 {
        Some(u) if orders.n_b() > 0 => {
            if orders.delay < 1 {
                return Err(Error::InvalidArgument("F must have at least a unit delay".into()));
            }
            if u.len() != y1.len() {
                return Err(Error::Shape("y1 and y2 lengths differ".into()));
            }
            (0..u.channels()).map(|j| u.channel(j)).collect()
        }
        _ => Vec::new(),
    };
    let m = y1.channels();
    let p = inputs.len();
    let mut fits = Vec::with_capacity(m);
    for i in 0..m {
        let ch = Channel { y: y1.channel(i), u: inputs.clone(), o: orders, start: orders.max_lag() };
        fits.push(ch.fit(opts)?);
    }

    let a = MatrixPolynomial::diagonal(&fits.iter().map(|f| f.a.clone()).collect::<Vec<_>>());
    let c = MatrixPolynomial::diagonal(&fits.iter().map(|f| f.c.clone()).collect::<Vec<_>>());
    let b = if p > 0 {
        let entries: Vec<Poly> = fits.iter().flat_map(|f| f.b.iter().cloned()).collect();
        Some(MatrixPolynomial::from_entries(m, p, &entries))
    } else {
        None
    };
    for f in &fits {
        if !is_minimum_phase_poly(&f.c, DEFAULT_STABILITY_TOL) {
            return Err(Error::NonMinimumPhase(format!("C = {} has a zero on the unit circle", f.c)));
        }
    }
    let model = ArmaxModel::new(a.clone(), b.clone(), c.clone())?;
    let f = model.f()?;
    let k = model.k()?;
    let estimate = match &b {
        Some(b) => {
            let entries: Vec<Poly> = (0..m)
                .flat_map(|i| (0..p).map(move |j| (i, j)))
                .map(|(i, j)| b.entry(i, j))
                .collect();
            let mut all = Vec::with_capacity(m * (p + m));
            for i in 0..m {
                all.extend_from_slice(&entries[i * p..(i + 1) * p]);
                all.extend((0..m).map(|j| c.entry(i, j)));
            }
            RationalTransferMatrix::new(a, MatrixPolynomial::from_entries(m, p + m, &all))?
        }
        None => k.clone(),
    };

    let start = orders.max_lag();
    let n = y1.len();
    let eps = DMatrix::from_fn(n, m, |t, i| fits[i].eps[t]);
    let window = eps.rows(start, n - start);
    let cov = (window.transpose() * window) / (n - start) as f64;
    let longest = fits.iter().map(|f| f.history.len()).max().unwrap_or(0);
    let cost_history = (0..longest)
        .map(|k| fits.iter().map(|f| f.history[k.min(f.history.len() - 1)]).sum::<f64>() / m as f64)
        .collect();
    let mut warnings: Vec<String> = fits.iter().flat_map(|f| f.warnings.iter().cloned()).collect();
    warnings.dedup();
    let report = FitReport {
        estimate,
        residual_rms: (window.norm_squared() / window.len() as f64).sqrt(),
        cost_history,
        condition_number: fits.iter().map(|f| f.condition).fold(0.0, f64::max),
        converged: fits.iter().all(|f| f.converged),
        rank_deficient: fits.iter().any(|f| f.rank_deficient),
        noise_covariance: matrix_rows(&cov),
        normal_equation_residual: fits.iter().map(|f| f.gradient).fold(0.0, f64::max),
        iterations: fits.iter().map(|f| f.iterations).max().unwrap_or(0),
        warnings,
    };
    let prediction_error = TimeSeries::new(eps, Some(y1.labels().to_vec()))?;
    Ok(ArmaxFit { model, f, k, prediction_error, report })
}

struct ChannelFit {
    a: Poly,
    b: Vec<Poly>,
    c: Poly,
    eps: Vec<f64>,
    history: Vec<f64>,
    converged: bool,
    rank_deficient: bool,
    condition: f64,
    gradient: f64,
    iterations: usize,
    warnings: Vec<String>,
}

/// Scalar output channel with its inputs. Parameters are laid out as
/// `[a_1..a_na, b_(j, delay..=nb) for each input j, c_1..c_nc]`.
struct Channel<'a> {
    y: &'a [f64],
    u: Vec<&'a [f64]>,
    o: ArmaxOrders,
    start: usize,
}

impl Channel<'_> {
    fn n_params(&self) -> usize {
        self.o.na + self.u.len() * self.o.n_b() + self.o.nc
    }

    fn split(&self, th: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
        let o = &self.o;
        let nbp = o.n_b();
        let mut a = vec![1.0];
        a.extend_from_slice(&th[..o.na]);
        let b = (0..self.u.len())
            .map(|j| {
                let mut bj = vec![0.0; o.delay];
                bj.extend_from_slice(&th[o.na + j * nbp..o.na + (j + 1) * nbp]);
                bj
            })
            .collect();
        let mut c = vec![1.0];
        c.extend_from_slice(&th[o.na + self.u.len() * nbp..]);
        (a, b, c)
    }

    fn c_range(&self) -> std::ops::Range<usize> {
        let s = self.o.na + self.u.len() * self.o.n_b();
        s..s + self.o.nc
    }

    /// `C eps = A y - sum_j B_j u_j`, zero initial conditions.
    fn residuals(&self, th: &[f64]) -> Vec<f64> {
        let (a, b, c) = self.split(th);
        let n = self.y.len();
        let mut eps = vec![0.0; n];
        for t in 0..n {
            let mut w = self.y[t];
            for k in 1..a.len().min(t + 1) {
                w += a[k] * self.y[t - k];
            }
            for (bj, uj) in b.iter().zip(&self.u) {
                for k in self.o.delay..bj.len().min(t + 1) {
                    w -= bj[k] * uj[t - k];
                }
            }
            for k in 1..c.len().min(t + 1) {
                w -= c[k] * eps[t - k];
            }
            eps[t] = w;
        }
        eps
    }

    fn cost(&self, eps: &[f64]) -> f64 {
        let w = &eps[self.start..];
        w.iter().map(|e| e * e).sum::<f64>() / w.len() as f64
    }

    /// Derivatives of `eps` in the parameter layout, rows `start..n`.
    fn jacobian(&self, th: &[f64], eps: &[f64]) -> DMatrix<f64> {
        let (_, _, c) = self.split(th);
        let o = &self.o;
        let yf = inv_c(&c, self.y);
        let uf: Vec<Vec<f64>> = self.u.iter().map(|u| inv_c(&c, u)).collect();
        let ef = inv_c(&c, eps);
        let n = self.y.len();
        let nbp = o.n_b();
        let lag = |s: &[f64], t: usize, k: usize| if t >= k { s[t - k] } else { 0.0 };
        DMatrix::from_fn(n - self.start, self.n_params(), |r, col| {
            let t = r + self.start;
            if col < o.na {
                lag(&yf, t, col + 1)
            } else if col < o.na + self.u.len() * nbp {
                let c = col - o.na;
                -lag(&uf[c / nbp], t, o.delay + c % nbp)
            } else {
                -lag(&ef, t, col - o.na - self.u.len() * nbp + 1)
            }
        })
    }

    fn project(&self, th: &mut [f64]) {
        let r = self.c_range();
        if r.is_empty() {
            return;
        }
        let mut c = vec![1.0];
        c.extend_from_slice(&th[r.clone()]);
        if let Some(reflected) = reflect_to_minimum_phase(&c) {
            th[r].copy_from_slice(&reflected[1..]);
        }
    }

    /// Hannan-Rissanen: long ARX for innovation proxies, then one LS with
    /// lagged proxies standing in for `e`.
    fn initial(&self, opts: &PemOptions) -> Result<(Vec<f64>, Vec<String>)> {
        let o = &self.o;
        let n = self.y.len();
        let mut warnings = Vec::new();
        let ehat = if o.nc > 0 {
            let long = opts.init_order.unwrap_or_else(|| (n / 20).min(20)).max(o.max_lag() + 1);
            let lu = long.max(o.nb);
            let t0 = long.max(lu);
            let nu = if self.u.is_empty() { 0 } else { lu + 1 - o.delay };
            let cols = long + self.u.len() * nu;
            if n <= t0 + cols {
                return Err(Error::InsufficientData(format!("{n} samples for a long ARX of order {long}")));
            }
            let phi = DMatrix::from_fn(n - t0, cols, |r, col| {
                let t = r + t0;
                if col < long {
                    -self.y[t - 1 - col]
                } else {
                    let c = col - long;
                    self.u[c / nu][t - o.delay - c % nu]
                }
            });
            let target = DVector::from_iterator(n - t0, (t0..n).map(|t| self.y[t]));
            let sol = lstsq_vec(&phi, &target)?;
            let resid = &target - &phi * sol.column(0);
            let mut e = vec![0.0; n];
            e[t0..].copy_from_slice(resid.as_slice());
            Some((e, t0))
        } else {
            None
        };
        let t1 = match &ehat {
            Some((_, t0)) => (t0 + o.nc).max(self.start),
            None => self.start,
        };
        let cols = self.n_params();
        if n <= t1 + cols + 1 {
            return Err(Error::InsufficientData(format!("{n} samples for {cols} ARMAX parameters")));
        }
        let nbp = o.n_b();
        let phi = DMatrix::from_fn(n - t1, cols, |r, col| {
            let t = r + t1;
            if col < o.na {
                -self.y[t - 1 - col]
            } else if col < o.na + self.u.len() * nbp {
                let c = col - o.na;
                self.u[c / nbp][t - o.delay - c % nbp]
            } else {
                let (e, _) = ehat.as_ref().expect("nc > 0 here");
                e[t - (col - o.na - self.u.len() * nbp + 1)]
            }
        });
        let target = DVector::from_iterator(n - t1, (t1..n).map(|t| self.y[t]));
        let sol = lstsq_vec(&phi, &target)?;
        if sol.is_rank_deficient() {
            warnings.push(format!("initial regression has rank {} of {cols}", sol.rank));
        }
        let mut th: Vec<f64> = sol.column(0).iter().copied().collect();
        self.project(&mut th);
        Ok((th, warnings))
    }

    fn fit(&self, opts: &PemOptions) -> Result<ChannelFit> {
        let (mut th, mut warnings) = self.initial(opts)?;
        let mut eps = self.residuals(&th);
        let mut cost = self.cost(&eps);
        if !cost.is_finite() {
            return Err(Error::Numerical("initial prediction error is not finite".into()));
        }
        let scale = self.cost(self.y).max(f64::MIN_POSITIVE);
        let mut history = vec![cost];
        let mut converged = false;
        let mut iterations = 0;
        let mut last: Option<LsSolution> = None;
        let mut gradient = 0.0;
        while iterations < opts.max_iter {
            iterations += 1;
            if cost <= 1e-28 * scale {
                converged = true;
                break;
            }
            let jac = self.jacobian(&th, &eps);
            let rhs = DVector::from_iterator(eps.len() - self.start, eps[self.start..].iter().map(|e| -e));
            let sol = lstsq_vec(&jac, &rhs)?;
            gradient = normal_equation_residual(&jac, &DMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice()), &DMatrix::zeros(jac.ncols(), 1));
            let step = sol.column(0);
            last = Some(sol);
            let mut mu = 1.0;
            let mut accepted = None;
            for _ in 0..=opts.max_halvings {
                let mut cand: Vec<f64> = th.iter().zip(step.iter()).map(|(t, d)| t + mu * d).collect();
                self.project(&mut cand);
                let e = self.residuals(&cand);
                let c = self.cost(&e);
                if c.is_finite() && c < cost {
                    accepted = Some((cand, e, c));
                    break;
                }
                mu *= 0.5;
            }
            match accepted {
                Some((cand, e, c)) => {
                    let rel = (cost - c) / cost;
                    th = cand;
                    eps = e;
                    cost = c;
                    history.push(cost);
                    if rel < opts.rel_tol {
                        converged = true;
                        break;
                    }
                }
                None => {
                    // no descent left along the Gauss-Newton direction
                    converged = gradient < 1e-6;
                    if !converged {
                        warnings.push("step halving exhausted away from a stationary point".into());
                    }
                    break;
                }
            }
        }
        if !converged && iterations >= opts.max_iter {
            warnings.push(format!("no convergence after {} iterations", opts.max_iter));
        }
        let (a, b, c) = self.split(&th);
        Ok(ChannelFit {
            a: Poly::new(a),
            b: b.into_iter().map(Poly::new).collect(),
            c: Poly::new(c),
            eps,
            history,
            converged,
            rank_deficient: last.as_ref().is_some_and(|s| s.is_rank_deficient()),
            condition: last.as_ref().map_or(1.0, |s| s.condition_number),
            gradient,
            iterations,
            warnings,
        })
    }
}

/// `s` with `C s = x`, zero initial conditions.
fn inv_c(c: &[f64], x: &[f64]) -> Vec<f64> {
    let mut s = vec![0.0; x.len()];
    for t in 0..x.len() {
        let mut v = x[t];
        for k in 1..c.len().min(t + 1) {
            v -= c[k] * s[t - k];
        }
        s[t] = v;
    }
    s
}

/// Largest zero modulus `|z|` allowed in `C`.
pub const MAX_C_ZERO_MODULUS: f64 = 0.9999;

/// Mirror zeros outside the unit circle (`|z| > 1`, i.e. `|x| < 1`) to
/// `1 / conj(z)`, pull zeros with `|z| > MAX_C_ZERO_MODULUS` radially onto
/// that circle, and rebuild `C` with unit constant term. `None` when `C`
/// needs no change.
pub fn reflect_to_minimum_phase(c: &[f64]) -> Option<Vec<f64>> {
    let p = Poly::new(c.to_vec());
    let roots = p.roots();
    let min_x = 1.0 / MAX_C_ZERO_MODULUS;
    if roots.iter().all(|r| r.norm() >= min_x) {
        return None;
    }
    let mut prod = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let r = if r.norm() < 1.0 { 1.0 / r.conj() } else { r };
        let r = if r.norm() < min_x { r * (min_x / r.norm()) } else { r };
        // multiply by (1 - x / r)
        let mut next = vec![Complex64::new(0.0, 0.0); prod.len() + 1];
        for (k, v) in prod.iter().enumerate() {
            next[k] += v;
            next[k + 1] -= v / r;
        }
        prod = next;
    }
    let mut out: Vec<f64> = prod.iter().map(|z| z.re).collect();
    out.resize(c.len(), 0.0);
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simkit::{filter, generate_white_noise, simulate_low_rank, NoiseSpec};

    #[test]
    fn reflection_keeps_spectrum_shape() {
        // 1 + 2x has its zero at z = -2; it becomes 1 + 0.5x
        let r = reflect_to_minimum_phase(&[1.0, 2.0]).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-15 && (r[1] - 0.5).abs() < 1e-12);
        assert!(reflect_to_minimum_phase(&[1.0, 0.5]).is_none());
        let r = reflect_to_minimum_phase(&[1.0, 0.2, 4.0]).unwrap();
        assert!(is_minimum_phase_poly(&Poly::new(r), 1e-9));
    }

    #[test]
    fn arma_fit_reaches_innovation_variance() {
        let k = RationalTransferMatrix::scalar(&[1.0, 0.4], &[1.0, -0.5]).unwrap();
        let y = simulate_low_rank(&k, &NoiseSpec::unit(1, 12), 5050).unwrap().skip(50).unwrap();
        let fit = fit_armax_pem(&y, None, ArmaxOrders::arma(1), &PemOptions::default()).unwrap();
        let v = fit.report.noise_variance()[0];
        assert!((v - 1.0).abs() < 0.06, "variance {v}");
        let h = &fit.report.cost_history;
        assert!(h.windows(2).all(|w| w[1] <= w[0]));
        let (a, c) = (fit.model.a.entry(0, 0), fit.model.c.entry(0, 0));
        assert!((a.coeff(1) + 0.5).abs() < 0.05 && (c.coeff(1) - 0.4).abs() < 0.05, "{a} {c}");
    }

    #[test]
    fn noise_free_regression_is_exact() {
        let f = RationalTransferMatrix::scalar(&[0.0, 0.3, 0.7, 0.3], &[1.0, -0.4]).unwrap();
        let u = generate_white_noise(&NoiseSpec::unit(1, 3), 600).unwrap();
        let y = filter(&f, &u).unwrap();
        let fit = fit_armax_pem(&y, Some(&u), ArmaxOrders::new(1, 3, 1, 1), &PemOptions::default()).unwrap();
        let b = fit.model.b.as_ref().unwrap().entry(0, 0);
        for (k, want) in [(1, 0.3), (2, 0.7), (3, 0.3)] {
            assert!((b.coeff(k) - want).abs() < 1e-6, "{b}");
        }
        assert!(fit.report.converged);
    }

    #[test]
    fn order_checks() {
        let y = generate_white_noise(&NoiseSpec::unit(1, 3), 600).unwrap();
        let opts = PemOptions::default();
        assert!(fit_armax_pem(&y, None, ArmaxOrders::new(2, 0, 1, 1), &opts).is_err());
        assert!(fit_armax_pem(&y, Some(&y), ArmaxOrders::new(1, 2, 1, 0), &opts).is_err());
    }
}
