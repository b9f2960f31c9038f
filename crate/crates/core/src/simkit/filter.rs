use nalgebra::DMatrix;

use super::TimeSeries;
use crate::error::{Error, Result};
use crate::ratmat::RationalTransferMatrix;

/// Zero-state response of `A(x) y = B(x) u`:
/// `y(t) = sum_k B_k u(t-k) - sum_{k>=1} A_k y(t-k)`.
///
/// Unstable filters only log a warning; an open-loop unstable block can be
/// part of a stable loop.
pub fn filter(g: &RationalTransferMatrix, x: &TimeSeries) -> Result<TimeSeries> {
    if g.cols() != x.channels() {
        return Err(Error::Shape(format!("filter has {} inputs, series has {} channels", g.cols(), x.channels())));
    }
    if !g.is_stable() {
        log::warn!("filtering through an unstable transfer matrix");
    }
    let data = filter_raw(g, x.data());
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("filter output overflowed".into()));
    }
    TimeSeries::new(data, Some((1..=g.rows()).map(|i| format!("y{i}")).collect()))
}

pub(crate) fn filter_raw(g: &RationalTransferMatrix, u: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = g.shape();
    let n = u.nrows();
    let a = g.denom().coeffs();
    let b = g.numer().coeffs();
    let diag = g.denom().is_diagonal();
    let mut y = DMatrix::<f64>::zeros(n, r);
    for t in 0..n {
        for i in 0..r {
            let mut acc = 0.0;
            for (k, bk) in b.iter().enumerate().take(t + 1) {
                for j in 0..c {
                    let w = bk[(i, j)];
                    if w != 0.0 {
                        acc += w * u[(t - k, j)];
                    }
                }
            }
            for (k, ak) in a.iter().enumerate().take(t + 1).skip(1) {
                if diag {
                    acc -= ak[(i, i)] * y[(t - k, i)];
                } else {
                    for j in 0..r {
                        acc -= ak[(i, j)] * y[(t - k, j)];
                    }
                }
            }
            y[(t, i)] = acc;
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratmat::{MatrixPolynomial, Poly};

    #[test]
    fn identity_passes_through() {
        let x = TimeSeries::from_columns(&[vec![1.0, -2.0, 3.0], vec![0.5, 0.0, 1.0]]).unwrap();
        let y = filter(&RationalTransferMatrix::identity(2), &x).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn geometric_impulse_response() {
        let g = RationalTransferMatrix::scalar(&[1.0], &[1.0, -0.5]).unwrap();
        let mut imp = vec![0.0; 20];
        imp[0] = 1.0;
        let y = filter(&g, &TimeSeries::from_column(imp).unwrap()).unwrap();
        for (t, v) in y.channel(0).iter().enumerate() {
            assert!((v - 0.5f64.powi(t as i32)).abs() < 1e-15);
        }
    }

    #[test]
    fn coupled_denominator() {
        // A = I + A1 x with off-diagonal coupling, checked against x-domain algebra
        let a = MatrixPolynomial::new(
            2,
            2,
            vec![DMatrix::identity(2, 2), DMatrix::from_row_slice(2, 2, &[-0.3, 0.2, 0.1, -0.4])],
        )
        .unwrap();
        let b = MatrixPolynomial::from_entries(2, 1, &[Poly::one(), Poly::new(vec![0.0, 1.0])]);
        let g = RationalTransferMatrix::new(a, b).unwrap();
        let mut imp = vec![0.0; 3];
        imp[0] = 1.0;
        let y = filter(&g, &TimeSeries::from_column(imp).unwrap()).unwrap();
        // y0 = [1, 0]; y1 = [0,1] - A1 y0 = [0.3, 0.9]; y2 = -A1 y1
        assert_eq!(y.get(0, 0), 1.0);
        assert!((y.get(1, 0) - 0.3).abs() < 1e-15 && (y.get(1, 1) - 0.9).abs() < 1e-15);
        assert!((y.get(2, 0) - (0.09 - 0.18)).abs() < 1e-15);
        assert!((y.get(2, 1) - (-0.03 + 0.36)).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let x = TimeSeries::from_columns(&[vec![1.0], vec![1.0]]).unwrap();
        assert!(matches!(filter(&RationalTransferMatrix::identity(1), &x), Err(Error::Shape(_))));
    }
}
