use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratmat::{one_step_division, MatrixPolynomial, RationalTransferMatrix};
use crate::simkit::{filter_raw, TimeSeries};

/// `A(x) y1 = B(x) y2 + C(x) e` with `A`, `C` monic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmaxModel {
    pub a: MatrixPolynomial,
    /// `None` for a pure ARMA model.
    pub b: Option<MatrixPolynomial>,
    pub c: MatrixPolynomial,
}

impl ArmaxModel {
    pub fn new(a: MatrixPolynomial, b: Option<MatrixPolynomial>, c: MatrixPolynomial) -> Result<Self> {
        let m = a.rows();
        if !a.is_square() || c.shape() != (m, m) {
            return Err(Error::Shape("A and C must be square of the output dimension".into()));
        }
        if let Some(b) = &b {
            if b.rows() != m {
                return Err(Error::Shape(format!("B has {} rows, expected {m}", b.rows())));
            }
        }
        if !a.is_monic() || !c.is_monic() {
            return Err(Error::NotMonic("A and C must have identity constant terms".into()));
        }
        Ok(ArmaxModel { a, b, c })
    }

    pub fn outputs(&self) -> usize {
        self.a.rows()
    }

    pub fn inputs(&self) -> usize {
        self.b.as_ref().map_or(0, |b| b.cols())
    }

    /// `F = A^-1 B`, zero when there is no input.
    pub fn f(&self) -> Result<RationalTransferMatrix> {
        match &self.b {
            Some(b) => RationalTransferMatrix::new(self.a.clone(), b.clone()),
            None => Ok(RationalTransferMatrix::zeros(self.outputs(), 1)),
        }
    }

    /// `K = A^-1 C`.
    pub fn k(&self) -> Result<RationalTransferMatrix> {
        RationalTransferMatrix::new(self.a.clone(), self.c.clone())
    }

    /// `C^-1 [z C1, B]`, the map from `[y1; y2]` to the one-step prediction.
    pub fn predictor(&self) -> Result<RationalTransferMatrix> {
        let c1 = one_step_division(&self.c, &self.a)?.shift(1);
        let numer = match &self.b {
            Some(b) => hstack_poly(&c1, b),
            None => c1,
        };
        RationalTransferMatrix::new(self.c.clone(), numer)
    }
}

fn hstack_poly(p: &MatrixPolynomial, q: &MatrixPolynomial) -> MatrixPolynomial {
    let d = p.degree().max(q.degree());
    let (r, c1, c2) = (p.rows(), p.cols(), q.cols());
    let coeffs = (0..=d)
        .map(|k| {
            let (pk, qk) = (p.coeff(k), q.coeff(k));
            DMatrix::from_fn(r, c1 + c2, |i, j| if j < c1 { pk[(i, j)] } else { qk[(i, j - c1)] })
        })
        .collect();
    MatrixPolynomial::new(r, c1 + c2, coeffs).expect("shapes agree by construction")
}

/// One-step-ahead prediction from `C yhat(t|t-1) = C1 y1(t-1) + B1 y2(t-1)`,
/// zero initial conditions.
pub fn predict_one_step(model: &ArmaxModel, y1: &TimeSeries, y2: Option<&TimeSeries>) -> Result<TimeSeries> {
    let m = model.outputs();
    if y1.channels() != m {
        return Err(Error::Shape(format!("model has {m} outputs, y1 has {} channels", y1.channels())));
    }
    let c_inv = RationalTransferMatrix::new(model.c.clone(), MatrixPolynomial::identity(m))?;
    if !c_inv.is_stable() {
        return Err(Error::NonMinimumPhase("C has zeros on or outside the unit circle".into()));
    }
    let data = match (model.inputs(), y2) {
        (0, _) => y1.data().clone(),
        (p, Some(y2)) if y2.channels() == p && y2.len() == y1.len() => {
            TimeSeries::concat_channels(&[y1, y2])?.data().clone()
        }
        (p, _) => return Err(Error::Shape(format!("model needs an input series with {p} channels"))),
    };
    let yhat = filter_raw(&model.predictor()?, &data);
    TimeSeries::new(yhat, Some(y1.labels().to_vec()))
}

/// `eps = y1 - yhat(.|.-1)`.
pub fn prediction_errors(model: &ArmaxModel, y1: &TimeSeries, y2: Option<&TimeSeries>) -> Result<TimeSeries> {
    y1.sub(&predict_one_step(model, y1, y2)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratmat::Poly;
    use crate::simkit::{filter, generate_white_noise, NoiseSpec};

    fn scalar(c: &[f64]) -> MatrixPolynomial {
        MatrixPolynomial::scalar(&Poly::new(c.to_vec()))
    }

    #[test]
    fn white_noise_model_predicts_zero() {
        let a = scalar(&[1.0, -0.4]);
        let m = ArmaxModel::new(a.clone(), None, a).unwrap();
        let y = generate_white_noise(&NoiseSpec::unit(1, 1), 50).unwrap();
        let yhat = predict_one_step(&m, &y, None).unwrap();
        assert!(yhat.data().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn pure_regression() {
        let m = ArmaxModel::new(scalar(&[1.0]), Some(scalar(&[0.0, 0.7])), scalar(&[1.0])).unwrap();
        let y1 = generate_white_noise(&NoiseSpec::unit(1, 2), 30).unwrap();
        let y2 = generate_white_noise(&NoiseSpec::unit(1, 3), 30).unwrap();
        let yhat = predict_one_step(&m, &y1, Some(&y2)).unwrap();
        assert_eq!(yhat.get(0, 0), 0.0);
        for t in 1..30 {
            assert!((yhat.get(t, 0) - 0.7 * y2.get(t - 1, 0)).abs() < 1e-15);
        }
    }

    #[test]
    fn innovations_are_recovered_exactly() {
        let a = scalar(&[1.0, -0.5, 0.2]);
        let c = scalar(&[1.0, 0.3, 0.1]);
        let b = scalar(&[0.0, 1.0, 0.4]);
        let model = ArmaxModel::new(a, Some(b), c).unwrap();
        let u = generate_white_noise(&NoiseSpec::unit(1, 4), 400).unwrap();
        let e = generate_white_noise(&NoiseSpec::unit(1, 5), 400).unwrap();
        let y = filter(&model.f().unwrap(), &u).unwrap().add(&filter(&model.k().unwrap(), &e).unwrap()).unwrap();
        let eps = prediction_errors(&model, &y, Some(&u)).unwrap();
        assert!(eps.sub(&e.with_labels(vec!["ch1".into()]).unwrap()).unwrap().rms() < 1e-12);
    }

    #[test]
    fn non_minimum_phase_c_rejected() {
        let m = ArmaxModel::new(scalar(&[1.0]), None, scalar(&[1.0, 2.0])).unwrap();
        let y = generate_white_noise(&NoiseSpec::unit(1, 1), 10).unwrap();
        assert!(matches!(predict_one_step(&m, &y, None), Err(Error::NonMinimumPhase(_))));
    }
}
