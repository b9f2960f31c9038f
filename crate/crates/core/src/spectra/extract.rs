use nalgebra::DMatrix;
use num_complex::Complex64;

use super::grid::SpectrumGrid;
use crate::error::{Error, Result};
use crate::ratmat::{RationalTransferMatrix, DEFAULT_CANCEL_TOL};

/// Frequency response sampled on a grid; not a rational model.
#[derive(Clone, Debug)]
pub struct GridResponse {
    pub freqs: Vec<f64>,
    pub values: Vec<DMatrix<Complex64>>,
}

impl GridResponse {
    pub fn of(g: &RationalTransferMatrix, freqs: &[f64]) -> GridResponse {
        GridResponse { freqs: freqs.to_vec(), values: freqs.iter().map(|&t| g.response(t)).collect() }
    }

    /// Largest entrywise modulus of the difference to `g` on this grid.
    pub fn max_deviation(&self, g: &RationalTransferMatrix) -> f64 {
        self.freqs
            .iter()
            .zip(&self.values)
            .map(|(&t, v)| {
                let r = g.response(t);
                if r.shape() != v.shape() {
                    return f64::INFINITY;
                }
                (v - r).iter().fold(0.0_f64, |m, z| m.max(z.norm()))
            })
            .fold(0.0, f64::max)
    }
}

/// `H = Phi21 Phi11^-1` at every grid point.
pub fn extract_h_from_spectrum(phi: &SpectrumGrid) -> Result<GridResponse> {
    let m = phi.partition_m.ok_or_else(|| Error::InvalidArgument("spectrum has no block partition".into()))?;
    let p = phi.dim - m;
    let mut values = Vec::with_capacity(phi.len());
    for (t, v) in phi.freqs.iter().zip(&phi.values) {
        let phi11 = v.view((0, 0), (m, m)).into_owned();
        let phi21 = v.view((m, 0), (p, m)).into_owned();
        let sv = phi11.clone().singular_values();
        let top = sv.max();
        if top == 0.0 || sv.min() <= 1e-12 * top {
            return Err(Error::Singular(format!("Phi11 is singular at theta = {t}; reorder the channels")));
        }
        // H Phi11 = Phi21, solved through the Hermitian system Phi11 H^* = Phi21^*
        let h_adj = phi11
            .lu()
            .solve(&phi21.adjoint())
            .ok_or_else(|| Error::Singular(format!("Phi11 is singular at theta = {t}")))?;
        values.push(h_adj.adjoint());
    }
    Ok(GridResponse { freqs: phi.freqs.clone(), values })
}

/// `H = W2 W1^-1` for a tall factor `W = [W1; W2]` split after `m` rows.
pub fn extract_h_from_factor(w: &RationalTransferMatrix, m: usize) -> Result<RationalTransferMatrix> {
    let rows = w.rows();
    if m == 0 || m >= rows || w.cols() != m {
        return Err(Error::Shape(format!("cannot split a {:?} factor at {m}", w.shape())));
    }
    let w1 = w.select_rows(&(0..m).collect::<Vec<_>>())?;
    let w2 = w.select_rows(&(m..rows).collect::<Vec<_>>())?;
    let w1_inv = w1.inverse().map_err(|e| match e {
        Error::ImproperInverse => Error::Singular("W1 is not invertible with a causal inverse".into()),
        other => other,
    })?;
    w2.mul(&w1_inv)?.simplify(DEFAULT_CANCEL_TOL)
}

/// Greedily pick `m` channels whose spectral block is best conditioned: at
/// each step the channel maximizing the grid average of the smallest
/// singular value of the candidate block is added. The picks come first in
/// the returned permutation, the remaining channels follow in order.
pub fn select_full_rank_channels(phi: &SpectrumGrid, m: usize) -> Result<Vec<usize>> {
    if m == 0 || m > phi.dim {
        return Err(Error::InvalidArgument(format!("cannot select {m} of {} channels", phi.dim)));
    }
    let mut chosen: Vec<usize> = Vec::with_capacity(m);
    for _ in 0..m {
        let mut best: Option<(usize, f64)> = None;
        for c in (0..phi.dim).filter(|c| !chosen.contains(c)) {
            let mut idx = chosen.clone();
            idx.push(c);
            let score = phi
                .values
                .iter()
                .map(|v| {
                    let block = DMatrix::from_fn(idx.len(), idx.len(), |i, j| v[(idx[i], idx[j])]);
                    block.singular_values().min()
                })
                .sum::<f64>()
                / phi.len() as f64;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((c, score));
            }
        }
        chosen.push(best.map(|b| b.0).unwrap_or(0));
    }
    let rest: Vec<usize> = (0..phi.dim).filter(|c| !chosen.contains(c)).collect();
    chosen.extend(rest);
    Ok(chosen)
}
