use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::grid::{hermitian_part, SpectrumGrid};
use crate::error::{Error, Result};
use crate::ratmat::RationalTransferMatrix;

/// Blocks of `T = N^-1`, `N = [[I, -F], [-H, I]]`:
/// `T = [[P, PF], [QH, Q]]` with `P = (I - FH)^-1`, `Q = (I - HF)^-1`.
#[derive(Clone, Debug)]
pub struct ClosedLoop {
    pub t: RationalTransferMatrix,
    pub p: RationalTransferMatrix,
    pub pf: RationalTransferMatrix,
    pub qh: RationalTransferMatrix,
    pub q: RationalTransferMatrix,
}

impl ClosedLoop {
    pub fn m(&self) -> usize {
        self.p.rows()
    }

    pub fn p_dim(&self) -> usize {
        self.q.rows()
    }

    pub fn is_internally_stable(&self) -> bool {
        [&self.p, &self.pf, &self.qh, &self.q].iter().all(|g| g.is_stable())
    }
}

/// `N(z)` for the loop `y1 = F y2 + v`, `y2 = H y1 + r`.
pub fn loop_operator(f: &RationalTransferMatrix, h: &RationalTransferMatrix) -> Result<RationalTransferMatrix> {
    let (m, p) = f.shape();
    if h.shape() != (p, m) {
        return Err(Error::Shape(format!("F is {:?} so H must be {:?}, got {:?}", f.shape(), (p, m), h.shape())));
    }
    let top = RationalTransferMatrix::hstack(&[RationalTransferMatrix::identity(m), f.neg()])?;
    let bottom = RationalTransferMatrix::hstack(&[h.neg(), RationalTransferMatrix::identity(p)])?;
    RationalTransferMatrix::vstack(&[top, bottom])
}

pub fn closed_loop_transfer(f: &RationalTransferMatrix, h: &RationalTransferMatrix) -> Result<ClosedLoop> {
    let (m, p) = f.shape();
    let n = loop_operator(f, h)?;
    let t = n.inverse().map_err(|e| match e {
        Error::ImproperInverse => Error::IllPosedLoop("I - F(inf) H(inf) is singular".into()),
        other => other,
    })?;
    let top: Vec<usize> = (0..m).collect();
    let bottom: Vec<usize> = (m..m + p).collect();
    let upper = t.select_rows(&top)?;
    let lower = t.select_rows(&bottom)?;
    Ok(ClosedLoop {
        p: upper.select_cols(&top)?,
        pf: upper.select_cols(&bottom)?,
        qh: lower.select_cols(&top)?,
        q: lower.select_cols(&bottom)?,
        t,
    })
}

/// `Phi = T diag(Phi_v, Phi_r) T^*` on the common grid of `phi_v` and `phi_r`.
pub fn spectrum_from_feedback(
    f: &RationalTransferMatrix,
    h: &RationalTransferMatrix,
    phi_v: &SpectrumGrid,
    phi_r: &SpectrumGrid,
) -> Result<SpectrumGrid> {
    let (m, p) = f.shape();
    if phi_v.freqs != phi_r.freqs {
        return Err(Error::Shape("noise spectra are sampled on different grids".into()));
    }
    if phi_v.dim != m || phi_r.dim != p {
        return Err(Error::Shape(format!(
            "noise spectra are {}x{} and {}x{}, loop needs {m} and {p}",
            phi_v.dim, phi_v.dim, phi_r.dim, phi_r.dim
        )));
    }
    let cl = closed_loop_transfer(f, h)?;
    if !cl.is_internally_stable() {
        return Err(Error::Unstable("closed loop is not internally stable".into()));
    }
    let values: Vec<DMatrix<Complex64>> = phi_v
        .freqs
        .par_iter()
        .enumerate()
        .map(|(i, &theta)| {
            let t = cl.t.response(theta);
            let mut d = DMatrix::zeros(m + p, m + p);
            d.view_mut((0, 0), (m, m)).copy_from(&phi_v.values[i]);
            d.view_mut((m, m), (p, p)).copy_from(&phi_r.values[i]);
            hermitian_part(&t * d * t.adjoint())
        })
        .collect();
    SpectrumGrid::new(phi_v.freqs.clone(), values)?.with_partition(m)
}
