use super::closed_loop::{closed_loop_transfer, ClosedLoop};
use crate::error::{Error, Result};
use crate::ratmat::RationalTransferMatrix;
use crate::simkit::NoiseSpec;

/// `y1 = F y2 + K e`, `y2 = H y1`, with `F` strictly causal and `K(inf) = I`.
#[derive(Clone, Debug)]
pub struct FeedbackModel {
    f: RationalTransferMatrix,
    h: RationalTransferMatrix,
    k: RationalTransferMatrix,
    noise: NoiseSpec,
}

impl FeedbackModel {
    pub fn new(
        f: RationalTransferMatrix,
        h: RationalTransferMatrix,
        k: RationalTransferMatrix,
        noise: NoiseSpec,
    ) -> Result<Self> {
        let (m, p) = f.shape();
        if h.shape() != (p, m) {
            return Err(Error::Shape(format!("H must be {p}x{m}, got {:?}", h.shape())));
        }
        if k.shape() != (m, m) {
            return Err(Error::Shape(format!("K must be {m}x{m}, got {:?}", k.shape())));
        }
        if noise.dim() != m {
            return Err(Error::Shape(format!("noise must have {m} channels, has {}", noise.dim())));
        }
        noise.validate()?;
        if !f.has_delay() {
            return Err(Error::IllPosedLoop("F must have at least a unit delay".into()));
        }
        if !k.is_normalized(1e-9) {
            return Err(Error::NotNormalized("K(inf) must equal the identity".into()));
        }
        if !closed_loop_transfer(&f, &h)?.is_internally_stable() {
            return Err(Error::Unstable("feedback loop is not internally stable".into()));
        }
        Ok(FeedbackModel { f, h, k, noise })
    }

    pub fn f(&self) -> &RationalTransferMatrix {
        &self.f
    }

    pub fn h(&self) -> &RationalTransferMatrix {
        &self.h
    }

    pub fn k(&self) -> &RationalTransferMatrix {
        &self.k
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn m(&self) -> usize {
        self.f.rows()
    }

    pub fn closed_loop(&self) -> Result<ClosedLoop> {
        closed_loop_transfer(&self.f, &self.h)
    }
}

/// `W = [P K; Q H K]`, the innovation factor of a feedback model.
pub fn assemble_w_from_fhk(model: &FeedbackModel) -> Result<RationalTransferMatrix> {
    assemble_w(model.f(), model.h(), model.k())
}

/// Same as [`assemble_w_from_fhk`] for loose blocks, as produced by
/// identification where `K` need not pass the model checks.
pub fn assemble_w(
    f: &RationalTransferMatrix,
    h: &RationalTransferMatrix,
    k: &RationalTransferMatrix,
) -> Result<RationalTransferMatrix> {
    let cl = closed_loop_transfer(f, h)?;
    let w = RationalTransferMatrix::vstack(&[cl.p.mul(k)?, cl.qh.mul(k)?])?;
    if !w.is_stable() {
        return Err(Error::Unstable("assembled factor is unstable".into()));
    }
    Ok(w)
}
