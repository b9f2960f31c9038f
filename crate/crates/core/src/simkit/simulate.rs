use super::{filter, generate_white_noise, NoiseSpec, TimeSeries};
use crate::error::{Error, Result};
use crate::ratmat::RationalTransferMatrix;

/// Output of a simulation together with the noise that drove it.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub y: TimeSeries,
    pub e: TimeSeries,
}

/// `y = W e` for a tall stable factor `W`. The first `m` channels are the
/// free outputs, the remaining ones the deterministic part.
pub fn simulate_low_rank(w: &RationalTransferMatrix, e_spec: &NoiseSpec, length: usize) -> Result<TimeSeries> {
    simulate_low_rank_full(w, e_spec, length).map(|s| s.y)
}

pub fn simulate_low_rank_full(w: &RationalTransferMatrix, e_spec: &NoiseSpec, length: usize) -> Result<Simulation> {
    if e_spec.dim() != w.cols() {
        return Err(Error::Shape(format!("factor has {} inputs, noise has {} channels", w.cols(), e_spec.dim())));
    }
    if !w.is_stable() {
        return Err(Error::Unstable("spectral factor has poles outside the unit disc".into()));
    }
    let e = generate_white_noise(e_spec, length)?;
    let y = filter(w, &e)?;
    Ok(Simulation { y, e })
}

/// `y = F u + K e` with `K(inf) = I` on its top square block.
pub fn simulate_with_input(
    f: &RationalTransferMatrix,
    k: &RationalTransferMatrix,
    u: &TimeSeries,
    e_spec: &NoiseSpec,
) -> Result<TimeSeries> {
    simulate_with_input_full(f, k, u, e_spec).map(|s| s.y)
}

pub fn simulate_with_input_full(
    f: &RationalTransferMatrix,
    k: &RationalTransferMatrix,
    u: &TimeSeries,
    e_spec: &NoiseSpec,
) -> Result<Simulation> {
    if f.rows() != k.rows() {
        return Err(Error::Shape(format!("F has {} outputs, K has {}", f.rows(), k.rows())));
    }
    if f.cols() != u.channels() {
        return Err(Error::Shape(format!("F has {} inputs, u has {} channels", f.cols(), u.channels())));
    }
    if e_spec.dim() != k.cols() {
        return Err(Error::Shape(format!("K has {} inputs, noise has {} channels", k.cols(), e_spec.dim())));
    }
    if !k.is_normalized(1e-9) {
        return Err(Error::NotNormalized("K(inf) must equal the identity".into()));
    }
    if !f.is_stable() || !k.is_stable() {
        return Err(Error::Unstable("F and K must be stable".into()));
    }
    let e = generate_white_noise(e_spec, u.len())?;
    let y = filter(f, u)?.add(&filter(k, &e)?)?;
    Ok(Simulation { y, e })
}
