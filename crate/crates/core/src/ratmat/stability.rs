use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::poly::Poly;
use super::rtm::RationalTransferMatrix;
use crate::error::{Error, Result};

/// Strict stability margin used unless a caller asks otherwise.
pub const DEFAULT_STABILITY_TOL: f64 = 1e-9;

/// Pole/zero summary of a transfer matrix in the z-plane.
///
/// Polynomials are stored in `x = z^-1`; a root `x_i` of `det A(x)` is a pole
/// at `z_i = 1 / x_i`. The system is stable when every `|z_i| < 1 - tol`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilityReport {
    pub poles: Vec<Complex64>,
    pub zeros: Vec<Complex64>,
    pub is_stable: bool,
    /// `None` when the numerator is neither square nor a single column.
    pub is_minimum_phase: Option<bool>,
    /// Smallest `| |z_i| - 1 |` over the poles; infinite without poles.
    pub margin: f64,
}

fn z_plane(roots: &[Complex64]) -> Vec<Complex64> {
    roots.iter().filter(|r| r.norm() > 0.0).map(|r| r.inv()).collect()
}

/// Finite zeros of a scalar numerator, plus whether any zero sits at infinity.
fn numerator_zeros(p: &Poly) -> (Vec<Complex64>, bool) {
    if p.is_zero() {
        return (Vec::new(), true);
    }
    let roots = p.roots();
    let at_infinity = roots.iter().any(|r| r.norm() == 0.0);
    (z_plane(&roots), at_infinity)
}

fn inside(points: &[Complex64], tol: f64) -> bool {
    points.iter().all(|z| z.norm() < 1.0 - tol)
}

pub fn stability_report(g: &RationalTransferMatrix, stability_tol: f64) -> Result<StabilityReport> {
    if !(stability_tol > 0.0 && stability_tol < 0.1) {
        return Err(Error::InvalidArgument(format!(
            "stability tolerance {stability_tol} outside (0, 0.1)"
        )));
    }
    let poles = if g.denom().is_diagonal() {
        (0..g.rows()).flat_map(|i| z_plane(&g.denom().entry(i, i).roots())).collect::<Vec<_>>()
    } else {
        let d = g.denom().det()?;
        if d.is_zero() {
            return Err(Error::DegenerateDenominator);
        }
        z_plane(&d.roots())
    };
    let is_stable = inside(&poles, stability_tol);
    let margin = poles.iter().map(|z| (z.norm() - 1.0).abs()).fold(f64::INFINITY, f64::min);

    let (zeros, is_minimum_phase) = if g.rows() == g.cols() {
        let (z, inf) = numerator_zeros(&g.numer().det()?);
        let mp = !inf && inside(&z, stability_tol);
        (z, Some(mp))
    } else if g.cols() == 1 {
        let mut all = Vec::new();
        let mut mp = true;
        for i in 0..g.rows() {
            let (z, inf) = numerator_zeros(&g.numer().entry(i, 0));
            mp &= !inf && inside(&z, stability_tol);
            all.extend(z);
        }
        (all, Some(mp))
    } else {
        (Vec::new(), None)
    };
    Ok(StabilityReport { poles, zeros, is_stable, is_minimum_phase, margin })
}

impl RationalTransferMatrix {
    pub fn stability(&self, tol: f64) -> Result<StabilityReport> {
        stability_report(self, tol)
    }

    pub fn is_stable(&self) -> bool {
        stability_report(self, DEFAULT_STABILITY_TOL).map(|r| r.is_stable).unwrap_or(false)
    }
}

/// All roots of `p` (in `x`) map to z-plane points strictly inside the unit disc.
pub fn is_minimum_phase_poly(p: &Poly, tol: f64) -> bool {
    let (z, inf) = numerator_zeros(p);
    !inf && inside(&z, tol)
}
