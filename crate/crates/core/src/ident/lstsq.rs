use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest are treated as zero.
pub const LS_CUTOFF: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct LsSolution {
    /// One column per right-hand side.
    pub theta: DMatrix<f64>,
    pub rank: usize,
    pub condition_number: f64,
    pub singular_values: Vec<f64>,
}

impl LsSolution {
    pub fn is_rank_deficient(&self) -> bool {
        self.rank < self.singular_values.len()
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.theta.column(j).into_owned()
    }
}

/// Minimum-norm least squares `min ||A theta - B||` through the SVD of `A`.
pub fn lstsq(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<LsSolution> {
    if a.nrows() != b.nrows() {
        return Err(Error::Shape(format!("{} equations but {} right-hand rows", a.nrows(), b.nrows())));
    }
    let n = a.ncols();
    if n == 0 {
        return Ok(LsSolution {
            theta: DMatrix::zeros(0, b.ncols()),
            rank: 0,
            condition_number: 1.0,
            singular_values: Vec::new(),
        });
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite values in least-squares data".into()));
    }
    let svd = a.clone().svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Numerical("SVD failed".into())),
    };
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let smax = sv.iter().fold(0.0_f64, |m, s| m.max(*s));
    let smin = sv.iter().fold(f64::INFINITY, |m, s| m.min(*s));
    let cutoff = LS_CUTOFF * smax;
    let utb = u.transpose() * b;
    let mut theta = DMatrix::zeros(n, b.ncols());
    let mut rank = 0;
    for (i, s) in sv.iter().enumerate() {
        if *s > cutoff && *s > 0.0 {
            rank += 1;
            let coef = utb.row(i) / *s;
            theta += vt.row(i).transpose() * coef;
        }
    }
    // a wide system cannot have full column rank
    let full = if a.nrows() < n { 0 } else { n };
    let condition_number = if smin > 0.0 && sv.len() == full { smax / smin } else { f64::INFINITY };
    let mut singular_values = sv;
    singular_values.resize(n, 0.0);
    Ok(LsSolution { theta, rank, condition_number, singular_values })
}

pub fn lstsq_vec(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<LsSolution> {
    lstsq(a, &DMatrix::from_column_slice(b.len(), 1, b.as_slice()))
}

/// `max |A^T r| / (||A||_F ||b||)`, zero at an exact least-squares solution.
pub fn normal_equation_residual(a: &DMatrix<f64>, b: &DMatrix<f64>, theta: &DMatrix<f64>) -> f64 {
    let r = b - a * theta;
    let g = a.transpose() * r;
    let scale = a.norm() * b.norm();
    if scale == 0.0 {
        return 0.0;
    }
    g.amax() / scale
}
