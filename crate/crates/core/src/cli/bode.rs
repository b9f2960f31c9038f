use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::error::Result;
use crate::ratmat::RationalTransferMatrix;
use crate::spectra::BodeTable;

/// Write the Bode table of `g` on `freqs` to `path`.
pub fn export_bode(g: &RationalTransferMatrix, freqs: &[f64], path: &Path, comment: Option<&str>) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    BodeTable::of(g, freqs).write_csv(out, comment)
}

/// Largest `|20 log10 |g| - 20 log10 |g_true||` over all entries and the
/// first `ceil(fraction * len)` grid points.
pub fn bode_max_db(g: &RationalTransferMatrix, truth: &RationalTransferMatrix, freqs: &[f64], fraction: f64) -> f64 {
    let a = BodeTable::of(g, freqs);
    let b = BodeTable::of(truth, freqs);
    let upto = ((fraction * freqs.len() as f64).ceil() as usize).min(freqs.len());
    a.mag_db
        .iter()
        .zip(&b.mag_db)
        .flat_map(|(x, y)| x[..upto].iter().zip(&y[..upto]).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

/// Largest coefficient difference after scaling each row denominator to a
/// unit constant term. Shorter polynomials are padded with zeros.
pub fn coefficient_error(g: &RationalTransferMatrix, truth: &RationalTransferMatrix) -> f64 {
    let diff = |p: &[f64], q: &[f64], sp: f64, sq: f64| {
        (0..p.len().max(q.len()))
            .map(|k| (p.get(k).copied().unwrap_or(0.0) / sp - q.get(k).copied().unwrap_or(0.0) / sq).abs())
            .fold(0.0, f64::max)
    };
    let mut worst: f64 = 0.0;
    for (a, b) in g.row_fractions().iter().zip(truth.row_fractions()) {
        let (sa, sb) = (a.den.coeff(0), b.den.coeff(0));
        worst = worst.max(diff(a.den.coeffs(), b.den.coeffs(), sa, sb));
        for (p, q) in a.num.iter().zip(&b.num) {
            worst = worst.max(diff(p.coeffs(), q.coeffs(), sa, sb));
        }
    }
    worst
}

/// Same shape and the same row-wise denominator and numerator degrees, so
/// that [`coefficient_error`] compares like with like.
pub fn same_structure(g: &RationalTransferMatrix, truth: &RationalTransferMatrix) -> bool {
    g.shape() == truth.shape()
        && g.row_fractions().iter().zip(truth.row_fractions()).all(|(a, b)| {
            a.den.degree() == b.den.degree() && a.num.iter().zip(&b.num).all(|(p, q)| p.degree() == q.degree())
        })
}
