use std::io::Write;

use super::grid::SpectrumGrid;
use crate::error::Result;
use crate::ratmat::RationalTransferMatrix;

/// Magnitudes below this are written as -400 dB.
const MAG_FLOOR: f64 = 1e-20;

/// Magnitude (dB) and unwrapped phase (degrees) of every entry of `g`.
#[derive(Clone, Debug)]
pub struct BodeTable {
    pub freqs: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    /// Indexed `[entry][freq]`, entries in row-major order.
    pub mag_db: Vec<Vec<f64>>,
    pub phase_deg: Vec<Vec<f64>>,
}

impl BodeTable {
    pub fn of(g: &RationalTransferMatrix, freqs: &[f64]) -> BodeTable {
        let (rows, cols) = g.shape();
        let responses: Vec<_> = freqs.iter().map(|&t| g.response(t)).collect();
        let mut mag_db = Vec::with_capacity(rows * cols);
        let mut phase_deg = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                mag_db.push(responses.iter().map(|r| 20.0 * r[(i, j)].norm().max(MAG_FLOOR).log10()).collect());
                let wrapped: Vec<f64> = responses.iter().map(|r| r[(i, j)].arg()).collect();
                phase_deg.push(unwrap(&wrapped).into_iter().map(f64::to_degrees).collect());
            }
        }
        BodeTable { freqs: freqs.to_vec(), rows, cols, mag_db, phase_deg }
    }

    pub fn entry_mag_db(&self, i: usize, j: usize) -> &[f64] {
        &self.mag_db[i * self.cols + j]
    }

    pub fn entry_phase_deg(&self, i: usize, j: usize) -> &[f64] {
        &self.phase_deg[i * self.cols + j]
    }

    /// Columns `theta,mag_db_ij,phase_deg_ij,...` with 1-based indices.
    pub fn write_csv<W: Write>(&self, out: W, comment: Option<&str>) -> Result<()> {
        let mut out = out;
        if let Some(c) = comment {
            writeln!(out, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["theta".to_string()];
        for i in 1..=self.rows {
            for j in 1..=self.cols {
                header.push(format!("mag_db_{i}{j}"));
                header.push(format!("phase_deg_{i}{j}"));
            }
        }
        w.write_record(&header)?;
        for (k, t) in self.freqs.iter().enumerate() {
            let mut rec = vec![format!("{t:.16e}")];
            for e in 0..self.rows * self.cols {
                rec.push(format!("{:.16e}", self.mag_db[e][k]));
                rec.push(format!("{:.16e}", self.phase_deg[e][k]));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Phase unwrapping along the grid: successive jumps are kept within pi.
pub fn unwrap(phase: &[f64]) -> Vec<f64> {
    let tau = 2.0 * std::f64::consts::PI;
    let mut out = Vec::with_capacity(phase.len());
    let mut offset = 0.0;
    for (k, &p) in phase.iter().enumerate() {
        if k > 0 {
            let d = p - phase[k - 1];
            offset -= tau * (d / tau).round();
        }
        out.push(p + offset);
    }
    out
}

/// Columns `theta,re_ij,im_ij,...`.
pub fn write_spectrum_csv<W: Write>(phi: &SpectrumGrid, out: W, comment: Option<&str>) -> Result<()> {
    let mut out = out;
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["theta".to_string()];
    for i in 1..=phi.dim {
        for j in 1..=phi.dim {
            header.push(format!("re_{i}{j}"));
            header.push(format!("im_{i}{j}"));
        }
    }
    w.write_record(&header)?;
    for (t, v) in phi.freqs.iter().zip(&phi.values) {
        let mut rec = vec![format!("{t:.16e}")];
        for i in 0..phi.dim {
            for j in 0..phi.dim {
                rec.push(format!("{:.16e}", v[(i, j)].re));
                rec.push(format!("{:.16e}", v[(i, j)].im));
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
