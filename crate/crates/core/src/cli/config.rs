use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ident::{ArmaxOrders, ChannelOrders, PemOptions};
use crate::ratmat::{MatrixPolynomial, Poly, RationalTransferMatrix, RowFraction};
use crate::spectra::DEFAULT_FREQ_POINTS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    LowRankTimeseries,
    WithInput,
    SpectrumCheck,
}

/// A transfer matrix in text form. Coefficients are in ascending powers of
/// `z^-1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MfdSpec {
    /// `numer(z^-1) / denom(z^-1)`.
    Scalar { denom: Vec<f64>, numer: Vec<f64> },
    /// Left fraction `denom^-1 numer`; each polynomial is a list of
    /// coefficient matrices, each matrix a list of rows.
    Matrix { denom: Vec<Vec<Vec<f64>>>, numer: Vec<Vec<Vec<f64>>> },
    /// One scalar denominator per row, shared by the row's numerators.
    Rows { rows: Vec<RowSpec> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowSpec {
    pub denom: Vec<f64>,
    pub numer: Vec<Vec<f64>>,
}

impl MfdSpec {
    pub fn build(&self) -> Result<RationalTransferMatrix> {
        match self {
            MfdSpec::Scalar { denom, numer } => {
                check_poly(denom, "denom")?;
                check_poly(numer, "numer")?;
                RationalTransferMatrix::scalar(numer, denom)
            }
            MfdSpec::Matrix { denom, numer } => {
                let d = matrix_poly(denom, "denom")?;
                let n = matrix_poly(numer, "numer")?;
                RationalTransferMatrix::new(d, n)
            }
            MfdSpec::Rows { rows } => {
                if rows.is_empty() {
                    return Err(Error::Config("`rows` must not be empty".into()));
                }
                let width = rows[0].numer.len();
                let mut fr = Vec::with_capacity(rows.len());
                for (i, r) in rows.iter().enumerate() {
                    check_poly(&r.denom, &format!("rows[{i}].denom"))?;
                    if r.numer.len() != width || width == 0 {
                        return Err(Error::Config(format!("rows[{i}].numer must list {width} polynomials")));
                    }
                    for (j, p) in r.numer.iter().enumerate() {
                        check_poly(p, &format!("rows[{i}].numer[{j}]"))?;
                    }
                    fr.push(RowFraction {
                        den: Poly::new(r.denom.clone()),
                        num: r.numer.iter().map(|p| Poly::new(p.clone())).collect(),
                    });
                }
                RationalTransferMatrix::from_rows(fr)
            }
        }
    }
}

fn check_poly(c: &[f64], field: &str) -> Result<()> {
    if c.is_empty() {
        return Err(Error::Config(format!("`{field}` needs at least one coefficient")));
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("`{field}` has non-finite coefficients")));
    }
    Ok(())
}

fn matrix_poly(c: &[Vec<Vec<f64>>], field: &str) -> Result<MatrixPolynomial> {
    let first = c.first().ok_or_else(|| Error::Config(format!("`{field}` has no coefficients")))?;
    let rows = first.len();
    let cols = first.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(Error::Config(format!("`{field}` coefficient matrices must be non-empty")));
    }
    let mut mats = Vec::with_capacity(c.len());
    for (k, m) in c.iter().enumerate() {
        if m.len() != rows || m.iter().any(|r| r.len() != cols) {
            return Err(Error::Config(format!("`{field}[{k}]` is not {rows}x{cols}")));
        }
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("`{field}[{k}]` has non-finite entries")));
        }
        mats.push(DMatrix::from_fn(rows, cols, |i, j| m[i][j]));
    }
    MatrixPolynomial::new(rows, cols, mats)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Tall spectral factor `[W1; W2]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<MfdSpec>,
    /// Rank of the process; `W1` is the top `m x m` block.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<MfdSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<MfdSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub variance: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderConfig {
    /// AR order for each full-rank block.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ar: Option<usize>,
    /// Deterministic channel `A y2 = B y1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<ChannelOrders>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub armax: Option<ArmaxOrders>,
    /// Input channel orders, one entry per output or a single shared one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<ChannelOrders>>,
    /// Degree of the ARMA fits of the residual.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Optional second input fit with the true structure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_known: Option<Vec<ChannelOrders>>,
    /// VAR order of the residual rank check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_var: Option<usize>,
}

fn default_transient() -> usize {
    crate::simkit::DEFAULT_TRANSIENT
}

fn default_freq_points() -> usize {
    DEFAULT_FREQ_POINTS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub mode: Mode,
    pub model: ModelConfig,
    pub noise: NoiseConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_noise: Option<NoiseConfig>,
    /// Samples kept for fitting; `transient` more are simulated first.
    pub length: usize,
    #[serde(default = "default_transient")]
    pub transient: usize,
    #[serde(default)]
    pub orders: OrderConfig,
    #[serde(default)]
    pub pem: PemOptions,
    pub seeds: Vec<u64>,
    #[serde(default = "default_freq_points")]
    pub freq_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// The true system described by a config, built and checked.
#[derive(Clone, Debug)]
pub struct TrueSystem {
    pub w: Option<RationalTransferMatrix>,
    pub m: usize,
    pub f: Option<RationalTransferMatrix>,
    pub k: Option<RationalTransferMatrix>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<TrueSystem> {
        if self.length <= self.transient {
            return Err(Error::Config(format!(
                "length {} must exceed the transient {}",
                self.length, self.transient
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("`seeds` must not be empty".into()));
        }
        if self.freq_points == 0 {
            return Err(Error::Config("`freq_points` must be positive".into()));
        }
        check_variance(&self.noise.variance, "noise.variance")?;
        let w = self.model.w.as_ref().map(|s| s.build()).transpose().map_err(|e| ctx("model.w", e))?;
        let f = self.model.f.as_ref().map(|s| s.build()).transpose().map_err(|e| ctx("model.f", e))?;
        let k = self.model.k.as_ref().map(|s| s.build()).transpose().map_err(|e| ctx("model.k", e))?;
        let m = self.model.m.unwrap_or(1);
        match self.mode {
            Mode::LowRankTimeseries | Mode::SpectrumCheck => {
                let w = w.as_ref().ok_or_else(|| Error::Config("model.w is required in this mode".into()))?;
                if w.cols() != m || w.rows() <= m {
                    return Err(Error::Config(format!("model.w is {:?}, needs {m} columns and more rows", w.shape())));
                }
                if self.noise.variance.len() != m {
                    return Err(Error::Config(format!("noise.variance needs {m} entries")));
                }
                if !w.is_stable() {
                    return Err(Error::Config("model.w is not stable".into()));
                }
                if self.mode == Mode::LowRankTimeseries {
                    if self.orders.ar.is_none() || self.orders.h.is_none() {
                        return Err(Error::Config("orders.ar and orders.h are required".into()));
                    }
                    if let Some(a) = &self.orders.armax {
                        if a.na != a.nc || a.delay < 1 {
                            return Err(Error::Config("orders.armax needs na = nc and delay >= 1".into()));
                        }
                    }
                }
                if let (Some(f), Some(k)) = (&f, &k) {
                    if f.shape() != (m, w.rows() - m) || k.shape() != (m, m) {
                        return Err(Error::Config("model.f / model.k do not match the partition of model.w".into()));
                    }
                }
            }
            Mode::WithInput => {
                let (f, k) = match (&f, &k) {
                    (Some(f), Some(k)) => (f, k),
                    _ => return Err(Error::Config("model.f and model.k are required in with_input mode".into())),
                };
                if f.rows() != k.rows() {
                    return Err(Error::Config("model.f and model.k must have the same number of outputs".into()));
                }
                if !f.has_delay() {
                    return Err(Error::Config("model.f must have at least a unit delay".into()));
                }
                if !k.is_normalized(1e-9) {
                    return Err(Error::Config("model.k must equal the identity at infinity".into()));
                }
                if !f.is_stable() || !k.is_stable() {
                    return Err(Error::Config("model.f and model.k must be stable".into()));
                }
                if self.noise.variance.len() != k.cols() {
                    return Err(Error::Config(format!("noise.variance needs {} entries", k.cols())));
                }
                let u = self
                    .input_noise
                    .as_ref()
                    .ok_or_else(|| Error::Config("input_noise is required in with_input mode".into()))?;
                check_variance(&u.variance, "input_noise.variance")?;
                if u.variance.len() != f.cols() {
                    return Err(Error::Config(format!("input_noise.variance needs {} entries", f.cols())));
                }
                if self.orders.f.is_none() || self.orders.k.is_none() {
                    return Err(Error::Config("orders.f and orders.k are required".into()));
                }
            }
        }
        Ok(TrueSystem { w, m, f, k })
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn check_variance(v: &[f64], field: &str) -> Result<()> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::Config(format!("`{field}` must be a non-empty list of variances >= 0")));
    }
    Ok(())
}

fn ctx(field: &str, e: Error) -> Error {
    match e {
        Error::Config(msg) => Error::Config(format!("{field}: {msg}")),
        other => Error::Config(format!("{field}: {other}")),
    }
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_config(cfg: &ExperimentConfig) -> Result<String> {
    Ok(serde_json::to_string_pretty(cfg)?)
}
