use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bode::{bode_max_db, coefficient_error, export_bode, same_structure};
use super::config::{ExperimentConfig, Mode, TrueSystem};
use crate::error::{Error, Result};
use crate::ident::{
    autocorrelation, fit_ar, fit_armax_pem, fit_deterministic_channel, fit_input_channel, identify_with_input,
    var_spectrum_rank_ratio, FitReport, InputPipelineOrders,
};
use crate::ratmat::RationalTransferMatrix;
use crate::simkit::{filter, generate_white_noise, simulate_with_input_full, NoiseSpec, TimeSeries};
use crate::spectra::{
    check_rank, closed_loop_transfer, default_grid, extract_h_from_factor, extract_h_from_spectrum,
    spectrum_from_factor, spectrum_from_feedback, write_spectrum_csv, GridResponse, SpectrumGrid, DEFAULT_RANK_TOL,
};

/// Fraction of the grid, from low frequencies, over which the rebuilt
/// factor is compared with the direct fit.
pub const RECONSTRUCTION_BAND: f64 = 0.8;

const E_STREAM: u64 = 0;
const U_STREAM: u64 = 1;

/// Command-line overrides of a config.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    /// Run `R` replications with seeds `base, base + 1, ...`.
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    pub freq_points: Option<usize>,
}

impl RunOptions {
    pub fn seeds(&self, cfg: &ExperimentConfig) -> Vec<u64> {
        let base = self.seed.unwrap_or(cfg.seeds[0]);
        match (self.replications, self.seed) {
            (Some(r), _) => (0..r as u64).map(|i| base + i).collect(),
            (None, Some(s)) => vec![s],
            (None, None) => cfg.seeds.clone(),
        }
    }

    pub fn freqs(&self, cfg: &ExperimentConfig) -> Vec<f64> {
        default_grid(self.freq_points.unwrap_or(cfg.freq_points))
    }

    pub fn out_dir(&self, cfg: &ExperimentConfig) -> Option<PathBuf> {
        self.out.clone().or_else(|| cfg.output_dir.clone())
    }
}

/// One simulated realization with the transient already removed.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub y: TimeSeries,
    pub u: Option<TimeSeries>,
    pub e: Option<TimeSeries>,
}

impl Dataset {
    /// `y` columns followed by `u` columns, labelled `y1.. u1..`.
    pub fn combined(&self) -> Result<TimeSeries> {
        let y = relabel(&self.y, "y")?;
        match &self.u {
            Some(u) => TimeSeries::concat_channels(&[&y, &relabel(u, "u")?]),
            None => Ok(y),
        }
    }

    /// Inverse of [`Dataset::combined`]: channels whose label starts with
    /// `u` are inputs.
    pub fn split(data: &TimeSeries) -> Result<Dataset> {
        let (u_idx, y_idx): (Vec<usize>, Vec<usize>) =
            (0..data.channels()).partition(|&j| data.labels()[j].starts_with('u'));
        if y_idx.is_empty() {
            return Err(Error::InvalidArgument("data file has no output channels".into()));
        }
        let u = if u_idx.is_empty() { None } else { Some(data.select_channels(&u_idx)?) };
        Ok(Dataset { y: data.select_channels(&y_idx)?, u, e: None })
    }
}

fn relabel(x: &TimeSeries, prefix: &str) -> Result<TimeSeries> {
    x.clone().with_labels((1..=x.channels()).map(|j| format!("{prefix}{j}")).collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub seed: u64,
    pub fits: BTreeMap<String, FitReport>,
    pub estimates: BTreeMap<String, RationalTransferMatrix>,
    pub truths: BTreeMap<String, RationalTransferMatrix>,
    pub metrics: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    pub artifacts: Vec<String>,
}

impl ReplicationReport {
    fn new(seed: u64) -> Self {
        ReplicationReport {
            seed,
            fits: BTreeMap::new(),
            estimates: BTreeMap::new(),
            truths: BTreeMap::new(),
            metrics: BTreeMap::new(),
            warnings: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }

    fn estimate(&mut self, name: &str, g: RationalTransferMatrix, truth: Option<&RationalTransferMatrix>, freqs: &[f64]) {
        if let Some(t) = truth {
            if t.shape() == g.shape() {
                self.metrics.insert(format!("{name}_bode_db"), bode_max_db(&g, t, freqs, 1.0));
            }
            if same_structure(&g, t) {
                self.metrics.insert(format!("{name}_coef_err"), coefficient_error(&g, t));
            }
            self.truths.insert(name.to_owned(), t.clone());
        }
        self.estimates.insert(name.to_owned(), g);
    }

    fn fit(&mut self, name: &str, report: FitReport) {
        self.warnings.extend(report.warnings.iter().map(|w| format!("{name}: {w}")));
        self.fits.insert(name.to_owned(), report);
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricSummary {
    pub count: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub mode: Mode,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub replications: Vec<ReplicationReport>,
    pub summary: BTreeMap<String, MetricSummary>,
}

impl RunReport {
    pub fn median(&self, key: &str) -> Option<f64> {
        self.summary.get(key).map(|s| s.median)
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(reps: &[ReplicationReport]) -> BTreeMap<String, MetricSummary> {
    let mut pooled: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in reps {
        for (k, v) in &r.metrics {
            if v.is_finite() {
                pooled.entry(k.clone()).or_default().push(*v);
            }
        }
    }
    pooled
        .into_iter()
        .map(|(k, mut v)| {
            v.sort_by(f64::total_cmp);
            let (q1, q3) = (quantile(&v, 0.25), quantile(&v, 0.75));
            let s = MetricSummary { count: v.len(), median: quantile(&v, 0.5), q1, q3, iqr: q3 - q1 };
            (k, s)
        })
        .collect()
}

/// Simulate one realization of the configured system.
pub fn simulate_dataset(cfg: &ExperimentConfig, truth: &TrueSystem, seed: u64) -> Result<Dataset> {
    let total = cfg.length + cfg.transient;
    let e_spec = NoiseSpec::new(cfg.noise.variance.clone(), seed)?.with_stream(E_STREAM);
    let (y, u, e) = match cfg.mode {
        Mode::LowRankTimeseries | Mode::SpectrumCheck => {
            let w = truth.w.as_ref().ok_or_else(|| Error::Config("model.w is required".into()))?;
            let e = generate_white_noise(&e_spec, total)?;
            (filter(w, &e)?, None, e)
        }
        Mode::WithInput => {
            let (f, k) = truth.f.as_ref().zip(truth.k.as_ref()).ok_or_else(|| Error::Config("model.f and model.k are required".into()))?;
            let u_var = &cfg.input_noise.as_ref().ok_or_else(|| Error::Config("input_noise is required".into()))?.variance;
            let u = generate_white_noise(&NoiseSpec::new(u_var.clone(), seed)?.with_stream(U_STREAM), total)?;
            let sim = simulate_with_input_full(f, k, &u, &e_spec)?;
            (sim.y, Some(u), sim.e)
        }
    };
    Ok(Dataset {
        y: y.skip(cfg.transient)?,
        u: u.map(|u| u.skip(cfg.transient)).transpose()?,
        e: Some(e.skip(cfg.transient)?),
    })
}

/// Run the identification stage of the configured mode on `data`.
pub fn identify_dataset(
    cfg: &ExperimentConfig,
    truth: &TrueSystem,
    data: &Dataset,
    freqs: &[f64],
    seed: u64,
) -> Result<ReplicationReport> {
    let mut rep = ReplicationReport::new(seed);
    match cfg.mode {
        Mode::LowRankTimeseries => identify_low_rank(cfg, truth, data, freqs, &mut rep)?,
        Mode::WithInput => identify_input(cfg, truth, data, freqs, &mut rep)?,
        Mode::SpectrumCheck => spectrum_check(cfg, truth, freqs, &mut rep)?,
    }
    Ok(rep)
}

fn identify_low_rank(
    cfg: &ExperimentConfig,
    truth: &TrueSystem,
    data: &Dataset,
    freqs: &[f64],
    rep: &mut ReplicationReport,
) -> Result<()> {
    let m = truth.m;
    let d = data.y.channels();
    if d <= m {
        return Err(Error::Shape(format!("data has {d} channels, rank is {m}")));
    }
    let y1 = data.y.select_channels(&(0..m).collect::<Vec<_>>())?;
    let y2 = data.y.select_channels(&(m..d).collect::<Vec<_>>())?;
    let w = truth.w.as_ref();
    let top = |g: &RationalTransferMatrix| g.select_rows(&(0..m).collect::<Vec<_>>());
    let bottom = |g: &RationalTransferMatrix| g.select_rows(&(m..d).collect::<Vec<_>>());
    let w1 = w.map(top).transpose()?;
    let w2 = w.map(bottom).transpose()?;
    let h = w.map(|w| extract_h_from_factor(w, m)).transpose()?;

    let h_orders = cfg.orders.h.ok_or_else(|| Error::Config("orders.h is required".into()))?;
    let h_fit = fit_deterministic_channel(&y1, &y2, h_orders).map_err(|e| e.context("H channel fit"))?;
    let h_hat = h_fit.estimate.clone();
    rep.metrics.insert("h_residual_rms".into(), h_fit.residual_rms);
    rep.fit("h", h_fit);
    rep.estimate("h", h_hat.clone(), h.as_ref(), freqs);

    if d == 2 * m {
        let hbar_fit = fit_deterministic_channel(&y2, &y1, h_orders).map_err(|e| e.context("reverse channel fit"))?;
        let hbar_truth = h.as_ref().map(|h| h.inverse()).transpose().ok().flatten();
        rep.estimate("hbar", hbar_fit.estimate.clone(), hbar_truth.as_ref(), freqs);
        rep.fit("hbar", hbar_fit);
    }

    let ar = cfg.orders.ar.ok_or_else(|| Error::Config("orders.ar is required".into()))?;
    let w1_fit = fit_ar(&y1, ar).map_err(|e| e.context("AR fit of y1"))?;
    let w1_hat = w1_fit.estimate.clone();
    rep.fit("w1", w1_fit);
    rep.estimate("w1", w1_hat.clone(), w1.as_ref(), freqs);
    match fit_ar(&y2, ar) {
        Ok(fit) => {
            rep.estimate("w2", fit.estimate.clone(), w2.as_ref(), freqs);
            rep.fit("w2", fit);
        }
        Err(e) => rep.warnings.push(format!("w2: {}", e.context("AR fit of y2"))),
    }
    rep.estimate("w2_via_h", h_hat.mul(&w1_hat)?, w2.as_ref(), freqs);

    if let Some(orders) = cfg.orders.armax {
        let fit = fit_armax_pem(&y1, Some(&y2), orders, &cfg.pem).map_err(|e| e.context("ARMAX fit"))?;
        let n = fit.prediction_error.len() as f64;
        let bound = 3.0 / n.sqrt();
        let mut white = 0;
        let mut lags = 0;
        for j in 0..fit.prediction_error.channels() {
            let r = autocorrelation(fit.prediction_error.channel(j), 10);
            lags += 10;
            white += r[1..].iter().filter(|v| v.abs() < bound).count();
        }
        rep.metrics.insert("pe_variance".into(), fit.report.noise_variance().iter().sum::<f64>() / m as f64);
        rep.metrics.insert("pe_white_fraction".into(), white as f64 / lags as f64);
        rep.metrics.insert("armax_converged".into(), if fit.report.converged { 1.0 } else { 0.0 });
        rep.estimate("f", fit.f.clone(), truth.f.as_ref(), freqs);
        rep.estimate("k", fit.k.clone(), truth.k.as_ref(), freqs);
        let w1_rebuilt = closed_loop_transfer(&fit.f, &h_hat)?.p.mul(&fit.k)?;
        rep.metrics.insert("w1_rebuilt_vs_fit_db".into(), bode_max_db(&w1_rebuilt, &w1_hat, freqs, RECONSTRUCTION_BAND));
        rep.estimate("w1_rebuilt", w1_rebuilt, w1.as_ref(), freqs);
        rep.fit("armax", fit.report);
    }
    Ok(())
}

fn identify_input(
    cfg: &ExperimentConfig,
    truth: &TrueSystem,
    data: &Dataset,
    freqs: &[f64],
    rep: &mut ReplicationReport,
) -> Result<()> {
    let u = data.u.as_ref().ok_or_else(|| Error::InvalidArgument("with_input mode needs input channels".into()))?;
    let orders = InputPipelineOrders {
        f: cfg.orders.f.clone().ok_or_else(|| Error::Config("orders.f is required".into()))?,
        k: cfg.orders.k.ok_or_else(|| Error::Config("orders.k is required".into()))?,
    };
    let out = identify_with_input(&data.y, u, &orders, &cfg.pem).map_err(|e| e.context("input pipeline"))?;
    for (i, row) in out.f_hat.row_fractions().iter().enumerate() {
        let lag = orders.f.get(i).unwrap_or(&orders.f[0]).delay;
        rep.metrics.insert(format!("f_b{}0", i + 1), row.num[0].coeff(lag) / row.den.coeff(0));
    }
    rep.metrics.insert("degenerate".into(), if out.degenerate { 1.0 } else { 0.0 });
    let rank_order = cfg.orders.rank_var.unwrap_or(10);
    if data.y.channels() > 1 {
        rep.metrics.insert("residual_rank_ratio".into(), var_spectrum_rank_ratio(&out.residual, rank_order, freqs)?);
    }
    per_row(rep, "f", &out.f_hat, truth.f.as_ref(), freqs)?;
    rep.estimate("f", out.f_hat.clone(), truth.f.as_ref(), freqs);
    rep.fit("f", out.f_report);
    if let Some(k_hat) = &out.k_hat {
        per_row(rep, "k", k_hat, truth.k.as_ref(), freqs)?;
        rep.estimate("k", k_hat.clone(), truth.k.as_ref(), freqs);
    }
    for (i, r) in out.k_reports.into_iter().enumerate() {
        rep.fit(&format!("k{}", i + 1), r);
    }
    if let Some(known) = &cfg.orders.f_known {
        let fit = fit_input_channel(&data.y, u, known).map_err(|e| e.context("known-order input fit"))?;
        per_row(rep, "f_known", &fit.estimate, truth.f.as_ref(), freqs)?;
        rep.estimate("f_known", fit.estimate.clone(), truth.f.as_ref(), freqs);
        rep.fit("f_known", fit);
    }
    Ok(())
}

fn per_row(
    rep: &mut ReplicationReport,
    name: &str,
    g: &RationalTransferMatrix,
    truth: Option<&RationalTransferMatrix>,
    freqs: &[f64],
) -> Result<()> {
    let Some(t) = truth else { return Ok(()) };
    if g.rows() < 2 || t.shape() != g.shape() {
        return Ok(());
    }
    for i in 0..g.rows() {
        let (gi, ti) = (g.select_rows(&[i])?, t.select_rows(&[i])?);
        rep.metrics.insert(format!("{name}{}_bode_db", i + 1), bode_max_db(&gi, &ti, freqs, 1.0));
        if same_structure(&gi, &ti) {
            rep.metrics.insert(format!("{name}{}_coef_err", i + 1), coefficient_error(&gi, &ti));
        }
    }
    Ok(())
}

/// Spectrum of the factor, its rank, the channel read off the spectrum and,
/// when the feedback blocks are given, the spectrum rebuilt from the loop.
pub fn spectrum_check_grid(
    cfg: &ExperimentConfig,
    truth: &TrueSystem,
    freqs: &[f64],
    seed: u64,
) -> Result<(SpectrumGrid, ReplicationReport)> {
    let mut rep = ReplicationReport::new(seed);
    let phi = spectrum_check_inner(cfg, truth, freqs, &mut rep)?;
    Ok((phi, rep))
}

fn spectrum_check(cfg: &ExperimentConfig, truth: &TrueSystem, freqs: &[f64], rep: &mut ReplicationReport) -> Result<()> {
    spectrum_check_inner(cfg, truth, freqs, rep).map(|_| ())
}

fn spectrum_check_inner(
    cfg: &ExperimentConfig,
    truth: &TrueSystem,
    freqs: &[f64],
    rep: &mut ReplicationReport,
) -> Result<SpectrumGrid> {
    let m = truth.m;
    let w = truth.w.as_ref().ok_or_else(|| Error::Config("model.w is required".into()))?;
    let phi = spectrum_from_factor(w, &cfg.noise.variance, freqs)?.with_partition(m)?;
    let rank = check_rank(&phi, DEFAULT_RANK_TOL)?;
    rep.metrics.insert("rank".into(), rank.rank as f64);
    let h = extract_h_from_factor(w, m)?;
    let h_grid = extract_h_from_spectrum(&phi)?;
    rep.metrics.insert("h_spectral_dev".into(), h_grid.max_deviation(&h));
    rep.truths.insert("h".into(), h.clone());
    if let (Some(f), Some(k)) = (&truth.f, &truth.k) {
        let lambda: Vec<Complex64> = cfg.noise.variance.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lambda));
        let phi_v = GridResponse::of(k, freqs).values.into_iter().map(|g| &g * &lambda * g.adjoint()).collect();
        let phi_v = SpectrumGrid::new(freqs.to_vec(), phi_v)?;
        let p = w.rows() - m;
        let phi_r = SpectrumGrid::constant(DMatrix::zeros(p, p), freqs)?;
        let rebuilt = spectrum_from_feedback(f, &h, &phi_v, &phi_r)?;
        rep.metrics.insert("feedback_spectrum_residual".into(), rebuilt.max_deviation(&phi)?);
        rep.truths.insert("f".into(), f.clone());
        rep.truths.insert("k".into(), k.clone());
    }
    Ok(phi)
}

fn header(seed: u64, hash: &str) -> String {
    format!("seed={seed} config_sha256={hash}")
}

fn write_replication(dir: &Path, rep: &mut ReplicationReport, data: Option<&Dataset>, freqs: &[f64], hash: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let note = header(rep.seed, hash);
    let mut artifacts = Vec::new();
    if let Some(data) = data {
        data.combined()?.save_csv(&dir.join("data.csv"), Some(&note))?;
        artifacts.push("data.csv".to_owned());
        if let Some(e) = &data.e {
            relabel(e, "e")?.save_csv(&dir.join("noise.csv"), Some(&note))?;
            artifacts.push("noise.csv".to_owned());
        }
    }
    for (name, g) in &rep.estimates {
        let file = format!("bode_{name}.csv");
        export_bode(g, freqs, &dir.join(&file), Some(&note))?;
        artifacts.push(file);
    }
    for (name, g) in &rep.truths {
        let file = format!("bode_{name}_true.csv");
        export_bode(g, freqs, &dir.join(&file), Some(&note))?;
        artifacts.push(file);
    }
    artifacts.push("report.json".to_owned());
    rep.artifacts = artifacts;
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(rep)?)?;
    Ok(())
}

/// Simulate and identify for every seed, write per-replication artifacts
/// when an output directory is set, and summarize the metrics.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    let truth = cfg.validate()?;
    let seeds = opts.seeds(cfg);
    let freqs = opts.freqs(cfg);
    let hash = cfg.hash();
    let out = opts.out_dir(cfg);
    let reps: Vec<ReplicationReport> = seeds
        .par_iter()
        .map(|&seed| {
            let ctx = |e: Error| e.context(&format!("seed {seed}"));
            let (data, mut rep) = match cfg.mode {
                Mode::SpectrumCheck => (None, spectrum_check_grid(cfg, &truth, &freqs, seed).map_err(ctx)?.1),
                _ => {
                    let data = simulate_dataset(cfg, &truth, seed).map_err(ctx)?;
                    let rep = identify_dataset(cfg, &truth, &data, &freqs, seed).map_err(ctx)?;
                    (Some(data), rep)
                }
            };
            if let Some(dir) = &out {
                write_replication(&dir.join(format!("seed_{seed}")), &mut rep, data.as_ref(), &freqs, &hash)?;
            }
            Ok(rep)
        })
        .collect::<Result<_>>()?;
    let report = RunReport {
        name: cfg.name.clone(),
        mode: cfg.mode,
        config_hash: hash,
        seeds,
        summary: summarize(&reps),
        replications: reps,
    };
    if let Some(dir) = &out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("run_report.json"), serde_json::to_string_pretty(&report)?)?;
    }
    Ok(report)
}

/// Simulate the configured system for one seed and write `data.csv` and
/// `noise.csv` into `out`.
pub fn run_simulate(cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<Dataset> {
    let truth = cfg.validate()?;
    if cfg.mode == Mode::SpectrumCheck {
        return Err(Error::Config("spectrum_check mode does not simulate data".into()));
    }
    let data = simulate_dataset(cfg, &truth, seed)?;
    fs::create_dir_all(out)?;
    let note = header(seed, &cfg.hash());
    data.combined()?.save_csv(&out.join("data.csv"), Some(&note))?;
    if let Some(e) = &data.e {
        relabel(e, "e")?.save_csv(&out.join("noise.csv"), Some(&note))?;
    }
    Ok(data)
}

/// Identify from an existing data file laid out as written by
/// [`run_simulate`].
pub fn run_identify(cfg: &ExperimentConfig, data_path: &Path, seed: u64, freqs: &[f64], out: Option<&Path>) -> Result<ReplicationReport> {
    let truth = cfg.validate()?;
    let data = Dataset::split(&TimeSeries::load_csv(data_path)?)?;
    let mut rep = identify_dataset(cfg, &truth, &data, freqs, seed)?;
    if let Some(dir) = out {
        write_replication(dir, &mut rep, None, freqs, &cfg.hash())?;
    }
    Ok(rep)
}

/// Spectrum of the configured factor with its checks; writes
/// `spectrum.csv` and `report.json` into `out`.
pub fn run_spectrum(cfg: &ExperimentConfig, seed: u64, freqs: &[f64], out: Option<&Path>) -> Result<ReplicationReport> {
    let truth = cfg.validate()?;
    if truth.w.is_none() {
        return Err(Error::Config("model.w is required for a spectrum".into()));
    }
    let (phi, mut rep) = spectrum_check_grid(cfg, &truth, freqs, seed)?;
    if let Some(dir) = out {
        let hash = cfg.hash();
        write_replication(dir, &mut rep, None, freqs, &hash)?;
        let file = fs::File::create(dir.join("spectrum.csv"))?;
        write_spectrum_csv(&phi, std::io::BufWriter::new(file), Some(&header(rep.seed, &hash)))?;
        rep.artifacts.insert(0, "spectrum.csv".into());
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(&rep)?)?;
    }
    Ok(rep)
}

/// Bode tables of every transfer matrix in the config model.
pub fn run_bode(cfg: &ExperimentConfig, freqs: &[f64], out: &Path) -> Result<Vec<PathBuf>> {
    let truth = cfg.validate()?;
    fs::create_dir_all(out)?;
    let note = format!("config_sha256={}", cfg.hash());
    let mut written = Vec::new();
    for (name, g) in [("w", &truth.w), ("f", &truth.f), ("k", &truth.k)] {
        if let Some(g) = g {
            let path = out.join(format!("bode_{name}.csv"));
            export_bode(g, freqs, &path, Some(&note))?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::parse_config;

    fn shipped(name: &str) -> ExperimentConfig {
        parse_config(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)).unwrap()
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&[7.0], 0.75), 7.0);
    }

    #[test]
    fn spectrum_check_on_example1() {
        let cfg = shipped("example1_spectrum.json");
        let dir = tempfile::tempdir().unwrap();
        let rep = run_experiment(&cfg, &RunOptions { out: Some(dir.path().to_owned()), ..Default::default() }).unwrap();
        let r = &rep.replications[0];
        assert_eq!(r.metric("rank"), Some(1.0));
        assert!(r.metric("feedback_spectrum_residual").unwrap() < 1e-9);
        assert!(r.metric("h_spectral_dev").unwrap() < 1e-9);
    }

    #[test]
    fn runs_pair_estimates_with_truths_and_tag_artifacts() {
        let cfg = shipped("example1.json");
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions { out: Some(dir.path().to_owned()), seed: Some(4), ..Default::default() };
        let rep = run_experiment(&cfg, &opts).unwrap();
        let r = &rep.replications[0];
        for name in ["h", "hbar", "w1", "w2", "w2_via_h", "f", "k", "w1_rebuilt"] {
            assert!(r.estimates.contains_key(name), "{name}");
            assert!(r.truths.contains_key(name), "{name}");
        }
        let tag = format!("# seed=4 config_sha256={}", cfg.hash());
        for a in r.artifacts.iter().filter(|a| a.ends_with(".csv")) {
            let text = fs::read_to_string(dir.path().join("seed_4").join(a)).unwrap();
            assert_eq!(text.lines().next().unwrap(), tag, "{a}");
        }
    }

    #[test]
    fn identical_runs_write_identical_bytes() {
        let cfg = shipped("example2.json");
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        for d in [&a, &b] {
            let opts = RunOptions { out: Some(d.path().to_owned()), replications: Some(3), seed: Some(11), freq_points: Some(64) };
            run_experiment(&cfg, &opts).unwrap();
        }
        for seed in 11..14 {
            for file in ["data.csv", "noise.csv", "bode_f.csv", "bode_k.csv", "report.json"] {
                let p = format!("seed_{seed}/{file}");
                assert_eq!(fs::read(a.path().join(&p)).unwrap(), fs::read(b.path().join(&p)).unwrap(), "{p}");
            }
        }
        assert_eq!(fs::read(a.path().join("run_report.json")).unwrap(), fs::read(b.path().join("run_report.json")).unwrap());
    }

    #[test]
    fn simulate_then_identify_matches_the_run() {
        let cfg = shipped("example2.json");
        let dir = tempfile::tempdir().unwrap();
        run_simulate(&cfg, 5, dir.path()).unwrap();
        let freqs = default_grid(64);
        let from_file = run_identify(&cfg, &dir.path().join("data.csv"), 5, &freqs, None).unwrap();
        let direct = run_experiment(&cfg, &RunOptions { out: Some(dir.path().join("run")), seed: Some(5), freq_points: Some(64), ..Default::default() }).unwrap();
        let direct = &direct.replications[0];
        for (k, v) in &direct.metrics {
            assert!((from_file.metrics[k] - v).abs() <= 1e-12 * v.abs().max(1.0), "{k}");
        }
    }

    #[test]
    fn replications_derive_consecutive_seeds() {
        let cfg = shipped("example2.json");
        let opts = RunOptions { replications: Some(3), seed: Some(100), ..Default::default() };
        assert_eq!(opts.seeds(&cfg), vec![100, 101, 102]);
        assert_eq!(RunOptions::default().seeds(&cfg), cfg.seeds);
    }
}
