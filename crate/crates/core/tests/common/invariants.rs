//! Invariant checks on explicit inputs. Each returns the offending value on
//! failure so that both the property suite and the acceptance run can
//! report it.

use super::*;
use lowrank::cli::{parse_config_str, run_experiment, write_config, ExperimentConfig, RunOptions};
use lowrank::ident::{
    fit_ar, fit_armax_pem, fit_deterministic_channel, fit_input_channel, ArmaxOrders, ChannelOrders, PemOptions,
};
use lowrank::ratmat::{one_step_division, poly_add, poly_eval, poly_mul, MatrixPolynomial};
use lowrank::simkit::{filter, generate_white_noise, simulate_low_rank, NoiseSpec, TimeSeries};
use lowrank::spectra::{default_grid, extract_h_from_factor, extract_h_from_spectrum, spectrum_from_feedback, SpectrumGrid};
use std::path::Path;

pub type Check = std::result::Result<(), String>;

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Check {
    if ok { Ok(()) } else { Err(what()) }
}

pub fn matpoly(rows: usize, cols: usize, c: &[f64]) -> MatrixPolynomial {
    let mats = c.chunks(rows * cols).map(|m| DMatrix::from_column_slice(rows, cols, m)).collect();
    MatrixPolynomial::new(rows, cols, mats).unwrap()
}

pub fn random_matpoly(rng: &mut FixtureRng, n: usize) -> MatrixPolynomial {
    let deg = 1 + rng.below(4);
    matpoly(n, n, &(0..deg * n * n).map(|_| rng.range(-1.0, 1.0)).collect::<Vec<_>>())
}

fn max_coeff_gap(p: &MatrixPolynomial, q: &MatrixPolynomial) -> f64 {
    let n = p.degree().max(q.degree()) + 1;
    (0..n).map(|k| (p.coeff(k) - q.coeff(k)).abs().max()).fold(0.0, f64::max)
}

pub fn noise(dim: usize, seed: u64, len: usize) -> TimeSeries {
    generate_white_noise(&NoiseSpec::unit(dim, seed), len).unwrap()
}

// -- ratmat

pub fn distributes(p: &MatrixPolynomial, q: &MatrixPolynomial, r: &MatrixPolynomial) -> Check {
    let lhs = poly_mul(p, &poly_add(q, r).unwrap()).unwrap();
    let rhs = poly_add(&poly_mul(p, q).unwrap(), &poly_mul(p, r).unwrap()).unwrap();
    let gap = max_coeff_gap(&lhs, &rhs);
    ensure(gap < 1e-12, || format!("distributivity gap {gap:e}"))
}

pub fn evaluation_multiplies(p: &MatrixPolynomial, q: &MatrixPolynomial, theta: f64) -> Check {
    let w = Complex64::from_polar(1.0, -theta);
    let gap = max_abs(&(poly_eval(&poly_mul(p, q).unwrap(), w) - poly_eval(p, w) * poly_eval(q, w)));
    ensure(gap < 1e-10, || format!("evaluation gap {gap:e}"))
}

/// Exact on dyadic coefficients, where every sum is representable.
pub fn one_step_round_trip(rng: &mut FixtureRng) -> Check {
    let dyadic = |rng: &mut FixtureRng, deg: usize| {
        let mut c = vec![1.0, 0.0, 0.0, 1.0];
        c.extend((0..4 * deg).map(|_| (rng.below(129) as f64 - 64.0) / 64.0));
        matpoly(2, 2, &c)
    };
    let (da, dc) = (rng.below(4), rng.below(4));
    let (a, c) = (dyadic(rng, da), dyadic(rng, dc));
    let back = a.add(&one_step_division(&c, &a).unwrap().shift(1)).unwrap();
    ensure(back.coeffs() == c.coeffs(), || format!("A + x C1 = {back} differs from C = {c}"))
}

pub fn inverse_is_identity(seed: u64, n: usize, freqs: &[f64]) -> Option<Check> {
    let mut rng = FixtureRng::new(seed);
    let mut g = random_rows(&mut rng, n, 0.4, false);
    for (i, row) in g.num.iter_mut().enumerate() {
        row[i][0] += 2.0 * row[i][0].signum();
    }
    let g = g.build();
    if g.at_infinity().determinant().abs() < 1e-3 {
        return None;
    }
    let gi = g.inverse().unwrap();
    let mut worst: f64 = 0.0;
    for &t in freqs {
        let r = g.response(t);
        if r.clone().svd(false, false).singular_values.min() < 1e-3 {
            return None;
        }
        worst = worst.max(max_abs(&(r * gi.response(t) - DMatrix::identity(n, n))));
    }
    Some(ensure(worst < 1e-9, || format!("g g^-1 deviates {worst:e}")))
}

pub fn simplify_keeps_response(seed: u64, freqs: &[f64]) -> Check {
    let mut rng = FixtureRng::new(seed);
    let common = stable_poly(&mut rng, 2, 0.8);
    let den = conv(&stable_poly(&mut rng, 2, 0.7), &common);
    let nums = (0..2).map(|_| conv(&signed_poly(&mut rng, 2, 0.1, 1.0), &common)).collect();
    let rows = Rows { den: vec![den], num: vec![nums] };
    let s = rows.build().simplify(1e-6).unwrap();
    let deg = s.row_fractions()[0].den.degree();
    let worst = freqs.iter().map(|&t| max_abs(&(s.response(t) - rows.at(t)))).fold(0.0, f64::max);
    ensure(deg <= 2 && worst < 1e-9, || format!("simplified degree {deg}, response gap {worst:e}"))
}

// -- simkit

pub fn filter_linear(seed: u64, alpha: f64, beta: f64) -> Check {
    let mut rng = FixtureRng::new(seed);
    let g = random_rows(&mut rng, 2, 0.8, false).build();
    let (x, w) = (noise(2, seed, 300), noise(2, seed.wrapping_add(1), 300));
    let lhs = filter(&g, &x.scale(alpha).add(&w.scale(beta)).unwrap()).unwrap();
    let rhs = filter(&g, &x).unwrap().scale(alpha).add(&filter(&g, &w).unwrap().scale(beta)).unwrap();
    let gap = (lhs.data() - rhs.data()).amax();
    let scale = lhs.data().amax().max(1.0);
    ensure(gap < 1e-12 * scale, || format!("linearity gap {gap:e} at scale {scale:e}"))
}

pub fn filter_composes(seed: u64) -> Check {
    let mut rng = FixtureRng::new(seed);
    let g1 = random_rows(&mut rng, 2, 0.8, false).build();
    let g2 = random_rows(&mut rng, 2, 0.8, false).build();
    let x = noise(2, seed, 400);
    let skip = g1.denom().degree() + g2.denom().degree() + g1.numer().degree() + g2.numer().degree();
    let a = filter(&g1.mul(&g2).unwrap(), &x).unwrap().skip(skip).unwrap();
    let b = filter(&g1, &filter(&g2, &x).unwrap()).unwrap().skip(skip).unwrap();
    let gap = (a.data() - b.data()).amax();
    ensure(gap < 1e-9, || format!("composition gap {gap:e}"))
}

pub fn noise_reproducible(seed: u64, stream: u64) -> Check {
    let spec = NoiseSpec::new(vec![1.0, 2.5], seed).unwrap().with_stream(stream);
    let a = generate_white_noise(&spec, 200).unwrap();
    let b = generate_white_noise(&spec, 200).unwrap();
    ensure(a.data().iter().zip(b.data().iter()).all(|(x, y)| x.to_bits() == y.to_bits()), || "noise differs".into())
}

/// `y2 - H y1` vanishes after the transient for a random minimum-phase
/// `W1` and `p` extra channels.
pub fn deterministic_residual(seed: u64, p: usize) -> Check {
    let mut rng = FixtureRng::new(seed);
    let mut rows = Rows { den: vec![stable_poly(&mut rng, 2, 0.7)], num: vec![vec![stable_poly(&mut rng, 1, 0.7)]] };
    for _ in 0..p {
        rows.den.push(stable_poly(&mut rng, 2, 0.7));
        rows.num.push(vec![signed_poly(&mut rng, 1, 0.2, 1.0)]);
    }
    let w = rows.build();
    let y = simulate_low_rank(&w, &NoiseSpec::unit(1, seed), 650).unwrap();
    let h = extract_h_from_factor(&w, 1).unwrap();
    let y1 = y.select_channels(&[0]).unwrap();
    let y2 = y.select_channels(&(1..=p).collect::<Vec<_>>()).unwrap();
    let rms = filter(&h, &y1).unwrap().sub(&y2).unwrap().skip(50).unwrap().rms();
    ensure(rms < 1e-8, || format!("channel residual rms {rms:e}"))
}

// -- spectra

pub struct FeedbackSpectra {
    pub phi_v: SpectrumGrid,
    pub phi_r: SpectrumGrid,
    pub v: NoiseShape,
    pub r: NoiseShape,
}

pub fn feedback_spectra(fx: &LoopFixture, seed: u64, r_scale: f64, freqs: &[f64]) -> FeedbackSpectra {
    let mut rng = FixtureRng::new(seed ^ 0x5eed);
    let v = noise_shape(&mut rng, fx.n);
    let r = noise_shape(&mut rng, fx.n);
    let phi_v = SpectrumGrid::new(freqs.to_vec(), freqs.iter().map(|&t| v.at(t)).collect()).unwrap();
    let phi_r = SpectrumGrid::new(freqs.to_vec(), freqs.iter().map(|&t| r.at(t) * Complex64::new(r_scale, 0.0)).collect()).unwrap();
    FeedbackSpectra { phi_v, phi_r, v, r }
}

/// Largest entrywise gap between the library spectrum and
/// `N^-1 diag(Phi_v, Phi_r) N^-*` with `N` inverted point by point, and the
/// largest entry of the oracle spectrum.
pub fn feedback_spectrum_gap(fx: &LoopFixture, seed: u64, freqs: &[f64]) -> (f64, f64) {
    let n = fx.n;
    let s = feedback_spectra(fx, seed, 1.0, freqs);
    let phi = spectrum_from_feedback(&fx.f, &fx.h, &s.phi_v, &s.phi_r).unwrap();
    freqs
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let tinv = loop_matrix(fx, t).try_inverse().unwrap();
            let mut d = DMatrix::zeros(2 * n, 2 * n);
            d.view_mut((0, 0), (n, n)).copy_from(&s.v.at(t));
            d.view_mut((n, n), (n, n)).copy_from(&s.r.at(t));
            let want = &tinv * d * tinv.adjoint();
            (max_abs(&(&phi.values[i] - &want)), max_abs(&want))
        })
        .fold((0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)))
}

/// Gap on the scale of the spectrum, floored at one.
pub fn scaled_gap((gap, peak): (f64, f64)) -> f64 {
    gap / peak.max(1.0)
}

pub fn loop_identities(fx: &LoopFixture, freqs: &[f64]) -> Check {
    let n = fx.n;
    let cl = lowrank::spectra::closed_loop_transfer(&fx.f, &fx.h).unwrap();
    let mut worst: f64 = 0.0;
    for &t in freqs {
        let (f, h) = (fx.f_rows.at(t), fx.h_rows.at(t));
        let (p, q) = (cl.p.response(t), cl.q.response(t));
        worst = worst
            .max(max_abs(&(&p * &f - &f * &q)))
            .max(max_abs(&(&h * &p - &q * &h)))
            .max(max_abs(&(&q - &q * &h * &f - DMatrix::identity(n, n))));
    }
    ensure(worst < 1e-10, || format!("PF = FQ, HP = QH, Q - QHF = I gap {worst:e}"))
}

/// Largest gap between `Phi21 Phi11^-1` and `H` with `Phi_r = r_scale * I`
/// (or zero).
pub fn channel_gap(fx: &LoopFixture, seed: u64, sigma2: f64, freqs: &[f64]) -> f64 {
    let n = fx.n;
    let s = feedback_spectra(fx, seed, 0.0, freqs);
    let phi_r = SpectrumGrid::constant(DMatrix::identity(n, n) * Complex64::new(sigma2, 0.0), freqs).unwrap();
    let phi = spectrum_from_feedback(&fx.f, &fx.h, &s.phi_v, &phi_r).unwrap();
    let h = extract_h_from_spectrum(&phi).unwrap();
    freqs.iter().enumerate().map(|(i, &t)| max_abs(&(&h.values[i] - fx.h_rows.at(t)))).fold(0.0, f64::max)
}

// -- ident

pub fn least_squares_stationary(seed: u64) -> Check {
    let e = noise(2, seed, 600);
    let mut rng = FixtureRng::new(seed);
    let g = Rows {
        den: vec![stable_poly(&mut rng, 2, 0.8), stable_poly(&mut rng, 2, 0.8)],
        num: vec![vec![vec![1.0], vec![0.3]], vec![vec![-0.2], vec![1.0]]],
    }
    .build();
    let y = filter(&g, &e).unwrap();
    let ar = fit_ar(&y, 3).unwrap().normal_equation_residual;
    let (y1, y2) = (y.select_channels(&[0]).unwrap(), y.select_channels(&[1]).unwrap());
    let det = fit_deterministic_channel(&y1, &y2, ChannelOrders::new(2, 2, 0)).unwrap().normal_equation_residual;
    let u = noise(1, seed.wrapping_add(7), 600);
    let fu = Rows { den: vec![vec![1.0, -0.5], vec![1.0]], num: vec![vec![vec![0.0, 1.0]], vec![vec![0.0, 0.4, 0.2]]] };
    let yu = filter(&fu.build(), &u).unwrap().add(&y).unwrap();
    let inp = fit_input_channel(&yu, &u, &[ChannelOrders::new(2, 2, 1)]).unwrap().normal_equation_residual;
    ensure(ar < 1e-8 && det < 1e-8 && inp < 1e-8, || format!("normal-equation residuals {ar:e} {det:e} {inp:e}"))
}

pub fn deterministic_exact(seed: u64, extra: usize) -> Check {
    let mut rng = FixtureRng::new(seed);
    let w = Rows {
        den: vec![stable_poly(&mut rng, 2, 0.7), stable_poly(&mut rng, 2, 0.7)],
        num: vec![vec![vec![1.0]], vec![signed_poly(&mut rng, 1, 0.2, 1.0)]],
    }
    .build();
    let y = simulate_low_rank(&w, &NoiseSpec::unit(1, seed), 550).unwrap().skip(50).unwrap();
    // H = num2 den1 / den2 has degrees (2, 3)
    let fit = fit_deterministic_channel(
        &y.select_channels(&[0]).unwrap(),
        &y.select_channels(&[1]).unwrap(),
        ChannelOrders::new(2 + extra, 3 + extra, 0),
    )
    .unwrap();
    ensure(fit.residual_rms < 1e-6, || format!("channel fit residual {:e}", fit.residual_rms))
}

pub fn pem_cost_nonincreasing(seed: u64) -> Check {
    let k = lowrank::ratmat::RationalTransferMatrix::scalar(&[1.0, 0.4], &[1.0, -0.5]).unwrap();
    let y = filter(&k, &noise(1, seed, 800)).unwrap();
    let fit = fit_armax_pem(&y, None, ArmaxOrders::arma(1), &PemOptions::default()).unwrap();
    let h = &fit.report.cost_history;
    ensure(h.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), || format!("cost history {h:?}"))
}

/// Median over 20 seeds of the worst AR coefficient error on `y1` of the
/// first example, for each length.
pub fn ar_error_medians(lengths: &[usize]) -> Vec<f64> {
    let w1 = Rows { den: vec![w1_den()], num: vec![vec![vec![1.0]]] }.build();
    let truth = w1_den();
    lengths
        .iter()
        .map(|&n| {
            let mut errs: Vec<f64> = (0..20u64)
                .map(|s| {
                    let y = simulate_low_rank(&w1, &NoiseSpec::unit(1, s), n + 50).unwrap().skip(50).unwrap();
                    let est = fit_ar(&y, 3).unwrap().estimate;
                    let den = &est.row_fractions()[0].den;
                    (1..=3).map(|k| (den.coeff(k) - truth[k]).abs()).fold(0.0, f64::max)
                })
                .collect();
            median(&mut errs)
        })
        .collect()
}

// -- cli

pub fn shipped_config(name: &str) -> ExperimentConfig {
    lowrank::cli::parse_config(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)).unwrap()
}

pub fn config_round_trip(cfg: &ExperimentConfig) -> Check {
    let back = parse_config_str(&write_config(cfg).unwrap()).map_err(|e| e.to_string())?;
    ensure(&back == cfg && back.hash() == cfg.hash(), || "config changed after write/parse".into())
}

pub fn vary_config(base: &ExperimentConfig, rng: &mut FixtureRng) -> ExperimentConfig {
    let mut cfg = base.clone();
    cfg.noise.variance = vec![rng.range(0.1, 4.0)];
    cfg.length = 60 + rng.below(5000);
    cfg.transient = rng.below(60);
    cfg.seeds = (0..1 + rng.below(5)).map(|_| rng.below(1 << 30) as u64).collect();
    cfg.orders.ar = Some(1 + rng.below(5));
    cfg.orders.h = Some(ChannelOrders::new(rng.below(4), rng.below(4), 0));
    cfg
}

/// Two runs into fresh directories; every file must match byte for byte and
/// every CSV must open with the seed and config hash.
pub fn runs_are_byte_identical(cfg: &ExperimentConfig, seed: u64) -> Check {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let opts = RunOptions { out: Some(d.path().to_owned()), replications: Some(2), seed: Some(seed), freq_points: Some(64) };
        run_experiment(cfg, &opts).map_err(|e| e.to_string())?;
    }
    let tag = format!("# seed={seed} config_sha256={}", cfg.hash());
    let sub = dirs[0].path().join(format!("seed_{seed}"));
    let mut files: Vec<_> = std::fs::read_dir(&sub).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    for f in files {
        let a = std::fs::read(sub.join(&f)).unwrap();
        let b = std::fs::read(dirs[1].path().join(format!("seed_{seed}")).join(&f)).unwrap();
        ensure(a == b, || format!("{f:?} differs between runs"))?;
        if f.to_string_lossy().ends_with(".csv") {
            let text = String::from_utf8(a).unwrap();
            ensure(text.lines().next() == Some(tag.as_str()), || format!("{f:?} lacks the seed/hash header"))?;
        }
    }
    Ok(())
}

pub fn grid512() -> Vec<f64> {
    default_grid(512)
}
