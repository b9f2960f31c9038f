use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use super::TimeSeries;
use crate::error::{Error, Result};

/// Independent Gaussian white noise channels with diagonal covariance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub variance: Vec<f64>,
    pub seed: u64,
    /// ChaCha stream index; distinct streams under one seed are independent.
    #[serde(default)]
    pub stream: u64,
}

impl NoiseSpec {
    /// A zero variance is accepted and yields an identically zero channel.
    pub fn new(variance: Vec<f64>, seed: u64) -> Result<Self> {
        let spec = NoiseSpec { variance, seed, stream: 0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn unit(dim: usize, seed: u64) -> Self {
        NoiseSpec { variance: vec![1.0; dim], seed, stream: 0 }
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn dim(&self) -> usize {
        self.variance.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.variance.is_empty() {
            return Err(Error::InvalidArgument("noise needs at least one channel".into()));
        }
        if self.variance.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(format!("noise variances must be finite and >= 0, got {:?}", self.variance)));
        }
        Ok(())
    }
}

/// Standard normal stream: ChaCha8 keyed by `seed`, 53-bit uniforms and
/// the Box-Muller transform. Pairs are consumed cosine branch first.
pub struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        GaussianStream { rng, spare: None }
    }

    /// Uniform on (0, 1].
    fn uniform(&mut self) -> f64 {
        1.0 - (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let r = (-2.0 * self.uniform().ln()).sqrt();
        let phi = 2.0 * std::f64::consts::PI * self.uniform();
        self.spare = Some(r * phi.sin());
        r * phi.cos()
    }
}

/// Samples are drawn time-major: all channels of `t` before `t + 1`.
pub fn generate_white_noise(spec: &NoiseSpec, length: usize) -> Result<TimeSeries> {
    spec.validate()?;
    if length == 0 {
        return Err(Error::InvalidArgument("noise length must be >= 1".into()));
    }
    let dim = spec.dim();
    let sd: Vec<f64> = spec.variance.iter().map(|v| v.sqrt()).collect();
    let mut g = GaussianStream::new(spec.seed, spec.stream);
    let mut data = DMatrix::zeros(length, dim);
    for t in 0..length {
        for j in 0..dim {
            data[(t, j)] = sd[j] * g.next();
        }
    }
    TimeSeries::new(data, Some((1..=dim).map(|j| format!("e{j}")).collect()))
}
