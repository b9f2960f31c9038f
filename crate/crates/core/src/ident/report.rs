use serde::{Deserialize, Serialize};

use crate::ratmat::RationalTransferMatrix;

/// Outcome of one identification run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitReport {
    pub estimate: RationalTransferMatrix,
    pub residual_rms: f64,
    /// Prediction-error cost per accepted iterate; empty for one-shot fits.
    pub cost_history: Vec<f64>,
    pub condition_number: f64,
    pub converged: bool,
    pub rank_deficient: bool,
    /// Residual covariance, row-major, `dim x dim`.
    pub noise_covariance: Vec<Vec<f64>>,
    /// Largest normalized entry of the least-squares gradient at the estimate.
    pub normal_equation_residual: f64,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

impl FitReport {
    pub fn noise_variance(&self) -> Vec<f64> {
        self.noise_covariance.iter().enumerate().map(|(i, r)| r[i]).collect()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

/// Polynomial degrees of one channel `A(x) y = B(x) u`. `B` has free
/// coefficients at lags `delay..=nb`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelOrders {
    pub na: usize,
    pub nb: usize,
    #[serde(default)]
    pub delay: usize,
}

impl ChannelOrders {
    pub fn new(na: usize, nb: usize, delay: usize) -> Self {
        ChannelOrders { na, nb, delay }
    }

    pub fn b_lags(&self) -> std::ops::RangeInclusive<usize> {
        self.delay..=self.nb
    }

    pub fn n_b(&self) -> usize {
        (self.nb + 1).saturating_sub(self.delay)
    }

    pub fn max_lag(&self) -> usize {
        self.na.max(self.nb)
    }
}

/// Degrees of `A y1 = B y2 + C e` with monic `A`, `C` of equal degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmaxOrders {
    pub na: usize,
    pub nb: usize,
    pub nc: usize,
    pub delay: usize,
}

impl ArmaxOrders {
    pub fn new(na: usize, nb: usize, nc: usize, delay: usize) -> Self {
        ArmaxOrders { na, nb, nc, delay }
    }

    /// Pure ARMA: no input coefficients.
    pub fn arma(n: usize) -> Self {
        ArmaxOrders { na: n, nb: 0, nc: n, delay: 1 }
    }

    pub fn n_b(&self) -> usize {
        (self.nb + 1).saturating_sub(self.delay)
    }

    pub fn max_lag(&self) -> usize {
        self.na.max(self.nb).max(self.nc)
    }
}
