//! Identification: AR least squares for the full-rank block, deterministic
//! least squares for the feedback channel, ARMAX prediction-error fits and
//! the pipeline for data with a measured exogenous input.

mod ar;
mod armax;
mod deterministic;
mod diagnostics;
mod input;
mod lstsq;
mod pem;
mod report;

pub use ar::fit_ar;
pub use armax::{predict_one_step, prediction_errors, ArmaxModel};
pub use deterministic::fit_deterministic_channel;
pub use diagnostics::{autocorrelation, var_spectrum_rank_ratio};
pub use input::{fit_input_channel, identify_with_input, residual_series, InputIdentification, InputPipelineOrders};
pub use lstsq::{lstsq, lstsq_vec, normal_equation_residual, LsSolution, LS_CUTOFF};
pub use pem::{fit_armax_pem, reflect_to_minimum_phase, ArmaxFit, PemOptions, MAX_C_ZERO_MODULUS};
pub use report::{ArmaxOrders, ChannelOrders, FitReport};
