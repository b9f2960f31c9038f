//! Seeded simulation: Gaussian white noise, zero-state filtering through
//! left MFDs, and the two data-generating models `y = W e` and
//! `y = F u + K e`.

mod filter;
mod noise;
mod simulate;
mod timeseries;

pub use filter::filter;
pub(crate) use filter::filter_raw;
pub use noise::{generate_white_noise, GaussianStream, NoiseSpec};
pub use simulate::{simulate_low_rank, simulate_low_rank_full, simulate_with_input, simulate_with_input_full, Simulation};
pub use timeseries::TimeSeries;

/// Samples discarded before fitting unless configured otherwise.
pub const DEFAULT_TRANSIENT: usize = 50;
