//! Modeling, simulation and identification of stationary vector processes
//! whose rational spectral density is rank deficient.
//!
//! A process `y = [y1; y2]` of rank `m` with a full-rank `m`-dimensional block
//! `y1` admits a feedback representation in which `y2 = H(z) y1` holds
//! exactly. Identification then splits into a standard full-rank fit for
//! `y1` (AR or ARMAX prediction error) and a deterministic least-squares fit
//! for the channel `H`.
//!
//! * [`ratmat`]: matrix polynomials and fractions in `z^-1`
//! * [`simkit`]: seeded noise, filtering, dataset simulation
//! * [`spectra`]: spectral grids, closed-loop algebra, extraction of `H`
//! * [`ident`]: least-squares and prediction-error identification
//! * [`cli`]: experiment configs, runs and artifacts

pub mod error;
pub mod ratmat;
pub mod simkit;
pub mod spectra;
pub mod ident;
pub mod cli;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
