//! Frequency-domain side: spectral densities sampled on a grid, their rank,
//! the closed-loop transfer of the feedback model and recovery of the
//! deterministic channel `H` from a spectrum or a factor.

mod closed_loop;
mod export;
mod extract;
mod grid;
mod model;

pub use closed_loop::{closed_loop_transfer, loop_operator, spectrum_from_feedback, ClosedLoop};
pub use export::{unwrap, write_spectrum_csv, BodeTable};
pub use extract::{extract_h_from_factor, extract_h_from_spectrum, select_full_rank_channels, GridResponse};
pub use grid::{
    check_rank, default_grid, spectrum_from_factor, RankReport, SpectrumGrid, DEFAULT_FREQ_POINTS, DEFAULT_RANK_TOL,
};
pub use model::{assemble_w, assemble_w_from_fhk, FeedbackModel};
