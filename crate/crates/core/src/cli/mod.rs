//! Experiment configs, the simulate-identify-report runner and its
//! artifacts.

mod bode;
mod config;
mod run;

pub use bode::{bode_max_db, coefficient_error, export_bode, same_structure};
pub use config::{
    parse_config, parse_config_str, write_config, ExperimentConfig, MfdSpec, Mode, ModelConfig, NoiseConfig,
    OrderConfig, RowSpec, TrueSystem,
};
pub use run::{
    identify_dataset, quantile, run_bode, run_experiment, run_identify, run_simulate, run_spectrum, simulate_dataset,
    spectrum_check_grid, summarize, Dataset, MetricSummary, ReplicationReport, RunOptions, RunReport,
    RECONSTRUCTION_BAND,
};
