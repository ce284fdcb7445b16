//! Config-driven experiments: single runs, sweeps and plot tables.

mod config;
mod plot;
mod report;
mod run;

pub use config::{AnalysisConfig, DataConfig, ExperimentConfig, OptimizerConfig};
pub use plot::{emit_plot_data, CONVERGENCE_FILE, TRADEOFF_FILE};
pub use report::{Aggregate, ExperimentReport, SeedReport, SUMMARY_HEADER};
pub use run::{
    run, sweep, SweepAxis, SweepCell, SweepResult, EPOCHS_FILE, REDUNDANCY_FILE, REPORT_FILE,
    SUMMARY_FILE, SWEEP_FILE,
};
