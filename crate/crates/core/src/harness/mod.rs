//! Experiment registry, configuration, hbar sweeps and report emission.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{
    ExperimentConfig, GridConfig, HbarConfig, KernelConfig, NormConfig, ReferenceConfig, ReportConfig,
    SymbolsConfig, Thresholds, ToeplitzConfig,
};
pub use experiments::{
    boundary_sup, configure, experiment_info, interior_sup, preset, run_experiment, ExperimentInfo, EXPERIMENTS,
};
pub use report::{emit_report, nonincreasing, trend_window, ConvergenceReport, Row, Verdict, CSV_HEADER};
