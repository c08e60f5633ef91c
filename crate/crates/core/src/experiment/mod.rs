//! Experiment configuration, execution and reports, as driven by the CLI.

mod config;
mod report;
mod runner;

pub use config::{AlgorithmChoice, ExperimentConfig, Generators, Mode, OutputFormat, ResolvedInstance};
pub use report::{
    compare, AlgorithmReport, ChannelSummary, Comparison, Counters, ExperimentReport, InstanceSummary,
    OutcomeRow, RecoverySummary, RestorationSummary, Timing,
};
pub use runner::{render_report, run, write_report};
