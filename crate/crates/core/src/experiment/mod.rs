//! Monte Carlo experiments: configuration, presets, execution and output.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;

pub use config::{Algorithm, AxisConfig, CodebookKind, EmInit, ExperimentConfig, MethodConfig, SceneKind, SweepAxis};
pub use output::{MetricRecord, ResultTable, BUILD_ID};
pub use presets::{preset, PRESETS};
pub use run::{build_scenario, run_experiment, run_trial, TrialOutcome};
