//! Scenario files, runs and refinement studies.

pub mod config;
pub mod convergence;
pub mod presets;
pub mod run;

pub use config::{ApvmTau, ModelKind, ScenarioConfig, Sweeps};
pub use convergence::{
    convergence_study, observed_orders, ConvergenceRow, ConvergenceStudy, ConvergenceTable, StudyModel,
};
pub use presets::Preset;
pub use run::{run_scenario, run_scenario_in, RunOutput, OUTPUT_DIR_ENV};
