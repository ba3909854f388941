//! Declarative scenarios: configuration, presets, the batch runner and its
//! output files.

pub mod config;
pub mod output;
pub mod presets;
pub mod runner;

pub use config::{AnalysisConfig, DetectorConfig, ScenarioConfig, SourceConfig, SourceKind, Subset, SweepParameter};
pub use output::{run_to_dir, Format, RunArtifacts};
pub use presets::{preset, PRESETS};
pub use runner::{run, run_with, ScenarioOutcome, SummaryRow};
