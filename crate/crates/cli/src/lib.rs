//! Spec loading, the built-in catalog, the check battery and its reports.

pub mod battery;
pub mod catalog;
pub mod registry;
pub mod report;
pub mod spec;

pub use battery::{run_battery, RunOptions};
pub use report::{emit_report, parse_machine, Format, Report, Row, Status};
pub use spec::{load_manifold_spec, load_manifold_spec_file, Kind, ManifoldSpec, SpecError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("i/o: {0}")]
    Io(String),
    #[error("malformed report: {0}")]
    Report(String),
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
}
