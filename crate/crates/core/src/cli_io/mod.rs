//! Configuration, serialization, plots and command drivers.

pub mod commands;
pub mod config;
pub mod rows;
pub mod svg;

pub use commands::{cmd_continue, cmd_diagnose, cmd_local, cmd_plot, Outcome};
pub use config::{load_config, ContinuationConfig, OutputConfig};
pub use rows::{BranchRow, ErrorRecord, TerminationRecord};
