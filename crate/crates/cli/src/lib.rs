//! Pipeline library behind the `haybench` binary. Commands are plain
//! functions over paths so integration tests drive them in-process.

pub mod commands;
pub mod config;
pub mod error;
pub mod files;

pub use commands::{
    cmd_generate, cmd_ingest, cmd_judge, cmd_report, cmd_run, cmd_suite_validate, JudgeKind,
    RunOptions,
};
pub use config::{GridSpec, JudgeChoice, RunManifest};
pub use error::CliError;
