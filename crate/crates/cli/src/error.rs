//! Command errors mapped onto process exit codes: validation failures
//! exit 1, environment and endpoint failures exit 2.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Environment(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Environment(_) => 2,
        }
    }

    pub fn stale(detail: impl Into<String>) -> CliError {
        CliError::Validation(format!("stale input hash: {}", detail.into()))
    }
}

impl From<haybench_core::relational::RelationalError> for CliError {
    fn from(e: haybench_core::relational::RelationalError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<haybench_core::sql::SuiteError> for CliError {
    fn from(e: haybench_core::sql::SuiteError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<haybench_core::corpus::CorpusError> for CliError {
    fn from(e: haybench_core::corpus::CorpusError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<haybench_core::exec::ExecError> for CliError {
    fn from(e: haybench_core::exec::ExecError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<haybench_core::gateway::GatewayError> for CliError {
    fn from(e: haybench_core::gateway::GatewayError) -> Self {
        CliError::Environment(e.to_string())
    }
}

impl From<haybench_core::eval::JudgeError> for CliError {
    fn from(e: haybench_core::eval::JudgeError) -> Self {
        CliError::Environment(e.to_string())
    }
}

impl From<haybench_core::eval::MetricsError> for CliError {
    fn from(e: haybench_core::eval::MetricsError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Environment(e.to_string())
    }
}
