//! Long-context corpus synthesis: token budgeting, verbalization,
//! seeded sampling, information positioning, and instance assembly.

mod instance;
mod position;
mod record;
mod sample;
mod template;
mod tokens;

pub use instance::{
    derive_seed, partition_tables, BenchmarkInstance, CorpusConfig, InfoSpec, InstanceBuilder,
    Provenance,
};
pub use position::{assemble_context, relevant_indices, AssembledContext, PositionStrategy};
pub use record::{GoldRecord, InstanceRecord};
pub use sample::{
    cycle_dummy_documents, sample_documents, sample_relevant_documents, DocSource, Document,
    SampleOutcome, StopReason,
};
pub use template::{placeholders, verbalize_row, TemplateLibrary, VerbalizationTemplate};
pub use tokens::{HeuristicTokenCounter, TokenCounter};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("no verbalization template for table `{table}`")]
    MissingTemplate { table: String },
    #[error("template placeholder `{column}` is not a column of `{table}`")]
    MissingPlaceholderColumn { table: String, column: String },
    #[error("null cell under placeholder `{column}` of `{table}` (rows should be filtered first)")]
    NullInPlaceholder { table: String, column: String },
    #[error("token budget {budget} fits no document (first candidate needs {first_candidate_tokens})")]
    BudgetInfeasible {
        budget: usize,
        first_candidate_tokens: usize,
    },
    #[error("no relevant documents were sampled")]
    NoRelevantDocuments,
    #[error("dummy-document pool has {have} entries, need at least 10")]
    DummyPoolTooSmall { have: usize },
    #[error("invalid corpus config: {0}")]
    InvalidConfig(String),
    #[error("template file error: {0}")]
    TemplateFile(String),
    #[error(transparent)]
    Exec(#[from] crate::exec::ExecError),
}
