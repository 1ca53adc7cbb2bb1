//! Answer judging and accuracy aggregation.

mod judge;
mod metrics;
mod report;

pub use judge::{
    extract_numbers, normalize, signals_no_answer, DeterministicJudge, JudgeError, RowJudge,
    RowLabel,
};
pub use metrics::{aggregate, score_instance, AggregateReport, MetricsError};
pub use report::{build_report, render_text, render_tsv, EvalReport, InstanceMeta, InstanceScore};
