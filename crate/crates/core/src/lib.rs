//! Synthesizes long-context reasoning benchmarks from relational data.
//!
//! The pipeline turns a database plus (question, SQL) pairs into
//! verifiable long-context tasks: referenced tables are split from the
//! rest, sampled rows are verbalized through templates into documents,
//! the documents are positioned inside a token-budgeted context, and the
//! query is executed over exactly the sampled rows to produce the gold
//! answer. A companion harness prompts chat-completion endpoints, judges
//! answers row by row, and aggregates weighted accuracy reports.

pub mod corpus;
pub mod eval;
pub mod gateway;
pub mod exec;
pub mod relational;
pub mod sql;

#[cfg(feature = "testsupport")]
pub mod testsupport;
