//! SQL frontend: lexer, parser, AST, classification, and suite records.

pub mod ast;
mod classify;
mod lexer;
mod parser;
mod suite;

pub use classify::{classify_difficulty, classify_types, referenced_tables, Difficulty, QueryType};
pub use parser::{parse_sql, SqlError};
pub use suite::{analyze, annotate, load_suite, render_suite, QuerySpec, SuiteError, SuiteRecord};
