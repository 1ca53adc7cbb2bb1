//! Question-suite records: (natural-language question, SQL) pairs bound to
//! a database, stored as line-delimited JSON and annotated in place by
//! `suite validate`.

use super::ast::SetExpr;
use super::classify::{classify_difficulty, classify_types, referenced_tables, Difficulty, QueryType};
use super::parser::{parse_sql, SqlError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use thiserror::Error;

/// One line of a suite file. `types` and `difficulty` are annotations
/// written back by validation.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SuiteRecord {
    pub id: String,
    pub database: String,
    pub question: String,
    pub sql: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub types: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<String>,
}

/// A fully analyzed question: parsed AST plus derived labels.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySpec {
    pub id: String,
    pub database: String,
    pub question: String,
    pub sql: String,
    pub ast: SetExpr,
    pub types: BTreeSet<QueryType>,
    pub difficulty: Difficulty,
}

impl QuerySpec {
    pub fn referenced_tables(&self) -> BTreeSet<String> {
        referenced_tables(&self.ast)
    }
}

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("suite record {id}: {source}")]
    Sql {
        id: String,
        #[source]
        source: SqlError,
    },
    #[error("suite record {id}: serialized AST failed to round-trip")]
    RoundTrip { id: String },
    #[error("suite record {id}: query matches none of the five query types")]
    Untyped { id: String },
    #[error("suite line {line}: {detail}")]
    Malformed { line: usize, detail: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Parses and classifies one record. Also checks the serializer
/// round-trip the QuerySpec contract promises.
pub fn analyze(record: &SuiteRecord) -> Result<QuerySpec, SuiteError> {
    let ast = parse_sql(&record.sql).map_err(|source| SuiteError::Sql {
        id: record.id.clone(),
        source,
    })?;
    let reparsed = parse_sql(&ast.to_string()).map_err(|source| SuiteError::Sql {
        id: record.id.clone(),
        source,
    })?;
    if reparsed != ast {
        return Err(SuiteError::RoundTrip {
            id: record.id.clone(),
        });
    }
    let types = classify_types(&ast);
    if types.is_empty() {
        return Err(SuiteError::Untyped {
            id: record.id.clone(),
        });
    }
    Ok(QuerySpec {
        id: record.id.clone(),
        database: record.database.clone(),
        question: record.question.clone(),
        sql: record.sql.clone(),
        types,
        difficulty: classify_difficulty(&ast),
        ast,
    })
}

pub fn load_suite(path: impl AsRef<Path>) -> Result<Vec<SuiteRecord>, SuiteError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| SuiteError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: SuiteRecord =
            serde_json::from_str(line).map_err(|e| SuiteError::Malformed {
                line: idx + 1,
                detail: e.to_string(),
            })?;
        records.push(record);
    }
    Ok(records)
}

/// Analyzes every record and returns the records with `types` and
/// `difficulty` annotations filled in, paired with the specs.
pub fn annotate(records: &[SuiteRecord]) -> Result<(Vec<SuiteRecord>, Vec<QuerySpec>), SuiteError> {
    let mut annotated = Vec::with_capacity(records.len());
    let mut specs = Vec::with_capacity(records.len());
    for record in records {
        let spec = analyze(record)?;
        let mut record = record.clone();
        record.types = Some(spec.types.iter().map(|t| t.to_string()).collect());
        record.difficulty = Some(spec.difficulty.to_string());
        annotated.push(record);
        specs.push(spec);
    }
    Ok((annotated, specs))
}

pub fn render_suite(records: &[SuiteRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("suite record serializes"));
        out.push('\n');
    }
    out
}
