//! In-memory relational model: typed values, tables, and databases.
//!
//! Databases are loaded once from a manifest plus per-table CSV files and
//! are immutable afterwards; every other subsystem borrows them read-only.

mod manifest;
mod preprocess;

pub use manifest::{
    load_database, load_from_manifest, write_snapshot, Manifest, ManifestColumn, ManifestMapping,
    ManifestTable,
};
pub use preprocess::{
    denormalize, filter_complete_rows, prepare_database, FilterReport, Mapping,
};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

/// A single cell. A column holds exactly one declared kind plus `Null`;
/// `Real` values are always finite (enforced at ingest).
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn kind(&self) -> Option<ValueKind> {
        match self {
            Value::Null => None,
            Value::Integer(_) => Some(ValueKind::Integer),
            Value::Real(_) => Some(ValueKind::Real),
            Value::Text(_) => Some(ValueKind::Text),
        }
    }

    /// Canonical text rendering used in verbalization and result-set output.
    /// Null renders as the empty string; integral reals drop the fraction.
    pub fn render(&self) -> String {
        match self {
            Value::Null => String::new(),
            Value::Integer(i) => i.to_string(),
            Value::Real(r) => {
                if r.fract() == 0.0 && r.abs() < 1e15 {
                    format!("{}", *r as i64)
                } else {
                    format!("{r}")
                }
            }
            Value::Text(t) => t.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Integer(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }
}

/// Total order used for sorting, grouping, and deduplication.
/// Null sorts first; integers and reals compare numerically (1 == 1.0);
/// text compares lexicographically and sorts after numbers.
pub fn cmp_values(a: &Value, b: &Value) -> Ordering {
    use Value::*;
    match (a, b) {
        (Null, Null) => Ordering::Equal,
        (Null, _) => Ordering::Less,
        (_, Null) => Ordering::Greater,
        (Integer(x), Integer(y)) => x.cmp(y),
        (Real(x), Real(y)) => x.total_cmp(y),
        (Integer(x), Real(y)) => (*x as f64).total_cmp(y),
        (Real(x), Integer(y)) => x.total_cmp(&(*y as f64)),
        (Text(x), Text(y)) => x.cmp(y),
        (Text(_), _) => Ordering::Greater,
        (_, Text(_)) => Ordering::Less,
    }
}

/// Compare two rows lexicographically under [`cmp_values`].
pub fn cmp_rows(a: &[Value], b: &[Value]) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let ord = cmp_values(x, y);
        if ord != Ordering::Equal {
            return ord;
        }
    }
    a.len().cmp(&b.len())
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Null => s.serialize_none(),
            Value::Integer(i) => s.serialize_i64(*i),
            Value::Real(r) => s.serialize_f64(*r),
            Value::Text(t) => s.serialize_str(t),
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::Null => Ok(Value::Null),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Value::Integer(i))
                } else if let Some(f) = n.as_f64() {
                    if f.is_finite() {
                        Ok(Value::Real(f))
                    } else {
                        Err(D::Error::custom("non-finite real value"))
                    }
                } else {
                    Err(D::Error::custom("unrepresentable number"))
                }
            }
            serde_json::Value::String(t) => Ok(Value::Text(t)),
            other => Err(D::Error::custom(format!("invalid cell value: {other}"))),
        }
    }
}

/// Declared kind of a column. Dates are plain text and compare
/// lexicographically, which is correct for ISO-8601 strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Integer,
    Real,
    Text,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueKind::Integer => write!(f, "integer"),
            ValueKind::Real => write!(f, "real"),
            ValueKind::Text => write!(f, "text"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ValueKind,
    /// Marked required-for-verbalization: rows with Null here are dropped
    /// by [`filter_complete_rows`].
    #[serde(default)]
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Self {
        Table {
            name: name.into(),
            columns,
            rows: Vec::new(),
        }
    }

    /// Case-insensitive column lookup returning the positional index.
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns
            .iter()
            .position(|c| c.name.eq_ignore_ascii_case(name))
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    /// Validates row arity and per-column kind/finiteness invariants.
    pub fn validate(&self) -> Result<(), RelationalError> {
        let mut seen: Vec<String> = Vec::new();
        for c in &self.columns {
            let lower = c.name.to_ascii_lowercase();
            if seen.contains(&lower) {
                return Err(RelationalError::DuplicateColumn {
                    table: self.name.clone(),
                    column: c.name.clone(),
                });
            }
            seen.push(lower);
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.columns.len() {
                return Err(RelationalError::RowArity {
                    table: self.name.clone(),
                    row: i,
                    expected: self.columns.len(),
                    actual: row.len(),
                });
            }
            for (c, cell) in self.columns.iter().zip(row.iter()) {
                match (cell, c.kind) {
                    (Value::Null, _) => {}
                    (Value::Integer(_), ValueKind::Integer) => {}
                    (Value::Real(r), ValueKind::Real) => {
                        if !r.is_finite() {
                            return Err(RelationalError::NonFiniteReal {
                                table: self.name.clone(),
                                row: i,
                                column: c.name.clone(),
                            });
                        }
                    }
                    (Value::Text(_), ValueKind::Text) => {}
                    _ => {
                        return Err(RelationalError::KindViolation {
                            table: self.name.clone(),
                            row: i,
                            column: c.name.clone(),
                            declared: c.kind,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForeignKey {
    pub child_table: String,
    pub child_column: String,
    pub parent_table: String,
    pub parent_column: String,
}

/// An immutable relational database plus the dummy-document pool used to
/// pad contexts when a query touches every table.
#[derive(Debug, Clone, PartialEq)]
pub struct Database {
    pub name: String,
    /// Tables in manifest order. Order matters: sampling weights and
    /// round-robin interleaving follow it deterministically.
    pub tables: Vec<Table>,
    pub foreign_keys: Vec<ForeignKey>,
    pub dummy_documents: Vec<String>,
}

impl Database {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables
            .iter()
            .find(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub fn table_mut(&mut self, name: &str) -> Option<&mut Table> {
        self.tables
            .iter_mut()
            .find(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub fn total_rows(&self) -> usize {
        self.tables.iter().map(|t| t.rows.len()).sum()
    }

    /// Validates table invariants plus foreign-key endpoint existence.
    pub fn validate(&self) -> Result<(), RelationalError> {
        let mut seen: Vec<String> = Vec::new();
        for t in &self.tables {
            let lower = t.name.to_ascii_lowercase();
            if seen.contains(&lower) {
                return Err(RelationalError::DuplicateTable {
                    table: t.name.clone(),
                });
            }
            seen.push(lower);
            t.validate()?;
        }
        for fk in &self.foreign_keys {
            for (table, column) in [
                (&fk.child_table, &fk.child_column),
                (&fk.parent_table, &fk.parent_column),
            ] {
                let t = self
                    .table(table)
                    .ok_or_else(|| RelationalError::ForeignKeyEndpoint {
                        table: table.clone(),
                        column: column.clone(),
                    })?;
                if t.column_index(column).is_none() {
                    return Err(RelationalError::ForeignKeyEndpoint {
                        table: table.clone(),
                        column: column.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum RelationalError {
    #[error("manifest malformed: {0}")]
    ManifestMalformed(String),
    #[error("missing table file for `{table}`: {path}")]
    MissingTableFile { table: String, path: String },
    #[error("type coercion failure in `{table}` row {row} column `{column}`: {detail}")]
    TypeCoercionFailure {
        table: String,
        row: usize,
        column: String,
        detail: String,
    },
    #[error("duplicate table `{table}`")]
    DuplicateTable { table: String },
    #[error("duplicate column `{column}` in table `{table}`")]
    DuplicateColumn { table: String, column: String },
    #[error("row {row} of `{table}` has {actual} cells, expected {expected}")]
    RowArity {
        table: String,
        row: usize,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite real in `{table}` row {row} column `{column}`")]
    NonFiniteReal {
        table: String,
        row: usize,
        column: String,
    },
    #[error("value in `{table}` row {row} column `{column}` does not match declared kind {declared}")]
    KindViolation {
        table: String,
        row: usize,
        column: String,
        declared: ValueKind,
    },
    #[error("foreign key endpoint `{table}.{column}` does not exist")]
    ForeignKeyEndpoint { table: String, column: String },
    #[error("unknown foreign key for `{table}.{column}`")]
    UnknownForeignKey { table: String, column: String },
    #[error("dangling reference: `{table}` row {row} column `{column}` = {value} has no parent row")]
    DanglingReference {
        table: String,
        row: usize,
        column: String,
        value: String,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
