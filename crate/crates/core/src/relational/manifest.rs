//! Manifest-driven database ingest and the inverse snapshot writer.
//!
//! A manifest is a UTF-8 JSON document describing one database:
//!
//! ```json
//! {
//!   "name": "wine",
//!   "tables": [
//!     {"name": "grapes", "file": "grapes.csv",
//!      "columns": [{"name": "grape", "kind": "text"}],
//!      "required": ["grape"]}
//!   ],
//!   "foreign_keys": [{"child_table": "wine", "child_column": "grape",
//!                     "parent_table": "grapes", "parent_column": "grape"}],
//!   "mappings": [],
//!   "templates": "templates.json",
//!   "dummy_documents": "dummy.txt"
//! }
//! ```
//!
//! Table files are RFC-4180 CSV with a header row matching the declared
//! columns in order. An empty field ingests as Null.

use super::{Column, Database, ForeignKey, RelationalError, Table, Value, ValueKind};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub tables: Vec<ManifestTable>,
    #[serde(default)]
    pub foreign_keys: Vec<ForeignKey>,
    #[serde(default)]
    pub mappings: Vec<ManifestMapping>,
    /// Path (relative to the manifest) of the verbalization template file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub templates: Option<String>,
    /// Path (relative to the manifest) of the dummy-document file,
    /// one document per line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dummy_documents: Option<String>,
    #[serde(skip)]
    base_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestTable {
    pub name: String,
    pub file: String,
    pub columns: Vec<ManifestColumn>,
    /// Columns required-for-verbalization. Names may refer to columns a
    /// mapping will create during denormalization.
    #[serde(default)]
    pub required: Vec<String>,
    /// Set false for pure identifier/name lookup tables that should be
    /// dropped from the corpus after denormalization folds them in.
    #[serde(default = "default_true")]
    pub verbalize: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestColumn {
    pub name: String,
    pub kind: ValueKind,
}

/// Identifier-to-name mapping declaration. The foreign key for
/// `(table, id_column)` must be declared in `foreign_keys`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestMapping {
    pub table: String,
    pub id_column: String,
    /// Column in the parent table holding the human-readable name.
    pub name_column: String,
    /// Name of the joined column; defaults to `{parent_table}_{name_column}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_column: Option<String>,
    /// Replace the identifier column instead of accompanying it.
    #[serde(default)]
    pub replace: bool,
}

impl Manifest {
    pub fn read(path: impl AsRef<Path>) -> Result<Manifest, RelationalError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| RelationalError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| RelationalError::ManifestMalformed(e.to_string()))?;
        manifest.base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        if manifest.tables.is_empty() {
            return Err(RelationalError::ManifestMalformed(
                "manifest declares zero tables".into(),
            ));
        }
        Ok(manifest)
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn resolve(&self, relative: &str) -> PathBuf {
        self.base_dir.join(relative)
    }

    /// Resolved denormalization mappings with defaulted target names and
    /// required flags pulled from the owning table's `required` list.
    pub fn resolved_mappings(&self) -> Result<Vec<super::Mapping>, RelationalError> {
        let mut out = Vec::new();
        for m in &self.mappings {
            let fk = self
                .foreign_keys
                .iter()
                .find(|fk| {
                    fk.child_table.eq_ignore_ascii_case(&m.table)
                        && fk.child_column.eq_ignore_ascii_case(&m.id_column)
                })
                .ok_or_else(|| RelationalError::UnknownForeignKey {
                    table: m.table.clone(),
                    column: m.id_column.clone(),
                })?;
            let new_column = m
                .new_column
                .clone()
                .unwrap_or_else(|| format!("{}_{}", fk.parent_table, m.name_column));
            let required = self
                .tables
                .iter()
                .find(|t| t.name.eq_ignore_ascii_case(&m.table))
                .map(|t| {
                    t.required
                        .iter()
                        .any(|r| r.eq_ignore_ascii_case(&new_column))
                })
                .unwrap_or(false);
            out.push(super::Mapping {
                table: m.table.clone(),
                id_column: m.id_column.clone(),
                name_column: m.name_column.clone(),
                new_column,
                replace: m.replace,
                required,
            });
        }
        Ok(out)
    }
}

/// Loads, coerces, and validates a database from its manifest.
/// Row order is preserved from the CSV files.
pub fn load_database(manifest_path: impl AsRef<Path>) -> Result<Database, RelationalError> {
    let manifest = Manifest::read(manifest_path)?;
    load_from_manifest(&manifest)
}

pub fn load_from_manifest(manifest: &Manifest) -> Result<Database, RelationalError> {
    let mappings = manifest.resolved_mappings()?;
    let mut tables = Vec::new();
    for decl in &manifest.tables {
        let path = manifest.resolve(&decl.file);
        if !path.is_file() {
            return Err(RelationalError::MissingTableFile {
                table: decl.name.clone(),
                path: path.display().to_string(),
            });
        }
        // A required name must be a declared column or a column some
        // mapping will create for this table.
        for req in &decl.required {
            let declared = decl
                .columns
                .iter()
                .any(|c| c.name.eq_ignore_ascii_case(req));
            let mapped = mappings.iter().any(|m| {
                m.table.eq_ignore_ascii_case(&decl.name) && m.new_column.eq_ignore_ascii_case(req)
            });
            if !declared && !mapped {
                return Err(RelationalError::ManifestMalformed(format!(
                    "required column `{req}` of table `{}` is neither declared nor mapped",
                    decl.name
                )));
            }
        }
        tables.push(read_table(decl, &path)?);
    }

    let dummy_documents = match &manifest.dummy_documents {
        Some(rel) => {
            let path = manifest.resolve(rel);
            let text = fs::read_to_string(&path).map_err(|source| RelationalError::Io {
                path: path.display().to_string(),
                source,
            })?;
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect()
        }
        None => Vec::new(),
    };

    let db = Database {
        name: manifest.name.clone(),
        tables,
        foreign_keys: manifest.foreign_keys.clone(),
        dummy_documents,
    };
    db.validate()?;
    Ok(db)
}

fn read_table(decl: &ManifestTable, path: &Path) -> Result<Table, RelationalError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| RelationalError::ManifestMalformed(format!("{}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| RelationalError::ManifestMalformed(format!("{}: {e}", path.display())))?
        .clone();
    if headers.len() != decl.columns.len() {
        return Err(RelationalError::ManifestMalformed(format!(
            "table `{}`: header has {} fields, manifest declares {} columns",
            decl.name,
            headers.len(),
            decl.columns.len()
        )));
    }
    for (h, c) in headers.iter().zip(decl.columns.iter()) {
        if !h.trim().eq_ignore_ascii_case(&c.name) {
            return Err(RelationalError::ManifestMalformed(format!(
                "table `{}`: header field `{h}` does not match declared column `{}`",
                decl.name, c.name
            )));
        }
    }

    let columns: Vec<Column> = decl
        .columns
        .iter()
        .map(|c| Column {
            name: c.name.clone(),
            kind: c.kind,
            required: decl
                .required
                .iter()
                .any(|r| r.eq_ignore_ascii_case(&c.name)),
        })
        .collect();

    let mut table = Table::new(decl.name.clone(), columns);
    for (row_idx, record) in reader.records().enumerate() {
        let record = record
            .map_err(|e| RelationalError::ManifestMalformed(format!("{}: {e}", path.display())))?;
        if record.len() != table.columns.len() {
            return Err(RelationalError::RowArity {
                table: decl.name.clone(),
                row: row_idx,
                expected: table.columns.len(),
                actual: record.len(),
            });
        }
        let mut row = Vec::with_capacity(record.len());
        for (col, field) in table.columns.iter().zip(record.iter()) {
            row.push(coerce(field, col.kind).map_err(|detail| {
                RelationalError::TypeCoercionFailure {
                    table: decl.name.clone(),
                    row: row_idx,
                    column: col.name.clone(),
                    detail,
                }
            })?);
        }
        table.rows.push(row);
    }
    Ok(table)
}

fn coerce(field: &str, kind: ValueKind) -> Result<Value, String> {
    if field.is_empty() {
        return Ok(Value::Null);
    }
    match kind {
        ValueKind::Integer => field
            .trim()
            .parse::<i64>()
            .map(Value::Integer)
            .map_err(|_| format!("`{field}` is not an integer")),
        ValueKind::Real => {
            let r: f64 = field
                .trim()
                .parse()
                .map_err(|_| format!("`{field}` is not a real number"))?;
            if r.is_finite() {
                Ok(Value::Real(r))
            } else {
                Err(format!("`{field}` is not finite"))
            }
        }
        ValueKind::Text => Ok(Value::Text(field.to_string())),
    }
}

/// Writes a database snapshot (manifest + CSVs + dummy documents) into
/// `dir` such that [`load_database`] reconstructs an identical value.
pub fn write_snapshot(db: &Database, dir: impl AsRef<Path>) -> Result<PathBuf, RelationalError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| RelationalError::Io {
        path: dir.display().to_string(),
        source,
    })?;

    let mut tables = Vec::new();
    for t in &db.tables {
        let file = format!("{}.csv", t.name);
        let path = dir.join(&file);
        let mut w = csv::Writer::from_path(&path).map_err(|e| RelationalError::Io {
            path: path.display().to_string(),
            source: std::io::Error::other(e.to_string()),
        })?;
        w.write_record(t.columns.iter().map(|c| c.name.as_str()))
            .and_then(|_| {
                for row in &t.rows {
                    w.write_record(row.iter().map(|v| v.render()))?;
                }
                w.flush().map_err(csv::Error::from)
            })
            .map_err(|e| RelationalError::Io {
                path: path.display().to_string(),
                source: std::io::Error::other(e.to_string()),
            })?;
        tables.push(ManifestTable {
            name: t.name.clone(),
            file,
            columns: t
                .columns
                .iter()
                .map(|c| ManifestColumn {
                    name: c.name.clone(),
                    kind: c.kind,
                })
                .collect(),
            required: t
                .columns
                .iter()
                .filter(|c| c.required)
                .map(|c| c.name.clone())
                .collect(),
            verbalize: true,
        });
    }

    let dummy_documents = if db.dummy_documents.is_empty() {
        None
    } else {
        let path = dir.join("dummy_documents.txt");
        fs::write(&path, db.dummy_documents.join("\n")).map_err(|source| RelationalError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Some("dummy_documents.txt".to_string())
    };

    let manifest = Manifest {
        name: db.name.clone(),
        tables,
        foreign_keys: db.foreign_keys.clone(),
        mappings: Vec::new(),
        templates: None,
        dummy_documents,
        base_dir: dir.to_path_buf(),
    };
    let manifest_path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| RelationalError::ManifestMalformed(e.to_string()))?;
    fs::write(&manifest_path, json).map_err(|source| RelationalError::Io {
        path: manifest_path.display().to_string(),
        source,
    })?;
    Ok(manifest_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write_fixture(dir: &Path) {
        fs::write(
            dir.join("manifest.json"),
            r#"{
              "name": "mini",
              "tables": [
                {"name": "fruit", "file": "fruit.csv",
                 "columns": [
                   {"name": "name", "kind": "text"},
                   {"name": "weight", "kind": "real"},
                   {"name": "count", "kind": "integer"}
                 ],
                 "required": ["name"]}
              ]
            }"#,
        )
        .unwrap();
        fs::write(
            dir.join("fruit.csv"),
            "name,weight,count\napple,0.3,10\npear,,4\n\"kiwi, gold\",0.1,\n",
        )
        .unwrap();
    }

    #[test]
    fn loads_csv_with_nulls_and_quoting() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path());
        let db = load_database(dir.path().join("manifest.json")).unwrap();
        assert_eq!(db.tables.len(), 1);
        let t = &db.tables[0];
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.rows[1][1], Value::Null);
        assert_eq!(t.rows[2][0], Value::Text("kiwi, gold".into()));
        assert_eq!(t.rows[2][2], Value::Null);
        assert!(t.columns[0].required);
        assert!(!t.columns[1].required);
    }

    #[test]
    fn zero_tables_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("manifest.json"),
            r#"{"name": "empty", "tables": []}"#,
        )
        .unwrap();
        let err = load_database(dir.path().join("manifest.json")).unwrap_err();
        assert!(matches!(err, RelationalError::ManifestMalformed(_)));
    }

    #[test]
    fn bad_integer_cell_reports_coordinates() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path());
        fs::write(
            dir.path().join("fruit.csv"),
            "name,weight,count\napple,0.3,abc\n",
        )
        .unwrap();
        let err = load_database(dir.path().join("manifest.json")).unwrap_err();
        match err {
            RelationalError::TypeCoercionFailure {
                table, row, column, ..
            } => {
                assert_eq!(table, "fruit");
                assert_eq!(row, 0);
                assert_eq!(column, "count");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn missing_table_file_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path());
        fs::remove_file(dir.path().join("fruit.csv")).unwrap();
        let err = load_database(dir.path().join("manifest.json")).unwrap_err();
        assert!(matches!(err, RelationalError::MissingTableFile { .. }));
    }

    #[test]
    fn snapshot_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        write_fixture(dir.path());
        let db = load_database(dir.path().join("manifest.json")).unwrap();

        let out = tempfile::tempdir().unwrap();
        let manifest_path = write_snapshot(&db, out.path()).unwrap();
        let reloaded = load_database(manifest_path).unwrap();
        assert_eq!(db, reloaded);
    }
}
