//! Database preprocessing: identifier-to-name denormalization and
//! removal of rows that are incomplete for verbalization.

use super::{Column, Database, RelationalError, Value};
use std::collections::HashMap;

/// Loads a database and applies the standard preprocessing pipeline:
/// denormalize identifier columns, drop rows that are incomplete for
/// verbalization, and remove tables flagged as lookup-only.
pub fn prepare_database(
    manifest: &super::Manifest,
) -> Result<(Database, FilterReport), RelationalError> {
    let raw = super::load_from_manifest(manifest)?;
    let mappings = manifest.resolved_mappings()?;
    let denormalized = denormalize(&raw, &mappings)?;
    let (mut db, report) = filter_complete_rows(&denormalized);
    db.tables.retain(|t| {
        manifest
            .tables
            .iter()
            .find(|decl| decl.name.eq_ignore_ascii_case(&t.name))
            .is_none_or(|decl| decl.verbalize)
    });
    Ok((db, report))
}

/// Resolved identifier-to-name mapping. `new_column` is joined in from the
/// parent table; with `replace` the identifier column is dropped.
#[derive(Debug, Clone)]
pub struct Mapping {
    pub table: String,
    pub id_column: String,
    pub name_column: String,
    pub new_column: String,
    pub replace: bool,
    pub required: bool,
}

/// Joins human-readable name columns onto identifier columns.
///
/// Idempotent for a fixed mapping set: a mapping whose target column
/// already exists is skipped, so reapplying is a no-op.
pub fn denormalize(db: &Database, mappings: &[Mapping]) -> Result<Database, RelationalError> {
    let mut out = db.clone();
    for m in mappings {
        apply_mapping(&mut out, db, m)?;
    }
    Ok(out)
}

fn apply_mapping(
    out: &mut Database,
    original: &Database,
    m: &Mapping,
) -> Result<(), RelationalError> {
    let fk = original
        .foreign_keys
        .iter()
        .find(|fk| {
            fk.child_table.eq_ignore_ascii_case(&m.table)
                && fk.child_column.eq_ignore_ascii_case(&m.id_column)
        })
        .ok_or_else(|| RelationalError::UnknownForeignKey {
            table: m.table.clone(),
            column: m.id_column.clone(),
        })?
        .clone();

    let parent = out
        .table(&fk.parent_table)
        .ok_or_else(|| RelationalError::ForeignKeyEndpoint {
            table: fk.parent_table.clone(),
            column: fk.parent_column.clone(),
        })?;
    let parent_key = parent.column_index(&fk.parent_column).ok_or_else(|| {
        RelationalError::ForeignKeyEndpoint {
            table: fk.parent_table.clone(),
            column: fk.parent_column.clone(),
        }
    })?;
    let parent_name =
        parent
            .column_index(&m.name_column)
            .ok_or_else(|| RelationalError::ForeignKeyEndpoint {
                table: fk.parent_table.clone(),
                column: m.name_column.clone(),
            })?;
    let name_kind = parent.columns[parent_name].kind;

    // Key the parent rows by the referenced column's rendered value so
    // integer and text identifiers both look up exactly.
    let lookup: HashMap<String, Value> = parent
        .rows
        .iter()
        .filter(|r| !r[parent_key].is_null())
        .map(|r| (r[parent_key].render(), r[parent_name].clone()))
        .collect();

    let child = out
        .table_mut(&m.table)
        .ok_or_else(|| RelationalError::ForeignKeyEndpoint {
            table: m.table.clone(),
            column: m.id_column.clone(),
        })?;

    if child.column_index(&m.new_column).is_some() {
        // Already applied.
        return Ok(());
    }
    let id_idx = match child.column_index(&m.id_column) {
        Some(i) => i,
        // Identifier column already replaced on a previous run.
        None => return Ok(()),
    };

    let mut names = Vec::with_capacity(child.rows.len());
    for (row_idx, row) in child.rows.iter().enumerate() {
        let id = &row[id_idx];
        if id.is_null() {
            names.push(Value::Null);
            continue;
        }
        match lookup.get(&id.render()) {
            Some(v) => names.push(v.clone()),
            None => {
                return Err(RelationalError::DanglingReference {
                    table: m.table.clone(),
                    row: row_idx,
                    column: m.id_column.clone(),
                    value: id.render(),
                });
            }
        }
    }

    let new_col = Column {
        name: m.new_column.clone(),
        kind: name_kind,
        required: m.required,
    };
    if m.replace {
        child.columns[id_idx] = new_col;
        for (row, name) in child.rows.iter_mut().zip(names) {
            row[id_idx] = name;
        }
    } else {
        let insert_at = id_idx + 1;
        child.columns.insert(insert_at, new_col);
        for (row, name) in child.rows.iter_mut().zip(names) {
            row.insert(insert_at, name);
        }
    }
    Ok(())
}

/// Per-table row removal counts from [`filter_complete_rows`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterReport {
    /// (table name, rows removed, rows retained)
    pub removed: Vec<(String, usize, usize)>,
}

impl FilterReport {
    pub fn total_removed(&self) -> usize {
        self.removed.iter().map(|(_, n, _)| n).sum()
    }

    /// Tables left with zero rows after filtering.
    pub fn emptied_tables(&self) -> Vec<&str> {
        self.removed
            .iter()
            .filter(|(_, _, kept)| *kept == 0)
            .map(|(t, _, _)| t.as_str())
            .collect()
    }
}

/// Retains only rows whose required-for-verbalization columns are all
/// non-Null. Row order is preserved; filtering is total.
pub fn filter_complete_rows(db: &Database) -> (Database, FilterReport) {
    let mut out = db.clone();
    let mut removed = Vec::new();
    for table in &mut out.tables {
        let required: Vec<usize> = table
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.required)
            .map(|(i, _)| i)
            .collect();
        let before = table.rows.len();
        if !required.is_empty() {
            table
                .rows
                .retain(|row| required.iter().all(|&i| !row[i].is_null()));
        }
        let kept = table.rows.len();
        removed.push((table.name.clone(), before - kept, kept));
    }
    (out, FilterReport { removed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relational::{ForeignKey, Table, ValueKind};

    fn col(name: &str, kind: ValueKind, required: bool) -> Column {
        Column {
            name: name.into(),
            kind,
            required,
        }
    }

    fn advisor_db() -> Database {
        let mut instructor = Table::new(
            "instructor",
            vec![
                col("id", ValueKind::Integer, false),
                col("name", ValueKind::Text, false),
            ],
        );
        instructor.rows = vec![
            vec![Value::Integer(1), Value::Text("Ada".into())],
            vec![Value::Integer(2), Value::Text("Boole".into())],
        ];
        let mut advisor = Table::new(
            "advisor",
            vec![
                col("s_id", ValueKind::Integer, false),
                col("i_id", ValueKind::Integer, false),
            ],
        );
        advisor.rows = vec![
            vec![Value::Integer(10), Value::Integer(2)],
            vec![Value::Integer(11), Value::Integer(1)],
        ];
        Database {
            name: "college".into(),
            tables: vec![instructor, advisor],
            foreign_keys: vec![ForeignKey {
                child_table: "advisor".into(),
                child_column: "i_id".into(),
                parent_table: "instructor".into(),
                parent_column: "id".into(),
            }],
            dummy_documents: vec![],
        }
    }

    fn mapping() -> Mapping {
        Mapping {
            table: "advisor".into(),
            id_column: "i_id".into(),
            name_column: "name".into(),
            new_column: "instructor_name".into(),
            replace: false,
            required: true,
        }
    }

    #[test]
    fn denormalize_joins_instructor_names() {
        let db = advisor_db();
        let out = denormalize(&db, &[mapping()]).unwrap();
        let advisor = out.table("advisor").unwrap();
        assert_eq!(advisor.column_index("instructor_name"), Some(2));
        assert_eq!(advisor.rows[0][2], Value::Text("Boole".into()));
        assert_eq!(advisor.rows[1][2], Value::Text("Ada".into()));
        assert!(advisor.columns[2].required);
    }

    #[test]
    fn denormalize_is_idempotent() {
        let db = advisor_db();
        let once = denormalize(&db, &[mapping()]).unwrap();
        let twice = denormalize(&once, &[mapping()]).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn empty_mapping_list_is_identity() {
        let db = advisor_db();
        assert_eq!(denormalize(&db, &[]).unwrap(), db);
    }

    #[test]
    fn dangling_child_reference_names_the_row() {
        let mut db = advisor_db();
        db.table_mut("advisor").unwrap().rows[1][1] = Value::Integer(99);
        let err = denormalize(&db, &[mapping()]).unwrap_err();
        match err {
            RelationalError::DanglingReference { table, row, value, .. } => {
                assert_eq!(table, "advisor");
                assert_eq!(row, 1);
                assert_eq!(value, "99");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn unknown_foreign_key_rejected() {
        let db = advisor_db();
        let mut m = mapping();
        m.id_column = "s_id".into();
        m.new_column = "student_name".into();
        let err = denormalize(&db, &[m]).unwrap_err();
        assert!(matches!(err, RelationalError::UnknownForeignKey { .. }));
    }

    #[test]
    fn replace_swaps_identifier_for_name() {
        let db = advisor_db();
        let mut m = mapping();
        m.replace = true;
        let out = denormalize(&db, &[m.clone()]).unwrap();
        let advisor = out.table("advisor").unwrap();
        assert_eq!(advisor.columns.len(), 2);
        assert!(advisor.column_index("i_id").is_none());
        assert_eq!(advisor.rows[0][1], Value::Text("Boole".into()));
        // Reapplying after replacement is still a no-op.
        assert_eq!(denormalize(&out, &[m]).unwrap(), out);
    }

    #[test]
    fn filter_drops_rows_with_null_required_cells() {
        let mut t = Table::new(
            "t",
            vec![
                col("a", ValueKind::Text, true),
                col("b", ValueKind::Integer, false),
            ],
        );
        t.rows = vec![
            vec![Value::Text("x".into()), Value::Null],
            vec![Value::Null, Value::Integer(1)],
            vec![Value::Text("y".into()), Value::Integer(2)],
            vec![Value::Null, Value::Null],
            vec![Value::Text("z".into()), Value::Integer(3)],
        ];
        let db = Database {
            name: "d".into(),
            tables: vec![t],
            foreign_keys: vec![],
            dummy_documents: vec![],
        };
        let (out, report) = filter_complete_rows(&db);
        assert_eq!(out.tables[0].rows.len(), 3);
        assert_eq!(report.removed, vec![("t".into(), 2, 3)]);
        // Order preserved: x, y, z.
        assert_eq!(out.tables[0].rows[0][0], Value::Text("x".into()));
        assert_eq!(out.tables[0].rows[2][0], Value::Text("z".into()));
    }

    #[test]
    fn filter_without_nulls_is_identity_and_reports_emptied_tables() {
        let db = advisor_db();
        let (out, report) = filter_complete_rows(&db);
        assert_eq!(out, db);
        assert_eq!(report.total_removed(), 0);

        let mut all_null = Table::new("n", vec![col("a", ValueKind::Text, true)]);
        all_null.rows = vec![vec![Value::Null], vec![Value::Null]];
        let db2 = Database {
            name: "d".into(),
            tables: vec![all_null],
            foreign_keys: vec![],
            dummy_documents: vec![],
        };
        let (out2, report2) = filter_complete_rows(&db2);
        assert!(out2.tables[0].rows.is_empty());
        assert_eq!(report2.emptied_tables(), vec!["n"]);
    }
}
