//! Verbalization templates: per-table sentence patterns with `{column}`
//! placeholders, several variants per table for lexical diversity.

use super::CorpusError;
use crate::relational::{Table, Value};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

/// All template variants for one table.
#[derive(Debug, Clone, PartialEq)]
pub struct VerbalizationTemplate {
    pub table: String,
    pub variants: Vec<String>,
}

/// Template variants keyed by lowercase table name. The file format is a
/// JSON object: `{"airports": ["The {name} is located in {city}...", ...]}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TemplateLibrary {
    by_table: BTreeMap<String, Vec<String>>,
}

impl TemplateLibrary {
    pub fn from_map(map: BTreeMap<String, Vec<String>>) -> Self {
        let by_table = map
            .into_iter()
            .map(|(k, v)| (k.to_ascii_lowercase(), v))
            .collect();
        TemplateLibrary { by_table }
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| {
            CorpusError::TemplateFile(format!("{}: {e}", path.display()))
        })?;
        let map: BTreeMap<String, Vec<String>> = serde_json::from_str(&text)
            .map_err(|e| CorpusError::TemplateFile(format!("{}: {e}", path.display())))?;
        for (table, variants) in &map {
            if variants.is_empty() {
                return Err(CorpusError::TemplateFile(format!(
                    "table `{table}` has zero template variants"
                )));
            }
        }
        Ok(Self::from_map(map))
    }

    pub fn variants(&self, table: &str) -> Option<&[String]> {
        self.by_table
            .get(&table.to_ascii_lowercase())
            .map(|v| v.as_slice())
    }

    /// Checks that every listed table has at least one variant whose
    /// placeholders all name existing columns of that table.
    pub fn validate_against(&self, tables: &[&Table]) -> Result<(), CorpusError> {
        for table in tables {
            let variants =
                self.variants(&table.name)
                    .ok_or_else(|| CorpusError::MissingTemplate {
                        table: table.name.clone(),
                    })?;
            for v in variants {
                for ph in placeholders(v) {
                    if table.column_index(&ph).is_none() {
                        return Err(CorpusError::MissingPlaceholderColumn {
                            table: table.name.clone(),
                            column: ph,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Placeholder names appearing in a template, in order of appearance.
pub fn placeholders(template: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        match rest[start + 1..].find('}') {
            Some(len) => {
                out.push(rest[start + 1..start + 1 + len].to_string());
                rest = &rest[start + 1 + len + 1..];
            }
            None => break,
        }
    }
    out
}

/// Substitutes each `{column}` with the row's rendered cell. Placeholder
/// cells must be non-Null; guaranteed when incomplete rows were filtered.
pub fn verbalize_row(table: &Table, row: &[Value], template: &str) -> Result<String, CorpusError> {
    let mut text = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        text.push_str(&rest[..start]);
        let Some(len) = rest[start + 1..].find('}') else {
            text.push_str(&rest[start..]);
            rest = "";
            break;
        };
        let name = &rest[start + 1..start + 1 + len];
        let idx = table
            .column_index(name)
            .ok_or_else(|| CorpusError::MissingPlaceholderColumn {
                table: table.name.clone(),
                column: name.to_string(),
            })?;
        let cell = &row[idx];
        if cell.is_null() {
            return Err(CorpusError::NullInPlaceholder {
                table: table.name.clone(),
                column: name.to_string(),
            });
        }
        text.push_str(&cell.render());
        rest = &rest[start + 1 + len + 1..];
    }
    text.push_str(rest);
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relational::{Column, ValueKind};

    fn airports_table() -> Table {
        let cols = ["name", "city", "country", "elevation"]
            .iter()
            .map(|n| Column {
                name: n.to_string(),
                kind: if *n == "elevation" {
                    ValueKind::Integer
                } else {
                    ValueKind::Text
                },
                required: true,
            })
            .collect();
        Table::new("airports", cols)
    }

    #[test]
    fn substitutes_all_placeholders() {
        let table = airports_table();
        let row = vec![
            Value::Text("Kazan International Airport".into()),
            Value::Text("Kazan".into()),
            Value::Text("Russia".into()),
            Value::Integer(411),
        ];
        let text = verbalize_row(
            &table,
            &row,
            "The {name} is located in {city}, {country} at an elevation of {elevation} feet.",
        )
        .unwrap();
        assert_eq!(
            text,
            "The Kazan International Airport is located in Kazan, Russia at an elevation of 411 feet."
        );
    }

    #[test]
    fn unknown_placeholder_errors() {
        let table = airports_table();
        let row = vec![
            Value::Text("X".into()),
            Value::Text("Y".into()),
            Value::Text("Z".into()),
            Value::Integer(1),
        ];
        let err = verbalize_row(&table, &row, "{nonexistent}").unwrap_err();
        assert!(matches!(err, CorpusError::MissingPlaceholderColumn { .. }));
    }

    #[test]
    fn null_placeholder_cell_errors() {
        let table = airports_table();
        let row = vec![
            Value::Text("X".into()),
            Value::Null,
            Value::Text("Z".into()),
            Value::Integer(1),
        ];
        let err = verbalize_row(&table, &row, "in {city}").unwrap_err();
        assert!(matches!(err, CorpusError::NullInPlaceholder { .. }));
    }

    #[test]
    fn placeholder_extraction() {
        assert_eq!(
            placeholders("a {x} b {y} c"),
            vec!["x".to_string(), "y".to_string()]
        );
        assert!(placeholders("no holes").is_empty());
    }
}
