//! Seeded row sampling and verbalization into documents.
//!
//! Rows are drawn without replacement across tables, table choice weighted
//! by remaining row count, and each sampled row is rendered with a
//! seeded-rotated template variant. Accumulation is stop-before-exceed:
//! the first candidate that would cross the budget ends sampling, so the
//! realized total never exceeds the budget and lands within one document
//! of it whenever the pool allows.

use super::template::{verbalize_row, TemplateLibrary};
use super::tokens::TokenCounter;
use super::CorpusError;
use crate::relational::{ForeignKey, Table};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Where a document's text came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DocSource {
    Row { table: String, row: usize },
    Dummy { dummy: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub text: String,
    pub source: DocSource,
    pub relevant: bool,
    pub tokens: usize,
}

/// Why sampling stopped. `BudgetReached` carries the token count of the
/// candidate that did not fit, letting tests verify the boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StopReason {
    BudgetReached { next_tokens: usize },
    PoolExhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleOutcome {
    pub documents: Vec<Document>,
    pub stop: StopReason,
    pub total_tokens: usize,
}

/// Samples documents from the given tables until the token budget is hit.
/// Deterministic for a fixed seed.
pub fn sample_documents(
    tables: &[&Table],
    budget: usize,
    templates: &TemplateLibrary,
    counter: &dyn TokenCounter,
    seed: u64,
) -> Result<SampleOutcome, CorpusError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    sample_with_rng(tables, &[], budget, templates, counter, &mut rng, false)
}

/// Relevant-side sampler: same contract as [`sample_documents`] plus a
/// join-awareness rule. When a chosen table is a child whose in-set parent
/// has no sampled rows yet, the draw is redirected to the parent, and row
/// choice prefers rows whose foreign-key cells line up with already
/// sampled rows (falling back to unconstrained rows when none match).
/// This avoids systematically empty joins in the sampled subtables.
pub fn sample_relevant_documents(
    tables: &[&Table],
    foreign_keys: &[ForeignKey],
    budget: usize,
    templates: &TemplateLibrary,
    counter: &dyn TokenCounter,
    seed: u64,
) -> Result<SampleOutcome, CorpusError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let in_set: BTreeSet<String> = tables
        .iter()
        .map(|t| t.name.to_ascii_lowercase())
        .collect();
    let fks: Vec<ForeignKey> = foreign_keys
        .iter()
        .filter(|fk| {
            in_set.contains(&fk.child_table.to_ascii_lowercase())
                && in_set.contains(&fk.parent_table.to_ascii_lowercase())
                && !fk.child_table.eq_ignore_ascii_case(&fk.parent_table)
        })
        .cloned()
        .collect();
    sample_with_rng(tables, &fks, budget, templates, counter, &mut rng, true)
}

#[allow(clippy::too_many_arguments)]
fn sample_with_rng(
    tables: &[&Table],
    fks: &[ForeignKey],
    budget: usize,
    templates: &TemplateLibrary,
    counter: &dyn TokenCounter,
    rng: &mut ChaCha20Rng,
    relevant: bool,
) -> Result<SampleOutcome, CorpusError> {
    templates.validate_against(tables)?;

    // Per-table remaining row indices and template rotation offsets. The
    // offsets are drawn up front in table order so the sequence is stable.
    let mut remaining: Vec<Vec<usize>> = tables.iter().map(|t| (0..t.rows.len()).collect()).collect();
    let offsets: Vec<usize> = tables
        .iter()
        .map(|t| {
            let n = templates.variants(&t.name).map_or(1, <[String]>::len);
            rng.random_range(0..n.max(1))
        })
        .collect();
    let mut used: Vec<usize> = vec![0; tables.len()];
    let mut sampled_count: Vec<usize> = vec![0; tables.len()];
    // Rendered key values seen so far, per (table, column), both for
    // parent keys and child foreign-key cells.
    let mut seen_values: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();

    let table_pos = |name: &str| -> Option<usize> {
        tables.iter().position(|t| t.name.eq_ignore_ascii_case(name))
    };

    let mut documents = Vec::new();
    let mut total_tokens = 0usize;

    if budget == 0 {
        return Ok(SampleOutcome {
            documents,
            stop: StopReason::BudgetReached { next_tokens: 0 },
            total_tokens,
        });
    }

    loop {
        let total_remaining: usize = remaining.iter().map(Vec::len).sum();
        if total_remaining == 0 {
            return Ok(SampleOutcome {
                documents,
                stop: StopReason::PoolExhausted,
                total_tokens,
            });
        }

        // Weighted table choice by remaining rows.
        let mut pick = rng.random_range(0..total_remaining);
        let mut ti = 0;
        for (i, pool) in remaining.iter().enumerate() {
            if pick < pool.len() {
                ti = i;
                break;
            }
            pick -= pool.len();
        }

        // Join awareness: seed unsampled parents before drawing children.
        if relevant {
            let mut guard = 0;
            loop {
                guard += 1;
                if guard > tables.len() + 1 {
                    break;
                }
                let child_name = tables[ti].name.to_ascii_lowercase();
                let redirect = fks.iter().find_map(|fk| {
                    if fk.child_table.to_ascii_lowercase() != child_name {
                        return None;
                    }
                    let pi = table_pos(&fk.parent_table)?;
                    (sampled_count[pi] == 0 && !remaining[pi].is_empty()).then_some(pi)
                });
                match redirect {
                    Some(pi) if pi != ti => ti = pi,
                    _ => break,
                }
            }
        }

        let table = tables[ti];
        let pool = &mut remaining[ti];

        // Row choice: prefer rows whose key cells line up with sampled
        // neighbors when any such constraint is active.
        let chosen_pos = if relevant && !fks.is_empty() {
            let tname = table.name.to_ascii_lowercase();
            let mut constraints: Vec<(usize, &BTreeSet<String>)> = Vec::new();
            for fk in fks {
                if fk.child_table.to_ascii_lowercase() == tname {
                    let key = (
                        fk.parent_table.to_ascii_lowercase(),
                        fk.parent_column.to_ascii_lowercase(),
                    );
                    if let (Some(set), Some(col)) =
                        (seen_values.get(&key), table.column_index(&fk.child_column))
                    {
                        if !set.is_empty() {
                            constraints.push((col, set));
                        }
                    }
                }
                if fk.parent_table.to_ascii_lowercase() == tname {
                    let key = (
                        fk.child_table.to_ascii_lowercase(),
                        fk.child_column.to_ascii_lowercase(),
                    );
                    if let (Some(set), Some(col)) =
                        (seen_values.get(&key), table.column_index(&fk.parent_column))
                    {
                        if !set.is_empty() {
                            constraints.push((col, set));
                        }
                    }
                }
            }
            if constraints.is_empty() {
                rng.random_range(0..pool.len())
            } else {
                let preferred: Vec<usize> = pool
                    .iter()
                    .enumerate()
                    .filter(|(_, &row_idx)| {
                        constraints.iter().any(|(col, set)| {
                            let cell = &table.rows[row_idx][*col];
                            !cell.is_null() && set.contains(&cell.render())
                        })
                    })
                    .map(|(pos, _)| pos)
                    .collect();
                if preferred.is_empty() {
                    rng.random_range(0..pool.len())
                } else {
                    preferred[rng.random_range(0..preferred.len())]
                }
            }
        } else {
            rng.random_range(0..pool.len())
        };

        let row_idx = pool.swap_remove(chosen_pos);
        let variants = templates
            .variants(&table.name)
            .expect("validated above");
        let variant = &variants[(offsets[ti] + used[ti]) % variants.len()];
        used[ti] += 1;

        let text = verbalize_row(table, &table.rows[row_idx], variant)?;
        let tokens = counter.count(&text);

        if total_tokens + tokens > budget {
            if documents.is_empty() {
                return Err(CorpusError::BudgetInfeasible {
                    budget,
                    first_candidate_tokens: tokens,
                });
            }
            return Ok(SampleOutcome {
                documents,
                stop: StopReason::BudgetReached { next_tokens: tokens },
                total_tokens,
            });
        }

        sampled_count[ti] += 1;
        if relevant {
            let tname = table.name.to_ascii_lowercase();
            for fk in fks {
                for (owner, column) in [
                    (&fk.child_table, &fk.child_column),
                    (&fk.parent_table, &fk.parent_column),
                ] {
                    if owner.to_ascii_lowercase() == tname {
                        if let Some(col) = table.column_index(column) {
                            let cell = &table.rows[row_idx][col];
                            if !cell.is_null() {
                                seen_values
                                    .entry((tname.clone(), column.to_ascii_lowercase()))
                                    .or_default()
                                    .insert(cell.render());
                            }
                        }
                    }
                }
            }
        }

        total_tokens += tokens;
        documents.push(Document {
            text,
            source: DocSource::Row {
                table: table.name.clone(),
                row: row_idx,
            },
            relevant,
            tokens,
        });
    }
}

/// Fills a budget by cycling the dummy-document pool in order,
/// stop-before-exceed. Used when a query references every table and the
/// irrelevant side would otherwise be empty.
pub fn cycle_dummy_documents(
    pool: &[String],
    budget: usize,
    counter: &dyn TokenCounter,
) -> SampleOutcome {
    let mut documents = Vec::new();
    let mut total_tokens = 0usize;
    if pool.is_empty() || budget == 0 {
        return SampleOutcome {
            documents,
            stop: StopReason::BudgetReached { next_tokens: 0 },
            total_tokens,
        };
    }
    let mut i = 0usize;
    loop {
        let text = &pool[i % pool.len()];
        let tokens = counter.count(text);
        if total_tokens + tokens > budget {
            return SampleOutcome {
                documents,
                stop: StopReason::BudgetReached { next_tokens: tokens },
                total_tokens,
            };
        }
        documents.push(Document {
            text: text.clone(),
            source: DocSource::Dummy {
                dummy: i % pool.len(),
            },
            relevant: false,
            tokens,
        });
        total_tokens += tokens;
        i += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokens::HeuristicTokenCounter;
    use crate::relational::{Column, Value, ValueKind};

    fn things_table(n: usize) -> Table {
        let mut t = Table::new(
            "things",
            vec![
                Column {
                    name: "name".into(),
                    kind: ValueKind::Text,
                    required: true,
                },
                Column {
                    name: "size".into(),
                    kind: ValueKind::Integer,
                    required: true,
                },
            ],
        );
        for i in 0..n {
            t.rows
                .push(vec![Value::Text(format!("thing{i}")), Value::Integer(i as i64)]);
        }
        t
    }

    fn library() -> TemplateLibrary {
        let mut map = BTreeMap::new();
        map.insert(
            "things".to_string(),
            vec![
                "The {name} has size {size}.".to_string(),
                "A {name} measuring {size} units.".to_string(),
                "Item {name} comes in at {size}.".to_string(),
            ],
        );
        TemplateLibrary::from_map(map)
    }

    #[test]
    fn zero_budget_yields_empty() {
        let t = things_table(5);
        let out =
            sample_documents(&[&t], 0, &library(), &HeuristicTokenCounter, 7).unwrap();
        assert!(out.documents.is_empty());
    }

    #[test]
    fn same_seed_is_identical() {
        let t = things_table(40);
        let a = sample_documents(&[&t], 120, &library(), &HeuristicTokenCounter, 99).unwrap();
        let b = sample_documents(&[&t], 120, &library(), &HeuristicTokenCounter, 99).unwrap();
        assert_eq!(a, b);
        let c = sample_documents(&[&t], 120, &library(), &HeuristicTokenCounter, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn budget_boundary_is_tight() {
        let t = things_table(60);
        let budget = 150;
        let out =
            sample_documents(&[&t], budget, &library(), &HeuristicTokenCounter, 3).unwrap();
        let sum: usize = out.documents.iter().map(|d| d.tokens).sum();
        assert_eq!(sum, out.total_tokens);
        assert!(sum <= budget);
        match out.stop {
            StopReason::BudgetReached { next_tokens } => {
                assert!(sum + next_tokens > budget, "stopped early: {sum} + {next_tokens}");
            }
            StopReason::PoolExhausted => panic!("pool should outlast this budget"),
        }
    }

    #[test]
    fn rows_drawn_without_replacement() {
        let t = things_table(25);
        let out =
            sample_documents(&[&t], 10_000, &library(), &HeuristicTokenCounter, 5).unwrap();
        assert_eq!(out.stop, StopReason::PoolExhausted);
        let mut seen = BTreeSet::new();
        for d in &out.documents {
            match &d.source {
                DocSource::Row { row, .. } => assert!(seen.insert(*row), "row {row} repeated"),
                DocSource::Dummy { .. } => panic!("no dummies expected"),
            }
        }
        assert_eq!(seen.len(), 25);
    }

    #[test]
    fn infeasible_budget_is_reported() {
        let t = things_table(5);
        let err = sample_documents(&[&t], 2, &library(), &HeuristicTokenCounter, 1).unwrap_err();
        assert!(matches!(err, CorpusError::BudgetInfeasible { budget: 2, .. }));
    }

    #[test]
    fn template_variants_rotate() {
        let t = things_table(30);
        let out =
            sample_documents(&[&t], 10_000, &library(), &HeuristicTokenCounter, 11).unwrap();
        let starts: BTreeSet<String> = out
            .documents
            .iter()
            .map(|d| d.text.split_whitespace().next().unwrap_or("").to_string())
            .collect();
        // Three variants with distinct leading words all appear.
        assert_eq!(starts.len(), 3, "saw starts: {starts:?}");
    }

    #[test]
    fn fk_preference_connects_parent_and_child() {
        let mut parents = Table::new(
            "airlines",
            vec![Column {
                name: "airline".into(),
                kind: ValueKind::Text,
                required: true,
            }],
        );
        for i in 0..8 {
            parents.rows.push(vec![Value::Text(format!("AL{i}"))]);
        }
        let mut children = Table::new(
            "routes",
            vec![
                Column {
                    name: "airline".into(),
                    kind: ValueKind::Text,
                    required: true,
                },
                Column {
                    name: "dst".into(),
                    kind: ValueKind::Text,
                    required: true,
                },
            ],
        );
        // Each airline gets 6 routes.
        for i in 0..8 {
            for j in 0..6 {
                children
                    .rows
                    .push(vec![Value::Text(format!("AL{i}")), Value::Text(format!("D{j}"))]);
            }
        }
        let fks = vec![ForeignKey {
            child_table: "routes".into(),
            child_column: "airline".into(),
            parent_table: "airlines".into(),
            parent_column: "airline".into(),
        }];
        let mut map = BTreeMap::new();
        map.insert("airlines".into(), vec!["Carrier {airline} operates.".into()]);
        map.insert("routes".into(), vec!["{airline} flies to {dst}.".into()]);
        let lib = TemplateLibrary::from_map(map);

        for seed in 0..20 {
            let out = sample_relevant_documents(
                &[&parents, &children],
                &fks,
                60,
                &lib,
                &HeuristicTokenCounter,
                seed,
            )
            .unwrap();
            let sampled_parents: BTreeSet<String> = out
                .documents
                .iter()
                .filter_map(|d| match &d.source {
                    DocSource::Row { table, row } if table == "airlines" => {
                        Some(match &parents.rows[*row][0] {
                            Value::Text(t) => t.clone(),
                            _ => unreachable!(),
                        })
                    }
                    _ => None,
                })
                .collect();
            let child_rows: Vec<&String> = out
                .documents
                .iter()
                .filter_map(|d| match &d.source {
                    DocSource::Row { table, row } if table == "routes" => {
                        Some(match &children.rows[*row][0] {
                            Value::Text(t) => t,
                            _ => unreachable!(),
                        })
                    }
                    _ => None,
                })
                .collect();
            if child_rows.is_empty() {
                continue;
            }
            // A parent is seeded before any child, and the sampled
            // subtables always join non-trivially: at least one child row
            // references a sampled parent. (Children may fall back to
            // unconstrained rows once the preferred pool is exhausted.)
            assert!(!sampled_parents.is_empty(), "seed {seed}: no parent seeded");
            assert!(
                child_rows.iter().any(|a| sampled_parents.contains(*a)),
                "seed {seed}: join between sampled subtables is empty"
            );
        }
    }

    #[test]
    fn dummy_cycling_repeats_pool_in_order() {
        let pool = vec!["alpha beta gamma".to_string(), "delta epsilon".to_string()];
        let out = cycle_dummy_documents(&pool, 30, &HeuristicTokenCounter);
        assert!(out.total_tokens <= 30);
        let indices: Vec<usize> = out
            .documents
            .iter()
            .map(|d| match d.source {
                DocSource::Dummy { dummy } => dummy,
                _ => panic!("expected dummy"),
            })
            .collect();
        for (i, idx) in indices.iter().enumerate() {
            assert_eq!(*idx, i % pool.len());
        }
        assert!(out.documents.len() > pool.len(), "should cycle");
    }
}
