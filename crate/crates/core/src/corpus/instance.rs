//! Benchmark-instance assembly: partition tables, sample to budgets,
//! position documents, and bind the gold answer computed on exactly the
//! sampled subtables.

use super::position::{assemble_context, relevant_indices, PositionStrategy};
use super::sample::{
    cycle_dummy_documents, sample_documents, sample_relevant_documents, DocSource, Document,
};
use super::template::TemplateLibrary;
use super::tokens::TokenCounter;
use super::CorpusError;
use crate::exec::{execute, ResultSet};
use crate::relational::{Database, Table};
use crate::sql::QuerySpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

/// Token budget for the relevant side: an absolute amount or a fraction
/// of the context budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfoSpec {
    Amount(usize),
    Density(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub context_tokens: usize,
    pub info: InfoSpec,
    pub position: PositionStrategy,
    pub seed: u64,
}

impl CorpusConfig {
    pub fn resolved_info_tokens(&self) -> usize {
        match self.info {
            InfoSpec::Amount(t) => t,
            InfoSpec::Density(d) => ((self.context_tokens as f64) * d).round() as usize,
        }
    }

    pub fn density(&self) -> Option<f64> {
        match self.info {
            InfoSpec::Amount(_) => None,
            InfoSpec::Density(d) => Some(d),
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.context_tokens == 0 {
            return Err(CorpusError::InvalidConfig("context budget is zero".into()));
        }
        if let InfoSpec::Density(d) = self.info {
            if !(d > 0.0 && d <= 1.0) {
                return Err(CorpusError::InvalidConfig(format!(
                    "density {d} outside (0, 1]"
                )));
            }
        }
        let info = self.resolved_info_tokens();
        if info == 0 || info > self.context_tokens {
            return Err(CorpusError::InvalidConfig(format!(
                "resolved info budget {info} outside (0, {}]",
                self.context_tokens
            )));
        }
        Ok(())
    }
}

/// Everything needed to reproduce or audit an instance: which rows were
/// sampled, where the dummies came from, realized token counts, and the
/// merged per-document layout (line index = document index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Sampled relevant row ids per table, ascending (original row order).
    pub rows: BTreeMap<String, Vec<usize>>,
    pub relevant_tokens: usize,
    pub irrelevant_tokens: usize,
    pub total_tokens: usize,
    /// Merged document stream, one context line each.
    pub documents: Vec<Document>,
    /// How many fresh-seed resamples were needed before a non-empty gold
    /// (0 = first try; capped, after which an empty gold stands).
    pub resamples: u32,
}

impl Provenance {
    pub fn relevant_lines(&self) -> Vec<usize> {
        relevant_indices(&self.documents)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkInstance {
    pub instance_id: String,
    pub query: QuerySpec,
    pub context: String,
    pub gold: ResultSet,
    pub config: CorpusConfig,
    pub provenance: Provenance,
}

/// Splits the database into query-referenced tables and the remainder.
pub fn partition_tables<'a>(
    db: &'a Database,
    spec: &QuerySpec,
) -> Result<(Vec<&'a Table>, Vec<&'a Table>), CorpusError> {
    let referenced = spec.referenced_tables();
    for name in &referenced {
        if db.table(name).is_none() {
            return Err(CorpusError::UnknownTable(name.clone()));
        }
    }
    let mut relevant = Vec::new();
    let mut irrelevant = Vec::new();
    for table in &db.tables {
        if referenced.contains(&table.name.to_ascii_lowercase()) {
            relevant.push(table);
        } else {
            irrelevant.push(table);
        }
    }
    Ok((relevant, irrelevant))
}

/// Derives a sub-seed from a parent seed and a role tag.
pub fn derive_seed(seed: u64, tag: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(tag.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is long enough"))
}

/// Builds instances for one database: holds the preprocessed database,
/// its template library, and the token counter.
pub struct InstanceBuilder<'a> {
    pub db: &'a Database,
    pub templates: &'a TemplateLibrary,
    pub counter: &'a dyn TokenCounter,
}

/// Retries with fresh derived seeds before accepting an empty gold.
const EMPTY_GOLD_RESAMPLES: u32 = 5;

impl<'a> InstanceBuilder<'a> {
    /// Builds one instance. Deterministic: identical (db, spec, config)
    /// produce an identical instance.
    pub fn build(
        &self,
        spec: &QuerySpec,
        config: &CorpusConfig,
    ) -> Result<BenchmarkInstance, CorpusError> {
        config.validate()?;
        let (dq, dnq) = partition_tables(self.db, spec)?;
        self.templates.validate_against(&dq)?;
        self.templates.validate_against(&dnq)?;

        let info_budget = config.resolved_info_tokens();

        // Sample the relevant side; resample with fresh derived seeds if
        // the gold comes back empty. An instance whose gold stays empty
        // after the retries is kept: its correct answer is "No answer".
        let mut attempt = 0u32;
        let (relevant, gold) = loop {
            let attempt_seed = if attempt == 0 {
                config.seed
            } else {
                derive_seed(config.seed, &format!("resample{attempt}"))
            };
            let outcome = sample_relevant_documents(
                &dq,
                &self.db.foreign_keys,
                info_budget,
                self.templates,
                self.counter,
                derive_seed(attempt_seed, "relevant"),
            )?;
            let subdb = subtable_database(self.db, &dq, &outcome.documents);
            let gold = execute(&spec.ast, &subdb)?;
            if !gold.rows.is_empty() || attempt >= EMPTY_GOLD_RESAMPLES {
                break (outcome, gold);
            }
            attempt += 1;
        };

        // The irrelevant side fills the remaining context budget; when the
        // query touches every table the dummy pool takes over.
        let irrelevant_budget = config.context_tokens - relevant.total_tokens;
        let irrelevant = if dnq.is_empty() {
            if self.db.dummy_documents.len() < 10 {
                return Err(CorpusError::DummyPoolTooSmall {
                    have: self.db.dummy_documents.len(),
                });
            }
            cycle_dummy_documents(&self.db.dummy_documents, irrelevant_budget, self.counter)
        } else {
            match sample_documents(
                &dnq,
                irrelevant_budget,
                self.templates,
                self.counter,
                derive_seed(config.seed, "irrelevant"),
            ) {
                Ok(outcome) => outcome,
                // A sliver of leftover budget that fits no document just
                // means an all-relevant context.
                Err(CorpusError::BudgetInfeasible { .. }) => cycle_dummy_documents(
                    &[],
                    0,
                    self.counter,
                ),
                Err(e) => return Err(e),
            }
        };

        let assembled = assemble_context(
            &relevant.documents,
            &irrelevant.documents,
            config.position,
            derive_seed(config.seed, "assemble"),
        )
        .map_err(|_| CorpusError::NoRelevantDocuments)?;

        let mut rows: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for doc in &relevant.documents {
            if let DocSource::Row { table, row } = &doc.source {
                rows.entry(table.clone()).or_default().push(*row);
            }
        }
        for ids in rows.values_mut() {
            ids.sort_unstable();
        }

        let provenance = Provenance {
            rows,
            relevant_tokens: relevant.total_tokens,
            irrelevant_tokens: irrelevant.total_tokens,
            total_tokens: relevant.total_tokens + irrelevant.total_tokens,
            documents: assembled.documents,
            resamples: attempt,
        };

        Ok(BenchmarkInstance {
            instance_id: instance_id(spec, config),
            query: spec.clone(),
            context: assembled.text,
            gold,
            config: *config,
            provenance,
        })
    }

    /// Rebuilds the sampled subtable database from provenance row ids and
    /// re-executes the query; used to audit gold consistency.
    pub fn reexecute_from_provenance(
        &self,
        spec: &QuerySpec,
        provenance: &Provenance,
    ) -> Result<ResultSet, CorpusError> {
        let (dq, _) = partition_tables(self.db, spec)?;
        let mut tables = Vec::new();
        for table in &dq {
            let mut copy = Table::new(table.name.clone(), table.columns.clone());
            if let Some(ids) = provenance.rows.get(&table.name) {
                for &id in ids {
                    copy.rows.push(table.rows[id].clone());
                }
            }
            tables.push(copy);
        }
        let subdb = Database {
            name: self.db.name.clone(),
            tables,
            foreign_keys: self.db.foreign_keys.clone(),
            dummy_documents: Vec::new(),
        };
        Ok(execute(&spec.ast, &subdb)?)
    }
}

fn instance_id(spec: &QuerySpec, config: &CorpusConfig) -> String {
    let info = match config.info {
        InfoSpec::Amount(t) => format!("a{t}"),
        InfoSpec::Density(d) => format!("d{d}"),
    };
    format!(
        "{}_c{}_{}_{}_s{}",
        spec.id, config.context_tokens, info, config.position, config.seed
    )
}

/// A database holding exactly the sampled relevant rows, in original row
/// order, with empty versions of referenced-but-unsampled tables.
fn subtable_database(db: &Database, dq: &[&Table], sampled: &[Document]) -> Database {
    let mut picked: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for doc in sampled {
        if let DocSource::Row { table, row } = &doc.source {
            picked
                .entry(table.to_ascii_lowercase())
                .or_default()
                .push(*row);
        }
    }
    let mut tables = Vec::new();
    for table in dq {
        let mut copy = Table::new(table.name.clone(), table.columns.clone());
        if let Some(ids) = picked.get_mut(&table.name.to_ascii_lowercase()) {
            ids.sort_unstable();
            for &id in ids.iter() {
                copy.rows.push(table.rows[id].clone());
            }
        }
        tables.push(copy);
    }
    Database {
        name: db.name.clone(),
        tables,
        foreign_keys: db.foreign_keys.clone(),
        dummy_documents: Vec::new(),
    }
}
