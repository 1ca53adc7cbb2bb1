//! Line-delimited instance file records: the serialized form of a
//! [`BenchmarkInstance`], bit-exact reproducible from (manifest, suite,
//! config, seed).

use super::instance::{BenchmarkInstance, CorpusConfig, InfoSpec, Provenance};
use super::position::PositionStrategy;
use super::CorpusError;
use crate::exec::ResultSet;
use crate::relational::Value;
use crate::sql::{analyze, SuiteRecord};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub ordered: bool,
}

impl From<&ResultSet> for GoldRecord {
    fn from(rs: &ResultSet) -> Self {
        GoldRecord {
            columns: rs.columns.clone(),
            rows: rs.rows.clone(),
            ordered: rs.ordered,
        }
    }
}

impl From<GoldRecord> for ResultSet {
    fn from(g: GoldRecord) -> Self {
        ResultSet {
            columns: g.columns,
            rows: g.rows,
            ordered: g.ordered,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub instance_id: String,
    pub database: String,
    pub query_id: String,
    pub question: String,
    pub sql: String,
    pub types: Vec<String>,
    pub difficulty: String,
    pub position: String,
    pub context_tokens: usize,
    pub info_tokens: usize,
    /// Present when the info budget was given as a density fraction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    pub seed: u64,
    pub context: String,
    pub gold: GoldRecord,
    pub provenance: Provenance,
}

impl InstanceRecord {
    pub fn from_instance(instance: &BenchmarkInstance) -> InstanceRecord {
        InstanceRecord {
            instance_id: instance.instance_id.clone(),
            database: instance.query.database.clone(),
            query_id: instance.query.id.clone(),
            question: instance.query.question.clone(),
            sql: instance.query.sql.clone(),
            types: instance.query.types.iter().map(|t| t.to_string()).collect(),
            difficulty: instance.query.difficulty.to_string(),
            position: instance.config.position.to_string(),
            context_tokens: instance.config.context_tokens,
            info_tokens: instance.config.resolved_info_tokens(),
            density: instance.config.density(),
            seed: instance.config.seed,
            context: instance.context.clone(),
            gold: GoldRecord::from(&instance.gold),
            provenance: instance.provenance.clone(),
        }
    }

    /// Rehydrates the in-memory instance (the query is re-analyzed from
    /// its SQL text).
    pub fn to_instance(&self) -> Result<BenchmarkInstance, CorpusError> {
        let spec = analyze(&SuiteRecord {
            id: self.query_id.clone(),
            database: self.database.clone(),
            question: self.question.clone(),
            sql: self.sql.clone(),
            types: None,
            difficulty: None,
        })
        .map_err(|e| CorpusError::InvalidConfig(format!("instance {}: {e}", self.instance_id)))?;
        let position = match self.position.as_str() {
            "uniform" => PositionStrategy::Uniform,
            "beginning" => PositionStrategy::Beginning,
            "middle" => PositionStrategy::Middle,
            "end" => PositionStrategy::End,
            "bimodal" => PositionStrategy::Bimodal,
            other => {
                return Err(CorpusError::InvalidConfig(format!(
                    "unknown position `{other}`"
                )));
            }
        };
        let info = match self.density {
            Some(d) => InfoSpec::Density(d),
            None => InfoSpec::Amount(self.info_tokens),
        };
        Ok(BenchmarkInstance {
            instance_id: self.instance_id.clone(),
            query: spec,
            context: self.context.clone(),
            gold: self.gold.clone().into(),
            config: CorpusConfig {
                context_tokens: self.context_tokens,
                info,
                position,
                seed: self.seed,
            },
            provenance: self.provenance.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DocSource, Document};
    use std::collections::BTreeMap;

    #[test]
    fn record_round_trips_through_json() {
        let record = InstanceRecord {
            instance_id: "q1_c100_a50_uniform_s7".into(),
            database: "toy".into(),
            query_id: "q1".into(),
            question: "What is the largest size?".into(),
            sql: "SELECT MAX(size) FROM things".into(),
            types: vec!["Max/Min".into()],
            difficulty: "Easy".into(),
            position: "uniform".into(),
            context_tokens: 100,
            info_tokens: 50,
            density: None,
            seed: 7,
            context: "The widget has size 3.\nFiller line.".into(),
            gold: GoldRecord {
                columns: vec!["MAX(size)".into()],
                rows: vec![vec![Value::Integer(3)]],
                ordered: false,
            },
            provenance: Provenance {
                rows: BTreeMap::from([("things".to_string(), vec![0usize])]),
                relevant_tokens: 6,
                irrelevant_tokens: 3,
                total_tokens: 9,
                documents: vec![
                    Document {
                        text: "The widget has size 3.".into(),
                        source: DocSource::Row {
                            table: "things".into(),
                            row: 0,
                        },
                        relevant: true,
                        tokens: 6,
                    },
                    Document {
                        text: "Filler line.".into(),
                        source: DocSource::Dummy { dummy: 0 },
                        relevant: false,
                        tokens: 3,
                    },
                ],
                resamples: 0,
            },
        };
        let line = serde_json::to_string(&record).unwrap();
        let parsed: InstanceRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(parsed, record);

        let instance = parsed.to_instance().unwrap();
        assert_eq!(instance.instance_id, record.instance_id);
        assert_eq!(InstanceRecord::from_instance(&instance), record);
    }
}
