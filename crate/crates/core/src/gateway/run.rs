//! Instance fan-out: renders prompts, drives the backend with a bounded
//! worker pool, and captures request/response records for offline judging.

use super::client::{query_model, EndpointConfig, GatewayError, ModelResponse, RateLimiter};
use super::prompt::{render_prompt, PromptMode};
use super::retrieve::{retrieval_metrics, retrieve, RetrievedContext, Retriever};
use crate::corpus::{BenchmarkInstance, TokenCounter};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// What answers the prompts: a real chat-completion endpoint or one of
/// the built-in mocks used by tests and dry runs. `mock:gold` answers by
/// listing the gold rows verbatim; `mock:no-answer` always abstains.
pub enum ModelBackend {
    Http(Box<EndpointConfig>),
    MockGoldEcho,
    MockNoAnswer,
}

impl ModelBackend {
    pub fn parse(endpoint: &str, model: &str) -> ModelBackend {
        match endpoint {
            "mock:gold" => ModelBackend::MockGoldEcho,
            "mock:no-answer" => ModelBackend::MockNoAnswer,
            url => ModelBackend::Http(Box::new(EndpointConfig::new(url, model))),
        }
    }

    pub fn model_name(&self) -> String {
        match self {
            ModelBackend::Http(cfg) => cfg.model.clone(),
            ModelBackend::MockGoldEcho => "mock:gold".into(),
            ModelBackend::MockNoAnswer => "mock:no-answer".into(),
        }
    }
}

/// Retrieval baseline settings applied before prompting.
pub struct RetrievalSettings<'a> {
    pub token_budget: usize,
    pub retriever: &'a dyn Retriever,
}

/// One line of a run file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance_id: String,
    pub model: String,
    pub mode: String,
    pub prompt_hash: String,
    pub raw_response: String,
    pub answer: String,
    pub no_answer: bool,
    pub attempts: u32,
    pub latency_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrieval: Option<RetrievalInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalInfo {
    pub retriever: String,
    pub token_budget: usize,
    pub kept_lines: usize,
    pub kept_tokens: usize,
    pub precision: f64,
    pub recall: f64,
}

pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// Runs every instance against the backend with at most `concurrency`
/// in-flight requests. Records come back in instance order; the first
/// failure aborts the run so partial output is never mistaken for a
/// complete one.
pub fn run_instances(
    instances: &[BenchmarkInstance],
    backend: &ModelBackend,
    mode: PromptMode,
    reasoning_model: bool,
    retrieval: Option<&RetrievalSettings<'_>>,
    concurrency: usize,
    counter: &dyn TokenCounter,
) -> Result<Vec<RunRecord>, GatewayError> {
    if let ModelBackend::Http(cfg) = backend {
        cfg.validate()?;
    }
    let limiter = match backend {
        ModelBackend::Http(cfg) => cfg.requests_per_second.map(RateLimiter::new),
        _ => None,
    };

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<RunRecord, GatewayError>>>> =
        Mutex::new((0..instances.len()).map(|_| None).collect());
    let workers = concurrency.max(1).min(instances.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= instances.len() {
                    break;
                }
                let record = run_one(
                    &instances[i],
                    backend,
                    mode,
                    reasoning_model,
                    retrieval,
                    limiter.as_ref(),
                    counter,
                );
                results.lock().expect("results lock")[i] = Some(record);
            });
        }
    });

    let mut out = Vec::with_capacity(instances.len());
    for slot in results.into_inner().expect("results lock") {
        out.push(slot.expect("worker filled every slot")?);
    }
    Ok(out)
}

fn run_one(
    instance: &BenchmarkInstance,
    backend: &ModelBackend,
    mode: PromptMode,
    reasoning_model: bool,
    retrieval: Option<&RetrievalSettings<'_>>,
    limiter: Option<&RateLimiter>,
    counter: &dyn TokenCounter,
) -> Result<RunRecord, GatewayError> {
    let (context, retrieval_info) = match retrieval {
        None => (instance.context.clone(), None),
        Some(settings) => {
            let RetrievedContext {
                text,
                kept_lines,
                kept_tokens,
            } = retrieve(
                &instance.provenance.documents,
                &instance.query.question,
                settings.token_budget,
                settings.retriever,
                counter,
            )?;
            let (precision, recall) =
                retrieval_metrics(&kept_lines, &instance.provenance.relevant_lines());
            (
                text,
                Some(RetrievalInfo {
                    retriever: settings.retriever.kind().to_string(),
                    token_budget: settings.token_budget,
                    kept_lines: kept_lines.len(),
                    kept_tokens,
                    precision,
                    recall,
                }),
            )
        }
    };

    let prompt = render_prompt(&context, &instance.query.question, mode, reasoning_model);
    let response = match backend {
        ModelBackend::Http(cfg) => {
            if let Some(limiter) = limiter {
                limiter.wait();
            }
            query_model(&prompt, cfg)?
        }
        ModelBackend::MockGoldEcho => mock_response(mode, gold_echo_answer(instance)),
        ModelBackend::MockNoAnswer => mock_response(mode, "No answer.".to_string()),
    };

    Ok(RunRecord {
        instance_id: instance.instance_id.clone(),
        model: backend.model_name(),
        mode: mode.to_string(),
        prompt_hash: prompt_hash(&prompt),
        raw_response: response.raw.clone(),
        answer: response.answer,
        no_answer: response.no_answer,
        attempts: response.attempts,
        latency_ms: response.latency_ms,
        retrieval: retrieval_info,
    })
}

/// Lists gold rows verbatim: cells comma-joined, rows on separate lines.
/// An empty gold produces the abstention sentinel.
fn gold_echo_answer(instance: &BenchmarkInstance) -> String {
    if instance.gold.rows.is_empty() {
        return "No answer.".to_string();
    }
    instance
        .gold
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| v.render())
                .collect::<Vec<_>>()
                .join(", ")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn mock_response(mode: PromptMode, answer: String) -> ModelResponse {
    let raw = match mode {
        PromptMode::CoT => format!(
            "- **Reasoning:**\n  - Collected the matching records from the sentences.\n- **Answer:** {answer}"
        ),
        PromptMode::Direct => format!("- **Answer:** {answer}"),
    };
    ModelResponse::from_raw(raw, 1, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{
        CorpusConfig, HeuristicTokenCounter, InfoSpec, InstanceBuilder, PositionStrategy,
        TemplateLibrary,
    };
    use crate::eval::{score_instance, DeterministicJudge, RowJudge};
    use crate::relational::{Column, Database, Table, Value, ValueKind};
    use crate::sql::{analyze, SuiteRecord};
    use std::collections::BTreeMap;

    fn fixture() -> (Database, TemplateLibrary) {
        let mut shapes = Table::new(
            "shapes",
            vec![
                Column {
                    name: "name".into(),
                    kind: ValueKind::Text,
                    required: true,
                },
                Column {
                    name: "sides".into(),
                    kind: ValueKind::Integer,
                    required: true,
                },
            ],
        );
        for (i, name) in ["triangle", "square", "pentagon", "hexagon", "circle"]
            .iter()
            .enumerate()
        {
            shapes
                .rows
                .push(vec![Value::Text(name.to_string()), Value::Integer(i as i64 + 3)]);
        }
        let mut colors = Table::new(
            "colors",
            vec![Column {
                name: "color".into(),
                kind: ValueKind::Text,
                required: true,
            }],
        );
        for c in ["red", "green", "blue", "cyan", "magenta", "yellow"] {
            colors.rows.push(vec![Value::Text(c.to_string())]);
        }
        let db = Database {
            name: "toy".into(),
            tables: vec![shapes, colors],
            foreign_keys: vec![],
            dummy_documents: (0..10).map(|i| format!("Filler fact number {i}.")).collect(),
        };
        let mut map = BTreeMap::new();
        map.insert(
            "shapes".into(),
            vec!["A {name} has {sides} sides by definition.".into()],
        );
        map.insert("colors".into(), vec!["The palette includes {color}.".into()]);
        (db, TemplateLibrary::from_map(map))
    }

    fn instance(db: &Database, templates: &TemplateLibrary) -> BenchmarkInstance {
        let builder = InstanceBuilder {
            db,
            templates,
            counter: &HeuristicTokenCounter,
        };
        let spec = analyze(&SuiteRecord {
            id: "q1".into(),
            database: "toy".into(),
            question: "Which shape has the most sides?".into(),
            sql: "SELECT name FROM shapes WHERE sides = (SELECT MAX(sides) FROM shapes)".into(),
            types: None,
            difficulty: None,
        })
        .unwrap();
        builder
            .build(
                &spec,
                &CorpusConfig {
                    context_tokens: 120,
                    info: InfoSpec::Density(0.5),
                    position: PositionStrategy::Uniform,
                    seed: 7,
                },
            )
            .unwrap()
    }

    #[test]
    fn gold_echo_mock_scores_perfectly_under_deterministic_judge() {
        let (db, templates) = fixture();
        let inst = instance(&db, &templates);
        let records = run_instances(
            std::slice::from_ref(&inst),
            &ModelBackend::MockGoldEcho,
            PromptMode::CoT,
            false,
            None,
            4,
            &HeuristicTokenCounter,
        )
        .unwrap();
        assert_eq!(records.len(), 1);
        let labels = DeterministicJudge
            .judge_rows(&inst.query.question, &records[0].answer, &inst.gold)
            .unwrap();
        assert_eq!(score_instance(&labels).unwrap(), 100.0);
    }

    #[test]
    fn no_answer_mock_scores_zero_on_nonempty_gold() {
        let (db, templates) = fixture();
        let inst = instance(&db, &templates);
        assert!(!inst.gold.rows.is_empty());
        let records = run_instances(
            std::slice::from_ref(&inst),
            &ModelBackend::MockNoAnswer,
            PromptMode::Direct,
            false,
            None,
            1,
            &HeuristicTokenCounter,
        )
        .unwrap();
        assert!(records[0].no_answer);
        let labels = DeterministicJudge
            .judge_rows(&inst.query.question, &records[0].answer, &inst.gold)
            .unwrap();
        assert_eq!(score_instance(&labels).unwrap(), 0.0);
    }

    #[test]
    fn records_preserve_instance_order_under_concurrency() {
        let (db, templates) = fixture();
        let inst = instance(&db, &templates);
        let mut batch = Vec::new();
        for i in 0..12 {
            let mut copy = inst.clone();
            copy.instance_id = format!("inst{i}");
            batch.push(copy);
        }
        let records = run_instances(
            &batch,
            &ModelBackend::MockGoldEcho,
            PromptMode::CoT,
            false,
            None,
            5,
            &HeuristicTokenCounter,
        )
        .unwrap();
        let ids: Vec<&str> = records.iter().map(|r| r.instance_id.as_str()).collect();
        let expected: Vec<String> = (0..12).map(|i| format!("inst{i}")).collect();
        assert_eq!(ids, expected.iter().map(String::as_str).collect::<Vec<_>>());
    }

    #[test]
    fn retrieval_settings_shrink_the_context() {
        let (db, templates) = fixture();
        let inst = instance(&db, &templates);
        let budget = inst.provenance.relevant_tokens;
        let settings = RetrievalSettings {
            token_budget: budget,
            retriever: &super::super::retrieve::LexicalRetriever,
        };
        let records = run_instances(
            std::slice::from_ref(&inst),
            &ModelBackend::MockGoldEcho,
            PromptMode::CoT,
            false,
            Some(&settings),
            1,
            &HeuristicTokenCounter,
        )
        .unwrap();
        let info = records[0].retrieval.as_ref().unwrap();
        assert!(info.kept_tokens <= budget);
        assert!(info.kept_lines < inst.provenance.documents.len());
        assert!(info.precision >= 0.0 && info.precision <= 1.0);
        assert!(info.recall >= 0.0 && info.recall <= 1.0);
    }
}
