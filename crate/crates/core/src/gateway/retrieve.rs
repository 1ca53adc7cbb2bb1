//! Retrieval baseline: pre-filter a context down to the highest-similarity
//! documents within a token budget before inference.

use super::client::{EndpointConfig, GatewayError};
use crate::corpus::{Document, TokenCounter};
use crate::eval::normalize;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::time::Duration;

/// Scores documents against a question. Higher is more similar; ties are
/// broken by original document order downstream.
pub trait Retriever: Sync {
    fn scores(&self, question: &str, documents: &[&str]) -> Result<Vec<f64>, GatewayError>;
    fn kind(&self) -> &'static str;
}

/// Term-overlap scorer: the number of unique normalized terms shared
/// between the question and the document.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalRetriever;

impl Retriever for LexicalRetriever {
    fn scores(&self, question: &str, documents: &[&str]) -> Result<Vec<f64>, GatewayError> {
        let q_terms: BTreeSet<String> = normalize(question)
            .split_whitespace()
            .map(String::from)
            .collect();
        Ok(documents
            .iter()
            .map(|d| {
                let d_terms: BTreeSet<String> = normalize(d)
                    .split_whitespace()
                    .map(String::from)
                    .collect();
                q_terms.intersection(&d_terms).count() as f64
            })
            .collect())
    }

    fn kind(&self) -> &'static str {
        "lexical"
    }
}

/// Client for an embeddings endpoint (`/embeddings`, OpenAI wire shape);
/// scores are cosine similarities between the question and each document.
pub struct EmbeddingEndpointRetriever {
    pub endpoint: EndpointConfig,
}

#[derive(Serialize)]
struct EmbeddingRequest<'a> {
    model: &'a str,
    input: Vec<&'a str>,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingRow>,
}

#[derive(Deserialize)]
struct EmbeddingRow {
    embedding: Vec<f64>,
}

impl EmbeddingEndpointRetriever {
    fn embeddings_url(&self) -> String {
        let base = self.endpoint.base_url.trim_end_matches('/');
        if base.ends_with("/embeddings") {
            base.to_string()
        } else {
            format!("{base}/embeddings")
        }
    }
}

impl Retriever for EmbeddingEndpointRetriever {
    fn scores(&self, question: &str, documents: &[&str]) -> Result<Vec<f64>, GatewayError> {
        let url = self.embeddings_url();
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(self.endpoint.timeout_secs))
            .build()
            .map_err(|e| GatewayError::InvalidEndpoint(e.to_string()))?;

        let mut input = Vec::with_capacity(documents.len() + 1);
        input.push(question);
        input.extend_from_slice(documents);
        let body = EmbeddingRequest {
            model: &self.endpoint.model,
            input,
        };

        let max_attempts = self.endpoint.max_retries.saturating_add(1);
        let mut last_error = String::new();
        for attempt in 1..=max_attempts {
            if attempt > 1 {
                let backoff = self
                    .endpoint
                    .initial_backoff_ms
                    .saturating_mul(1 << (attempt - 2).min(16));
                std::thread::sleep(Duration::from_millis(backoff));
            }
            match client.post(&url).json(&body).send() {
                Ok(response) if response.status().is_success() => {
                    let parsed: EmbeddingResponse = response
                        .json()
                        .map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
                    if parsed.data.len() != documents.len() + 1 {
                        return Err(GatewayError::MalformedResponse(format!(
                            "expected {} embeddings, got {}",
                            documents.len() + 1,
                            parsed.data.len()
                        )));
                    }
                    let q = &parsed.data[0].embedding;
                    return Ok(parsed.data[1..]
                        .iter()
                        .map(|row| cosine(q, &row.embedding))
                        .collect());
                }
                Ok(response) => {
                    let status = response.status();
                    let text = response.text().unwrap_or_default();
                    if status.as_u16() != 429 && !status.is_server_error() {
                        return Err(GatewayError::EndpointRejected {
                            status: status.as_u16(),
                            body: text,
                        });
                    }
                    last_error = format!("status {status}: {text}");
                }
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(GatewayError::RetriesExhausted {
            url,
            attempts: max_attempts,
            last_error,
        })
    }

    fn kind(&self) -> &'static str {
        "endpoint"
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// The reduced context: admitted documents re-emitted in their original
/// order, with their line indices retained for precision/recall metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievedContext {
    pub text: String,
    pub kept_lines: Vec<usize>,
    pub kept_tokens: usize,
}

/// Greedy budget-constrained retrieval: documents are ranked by
/// descending score (ties keep original order), admitted until the next
/// one would cross the budget, then re-emitted in context order.
pub fn retrieve(
    documents: &[Document],
    question: &str,
    token_budget: usize,
    retriever: &dyn Retriever,
    counter: &dyn TokenCounter,
) -> Result<RetrievedContext, GatewayError> {
    let texts: Vec<&str> = documents.iter().map(|d| d.text.as_str()).collect();
    let scores = retriever.scores(question, &texts)?;

    let mut order: Vec<usize> = (0..documents.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut kept = Vec::new();
    let mut kept_tokens = 0usize;
    for idx in order {
        let tokens = if documents[idx].tokens > 0 {
            documents[idx].tokens
        } else {
            counter.count(&documents[idx].text)
        };
        if kept_tokens + tokens > token_budget {
            break;
        }
        kept.push(idx);
        kept_tokens += tokens;
    }
    if kept.is_empty() {
        return Err(GatewayError::RetrievalBudgetInfeasible {
            budget: token_budget,
        });
    }
    kept.sort_unstable();
    let text = kept
        .iter()
        .map(|&i| documents[i].text.as_str())
        .collect::<Vec<_>>()
        .join("\n");
    Ok(RetrievedContext {
        text,
        kept_lines: kept,
        kept_tokens,
    })
}

/// Precision and recall of a retrieved line set against the provenance
/// relevance flags.
pub fn retrieval_metrics(kept_lines: &[usize], relevant_lines: &[usize]) -> (f64, f64) {
    if kept_lines.is_empty() {
        return (0.0, if relevant_lines.is_empty() { 1.0 } else { 0.0 });
    }
    let relevant: BTreeSet<usize> = relevant_lines.iter().copied().collect();
    let hits = kept_lines.iter().filter(|l| relevant.contains(l)).count() as f64;
    let precision = hits / kept_lines.len() as f64;
    let recall = if relevant.is_empty() {
        1.0
    } else {
        hits / relevant.len() as f64
    };
    (precision, recall)
}
