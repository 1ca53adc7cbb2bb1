//! Model gateway: prompts, endpoint client, retrieval baseline, mocks,
//! and the model-backed judge.

mod client;
mod judge_model;
mod prompt;
mod retrieve;
mod run;

pub use client::{query_model, EndpointConfig, GatewayError, ModelResponse, RateLimiter};
pub use judge_model::ModelJudge;
pub use prompt::{
    extract_answer, extract_reasoning, render_prompt, ExtractedAnswer, PromptMode, ANSWER_MARKER,
    COT_NO_REASONING_TEMPLATE, COT_TEMPLATE, DIRECT_TEMPLATE, JUDGE_TEMPLATE, NO_ANSWER_SENTINEL,
    REASONING_MARKER,
};
pub use retrieve::{
    retrieval_metrics, retrieve, EmbeddingEndpointRetriever, LexicalRetriever, RetrievedContext,
    Retriever,
};
pub use run::{
    prompt_hash, run_instances, ModelBackend, RetrievalInfo, RetrievalSettings, RunRecord,
};
