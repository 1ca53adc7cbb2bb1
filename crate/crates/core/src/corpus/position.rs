//! Merging relevant and irrelevant document streams under a positioning
//! strategy.
//!
//! Beginning/Middle/End place the relevant block contiguously; Bimodal
//! splits it across both ends (head gets the ceiling half); Uniform
//! spreads relevant documents at evenly rounded slots so consecutive
//! relevant indices never drift apart by more than one extra position.

use super::sample::Document;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PositionStrategy {
    Uniform,
    Beginning,
    Middle,
    End,
    Bimodal,
}

impl PositionStrategy {
    pub const ALL: [PositionStrategy; 5] = [
        PositionStrategy::Uniform,
        PositionStrategy::Beginning,
        PositionStrategy::Middle,
        PositionStrategy::End,
        PositionStrategy::Bimodal,
    ];
}

impl fmt::Display for PositionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PositionStrategy::Uniform => "uniform",
            PositionStrategy::Beginning => "beginning",
            PositionStrategy::Middle => "middle",
            PositionStrategy::End => "end",
            PositionStrategy::Bimodal => "bimodal",
        })
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("cannot assemble a context without relevant documents")]
pub struct NoRelevantDocuments;

/// The merged context: newline-joined text plus the merged document order,
/// which callers use for provenance and retrieval boundaries.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledContext {
    pub text: String,
    pub documents: Vec<Document>,
}

/// Merges the two streams. Relevant documents are shuffled with the seed
/// first (their internal order is not meaningful), then placed according
/// to the strategy. Documents are joined by a single newline.
pub fn assemble_context(
    relevant: &[Document],
    irrelevant: &[Document],
    position: PositionStrategy,
    seed: u64,
) -> Result<AssembledContext, NoRelevantDocuments> {
    if relevant.is_empty() {
        return Err(NoRelevantDocuments);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut relevant: Vec<Document> = relevant.to_vec();
    relevant.shuffle(&mut rng);
    let irrelevant: Vec<Document> = irrelevant.to_vec();

    let documents = if irrelevant.is_empty() {
        relevant
    } else {
        merge(relevant, irrelevant, position)
    };

    let text = documents
        .iter()
        .map(|d| d.text.as_str())
        .collect::<Vec<_>>()
        .join("\n");
    Ok(AssembledContext { text, documents })
}

fn merge(
    relevant: Vec<Document>,
    irrelevant: Vec<Document>,
    position: PositionStrategy,
) -> Vec<Document> {
    let r = relevant.len();
    let i = irrelevant.len();
    let n = r + i;
    let mut out = Vec::with_capacity(n);
    match position {
        PositionStrategy::Beginning => {
            out.extend(relevant);
            out.extend(irrelevant);
        }
        PositionStrategy::End => {
            out.extend(irrelevant);
            out.extend(relevant);
        }
        PositionStrategy::Middle => {
            // Odd irrelevant split puts the extra document in front.
            let before = i.div_ceil(2);
            let mut irr = irrelevant.into_iter();
            out.extend(irr.by_ref().take(before));
            out.extend(relevant);
            out.extend(irr);
        }
        PositionStrategy::Bimodal => {
            let head = r.div_ceil(2);
            let mut rel = relevant.into_iter();
            out.extend(rel.by_ref().take(head));
            out.extend(irrelevant);
            out.extend(rel);
        }
        PositionStrategy::Uniform => {
            // Relevant document k (1-based) sits at merged position
            // round(k * n / (r + 1)), 1-based; rounding keeps consecutive
            // gaps within one of each other.
            let mut slots = std::collections::BTreeSet::new();
            for k in 1..=r {
                let pos = (2 * k * n + (r + 1)) / (2 * (r + 1));
                slots.insert(pos.clamp(1, n));
            }
            debug_assert_eq!(slots.len(), r);
            let mut rel = relevant.into_iter();
            let mut irr = irrelevant.into_iter();
            for pos in 1..=n {
                if slots.contains(&pos) {
                    out.push(rel.next().expect("slot count equals relevant count"));
                } else {
                    out.push(irr.next().expect("remaining slots are irrelevant"));
                }
            }
        }
    }
    out
}

/// Indices (0-based) of relevant documents in a merged stream.
pub fn relevant_indices(documents: &[Document]) -> Vec<usize> {
    documents
        .iter()
        .enumerate()
        .filter(|(_, d)| d.relevant)
        .map(|(i, _)| i)
        .collect()
}
