//! Instance accuracy and length-weighted aggregation.

use super::judge::RowLabel;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("cannot score an instance with no labels")]
    EmptyLabels,
    #[error("cannot aggregate zero context lengths")]
    NoLengths,
}

/// Recall-oriented instance accuracy: the arithmetic mean of the
/// per-row {100, 50, 0} scores.
pub fn score_instance(labels: &[RowLabel]) -> Result<f64, MetricsError> {
    if labels.is_empty() {
        return Err(MetricsError::EmptyLabels);
    }
    Ok(labels.iter().map(|l| l.score()).sum::<f64>() / labels.len() as f64)
}

/// Per-length means plus the three headline numbers. Lengths ascend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub per_length: Vec<(usize, f64)>,
    pub avg: f64,
    pub wavg_inc: f64,
    pub wavg_dec: f64,
}

/// Aggregates per-context-length mean accuracies. With lengths sorted
/// ascending and rank weights w_i = i (1-based), wAvg(inc) weighs long
/// contexts up and wAvg(dec) reverses the weights; Avg is unweighted.
pub fn aggregate(scores: &BTreeMap<usize, f64>) -> Result<AggregateReport, MetricsError> {
    if scores.is_empty() {
        return Err(MetricsError::NoLengths);
    }
    let per_length: Vec<(usize, f64)> = scores.iter().map(|(&l, &s)| (l, s)).collect();
    let n = per_length.len();
    let avg = per_length.iter().map(|(_, s)| s).sum::<f64>() / n as f64;
    let weight_sum = (n * (n + 1) / 2) as f64;
    let mut inc = 0.0;
    let mut dec = 0.0;
    for (i, (_, s)) in per_length.iter().enumerate() {
        inc += (i + 1) as f64 * s;
        dec += (n - i) as f64 * s;
    }
    Ok(AggregateReport {
        per_length,
        avg,
        wavg_inc: inc / weight_sum,
        wavg_dec: dec / weight_sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use RowLabel::*;

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol,
            "expected {expected} +/- {tol}, got {actual}"
        );
    }

    #[test]
    fn mean_of_label_scores() {
        let acc = score_instance(&[ExactMatch, ExactMatch, PartialMatch, NoMatch]).unwrap();
        assert_eq!(acc, 62.5);
        assert_eq!(score_instance(&[ExactMatch; 3]).unwrap(), 100.0);
        assert_eq!(score_instance(&[NoMatch]).unwrap(), 0.0);
        assert_eq!(score_instance(&[]), Err(MetricsError::EmptyLabels));
    }

    #[test]
    fn score_is_permutation_invariant() {
        let a = score_instance(&[ExactMatch, PartialMatch, NoMatch, NoMatch]).unwrap();
        let b = score_instance(&[NoMatch, NoMatch, PartialMatch, ExactMatch]).unwrap();
        assert_eq!(a, b);
    }

    fn table_row(scores: [f64; 5]) -> BTreeMap<usize, f64> {
        [4096, 8192, 16384, 32768, 65536]
            .into_iter()
            .zip(scores)
            .collect()
    }

    #[test]
    fn published_weighted_averages_reproduce() {
        // Constant-information-amount rows of the published leaderboard.
        let llama = aggregate(&table_row([64.0, 61.0, 57.5, 55.1, 44.8])).unwrap();
        assert_close(llama.avg, 56.5, 0.05);
        assert_close(llama.wavg_inc, 53.5, 0.05);
        assert_close(llama.wavg_dec, 59.4, 0.05);

        let gpt = aggregate(&table_row([62.5, 52.2, 53.6, 59.4, 52.0])).unwrap();
        assert_close(gpt.avg, 55.9, 0.05);
        assert_close(gpt.wavg_inc, 55.0, 0.05);
        // Published value carries rounding slack.
        assert_close(gpt.wavg_dec, 56.8, 0.1);
    }

    #[test]
    fn single_length_degenerates_to_identity() {
        let r = aggregate(&BTreeMap::from([(4096usize, 50.0)])).unwrap();
        assert_eq!(r.avg, 50.0);
        assert_eq!(r.wavg_inc, 50.0);
        assert_eq!(r.wavg_dec, 50.0);
    }

    #[test]
    fn equal_scores_collapse_all_three() {
        let r = aggregate(&table_row([42.0; 5])).unwrap();
        assert_close(r.avg, 42.0, 1e-12);
        assert_close(r.wavg_inc, 42.0, 1e-12);
        assert_close(r.wavg_dec, 42.0, 1e-12);
    }

    #[test]
    fn inc_of_reversed_scores_equals_dec() {
        let scores = [64.0, 61.0, 57.5, 55.1, 44.8];
        let mut reversed = scores;
        reversed.reverse();
        let a = aggregate(&table_row(scores)).unwrap();
        let b = aggregate(&table_row(reversed)).unwrap();
        assert_close(a.wavg_dec, b.wavg_inc, 1e-12);
        assert_close(a.wavg_inc, b.wavg_dec, 1e-12);
    }
}
