//! Collecting per-feature penalty scores from a model provider.
//!
//! Features are scored in balanced contiguous batches (default batch size
//! ceil(sqrt(p))); each batch is rendered into a prompt, sent to the
//! provider, parsed back, and retried on parse failure. Score vectors can be
//! shifted by a constant offset (to keep ratios between penalties moderate)
//! and optionally rescaled across batches by each batch's maximum score.

mod cache;
mod collect;
mod corrupt;
mod parse;
mod provider;
mod template;

pub use cache::{CacheEntry, ScoreCache};
pub use collect::{collect_scores, CollectOptions, ContextFetcher};
pub use corrupt::corrupt_names;
pub use parse::{parse_scores, ParsedScores};
pub use provider::{CallContext, FaultMode, FaultyStub, ScoreProvider, StubProvider, StubScoring};
#[cfg(feature = "http")]
pub use provider::HttpProvider;
pub use template::{render_prompt, PromptTemplate, SYSTEM_MESSAGE};

use serde::{Deserialize, Serialize};
use std::ops::Range;

use crate::error::ScoreError;

/// One trial's penalty scores for every feature, with provenance.
///
/// Invariant: every value lies within the declared inclusive range.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PenaltyScores {
    pub values: Vec<f64>,
    pub range: (f64, f64),
    pub template_id: String,
    pub model: String,
    pub trial: u32,
}

impl PenaltyScores {
    pub fn new(
        values: Vec<f64>,
        range: (f64, f64),
        template_id: String,
        model: String,
        trial: u32,
    ) -> Result<Self, ScoreError> {
        if !(range.0 < range.1) || !range.0.is_finite() || !range.1.is_finite() {
            return Err(ScoreError::BadRange(range.0, range.1));
        }
        let out_of_range: Vec<(String, f64)> = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| !v.is_finite() || v < range.0 || v > range.1)
            .map(|(i, &v)| (format!("index {i}"), v))
            .collect();
        if !out_of_range.is_empty() {
            return Err(ScoreError::OutOfRange(out_of_range));
        }
        Ok(PenaltyScores {
            values,
            range,
            template_id,
            model,
            trial,
        })
    }
}

/// Contiguous feature-index ranges covering 0..n exactly once, with batch
/// sizes differing by at most one. `batch_size` defaults to ceil(sqrt(n)).
pub fn plan_batches(
    n_features: usize,
    batch_size: Option<usize>,
) -> Result<Vec<Range<usize>>, ScoreError> {
    if n_features == 0 {
        return Err(ScoreError::BadBatchPlan("no features".to_string()));
    }
    let size = match batch_size {
        Some(0) => return Err(ScoreError::BadBatchPlan("batch size 0".to_string())),
        Some(s) => s,
        None => (n_features as f64).sqrt().ceil() as usize,
    };
    let n_batches = n_features.div_ceil(size);
    let base = n_features / n_batches;
    let remainder = n_features % n_batches; // this many batches get base+1
    let mut out = Vec::with_capacity(n_batches);
    let mut start = 0;
    for b in 0..n_batches {
        let len = if b < remainder { base + 1 } else { base };
        out.push(start..start + len);
        start += len;
    }
    debug_assert_eq!(start, n_features);
    Ok(out)
}

/// Shift every score (and the declared range) by a nonnegative constant.
/// Keeps penalty ratios between features moderate when raw scores approach
/// zero.
pub fn offset_scores(scores: &PenaltyScores, c: f64) -> Result<PenaltyScores, ScoreError> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(ScoreError::BadOffset(c));
    }
    PenaltyScores::new(
        scores.values.iter().map(|v| v + c).collect(),
        (scores.range.0 + c, scores.range.1 + c),
        scores.template_id.clone(),
        scores.model.clone(),
        scores.trial,
    )
}

/// Rescale scores across batches: batch i's scores are multiplied by
/// max_i / sum_j max_j, where max_i is batch i's maximum score. Returns the
/// concatenated rescaled vector.
pub fn aggregate_rescaled(by_batch: &[Vec<f64>]) -> Result<Vec<f64>, ScoreError> {
    if by_batch.is_empty() || by_batch.iter().any(|b| b.is_empty()) {
        return Err(ScoreError::BadBatchPlan(
            "rescaling needs nonempty batches".to_string(),
        ));
    }
    let maxima: Vec<f64> = by_batch
        .iter()
        .map(|b| b.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    if maxima.iter().any(|m| !m.is_finite()) {
        return Err(ScoreError::BadBatchPlan(
            "non-finite scores in batch".to_string(),
        ));
    }
    let total: f64 = maxima.iter().sum();
    if !(total > 0.0) {
        return Err(ScoreError::BadBatchPlan(
            "batch maxima must sum to a positive value".to_string(),
        ));
    }
    let mut out = Vec::with_capacity(by_batch.iter().map(Vec::len).sum());
    for (batch, &m) in by_batch.iter().zip(maxima.iter()) {
        let factor = m / total;
        out.extend(batch.iter().map(|v| v * factor));
    }
    Ok(out)
}
