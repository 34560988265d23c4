use std::sync::atomic::{AtomicBool, Ordering};

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use super::{parse_label, Gateway, LlmError, Verdict};
use crate::prompt::Prompt;

/// What an unparseable reply counts as.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackPolicy {
    /// Predict 1 and flag the record.
    #[default]
    AsPositive,
    /// Stop the batch with an error.
    Abort,
    /// Predict the training majority label and flag the record.
    MajorityClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchOptions {
    pub max_in_flight: usize,
    pub fallback: FallbackPolicy,
    /// Used by `FallbackPolicy::MajorityClass`.
    pub majority_label: u8,
}

impl Default for BatchOptions {
    fn default() -> Self {
        BatchOptions { max_in_flight: 8, fallback: FallbackPolicy::AsPositive, majority_label: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub index: usize,
    pub verdict: Verdict,
    pub prompt_hash: String,
    /// Label used for scoring, after the fallback policy.
    pub label: u8,
    pub fallback_used: bool,
    pub from_cache: bool,
    pub attempts: u32,
}

#[derive(Debug)]
pub struct BatchOutcome {
    /// Completed records sorted by instance index.
    pub records: Vec<PredictionRecord>,
    pub n_requested: usize,
    /// First failure by instance index, if the batch stopped early.
    pub error: Option<LlmError>,
}

impl BatchOutcome {
    pub fn is_complete(&self) -> bool {
        self.error.is_none() && self.records.len() == self.n_requested
    }

    pub fn labels(&self) -> Vec<u8> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn unparseable(&self) -> usize {
        self.records.iter().filter(|r| r.fallback_used).count()
    }

    pub fn into_result(self) -> Result<Vec<PredictionRecord>, LlmError> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.records),
        }
    }
}

/// Classifies every prompt with at most `max_in_flight` requests outstanding.
/// After the first failure no new requests start; finished ones are kept.
pub async fn classify_batch(gateway: &Gateway, prompts: &[Prompt], opts: &BatchOptions) -> BatchOutcome {
    let abort = AtomicBool::new(false);
    let abort = &abort;
    let results: Vec<(usize, Option<Result<PredictionRecord, LlmError>>)> =
        stream::iter(prompts.iter().enumerate().map(|(index, prompt)| async move {
            if abort.load(Ordering::SeqCst) {
                return (index, None);
            }
            let outcome = gateway.complete(prompt).await.and_then(|c| {
                let verdict = parse_label(&c.raw);
                let (label, fallback_used) = match (verdict.label, opts.fallback) {
                    (Some(l), _) => (l, false),
                    (None, FallbackPolicy::AsPositive) => (1, true),
                    (None, FallbackPolicy::MajorityClass) => (opts.majority_label, true),
                    (None, FallbackPolicy::Abort) => {
                        return Err(LlmError::Unparseable { index, raw: c.raw });
                    }
                };
                Ok(PredictionRecord {
                    index,
                    verdict,
                    prompt_hash: c.prompt_hash,
                    label,
                    fallback_used,
                    from_cache: c.from_cache,
                    attempts: c.attempts,
                })
            });
            if outcome.is_err() {
                abort.store(true, Ordering::SeqCst);
            }
            (index, Some(outcome))
        }))
        .buffer_unordered(opts.max_in_flight.max(1))
        .collect()
        .await;

    let mut records = Vec::with_capacity(prompts.len());
    let mut errors = Vec::new();
    for (index, r) in results {
        match r {
            Some(Ok(rec)) => records.push(rec),
            Some(Err(e)) => errors.push((index, e)),
            None => {}
        }
    }
    records.sort_by_key(|r| r.index);
    errors.sort_by_key(|(i, _)| *i);
    BatchOutcome { records, n_requested: prompts.len(), error: errors.into_iter().next().map(|(_, e)| e) }
}
