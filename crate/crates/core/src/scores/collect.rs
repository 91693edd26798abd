//! Orchestrating score collection: trials × batches with bounded
//! concurrency and per-batch retries.

use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::{RetrievalError, ScoreError};
use crate::scores::parse::parse_scores;
use crate::scores::provider::{CallContext, ScoreProvider};
use crate::scores::template::{render_prompt, PromptTemplate, SYSTEM_MESSAGE};
use crate::scores::PenaltyScores;

/// Supplies context passages for a batch of feature names (typically backed
/// by a retrieval store). Fetch failures abort collection: silently dropping
/// context would change the prompt without any record of it.
pub trait ContextFetcher: Sync {
    fn contexts_for(&self, names: &[String]) -> Result<Vec<String>, RetrievalError>;
}

/// Collection policy.
#[derive(Debug, Clone)]
pub struct CollectOptions {
    /// Trials to run when the provider samples (temperature > 0). A
    /// deterministic provider (temperature == 0) always runs exactly one.
    pub trials: u32,
    /// Retries per batch after a malformed response (on top of the first
    /// attempt). Transport errors are not retried.
    pub max_retries: u32,
    /// Maximum batches in flight at once.
    pub concurrency: usize,
    /// Substituted for `{category}` in the template.
    pub category: String,
    /// Substituted for `{broader_topic}` in the template.
    pub broader_topic: String,
    /// Inclusive score range the prompt declares and the parser enforces.
    pub range: (f64, f64),
}

impl Default for CollectOptions {
    fn default() -> Self {
        CollectOptions {
            trials: 3,
            max_retries: 2,
            concurrency: 10,
            category: String::new(),
            broader_topic: String::new(),
            range: (0.1, 1.0),
        }
    }
}

/// Collect one complete score vector per trial.
///
/// Batches within a trial run concurrently (at most `opts.concurrency` in
/// flight); results are assembled strictly by batch index, so the outcome is
/// independent of thread scheduling. If several batches fail, the error for
/// the smallest batch index is reported.
pub fn collect_scores(
    provider: &dyn ScoreProvider,
    template: &PromptTemplate,
    feature_names: &[String],
    batches: &[Range<usize>],
    opts: &CollectOptions,
    fetcher: Option<&dyn ContextFetcher>,
) -> Result<Vec<PenaltyScores>, ScoreError> {
    template.validate()?;
    if batches.is_empty() {
        return Err(ScoreError::BadBatchPlan("no batches".to_string()));
    }
    let mut cover = 0usize;
    for r in batches {
        if r.start != cover || r.end <= r.start || r.end > feature_names.len() {
            return Err(ScoreError::BadBatchPlan(format!(
                "batch {:?} does not contiguously cover the features",
                r
            )));
        }
        cover = r.end;
    }
    if cover != feature_names.len() {
        return Err(ScoreError::BadBatchPlan(format!(
            "batches cover {cover} of {} features",
            feature_names.len()
        )));
    }
    let trials = if provider.temperature() == 0.0 {
        1
    } else {
        opts.trials.max(1)
    };

    let mut out = Vec::with_capacity(trials as usize);
    for trial in 0..trials {
        let per_batch = run_trial(provider, template, feature_names, batches, opts, fetcher, trial)?;
        let mut values = Vec::with_capacity(feature_names.len());
        for batch in per_batch {
            values.extend(batch);
        }
        out.push(PenaltyScores::new(
            values,
            opts.range,
            template.id.clone(),
            provider.id().to_string(),
            trial,
        )?);
    }
    Ok(out)
}

fn run_trial(
    provider: &dyn ScoreProvider,
    template: &PromptTemplate,
    feature_names: &[String],
    batches: &[Range<usize>],
    opts: &CollectOptions,
    fetcher: Option<&dyn ContextFetcher>,
    trial: u32,
) -> Result<Vec<Vec<f64>>, ScoreError> {
    let n_batches = batches.len();
    let slots: Vec<Mutex<Option<Result<Vec<f64>, ScoreError>>>> =
        (0..n_batches).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = opts.concurrency.max(1).min(n_batches);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let b = next.fetch_add(1, Ordering::SeqCst);
                if b >= n_batches {
                    break;
                }
                let result = run_batch(
                    provider,
                    template,
                    &feature_names[batches[b].clone()],
                    b,
                    opts,
                    fetcher,
                    trial,
                );
                *slots[b].lock().unwrap() = Some(result);
            });
        }
    });

    // Deterministic assembly and error selection: smallest batch index wins.
    let mut out = Vec::with_capacity(n_batches);
    for slot in slots {
        let result = slot
            .into_inner()
            .unwrap()
            .expect("every batch slot is filled before the scope ends");
        out.push(result?);
    }
    Ok(out)
}

fn run_batch(
    provider: &dyn ScoreProvider,
    template: &PromptTemplate,
    names: &[String],
    batch_index: usize,
    opts: &CollectOptions,
    fetcher: Option<&dyn ContextFetcher>,
    trial: u32,
) -> Result<Vec<f64>, ScoreError> {
    let contexts = match fetcher {
        Some(f) => f
            .contexts_for(names)
            .map_err(|e| ScoreError::ContextFetch {
                batch_index,
                source: Box::new(e),
            })?,
        None => Vec::new(),
    };
    let prompt = render_prompt(
        template,
        names,
        &opts.category,
        &opts.broader_topic,
        opts.range,
        &contexts,
    )?;
    let mut last_parse_error: Option<ScoreError> = None;
    for attempt in 0..=opts.max_retries {
        let ctx = CallContext {
            batch_index,
            trial,
            attempt,
        };
        // Transport problems abort immediately; only malformed responses
        // are worth retrying.
        let response = provider.complete(SYSTEM_MESSAGE, &prompt, ctx)?;
        match parse_scores(&response, names, opts.range) {
            Ok(parsed) => {
                return Ok(names.iter().map(|n| parsed.by_name[n]).collect());
            }
            Err(e) => last_parse_error = Some(e),
        }
    }
    Err(ScoreError::RetriesExhausted {
        batch_index,
        attempts: opts.max_retries + 1,
        source: Box::new(last_parse_error.expect("at least one attempt ran")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ProviderError;
    use crate::scores::plan_batches;
    use crate::scores::provider::{FaultMode, FaultyStub, StubProvider, StubScoring};

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("GENE{i}")).collect()
    }

    fn opts() -> CollectOptions {
        CollectOptions {
            category: "a vs b".to_string(),
            broader_topic: "oncology".to_string(),
            ..CollectOptions::default()
        }
    }

    #[test]
    fn collection_is_deterministic_across_concurrency_levels() {
        let provider = StubProvider::new(StubScoring::Seeded { seed: 9 }, (0.1, 1.0), 0.0);
        let template = PromptTemplate::builtin("empirical").unwrap();
        let feats = names(57);
        let batches = plan_batches(feats.len(), None).unwrap();
        let mut serial = opts();
        serial.concurrency = 1;
        let mut wide = opts();
        wide.concurrency = 10;
        let a = collect_scores(&provider, &template, &feats, &batches, &serial, None).unwrap();
        let b = collect_scores(&provider, &template, &feats, &batches, &wide, None).unwrap();
        assert_eq!(a.len(), 1, "temperature 0 runs a single trial");
        assert_eq!(a[0].values, b[0].values);
        assert_eq!(a[0].values.len(), 57);
        assert!(a[0].values.iter().all(|v| (0.1..=1.0).contains(v)));
    }

    #[test]
    fn positive_temperature_runs_requested_trials_with_variation() {
        let provider = StubProvider::new(StubScoring::Seeded { seed: 9 }, (0.1, 1.0), 0.8);
        let template = PromptTemplate::builtin("empirical").unwrap();
        let feats = names(12);
        let batches = plan_batches(feats.len(), None).unwrap();
        let got = collect_scores(&provider, &template, &feats, &batches, &opts(), None).unwrap();
        assert_eq!(got.len(), 3);
        assert_eq!(got[0].trial, 0);
        assert_eq!(got[2].trial, 2);
        assert_ne!(got[0].values, got[1].values);
    }

    #[test]
    fn parse_failures_are_retried_then_succeed() {
        let inner = StubProvider::new(StubScoring::Constant(0.5), (0.1, 1.0), 0.0);
        let provider = FaultyStub {
            inner,
            fail_attempts: 2,
            mode: FaultMode::Garbage,
        };
        let template = PromptTemplate::builtin("empirical").unwrap();
        let feats = names(6);
        let batches = plan_batches(feats.len(), Some(3)).unwrap();
        let got = collect_scores(&provider, &template, &feats, &batches, &opts(), None).unwrap();
        assert_eq!(got[0].values, vec![0.5; 6]);
    }

    #[test]
    fn exhausted_retries_carry_batch_and_cause() {
        let inner = StubProvider::new(StubScoring::Constant(0.5), (0.1, 1.0), 0.0);
        let provider = FaultyStub {
            inner,
            fail_attempts: u32::MAX,
            mode: FaultMode::ScientificNotation,
        };
        let template = PromptTemplate::builtin("empirical").unwrap();
        let feats = names(6);
        let batches = plan_batches(feats.len(), Some(3)).unwrap();
        let err =
            collect_scores(&provider, &template, &feats, &batches, &opts(), None).unwrap_err();
        match err {
            ScoreError::RetriesExhausted {
                batch_index,
                attempts,
                source,
            } => {
                assert_eq!(batch_index, 0, "smallest failing batch index wins");
                assert_eq!(attempts, 3);
                assert!(matches!(*source, ScoreError::ScientificNotation(_)));
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn transport_errors_are_not_retried() {
        struct CountingTransport {
            calls: std::sync::atomic::AtomicU32,
        }
        impl ScoreProvider for CountingTransport {
            fn id(&self) -> &str {
                "counting"
            }
            fn temperature(&self) -> f64 {
                0.0
            }
            fn complete(
                &self,
                _s: &str,
                _u: &str,
                _ctx: CallContext,
            ) -> Result<String, ProviderError> {
                self.calls.fetch_add(1, Ordering::SeqCst);
                Err(ProviderError::Transport("down".to_string()))
            }
        }
        let provider = CountingTransport {
            calls: std::sync::atomic::AtomicU32::new(0),
        };
        let template = PromptTemplate::builtin("empirical").unwrap();
        let feats = names(4);
        let batches = plan_batches(feats.len(), Some(4)).unwrap();
        let err =
            collect_scores(&provider, &template, &feats, &batches, &opts(), None).unwrap_err();
        assert!(matches!(err, ScoreError::Provider(ProviderError::Transport(_))));
        assert_eq!(provider.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn context_fetcher_passages_reach_the_prompt() {
        struct EchoFetcher;
        impl ContextFetcher for EchoFetcher {
            fn contexts_for(&self, names: &[String]) -> Result<Vec<String>, RetrievalError> {
                Ok(names.iter().map(|n| format!("{n} is well studied.")).collect())
            }
        }
        struct PromptSpy {
            saw_context: std::sync::atomic::AtomicBool,
            inner: StubProvider,
        }
        impl ScoreProvider for PromptSpy {
            fn id(&self) -> &str {
                "spy"
            }
            fn temperature(&self) -> f64 {
                0.0
            }
            fn complete(
                &self,
                s: &str,
                u: &str,
                ctx: CallContext,
            ) -> Result<String, ProviderError> {
                if u.contains("Retrieved context:") && u.contains("GENE0 is well studied.") {
                    self.saw_context.store(true, Ordering::SeqCst);
                }
                assert_eq!(s, SYSTEM_MESSAGE);
                self.inner.complete(s, u, ctx)
            }
        }
        let provider = PromptSpy {
            saw_context: std::sync::atomic::AtomicBool::new(false),
            inner: StubProvider::new(StubScoring::Constant(0.3), (0.1, 1.0), 0.0),
        };
        let template = PromptTemplate::builtin("empirical").unwrap();
        let feats = names(3);
        let batches = plan_batches(feats.len(), Some(3)).unwrap();
        collect_scores(&provider, &template, &feats, &batches, &opts(), Some(&EchoFetcher))
            .unwrap();
        assert!(provider.saw_context.load(Ordering::SeqCst));
    }

    #[test]
    fn malformed_batch_plans_are_rejected() {
        let provider = StubProvider::new(StubScoring::Constant(0.5), (0.1, 1.0), 0.0);
        let template = PromptTemplate::builtin("empirical").unwrap();
        let feats = names(6);
        for bad in [
            vec![0..2, 3..6],          // gap
            vec![0..4, 2..6],          // overlap
            vec![0..6, 6..6],          // empty batch
            vec![0..3],                // incomplete cover
            Vec::<Range<usize>>::new(), // no batches
        ] {
            assert!(
                collect_scores(&provider, &template, &feats, &bad, &opts(), None).is_err(),
                "plan {bad:?} should be rejected"
            );
        }
    }
}
