//! End-to-end orchestration: one JSON config in, a directory of
//! deterministic artifacts out.
//!
//! Every artifact is reproducible byte for byte: no timestamps, only
//! order-stable containers (`Vec`, `BTreeMap`), and every random decision is
//! seeded from the master seed via a tagged hash, so reruns of the same
//! config produce identical files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{baseline_curve, rank_features, BaselineCurveConfig, BaselineMethod};
use crate::data::{
    load_csv, make_folds, read_split_file, split_with_tags, standardize, write_split_file,
    Dataset, TaskKind,
};
use crate::error::{PipelineError, ScoreError};
use crate::eval::{
    aggregate_curves, curve_from_path, default_ridge_grid, feature_contribution, win_ratio,
    AggregatePoint, CurveDetail, FeatureContribution, MetricCurve, MetricKind, RefitSpec, WinRatio,
};
use crate::retrieval::{
    build_retrieval_prompt, ChunkConfig, HashingEmbedder, Hit, VectorStore,
};
use crate::scores::{
    aggregate_rescaled, collect_scores, corrupt_names, offset_scores, plan_batches, CollectOptions,
    ContextFetcher, PenaltyScores, PromptTemplate, ScoreCache, ScoreProvider, StubProvider,
    StubScoring,
};
use crate::solver::{fit_path, Family, SolverConfig};
use crate::transform::{cv_select, default_family, relu_grid, CvConfig, CvLoss, CvReport, Transform};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

fn d_id() -> String {
    String::new()
}
fn d_label() -> String {
    "label".to_string()
}
fn d_task() -> TaskKind {
    TaskKind::Classification
}
fn d_n_splits() -> usize {
    10
}
fn d_test_fraction() -> f64 {
    0.5
}
fn d_true() -> bool {
    true
}
fn d_template() -> String {
    "empirical".to_string()
}
fn d_range() -> (f64, f64) {
    (0.1, 1.0)
}
fn d_offset() -> f64 {
    2.0
}
fn d_trials() -> u32 {
    3
}
fn d_retries() -> u32 {
    2
}
fn d_concurrency() -> usize {
    10
}
fn d_eta_max() -> u32 {
    4
}
// Large enough that the least important feature never enters the path; any
// constant scaling of the weights is absorbed into the lambda grid.
fn d_relu_w_max() -> f64 {
    1000.0
}
fn d_max_features() -> usize {
    30
}
fn d_cv_folds() -> usize {
    5
}
fn d_refit_max() -> usize {
    10
}
fn d_refit_folds() -> usize {
    3
}
fn d_top_k() -> usize {
    3
}
fn d_dim() -> usize {
    512
}
fn d_out_dir() -> String {
    "results".to_string()
}
fn d_timeout() -> u64 {
    120
}
fn d_base_url() -> String {
    "https://api.openai.com/v1".to_string()
}
fn d_api_key_env() -> String {
    "OPENAI_API_KEY".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetConfig {
    /// CSV file with one label column and numeric feature columns.
    pub path: String,
    /// Identifier used in cache keys and artifacts; defaults to the file stem.
    #[serde(default = "d_id")]
    pub id: String,
    #[serde(default = "d_label")]
    pub label_column: String,
    #[serde(default = "d_task")]
    pub task: TaskKind,
    /// Optional sidecar file fixing the train/test split (one `train` or
    /// `test` per row). When set, exactly one split is run.
    #[serde(default)]
    pub split_file: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitsConfig {
    pub n_splits: usize,
    pub test_fraction: f64,
    pub stratified: bool,
}

impl Default for SplitsConfig {
    fn default() -> Self {
        SplitsConfig {
            n_splits: d_n_splits(),
            test_fraction: d_test_fraction(),
            stratified: d_true(),
        }
    }
}

/// Where penalty scores come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreSource {
    /// Deterministic pseudo-random scores (hash of seed and feature name).
    StubSeeded {
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        temperature: f64,
    },
    /// The same score for every feature.
    StubConstant { value: f64 },
    /// Scores from a JSON file (`{"by_name": {...}}` or `{"values": [...]}`).
    File { path: String },
    /// OpenAI-style chat-completions endpoint. The key is read from the
    /// named environment variable, never from the config file.
    Http {
        #[serde(default = "d_base_url")]
        base_url: String,
        model: String,
        #[serde(default = "d_api_key_env")]
        api_key_env: String,
        #[serde(default)]
        temperature: f64,
        #[serde(default = "d_timeout")]
        timeout_secs: u64,
    },
}

impl Default for ScoreSource {
    fn default() -> Self {
        ScoreSource::StubSeeded {
            seed: None,
            temperature: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoresConfig {
    pub source: ScoreSource,
    pub template_id: String,
    pub range: (f64, f64),
    /// Constant added to every collected score before transforming, keeping
    /// penalty ratios moderate.
    pub offset: f64,
    pub trials: u32,
    pub max_retries: u32,
    pub concurrency: usize,
    /// Features per prompt; defaults to ceil(sqrt(p)).
    pub batch_size: Option<usize>,
    /// Rescale each batch by its maximum score before use.
    pub rescale_batches: bool,
    /// The distinction being classified, e.g. a pair of diagnoses.
    pub category: String,
    /// The broader domain, e.g. a cancer type.
    pub broader_topic: String,
    /// JSON score cache; hits skip collection entirely.
    pub cache_path: Option<String>,
}

impl Default for ScoresConfig {
    fn default() -> Self {
        ScoresConfig {
            source: ScoreSource::default(),
            template_id: d_template(),
            range: d_range(),
            offset: d_offset(),
            trials: d_trials(),
            max_retries: d_retries(),
            concurrency: d_concurrency(),
            batch_size: None,
            rescale_batches: false,
            category: String::new(),
            broader_topic: String::new(),
            cache_path: None,
        }
    }
}

/// Which cross-validation loss picks the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvLossConfig {
    /// Area-vs-baseline on misclassification for classification tasks, mean
    /// deviance for regression.
    Auto,
    AreaMisclassification,
    AreaAuroc,
    MeanDeviance,
}

impl Default for CvLossConfig {
    fn default() -> Self {
        CvLossConfig::Auto
    }
}

impl CvLossConfig {
    fn resolve(self, task: TaskKind) -> CvLoss {
        match (self, task) {
            (CvLossConfig::Auto, TaskKind::Classification) => CvLoss::AreaVsLassoMisclass,
            (CvLossConfig::Auto, TaskKind::Regression) => CvLoss::MeanDeviance,
            (CvLossConfig::AreaMisclassification, _) => CvLoss::AreaVsLassoMisclass,
            (CvLossConfig::AreaAuroc, _) => CvLoss::AreaVsLassoAuroc,
            (CvLossConfig::MeanDeviance, _) => CvLoss::MeanDeviance,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TransformConfig {
    /// Inverse-importance exponents 0..=eta_max are always candidates.
    pub eta_max: u32,
    /// Also try the rank-rectifier grid.
    pub include_relu: bool,
    pub relu_w_max: f64,
    /// Transform candidates are compared over 1..=max_features counts.
    pub max_features: usize,
    pub cv_folds: usize,
    pub loss: CvLossConfig,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig {
            eta_max: d_eta_max(),
            include_relu: false,
            relu_w_max: d_relu_w_max(),
            max_features: d_max_features(),
            cv_folds: d_cv_folds(),
            loss: CvLossConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Sparse models with at most this many features are re-fit with an
    /// l2-logistic model before test evaluation (classification only).
    pub refit_max_count: usize,
    pub refit_folds: usize,
    /// Ridge grid for the refit; `null` means the built-in log-spaced grid.
    pub ridge_grid: Option<Vec<f64>>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            refit_max_count: d_refit_max(),
            refit_folds: d_refit_folds(),
            ridge_grid: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RagConfig {
    /// Directory of a built vector store; when set, top chunks are added to
    /// every scoring prompt.
    pub store_dir: Option<String>,
    pub top_k: usize,
    pub dim: usize,
}

impl Default for RagConfig {
    fn default() -> Self {
        RagConfig {
            store_dir: None,
            top_k: d_top_k(),
            dim: d_dim(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    pub dir: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: d_out_dir() }
    }
}

/// The complete run configuration. Every field has a default except the
/// dataset path, so a minimal config is `{"dataset": {"path": "..."}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub splits: SplitsConfig,
    #[serde(default)]
    pub scores: ScoresConfig,
    #[serde(default)]
    pub transform: TransformConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    #[serde(default)]
    pub rag: RagConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn from_value(mut value: serde_json::Value) -> Result<RunConfig, PipelineError> {
        normalize_config(&mut value);
        let mut cfg: RunConfig = serde_json::from_value(value)
            .map_err(|e| PipelineError::Config(format!("bad config: {e}")))?;
        if cfg.dataset.id.is_empty() {
            cfg.dataset.id = Path::new(&cfg.dataset.path)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".to_string());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<RunConfig, PipelineError> {
        let raw = std::fs::read_to_string(path).map_err(|e| PipelineError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let value: serde_json::Value = serde_json::from_str(&raw)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        RunConfig::from_value(value)
    }

    fn validate(&self) -> Result<(), PipelineError> {
        let c = |msg: String| Err(PipelineError::Config(msg));
        if self.dataset.path.is_empty() {
            return c("dataset.path is required".to_string());
        }
        if self.splits.n_splits == 0 && self.dataset.split_file.is_none() {
            return c("splits.n_splits must be positive".to_string());
        }
        if !(self.splits.test_fraction > 0.0 && self.splits.test_fraction < 1.0) {
            return c(format!(
                "splits.test_fraction {} out of (0, 1)",
                self.splits.test_fraction
            ));
        }
        if !(self.scores.range.0 < self.scores.range.1) {
            return c(format!(
                "scores.range ({}, {}) needs lo < hi",
                self.scores.range.0, self.scores.range.1
            ));
        }
        if self.scores.offset < 0.0 {
            return c(format!("scores.offset {} must be >= 0", self.scores.offset));
        }
        if self.transform.max_features == 0 {
            return c("transform.max_features must be positive".to_string());
        }
        if self.transform.cv_folds < 2 {
            return c("transform.cv_folds must be at least 2".to_string());
        }
        Ok(())
    }

    fn family(&self) -> Family {
        match self.dataset.task {
            TaskKind::Classification => Family::Binomial,
            TaskKind::Regression => Family::Gaussian,
        }
    }

    fn transform_candidates(&self) -> Vec<Transform> {
        let mut family = default_family(self.transform.eta_max);
        if self.transform.include_relu {
            family.extend(relu_grid(self.transform.relu_w_max));
        }
        family
    }

    fn ridge_grid(&self) -> Vec<f64> {
        self.eval
            .ridge_grid
            .clone()
            .unwrap_or_else(default_ridge_grid)
    }
}

/// Rewrites shorthand forms (e.g. a bare string for `scores.source`) into
/// the full tagged representation before deserialization.
fn normalize_config(value: &mut serde_json::Value) {
    if let Some(source) = value.pointer_mut("/scores/source") {
        if let Some(s) = source.as_str() {
            *source = match s {
                "stub" | "stub_seeded" => serde_json::json!({"kind": "stub_seeded"}),
                other => serde_json::json!({"kind": other}),
            };
        }
    }
}

/// Set one dotted-path key in a JSON config to a value parsed as JSON when
/// possible, falling back to a plain string.
pub fn apply_override(
    value: &mut serde_json::Value,
    dotted: &str,
    raw: &str,
) -> Result<(), PipelineError> {
    let parts: Vec<&str> = dotted.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(PipelineError::Config(format!(
            "override path {dotted:?} has an empty segment"
        )));
    }
    let mut cursor = value;
    for part in &parts[..parts.len() - 1] {
        if !cursor.is_object() {
            return Err(PipelineError::Config(format!(
                "override path {dotted:?} crosses a non-object value"
            )));
        }
        cursor = cursor
            .as_object_mut()
            .unwrap()
            .entry(part.to_string())
            .or_insert_with(|| serde_json::json!({}));
    }
    let leaf: serde_json::Value =
        serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    if !cursor.is_object() {
        return Err(PipelineError::Config(format!(
            "override path {dotted:?} crosses a non-object value"
        )));
    }
    cursor
        .as_object_mut()
        .unwrap()
        .insert(parts[parts.len() - 1].to_string(), leaf);
    Ok(())
}

/// Derive a component seed from the master seed and a role tag so different
/// components never share an RNG stream.
pub fn sub_seed(master: u64, tag: &str) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf29ce484222325;
    const FNV_PRIME: u64 = 0x100000001b3;
    let mut h = FNV_OFFSET;
    for b in tag.bytes() {
        h = (h ^ b as u64).wrapping_mul(FNV_PRIME);
    }
    h ^ master
}

// ---------------------------------------------------------------------------
// Score acquisition
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CollectPolicy {
    /// Collect from the provider when the cache has no answer.
    CollectIfNeeded,
    /// Only cached or file-based scores are acceptable.
    NoCollection,
}

fn build_provider(cfg: &RunConfig) -> Result<Box<dyn ScoreProvider>, PipelineError> {
    match &cfg.scores.source {
        ScoreSource::StubSeeded { seed, temperature } => {
            let seed = seed.unwrap_or_else(|| sub_seed(cfg.seed, "stub-scores"));
            Ok(Box::new(StubProvider::new(
                StubScoring::Seeded { seed },
                cfg.scores.range,
                *temperature,
            )))
        }
        ScoreSource::StubConstant { value } => Ok(Box::new(StubProvider::new(
            StubScoring::Constant(*value),
            cfg.scores.range,
            0.0,
        ))),
        ScoreSource::File { path } => Err(PipelineError::Config(format!(
            "scores.source file {path} is read directly, not via a provider"
        ))),
        #[cfg(feature = "http")]
        ScoreSource::Http {
            base_url,
            model,
            api_key_env,
            temperature,
            timeout_secs,
        } => {
            let provider = crate::scores::HttpProvider::from_env(
                base_url,
                model,
                *temperature,
                api_key_env,
                *timeout_secs,
            )
            .map_err(|e| PipelineError::Score(ScoreError::Provider(e)))?;
            Ok(Box::new(provider))
        }
        #[cfg(not(feature = "http"))]
        ScoreSource::Http { .. } => Err(PipelineError::Config(
            "scores.source http requires the `http` feature".to_string(),
        )),
    }
}

#[derive(Debug, Deserialize)]
struct ScoresFile {
    #[serde(default)]
    by_name: Option<BTreeMap<String, f64>>,
    #[serde(default)]
    values: Option<Vec<f64>>,
}

fn scores_from_file(
    path: &str,
    names: &[String],
    range: (f64, f64),
) -> Result<PenaltyScores, PipelineError> {
    let raw = std::fs::read_to_string(path).map_err(|e| PipelineError::Io {
        path: path.to_string(),
        source: e,
    })?;
    let parsed: ScoresFile = serde_json::from_str(&raw)
        .map_err(|e| PipelineError::Config(format!("scores file {path}: {e}")))?;
    let values = if let Some(by_name) = parsed.by_name {
        let mut out = Vec::with_capacity(names.len());
        let mut missing = Vec::new();
        for n in names {
            match by_name.get(n) {
                Some(v) => out.push(*v),
                None => missing.push(n.clone()),
            }
        }
        if !missing.is_empty() {
            return Err(PipelineError::Score(ScoreError::MissingNames(missing)));
        }
        out
    } else if let Some(values) = parsed.values {
        if values.len() != names.len() {
            return Err(PipelineError::Config(format!(
                "scores file {path} has {} values for {} features",
                values.len(),
                names.len()
            )));
        }
        values
    } else {
        return Err(PipelineError::Config(format!(
            "scores file {path} needs a by_name map or a values array"
        )));
    };
    // A file is trusted about its own range: widen the declared range to
    // cover the values so provenance survives without rejecting them.
    let lo = values.iter().cloned().fold(range.0, f64::min);
    let hi = values.iter().cloned().fold(range.1, f64::max);
    PenaltyScores::new(values, (lo, hi), "file".to_string(), path.to_string(), 0)
        .map_err(PipelineError::Score)
}

struct StoreFetcher {
    store: VectorStore,
    embedder: HashingEmbedder,
    category: String,
    top_k: usize,
}

impl ContextFetcher for StoreFetcher {
    fn contexts_for(
        &self,
        names: &[String],
    ) -> Result<Vec<String>, crate::error::RetrievalError> {
        let mut out = Vec::new();
        for name in names {
            let prompt = build_retrieval_prompt(name, &self.category);
            for hit in self.store.query_top_k(&self.embedder, &prompt, self.top_k)? {
                out.push(hit.text);
            }
        }
        Ok(out)
    }
}

fn build_fetcher(cfg: &RunConfig) -> Result<Option<StoreFetcher>, PipelineError> {
    let Some(dir) = &cfg.rag.store_dir else {
        return Ok(None);
    };
    let store = VectorStore::load(Path::new(dir))?;
    let embedder = HashingEmbedder::new(store.dim())
        .map_err(PipelineError::Retrieval)?;
    Ok(Some(StoreFetcher {
        store,
        embedder,
        category: cfg.scores.category.clone(),
        top_k: cfg.rag.top_k,
    }))
}

/// Raw collected scores plus the per-trial vectors handed to the transform
/// stage (offset and optional batch rescaling applied).
#[derive(Debug, Clone, Serialize)]
pub struct PreparedScores {
    pub raw: Vec<PenaltyScores>,
    pub processed: Vec<Vec<f64>>,
    pub from_cache: bool,
}

fn obtain_scores(
    cfg: &RunConfig,
    names: &[String],
    policy: CollectPolicy,
) -> Result<PreparedScores, PipelineError> {
    // File scores need no provider or cache.
    if let ScoreSource::File { path } = &cfg.scores.source {
        let raw = scores_from_file(path, names, cfg.scores.range)?;
        let processed = preprocess(cfg, names, std::slice::from_ref(&raw))?;
        return Ok(PreparedScores {
            raw: vec![raw],
            processed,
            from_cache: false,
        });
    }

    let provider = build_provider(cfg)?;
    let trials = if provider.temperature() == 0.0 {
        1
    } else {
        cfg.scores.trials.max(1)
    };
    let cache = cfg.scores.cache_path.as_ref().map(ScoreCache::new);

    if let Some(cache) = &cache {
        let mut hits = Vec::new();
        for trial in 0..trials {
            match cache.lookup(
                &cfg.dataset.id,
                &cfg.scores.template_id,
                provider.id(),
                trial,
                names,
            ) {
                Ok(Some(s)) => hits.push(s),
                _ => break,
            }
        }
        if hits.len() == trials as usize {
            let processed = preprocess(cfg, names, &hits)?;
            return Ok(PreparedScores {
                raw: hits,
                processed,
                from_cache: true,
            });
        }
    }

    if policy == CollectPolicy::NoCollection {
        return Err(PipelineError::Config(
            "no cached scores available and collection is disabled for this command".to_string(),
        ));
    }

    let template = PromptTemplate::builtin(&cfg.scores.template_id)
        .map_err(PipelineError::Score)?;
    let batches = plan_batches(names.len(), cfg.scores.batch_size).map_err(PipelineError::Score)?;
    let opts = CollectOptions {
        trials: cfg.scores.trials,
        max_retries: cfg.scores.max_retries,
        concurrency: cfg.scores.concurrency,
        category: cfg.scores.category.clone(),
        broader_topic: cfg.scores.broader_topic.clone(),
        range: cfg.scores.range,
    };
    let fetcher = build_fetcher(cfg)?;
    let raw = collect_scores(
        provider.as_ref(),
        &template,
        names,
        &batches,
        &opts,
        fetcher.as_ref().map(|f| f as &dyn ContextFetcher),
    )
    .map_err(PipelineError::Score)?;
    if let Some(cache) = &cache {
        cache
            .store(&cfg.dataset.id, names, &raw)
            .map_err(PipelineError::Score)?;
    }
    let processed = preprocess(cfg, names, &raw)?;
    Ok(PreparedScores {
        raw,
        processed,
        from_cache: false,
    })
}

/// Offset (and optionally batch-rescale) each trial's scores.
fn preprocess(
    cfg: &RunConfig,
    names: &[String],
    raw: &[PenaltyScores],
) -> Result<Vec<Vec<f64>>, PipelineError> {
    let mut out = Vec::with_capacity(raw.len());
    for scores in raw {
        let values = if cfg.scores.rescale_batches {
            let batches =
                plan_batches(names.len(), cfg.scores.batch_size).map_err(PipelineError::Score)?;
            let by_batch: Vec<Vec<f64>> = batches
                .iter()
                .map(|r| scores.values[r.clone()].to_vec())
                .collect();
            let rescaled = aggregate_rescaled(&by_batch).map_err(PipelineError::Score)?;
            rescaled.into_iter().map(|v| v + cfg.scores.offset).collect()
        } else if cfg.scores.offset > 0.0 {
            offset_scores(scores, cfg.scores.offset)
                .map_err(PipelineError::Score)?
                .values
        } else {
            scores.values.clone()
        };
        out.push(values);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Run command
// ---------------------------------------------------------------------------

/// Names used in artifacts for the two methods every run produces.
pub const METHOD_SELECTED: &str = "llm_lasso";
pub const METHOD_PLAIN: &str = "lasso";

#[derive(Debug, Clone, Serialize)]
pub struct SeedReport {
    pub split: usize,
    pub chosen_trial: u32,
    pub selected_transform: Transform,
    pub selected_loss: f64,
    pub baseline_loss: f64,
    /// Per-trial summary: (trial, selected transform, loss).
    pub trial_summaries: Vec<TrialSummary>,
    /// Full CV report of the chosen trial.
    pub report: CvReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialSummary {
    pub trial: u32,
    pub selected_transform: Transform,
    pub selected_loss: f64,
    pub baseline_loss: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub out_dir: String,
    pub dataset_id: String,
    pub n_splits: usize,
    pub n_features: usize,
    /// Splits on which the CV kept a non-trivial transform (eta > 0 or a
    /// rectifier) rather than falling back to plain weights.
    pub splits_with_informative_transform: usize,
    pub win_ratio: WinRatio,
    /// Mean test metric per feature count, by method and metric.
    pub aggregates: BTreeMap<String, BTreeMap<String, BTreeMap<usize, AggregatePoint>>>,
}

fn is_informative(t: &Transform) -> bool {
    !matches!(t, Transform::InverseImportance { eta: 0 })
}

fn metric_name(kind: MetricKind) -> &'static str {
    match kind {
        MetricKind::Misclassification => "misclassification",
        MetricKind::Auroc => "auroc",
        MetricKind::Mse => "mse",
        MetricKind::Deviance => "deviance",
    }
}

fn eval_metrics(task: TaskKind) -> Vec<MetricKind> {
    match task {
        TaskKind::Classification => vec![MetricKind::Misclassification, MetricKind::Auroc],
        TaskKind::Regression => vec![MetricKind::Mse],
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), PipelineError> {
    let io = |e: std::io::Error| PipelineError::Io {
        path: path.display().to_string(),
        source: e,
    };
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
    }
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| PipelineError::Config(format!("serializing {}: {e}", path.display())))?;
    std::fs::write(path, body).map_err(io)
}

/// Flat table of every curve point: (method, split, feature_count, metric,
/// value).
fn write_curves_csv(
    path: &Path,
    rows: &[(String, usize, usize, MetricKind, f64)],
) -> Result<(), PipelineError> {
    let io = |e: std::io::Error| PipelineError::Io {
        path: path.display().to_string(),
        source: e,
    };
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| {
        PipelineError::Config(format!("csv {}: {e}", path.display()))
    })?;
    w.write_record(["method", "split", "feature_count", "metric", "value"])
        .map_err(|e| PipelineError::Config(format!("csv {}: {e}", path.display())))?;
    for (method, split, count, metric, value) in rows {
        w.write_record([
            method.as_str(),
            &split.to_string(),
            &count.to_string(),
            metric_name(*metric),
            &format!("{value}"),
        ])
        .map_err(|e| PipelineError::Config(format!("csv {}: {e}", path.display())))?;
    }
    w.flush().map_err(io)
}

struct SeedEvaluation {
    seed_report: SeedReport,
    /// method -> metric -> curve detail.
    curves: BTreeMap<String, BTreeMap<String, CurveDetail>>,
    win: WinRatio,
    /// Densest selected model on the curve (for contribution reporting).
    contribution_model: Option<Vec<(usize, f64)>>,
}

#[allow(clippy::too_many_arguments)]
fn evaluate_seed(
    cfg: &RunConfig,
    split_idx: usize,
    train: &Dataset,
    test: &Dataset,
    processed_scores: &[Vec<f64>],
) -> Result<SeedEvaluation, PipelineError> {
    let family = cfg.family();
    let folds = make_folds(
        train,
        cfg.transform.cv_folds,
        sub_seed(cfg.seed, &format!("folds-{split_idx}")),
    )?;
    let candidates = cfg.transform_candidates();
    let cv_cfg = CvConfig {
        loss: cfg.transform.loss.resolve(cfg.dataset.task),
        max_features: cfg.transform.max_features,
        solver: cfg.solver.clone(),
    };

    // One CV selection per trial; the trial with the lowest selected loss
    // wins, earlier trials break ties.
    let mut reports: Vec<CvReport> = Vec::with_capacity(processed_scores.len());
    for scores in processed_scores {
        let report = cv_select(
            train.features.view(),
            train.response.view(),
            scores,
            family,
            &candidates,
            &folds,
            &cv_cfg,
        )
        .map_err(PipelineError::Transform)?;
        reports.push(report);
    }
    let chosen_trial = (0..reports.len())
        .min_by(|&a, &b| {
            reports[a]
                .selected_loss()
                .partial_cmp(&reports[b].selected_loss())
                .expect("cv losses are comparable")
        })
        .expect("at least one trial");
    let trial_summaries: Vec<TrialSummary> = reports
        .iter()
        .enumerate()
        .map(|(t, r)| TrialSummary {
            trial: t as u32,
            selected_transform: r.selected().clone(),
            selected_loss: r.selected_loss(),
            baseline_loss: r.baseline_loss(),
        })
        .collect();
    let report = reports.swap_remove(chosen_trial);

    // Final fits on the full training split.
    let weighted_path = fit_path(
        train.features.view(),
        train.response.view(),
        &report.selected_weights,
        family,
        &cfg.solver,
    )?;
    let ones = vec![1.0; train.n_features()];
    let plain_path = fit_path(
        train.features.view(),
        train.response.view(),
        &ones,
        family,
        &cfg.solver,
    )?;

    let ridge_grid = cfg.ridge_grid();
    let refit = match cfg.dataset.task {
        TaskKind::Classification => Some(RefitSpec {
            x_train: train.features.view(),
            y_train: train.response.view(),
            max_count: cfg.eval.refit_max_count,
            ridge_grid: ridge_grid.clone(),
            folds: cfg.eval.refit_folds,
            seed: sub_seed(cfg.seed, &format!("refit-{split_idx}")),
        }),
        TaskKind::Regression => None,
    };

    let mut curves: BTreeMap<String, BTreeMap<String, CurveDetail>> = BTreeMap::new();
    for (method, path) in [
        (METHOD_SELECTED, &weighted_path),
        (METHOD_PLAIN, &plain_path),
    ] {
        let mut per_metric = BTreeMap::new();
        for kind in eval_metrics(cfg.dataset.task) {
            let detail = curve_from_path(
                path,
                test.features.view(),
                test.response.view(),
                kind,
                refit.as_ref(),
            )
            .map_err(PipelineError::Eval)?;
            per_metric.insert(metric_name(kind).to_string(), detail);
        }
        curves.insert(method.to_string(), per_metric);
    }

    let primary = metric_name(eval_metrics(cfg.dataset.task)[0]).to_string();
    let win = win_ratio(
        &curves[METHOD_SELECTED][&primary].curve,
        &curves[METHOD_PLAIN][&primary].curve,
        cfg.transform.max_features,
    );
    let contribution_model = curves[METHOD_SELECTED][&primary]
        .models
        .iter()
        .filter(|(&count, _)| count <= cfg.transform.max_features)
        .next_back()
        .map(|(_, m)| m.coefs.clone());

    Ok(SeedEvaluation {
        seed_report: SeedReport {
            split: split_idx,
            chosen_trial: chosen_trial as u32,
            selected_transform: report.selected().clone(),
            selected_loss: report.selected_loss(),
            baseline_loss: report.baseline_loss(),
            trial_summaries,
            report,
        },
        curves,
        win,
        contribution_model,
    })
}

fn plan_splits(
    cfg: &RunConfig,
    data: &Dataset,
    out_dir: &Path,
) -> Result<Vec<(usize, Dataset, Dataset)>, PipelineError> {
    let splits_dir = out_dir.join("splits");
    std::fs::create_dir_all(&splits_dir).map_err(|e| PipelineError::Io {
        path: splits_dir.display().to_string(),
        source: e,
    })?;
    let mut out = Vec::new();
    if let Some(split_file) = &cfg.dataset.split_file {
        let tags = read_split_file(Path::new(split_file))?;
        let (train, test) = split_with_tags(data, &tags)?;
        write_split_file(&out_dir.join("splits").join("split-0.txt"), &tags)?;
        out.push((0, train, test));
        return Ok(out);
    }
    for s in 0..cfg.splits.n_splits {
        let seed = sub_seed(cfg.seed, &format!("split-{s}"));
        let (train, test, tags) = crate::data::split(
            data,
            cfg.splits.test_fraction,
            seed,
            cfg.splits.stratified,
        )?;
        write_split_file(&out_dir.join("splits").join(format!("split-{s}.txt")), &tags)?;
        out.push((s, train, test));
    }
    Ok(out)
}

/// Run the full pipeline: scores, transform selection, final paths, test
/// curves, comparisons, artifacts.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunSummary, PipelineError> {
    run_inner(cfg, CollectPolicy::CollectIfNeeded)
}

/// Like [`cmd_run`] but never contacts a provider: scores must come from the
/// cache or a file source.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<RunSummary, PipelineError> {
    run_inner(cfg, CollectPolicy::NoCollection)
}

fn run_inner(cfg: &RunConfig, policy: CollectPolicy) -> Result<RunSummary, PipelineError> {
    let out_dir = PathBuf::from(&cfg.output.dir);
    let (data, clean) = load_csv(
        Path::new(&cfg.dataset.path),
        &cfg.dataset.label_column,
        cfg.dataset.task,
    )?;
    let scores = obtain_scores(cfg, &data.feature_names, policy)?;

    let manifest = serde_json::json!({
        "config": cfg,
        "dataset": {
            "id": cfg.dataset.id,
            "rows": data.n_rows(),
            "features": data.n_features(),
            "dropped_rows": clean.dropped_rows,
            "dropped_columns": clean.dropped_columns,
            "label_names": data.label_names,
        },
        "scores_from_cache": scores.from_cache,
        "trials": scores.raw.len(),
    });
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    write_json(
        &out_dir.join("scores.json"),
        &serde_json::json!({
            "feature_names": data.feature_names,
            "raw": scores.raw,
            "processed": scores.processed,
        }),
    )?;

    let splits = plan_splits(cfg, &data, &out_dir)?;
    let mut seed_reports = Vec::new();
    let mut all_curves: BTreeMap<String, BTreeMap<String, BTreeMap<usize, MetricCurve>>> =
        BTreeMap::new();
    let mut csv_rows: Vec<(String, usize, usize, MetricKind, f64)> = Vec::new();
    let mut total_win = WinRatio {
        wins_a: 0,
        wins_b: 0,
        ties: 0,
    };
    let mut per_seed_win = Vec::new();
    let mut contribution_models: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut informative = 0usize;

    for (split_idx, train_raw, test_raw) in &splits {
        let (train, mut others, _std) = standardize(train_raw, &[test_raw])?;
        let test = others.pop().expect("one standardized test set");
        let eval = evaluate_seed(cfg, *split_idx, &train, &test, &scores.processed)?;

        if is_informative(&eval.seed_report.selected_transform) {
            informative += 1;
        }
        for (method, per_metric) in &eval.curves {
            for (metric, detail) in per_metric {
                all_curves
                    .entry(method.clone())
                    .or_default()
                    .entry(metric.clone())
                    .or_default()
                    .insert(*split_idx, detail.curve.clone());
                for (&count, &value) in &detail.curve.points {
                    csv_rows.push((
                        method.clone(),
                        *split_idx,
                        count,
                        detail.curve.metric,
                        value,
                    ));
                }
            }
        }
        total_win.wins_a += eval.win.wins_a;
        total_win.wins_b += eval.win.wins_b;
        total_win.ties += eval.win.ties;
        per_seed_win.push(serde_json::json!({
            "split": split_idx,
            "wins_selected": eval.win.wins_a,
            "wins_plain": eval.win.wins_b,
            "ties": eval.win.ties,
        }));
        if let Some(m) = eval.contribution_model {
            contribution_models.push(m);
        }
        seed_reports.push(eval.seed_report);
    }

    // Sort rows for a deterministic, diff-friendly table.
    csv_rows.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(metric_name(a.3).cmp(metric_name(b.3)))
            .then(a.2.cmp(&b.2))
    });
    write_curves_csv(&out_dir.join("curves.csv"), &csv_rows)?;
    write_json(&out_dir.join("cv_report.json"), &seed_reports)?;
    write_json(&out_dir.join("curves.json"), &all_curves)?;

    let mut aggregates: BTreeMap<String, BTreeMap<String, BTreeMap<usize, AggregatePoint>>> =
        BTreeMap::new();
    for (method, per_metric) in &all_curves {
        for (metric, by_split) in per_metric {
            let curves: Vec<&MetricCurve> = by_split.values().collect();
            aggregates
                .entry(method.clone())
                .or_default()
                .insert(metric.clone(), aggregate_curves(&curves));
        }
    }
    write_json(&out_dir.join("aggregate.json"), &aggregates)?;

    let win_doc = serde_json::json!({
        "metric": metric_name(eval_metrics(cfg.dataset.task)[0]),
        "selected_method": METHOD_SELECTED,
        "reference_method": METHOD_PLAIN,
        "total": {
            "wins_selected": total_win.wins_a,
            "wins_plain": total_win.wins_b,
            "ties": total_win.ties,
            "ratio": total_win.ratio(),
        },
        "per_split": per_seed_win,
    });
    write_json(&out_dir.join("win_ratio.json"), &win_doc)?;

    let contribution: Vec<FeatureContribution> =
        feature_contribution(&contribution_models, &data.feature_names);
    write_json(&out_dir.join("contribution.json"), &contribution)?;

    Ok(RunSummary {
        out_dir: out_dir.display().to_string(),
        dataset_id: cfg.dataset.id.clone(),
        n_splits: splits.len(),
        n_features: data.n_features(),
        splits_with_informative_transform: informative,
        win_ratio: total_win,
        aggregates,
    })
}

// ---------------------------------------------------------------------------
// Score collection command
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CollectSummary {
    pub out_path: String,
    pub n_features: usize,
    pub trials: usize,
    pub from_cache: bool,
}

/// Collect scores and write them (plus provenance) to a JSON file. Uses and
/// fills the score cache when one is configured.
pub fn cmd_collect_scores(cfg: &RunConfig, out_path: &Path) -> Result<CollectSummary, PipelineError> {
    let (data, _clean) = load_csv(
        Path::new(&cfg.dataset.path),
        &cfg.dataset.label_column,
        cfg.dataset.task,
    )?;
    let scores = obtain_scores(cfg, &data.feature_names, CollectPolicy::CollectIfNeeded)?;
    write_json(
        out_path,
        &serde_json::json!({
            "dataset_id": cfg.dataset.id,
            "feature_names": data.feature_names,
            "raw": scores.raw,
            "processed": scores.processed,
        }),
    )?;
    Ok(CollectSummary {
        out_path: out_path.display().to_string(),
        n_features: data.n_features(),
        trials: scores.raw.len(),
        from_cache: scores.from_cache,
    })
}

// ---------------------------------------------------------------------------
// Adversarial simulation command
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct AdversarialSummary {
    pub out_dir: String,
    pub corrupted: usize,
    pub n_features: usize,
    /// Splits where CV kept a non-trivial transform despite corruption.
    pub splits_with_informative_transform: usize,
    pub run: RunSummary,
}

/// Corrupt a fraction of feature names, collect scores under the corrupted
/// names, and run the full pipeline. With unrecognizable names the scores
/// carry no signal, so transform selection should fall back to plain
/// weights; the artifacts let that be checked.
pub fn cmd_simulate_adversarial(
    cfg: &RunConfig,
    fraction: f64,
    registry_path: Option<&Path>,
) -> Result<AdversarialSummary, PipelineError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(PipelineError::Config(format!(
            "corruption fraction {fraction} out of [0, 1]"
        )));
    }
    let (data, _clean) = load_csv(
        Path::new(&cfg.dataset.path),
        &cfg.dataset.label_column,
        cfg.dataset.task,
    )?;
    let mut registry: std::collections::BTreeSet<String> =
        data.feature_names.iter().cloned().collect();
    if let Some(path) = registry_path {
        let raw = std::fs::read_to_string(path).map_err(|e| PipelineError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        registry.extend(raw.lines().map(|l| l.trim().to_string()).filter(|l| !l.is_empty()));
    }

    let p = data.n_features();
    let n_corrupt = ((p as f64) * fraction).round() as usize;
    let mut order: Vec<usize> = (0..p).collect();
    {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(sub_seed(
            cfg.seed,
            "adversarial-targets",
        ));
        order.shuffle(&mut rng);
    }
    let targets: Vec<usize> = order.into_iter().take(n_corrupt).collect();
    let (corrupted_names, mapping) = corrupt_names(
        &data.feature_names,
        &targets,
        &registry,
        sub_seed(cfg.seed, "adversarial-names"),
    )
    .map_err(PipelineError::Score)?;

    let out_dir = PathBuf::from(&cfg.output.dir);
    write_json(
        &out_dir.join("corruption_map.json"),
        &serde_json::json!({
            "fraction": fraction,
            "corrupted": mapping.len(),
            "mapping": mapping,
        }),
    )?;

    // Scores are collected under the corrupted names; everything downstream
    // (transforms, solver, evaluation) uses the data unchanged.
    let scores = {
        let mut masked_cfg = cfg.clone();
        // The cache must not confuse corrupted and clean score vectors.
        masked_cfg.dataset.id = format!("{}-adversarial", cfg.dataset.id);
        obtain_scores(&masked_cfg, &corrupted_names, CollectPolicy::CollectIfNeeded)?
    };
    write_json(
        &out_dir.join("scores.json"),
        &serde_json::json!({
            "feature_names": corrupted_names,
            "raw": scores.raw,
            "processed": scores.processed,
        }),
    )?;

    // Reuse the run machinery with the pre-collected scores.
    let splits = plan_splits(cfg, &data, &out_dir)?;
    let mut seed_reports = Vec::new();
    let mut informative = 0usize;
    let mut all_curves: BTreeMap<String, BTreeMap<String, BTreeMap<usize, MetricCurve>>> =
        BTreeMap::new();
    let mut csv_rows: Vec<(String, usize, usize, MetricKind, f64)> = Vec::new();
    let mut total_win = WinRatio {
        wins_a: 0,
        wins_b: 0,
        ties: 0,
    };
    let mut contribution_models: Vec<Vec<(usize, f64)>> = Vec::new();

    for (split_idx, train_raw, test_raw) in &splits {
        let (train, mut others, _std) = standardize(train_raw, &[test_raw])?;
        let test = others.pop().expect("one standardized test set");
        let eval = evaluate_seed(cfg, *split_idx, &train, &test, &scores.processed)?;
        if is_informative(&eval.seed_report.selected_transform) {
            informative += 1;
        }
        for (method, per_metric) in &eval.curves {
            for (metric, detail) in per_metric {
                all_curves
                    .entry(method.clone())
                    .or_default()
                    .entry(metric.clone())
                    .or_default()
                    .insert(*split_idx, detail.curve.clone());
                for (&count, &value) in &detail.curve.points {
                    csv_rows.push((
                        method.clone(),
                        *split_idx,
                        count,
                        detail.curve.metric,
                        value,
                    ));
                }
            }
        }
        total_win.wins_a += eval.win.wins_a;
        total_win.wins_b += eval.win.wins_b;
        total_win.ties += eval.win.ties;
        if let Some(m) = eval.contribution_model {
            contribution_models.push(m);
        }
        seed_reports.push(eval.seed_report);
    }

    csv_rows.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(metric_name(a.3).cmp(metric_name(b.3)))
            .then(a.2.cmp(&b.2))
    });
    write_curves_csv(&out_dir.join("curves.csv"), &csv_rows)?;
    write_json(&out_dir.join("cv_report.json"), &seed_reports)?;
    write_json(&out_dir.join("curves.json"), &all_curves)?;
    let mut aggregates: BTreeMap<String, BTreeMap<String, BTreeMap<usize, AggregatePoint>>> =
        BTreeMap::new();
    for (method, per_metric) in &all_curves {
        for (metric, by_split) in per_metric {
            let curves: Vec<&MetricCurve> = by_split.values().collect();
            aggregates
                .entry(method.clone())
                .or_default()
                .insert(metric.clone(), aggregate_curves(&curves));
        }
    }
    write_json(&out_dir.join("aggregate.json"), &aggregates)?;
    let contribution: Vec<FeatureContribution> =
        feature_contribution(&contribution_models, &data.feature_names);
    write_json(&out_dir.join("contribution.json"), &contribution)?;

    let summary = RunSummary {
        out_dir: out_dir.display().to_string(),
        dataset_id: cfg.dataset.id.clone(),
        n_splits: splits.len(),
        n_features: p,
        splits_with_informative_transform: informative,
        win_ratio: total_win,
        aggregates,
    };
    Ok(AdversarialSummary {
        out_dir: summary.out_dir.clone(),
        corrupted: mapping.len(),
        n_features: p,
        splits_with_informative_transform: informative,
        run: summary,
    })
}

// ---------------------------------------------------------------------------
// Baselines command
// ---------------------------------------------------------------------------

/// Trace reference-method curves over the same splits as [`cmd_run`] and
/// write them alongside (baselines.csv / baselines.json).
pub fn cmd_baselines(cfg: &RunConfig) -> Result<RunSummary, PipelineError> {
    if cfg.dataset.task != TaskKind::Classification {
        return Err(PipelineError::Config(
            "baseline rankings require a classification dataset".to_string(),
        ));
    }
    let out_dir = PathBuf::from(&cfg.output.dir);
    let (data, _clean) = load_csv(
        Path::new(&cfg.dataset.path),
        &cfg.dataset.label_column,
        cfg.dataset.task,
    )?;
    let splits = plan_splits(cfg, &data, &out_dir)?;
    let curve_cfg = BaselineCurveConfig {
        max_features: cfg.transform.max_features,
        ridge_grid: cfg.ridge_grid(),
        refit_folds: cfg.eval.refit_folds,
        seed: sub_seed(cfg.seed, "baseline-refit"),
    };

    let mut all_curves: BTreeMap<String, BTreeMap<String, BTreeMap<usize, MetricCurve>>> =
        BTreeMap::new();
    let mut csv_rows: Vec<(String, usize, usize, MetricKind, f64)> = Vec::new();
    for (split_idx, train_raw, test_raw) in &splits {
        let (train, mut others, _std) = standardize(train_raw, &[test_raw])?;
        let test = others.pop().expect("one standardized test set");
        for method in BaselineMethod::all() {
            let ranking = rank_features(
                method,
                train.features.view(),
                train.response.view(),
                sub_seed(cfg.seed, &format!("baseline-random-{split_idx}")),
                cfg.transform.max_features,
            )
            .map_err(PipelineError::Eval)?;
            for kind in eval_metrics(cfg.dataset.task) {
                let curve = baseline_curve(
                    &ranking,
                    train.features.view(),
                    train.response.view(),
                    test.features.view(),
                    test.response.view(),
                    kind,
                    &curve_cfg,
                )
                .map_err(PipelineError::Eval)?;
                for (&count, &value) in &curve.points {
                    csv_rows.push((method.id().to_string(), *split_idx, count, kind, value));
                }
                all_curves
                    .entry(method.id().to_string())
                    .or_default()
                    .entry(metric_name(kind).to_string())
                    .or_default()
                    .insert(*split_idx, curve);
            }
        }
    }
    csv_rows.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(metric_name(a.3).cmp(metric_name(b.3)))
            .then(a.2.cmp(&b.2))
    });
    write_curves_csv(&out_dir.join("baselines.csv"), &csv_rows)?;
    write_json(&out_dir.join("baselines.json"), &all_curves)?;

    let mut aggregates: BTreeMap<String, BTreeMap<String, BTreeMap<usize, AggregatePoint>>> =
        BTreeMap::new();
    for (method, per_metric) in &all_curves {
        for (metric, by_split) in per_metric {
            let curves: Vec<&MetricCurve> = by_split.values().collect();
            aggregates
                .entry(method.clone())
                .or_default()
                .insert(metric.clone(), aggregate_curves(&curves));
        }
    }
    write_json(&out_dir.join("baselines_aggregate.json"), &aggregates)?;

    Ok(RunSummary {
        out_dir: out_dir.display().to_string(),
        dataset_id: cfg.dataset.id.clone(),
        n_splits: splits.len(),
        n_features: data.n_features(),
        splits_with_informative_transform: 0,
        win_ratio: WinRatio {
            wins_a: 0,
            wins_b: 0,
            ties: 0,
        },
        aggregates,
    })
}

// ---------------------------------------------------------------------------
// Retrieval commands
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct IndexSummary {
    pub store_dir: String,
    pub documents: usize,
    pub chunks: usize,
}

/// Build a vector store from every `.txt`/`.md` file in `docs_dir`
/// (document id = file stem, files in name order).
pub fn cmd_rag_index(
    docs_dir: &Path,
    store_dir: &Path,
    dim: usize,
    chunker: ChunkConfig,
) -> Result<IndexSummary, PipelineError> {
    let io = |e: std::io::Error, p: &Path| PipelineError::Io {
        path: p.display().to_string(),
        source: e,
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(docs_dir)
        .map_err(|e| io(e, docs_dir))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("txt") | Some("md")
            )
        })
        .collect();
    paths.sort();
    let mut docs = Vec::with_capacity(paths.len());
    for path in &paths {
        let text = std::fs::read_to_string(path).map_err(|e| io(e, path))?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        docs.push((id, text));
    }
    let embedder = HashingEmbedder::new(dim)?;
    let store = VectorStore::build(&embedder, &docs, chunker)?;
    store.save(store_dir)?;
    Ok(IndexSummary {
        store_dir: store_dir.display().to_string(),
        documents: docs.len(),
        chunks: store.len(),
    })
}

/// Query a store; the embedder is reconstructed from the store manifest.
pub fn cmd_rag_query(store_dir: &Path, query: &str, k: usize) -> Result<Vec<Hit>, PipelineError> {
    let store = VectorStore::load(store_dir)?;
    let embedder = HashingEmbedder::new(store.dim())?;
    Ok(store.query_top_k(&embedder, query, k)?)
}

/// Recall of the store's top-k against a brute-force oracle, per k.
pub fn cmd_rag_recall(
    store_dir: &Path,
    queries: &[String],
    ks: &[usize],
) -> Result<Vec<(usize, f64)>, PipelineError> {
    let store = VectorStore::load(store_dir)?;
    let embedder = HashingEmbedder::new(store.dim())?;
    let mut out = Vec::with_capacity(ks.len());
    for &k in ks {
        out.push((k, store.recall_at_k(&embedder, queries, k)?));
    }
    Ok(out)
}
