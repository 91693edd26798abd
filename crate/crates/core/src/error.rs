//! Error types shared across the crate, grouped by the subsystem that raises
//! them. The CLI maps each group to a stable process exit code.

use thiserror::Error;

/// Problems with input tables, labels, splits, or folds.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("label column {0:?} not found in header")]
    MissingLabelColumn(String),
    #[error("non-numeric value {value:?} in column {column:?}, row {row}")]
    NonNumeric {
        column: String,
        row: usize,
        value: String,
    },
    #[error("classification labels must take exactly two distinct values, found {0}")]
    LabelCardinality(usize),
    #[error("dataset has no rows after cleaning")]
    Empty,
    #[error("dataset has no feature columns after cleaning")]
    NoFeatures,
    #[error("duplicate feature name {0:?}")]
    DuplicateFeature(String),
    #[error("non-finite feature value in column {column:?}, row {row}")]
    NonFinite { column: String, row: usize },
    #[error("classification response must contain both classes")]
    SingleClass,
    #[error("response/feature row count mismatch: {response} vs {rows}")]
    ShapeMismatch { response: usize, rows: usize },
    #[error("test fraction {0} out of range (need 0 < f < 1)")]
    BadTestFraction(f64),
    #[error("cannot split: {0}")]
    BadSplit(String),
    #[error("fold count {k} invalid for dataset: {reason}")]
    BadFolds { k: usize, reason: String },
    #[error("split file {path}: {reason}")]
    BadSplitFile { path: String, reason: String },
    #[error("feature names of datasets being standardized together differ")]
    NameMismatch,
}

/// Solver-side failures: degenerate inputs or non-convergence.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("penalty weight vector length {got} does not match feature count {want}")]
    WeightLength { got: usize, want: usize },
    #[error("penalty weights must be finite and nonnegative (offending index {0})")]
    BadWeight(usize),
    #[error("all penalty weights are zero; lambda_max is undefined")]
    AllWeightsZero,
    #[error("response is degenerate (constant or single-class); lambda grid undefined")]
    DegenerateResponse,
    #[error("dimension mismatch: X is {rows}x{cols}, y has {y_len}")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        y_len: usize,
    },
    #[error("binomial response must be 0/1")]
    NonBinaryResponse,
    #[error(
        "coordinate descent did not converge at lambda index {lambda_index} \
         (lambda={lambda:.6e}, kkt residual {kkt_residual:.3e})"
    )]
    NonConvergence {
        lambda_index: usize,
        lambda: f64,
        kkt_residual: f64,
    },
    #[error("empty lambda grid requested")]
    EmptyGrid,
}

/// Penalty-transform and CV-selection failures.
#[derive(Debug, Error)]
pub enum TransformError {
    #[error("inverse-importance transform requires strictly positive scores (index {0})")]
    NonPositiveScore(usize),
    #[error("relu transform requires gamma in (0, 1], got {0}")]
    BadGamma(f64),
    #[error("relu transform requires w_max > 1, got {0}")]
    BadWMax(f64),
    #[error("score vector length {got} does not match feature count {want}")]
    ScoreLength { got: usize, want: usize },
    #[error("transform family is empty")]
    EmptyFamily,
    #[error("cv fold plan covers {got} rows, data has {want}")]
    FoldMismatch { got: usize, want: usize },
    #[error("solver failed during cv: {0}")]
    Solver(#[from] SolverError),
}

/// Score collection: prompt rendering, parsing, provider transport.
#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("batch plan invalid: {0}")]
    BadBatchPlan(String),
    #[error("template {0:?} unknown")]
    UnknownTemplate(String),
    #[error("template invalid: {0}")]
    BadTemplate(String),
    #[error("score range ({0}, {1}) invalid (need lo < hi)")]
    BadRange(f64, f64),
    #[error("offset must be nonnegative, got {0}")]
    BadOffset(f64),
    #[error("response missing scores for: {}", .0.join(", "))]
    MissingNames(Vec<String>),
    #[error("response contains duplicate score for {0:?}")]
    DuplicateName(String),
    #[error("scientific notation not permitted, offending: {}", .0.join(", "))]
    ScientificNotation(Vec<String>),
    #[error("scores out of declared range: {}", .0.iter().map(|(n, v)| format!("{n}={v}")).collect::<Vec<_>>().join(", "))]
    OutOfRange(Vec<(String, f64)>),
    #[error("batch {batch_index}: retries exhausted after {attempts} attempts: {source}")]
    RetriesExhausted {
        batch_index: usize,
        attempts: u32,
        #[source]
        source: Box<ScoreError>,
    },
    #[error("provider failure: {0}")]
    Provider(#[from] ProviderError),
    #[error("context retrieval failed for batch {batch_index}: {source}")]
    ContextFetch {
        batch_index: usize,
        #[source]
        source: Box<RetrievalError>,
    },
    #[error("name corruption could not find an unused replacement after {0} attempts")]
    CorruptExhausted(usize),
    #[error("score cache {path}: {reason}")]
    Cache { path: String, reason: String },
}

/// Transport/authentication failures when talking to a model endpoint.
#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("api key environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("http transport error: {0}")]
    Transport(String),
    #[error("endpoint returned malformed payload: {0}")]
    MalformedPayload(String),
    #[error("stub provider has no score for {0:?}")]
    StubMissingName(String),
    #[error("prompt did not contain a parseable feature list")]
    UnreadablePrompt,
}

/// Retrieval store failures.
#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("store manifest at {path} is invalid: {reason}")]
    BadManifest { path: String, reason: String },
    #[error("store was built with embedder {built:?} but queried with {queried:?}")]
    EmbedderMismatch { built: String, queried: String },
    #[error("embedding dimension {got} does not match store dimension {want}")]
    DimMismatch { got: usize, want: usize },
    #[error("chunker config invalid: {0}")]
    BadChunker(String),
    #[error("embedding backend failure: {0}")]
    Backend(String),
    #[error("store is empty")]
    EmptyStore,
}

/// Evaluation-side failures.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("auroc undefined: needs both classes present")]
    AurocUndefined,
    #[error("metric input lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("curve is empty")]
    EmptyCurve,
    #[error("refit failed: {0}")]
    Refit(String),
}

/// Top-level error for pipeline commands. The CLI maps `exit_code` onto the
/// process exit status: 1 config, 2 data, 3 provider, 4 solver.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    /// Stable process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Data(_) => 2,
            PipelineError::Io { .. } => 2,
            PipelineError::Retrieval(_) => 2,
            PipelineError::Score(e) => match e {
                ScoreError::Provider(_) | ScoreError::RetriesExhausted { .. } => 3,
                ScoreError::ContextFetch { .. } => 2,
                _ => 1,
            },
            PipelineError::Solver(e) => match e {
                SolverError::NonConvergence { .. } => 4,
                _ => 1,
            },
            PipelineError::Transform(e) => match e {
                TransformError::Solver(SolverError::NonConvergence { .. }) => 4,
                _ => 1,
            },
            PipelineError::Eval(_) => 1,
        }
    }
}
