//! Weighted Lasso driven by language-model feature scores.
//!
//! The crate covers the full workflow: collecting per-feature importance
//! scores from a model provider (or deterministic stub), turning them into
//! penalty factors through a cross-validated transformation step that can
//! always fall back to the plain Lasso, solving the weighted-l1 path by
//! coordinate descent for gaussian and binomial responses, grounding prompts
//! with an exact cosine-similarity retrieval store, and evaluating the
//! resulting sparse models against baselines.

pub mod baselines;
pub mod data;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod retrieval;
pub mod scores;
pub mod solver;
pub mod transform;
