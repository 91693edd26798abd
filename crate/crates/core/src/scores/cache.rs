//! On-disk cache of collected scores.
//!
//! One JSON file holds a list of entries keyed by (dataset id, template id,
//! model, trial) together with the exact feature-name list the scores were
//! collected for. A lookup only hits when the names match exactly, so a
//! reordered or renamed feature set never reuses stale scores.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::ScoreError;
use crate::scores::PenaltyScores;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CacheEntry {
    pub dataset_id: String,
    pub template_id: String,
    pub model: String,
    pub trial: u32,
    pub range: (f64, f64),
    pub feature_names: Vec<String>,
    pub values: Vec<f64>,
}

impl CacheEntry {
    fn key(&self) -> (&str, &str, &str, u32) {
        (
            &self.dataset_id,
            &self.template_id,
            &self.model,
            self.trial,
        )
    }
}

/// Append-or-replace JSON score cache.
#[derive(Debug, Clone)]
pub struct ScoreCache {
    pub path: PathBuf,
}

impl ScoreCache {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        ScoreCache { path: path.into() }
    }

    fn io_err(&self, reason: impl ToString) -> ScoreError {
        ScoreError::Cache {
            path: self.path.display().to_string(),
            reason: reason.to_string(),
        }
    }

    /// All entries; a missing file is an empty cache.
    pub fn load_entries(&self) -> Result<Vec<CacheEntry>, ScoreError> {
        if !self.path.exists() {
            return Ok(Vec::new());
        }
        let raw = std::fs::read_to_string(&self.path).map_err(|e| self.io_err(e))?;
        serde_json::from_str(&raw).map_err(|e| self.io_err(e))
    }

    /// Fetch cached scores; `None` unless the key and the exact
    /// feature-name list both match.
    pub fn lookup(
        &self,
        dataset_id: &str,
        template_id: &str,
        model: &str,
        trial: u32,
        feature_names: &[String],
    ) -> Result<Option<PenaltyScores>, ScoreError> {
        let entries = self.load_entries()?;
        for e in entries {
            if e.key() == (dataset_id, template_id, model, trial)
                && e.feature_names == feature_names
            {
                let scores = PenaltyScores::new(
                    e.values,
                    e.range,
                    e.template_id,
                    e.model,
                    e.trial,
                )
                .map_err(|err| self.io_err(format!("cached entry invalid: {err}")))?;
                return Ok(Some(scores));
            }
        }
        Ok(None)
    }

    /// Insert or replace entries for the given dataset/names, keeping the
    /// file sorted by key so rewrites are deterministic.
    pub fn store(
        &self,
        dataset_id: &str,
        feature_names: &[String],
        scores: &[PenaltyScores],
    ) -> Result<(), ScoreError> {
        let mut entries = self.load_entries()?;
        for s in scores {
            let fresh = CacheEntry {
                dataset_id: dataset_id.to_string(),
                template_id: s.template_id.clone(),
                model: s.model.clone(),
                trial: s.trial,
                range: s.range,
                feature_names: feature_names.to_vec(),
                values: s.values.clone(),
            };
            entries.retain(|e| !(e.key() == fresh.key() && e.feature_names == fresh.feature_names));
            entries.push(fresh);
        }
        entries.sort_by(|a, b| {
            a.key()
                .cmp(&b.key())
                .then_with(|| a.feature_names.cmp(&b.feature_names))
        });
        if let Some(dir) = self.path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir).map_err(|e| self.io_err(e))?;
            }
        }
        let body = serde_json::to_string_pretty(&entries).map_err(|e| self.io_err(e))?;
        std::fs::write(&self.path, body).map_err(|e| self.io_err(e))
    }
}

/// Convenience: path-based constructor.
impl From<&Path> for ScoreCache {
    fn from(path: &Path) -> Self {
        ScoreCache::new(path)
    }
}
