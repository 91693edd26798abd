//! Tabular data loading, cleaning, standardization, and deterministic
//! splitting.
//!
//! Cleaning order is fixed: columns that are entirely missing are dropped
//! first, then any row that still contains a missing value is dropped. Labels
//! for classification tasks are mapped to {0, 1} by lexicographic order of the
//! two raw label strings. Standardization always derives its statistics from
//! the training part only.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::error::DataError;

/// Which kind of response the dataset carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Classification,
    Regression,
}

/// A cleaned numeric design matrix with a response vector.
///
/// Invariants (enforced by [`Dataset::new`]):
/// * every feature value is finite,
/// * feature names are unique and one per column,
/// * response length equals the row count,
/// * classification responses are exactly 0.0/1.0 with both classes present.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub feature_names: Vec<String>,
    pub response: Array1<f64>,
    pub task: TaskKind,
    /// For classification: the raw label mapped to 0.0 and the one mapped to
    /// 1.0, in that order.
    pub label_names: Option<[String; 2]>,
}

impl Dataset {
    pub fn new(
        features: Array2<f64>,
        feature_names: Vec<String>,
        response: Array1<f64>,
        task: TaskKind,
        label_names: Option<[String; 2]>,
    ) -> Result<Self, DataError> {
        let (n, p) = features.dim();
        if n == 0 {
            return Err(DataError::Empty);
        }
        if p == 0 {
            return Err(DataError::NoFeatures);
        }
        if feature_names.len() != p {
            return Err(DataError::ShapeMismatch {
                response: feature_names.len(),
                rows: p,
            });
        }
        if response.len() != n {
            return Err(DataError::ShapeMismatch {
                response: response.len(),
                rows: n,
            });
        }
        let mut seen = std::collections::BTreeSet::new();
        for name in &feature_names {
            if !seen.insert(name.clone()) {
                return Err(DataError::DuplicateFeature(name.clone()));
            }
        }
        for (j, col) in features.columns().into_iter().enumerate() {
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(DataError::NonFinite {
                    column: feature_names[j].clone(),
                    row: i,
                });
            }
        }
        if task == TaskKind::Classification {
            if response.iter().any(|&v| v != 0.0 && v != 1.0) {
                return Err(DataError::LabelCardinality(0));
            }
            let pos = response.iter().filter(|&&v| v == 1.0).count();
            if pos == 0 || pos == n {
                return Err(DataError::SingleClass);
            }
        }
        Ok(Dataset {
            features,
            feature_names,
            response,
            task,
            label_names,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Rows at `idx`, in the order given. Validates the classification
    /// invariant on the result.
    pub fn subset(&self, idx: &[usize]) -> Result<Dataset, DataError> {
        let p = self.n_features();
        let mut feats = Array2::zeros((idx.len(), p));
        let mut resp = Array1::zeros(idx.len());
        for (r, &i) in idx.iter().enumerate() {
            feats.row_mut(r).assign(&self.features.row(i));
            resp[r] = self.response[i];
        }
        Dataset::new(
            feats,
            self.feature_names.clone(),
            resp,
            self.task,
            self.label_names.clone(),
        )
    }
}

/// What `load_csv` dropped while cleaning.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct CleanReport {
    pub dropped_rows: usize,
    pub dropped_columns: Vec<String>,
}

fn is_missing(tok: &str) -> bool {
    let t = tok.trim();
    t.is_empty() || matches!(t.to_ascii_lowercase().as_str(), "na" | "nan" | "n/a" | "null")
}

/// Load a CSV with a header row. `label_column` names the response column;
/// every other column is a feature and must be numeric after cleaning.
pub fn load_csv(
    path: &Path,
    label_column: &str,
    task: TaskKind,
) -> Result<(Dataset, CleanReport), DataError> {
    let path_str = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| DataError::Csv {
            path: path_str.clone(),
            source: e,
        })?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| DataError::Csv {
            path: path_str.clone(),
            source: e,
        })?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| DataError::MissingLabelColumn(label_column.to_string()))?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| DataError::Csv {
            path: path_str.clone(),
            source: e,
        })?;
        rows.push(rec.iter().map(|s| s.to_string()).collect());
    }
    if rows.is_empty() {
        return Err(DataError::Empty);
    }

    // Pass 1: drop columns that are missing in every row.
    let n_cols = headers.len();
    let mut keep_col = vec![false; n_cols];
    for (c, keep) in keep_col.iter_mut().enumerate() {
        *keep = c == label_idx
            || rows
                .iter()
                .any(|r| r.get(c).map(|v| !is_missing(v)).unwrap_or(false));
    }
    let dropped_columns: Vec<String> = (0..n_cols)
        .filter(|&c| !keep_col[c])
        .map(|c| headers[c].clone())
        .collect();

    // Pass 2: drop rows that still have a missing value in any kept column.
    let mut kept_rows: Vec<&Vec<String>> = Vec::new();
    let mut dropped_rows = 0usize;
    for r in &rows {
        let complete = (0..n_cols)
            .filter(|&c| keep_col[c])
            .all(|c| r.get(c).map(|v| !is_missing(v)).unwrap_or(false));
        if complete {
            kept_rows.push(r);
        } else {
            dropped_rows += 1;
        }
    }
    if kept_rows.is_empty() {
        return Err(DataError::Empty);
    }

    let feature_cols: Vec<usize> = (0..n_cols)
        .filter(|&c| keep_col[c] && c != label_idx)
        .collect();
    if feature_cols.is_empty() {
        return Err(DataError::NoFeatures);
    }
    let feature_names: Vec<String> = feature_cols.iter().map(|&c| headers[c].clone()).collect();

    let n = kept_rows.len();
    let p = feature_cols.len();
    let mut features = Array2::zeros((n, p));
    for (i, row) in kept_rows.iter().enumerate() {
        for (j, &c) in feature_cols.iter().enumerate() {
            let raw = row[c].trim();
            features[[i, j]] = raw.parse::<f64>().map_err(|_| DataError::NonNumeric {
                column: headers[c].clone(),
                row: i,
                value: raw.to_string(),
            })?;
        }
    }

    let raw_labels: Vec<&str> = kept_rows.iter().map(|r| r[label_idx].trim()).collect();
    let (response, label_names) = match task {
        TaskKind::Regression => {
            let mut y = Array1::zeros(n);
            for (i, raw) in raw_labels.iter().enumerate() {
                y[i] = raw.parse::<f64>().map_err(|_| DataError::NonNumeric {
                    column: label_column.to_string(),
                    row: i,
                    value: raw.to_string(),
                })?;
            }
            (y, None)
        }
        TaskKind::Classification => {
            let mut distinct: Vec<&str> = raw_labels.clone();
            distinct.sort_unstable();
            distinct.dedup();
            if distinct.len() != 2 {
                return Err(DataError::LabelCardinality(distinct.len()));
            }
            let zero = distinct[0].to_string();
            let one = distinct[1].to_string();
            let mut y = Array1::zeros(n);
            for (i, raw) in raw_labels.iter().enumerate() {
                y[i] = if *raw == one { 1.0 } else { 0.0 };
            }
            (y, Some([zero, one]))
        }
    };

    let ds = Dataset::new(features, feature_names, response, task, label_names)?;
    Ok((
        ds,
        CleanReport {
            dropped_rows,
            dropped_columns,
        },
    ))
}

/// Column statistics used to standardize; derived from training data only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    /// Sample standard deviation per column; 1.0 for zero-variance columns.
    pub scales: Vec<f64>,
    /// Indices of columns whose training variance was zero.
    pub zero_variance: Vec<usize>,
}

/// Standardize `train` to mean 0 / sample sd 1 per column and apply the same
/// affine map to every dataset in `others`. Zero-variance columns get scale 1
/// and are flagged rather than divided by zero.
pub fn standardize(
    train: &Dataset,
    others: &[&Dataset],
) -> Result<(Dataset, Vec<Dataset>, Standardization), DataError> {
    for other in others {
        if other.feature_names != train.feature_names {
            return Err(DataError::NameMismatch);
        }
    }
    let n = train.n_rows();
    let p = train.n_features();
    let mut means = vec![0.0; p];
    let mut scales = vec![1.0; p];
    let mut zero_variance = Vec::new();
    for j in 0..p {
        let col = train.features.column(j);
        let mean = col.sum() / n as f64;
        means[j] = mean;
        if n > 1 {
            let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
            let sd = (ss / (n as f64 - 1.0)).sqrt();
            if sd > 0.0 {
                scales[j] = sd;
            } else {
                zero_variance.push(j);
            }
        } else {
            zero_variance.push(j);
        }
    }

    let apply = |d: &Dataset| -> Result<Dataset, DataError> {
        let mut f = d.features.clone();
        for j in 0..p {
            let m = means[j];
            let s = scales[j];
            f.column_mut(j).mapv_inplace(|v| (v - m) / s);
        }
        Dataset::new(
            f,
            d.feature_names.clone(),
            d.response.clone(),
            d.task,
            d.label_names.clone(),
        )
    };

    let train_std = apply(train)?;
    let mut others_std = Vec::with_capacity(others.len());
    for other in others {
        others_std.push(apply(other)?);
    }
    Ok((
        train_std,
        others_std,
        Standardization {
            means,
            scales,
            zero_variance,
        },
    ))
}

/// Per-row tag recording which side of a train/test split the row fell on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTag {
    Train,
    Test,
}

/// Deterministic train/test split. For classification with `stratified`,
/// each class contributes `round(class_n * test_fraction)` rows to the test
/// side, clamped so both sides keep at least one row per class.
pub fn split(
    data: &Dataset,
    test_fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<(Dataset, Dataset, Vec<SplitTag>), DataError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::BadTestFraction(test_fraction));
    }
    let n = data.n_rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tags = vec![SplitTag::Train; n];

    if stratified && data.task == TaskKind::Classification {
        for class in [0.0, 1.0] {
            let mut idx: Vec<usize> = (0..n).filter(|&i| data.response[i] == class).collect();
            if idx.len() < 2 {
                return Err(DataError::BadSplit(format!(
                    "class {class} has {} rows; stratified split needs at least 2",
                    idx.len()
                )));
            }
            idx.shuffle(&mut rng);
            let raw = (idx.len() as f64 * test_fraction).round() as usize;
            let take = raw.clamp(1, idx.len() - 1);
            for &i in idx.iter().take(take) {
                tags[i] = SplitTag::Test;
            }
        }
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let raw = (n as f64 * test_fraction).round() as usize;
        let take = raw.clamp(1, n - 1);
        for &i in idx.iter().take(take) {
            tags[i] = SplitTag::Test;
        }
    }

    let (train, test) = split_with_tags(data, &tags)?;
    Ok((train, test, tags))
}

/// Apply a fixed per-row tag vector (e.g. from a sidecar split file).
pub fn split_with_tags(
    data: &Dataset,
    tags: &[SplitTag],
) -> Result<(Dataset, Dataset), DataError> {
    if tags.len() != data.n_rows() {
        return Err(DataError::BadSplitFile {
            path: "<tags>".to_string(),
            reason: format!("{} tags for {} rows", tags.len(), data.n_rows()),
        });
    }
    let train_idx: Vec<usize> = (0..tags.len())
        .filter(|&i| tags[i] == SplitTag::Train)
        .collect();
    let test_idx: Vec<usize> = (0..tags.len())
        .filter(|&i| tags[i] == SplitTag::Test)
        .collect();
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(DataError::BadSplit(
            "split leaves one side empty".to_string(),
        ));
    }
    Ok((data.subset(&train_idx)?, data.subset(&test_idx)?))
}

/// Write one `train`/`test` line per row.
pub fn write_split_file(path: &Path, tags: &[SplitTag]) -> Result<(), DataError> {
    let mut out = String::new();
    for t in tags {
        out.push_str(match t {
            SplitTag::Train => "train\n",
            SplitTag::Test => "test\n",
        });
    }
    let mut f = std::fs::File::create(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    f.write_all(out.as_bytes()).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Read a sidecar split file: one `train` or `test` token per line.
pub fn read_split_file(path: &Path) -> Result<Vec<SplitTag>, DataError> {
    let text = std::fs::read_to_string(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut tags = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let tok = line.trim();
        if tok.is_empty() {
            continue;
        }
        tags.push(match tok {
            "train" => SplitTag::Train,
            "test" => SplitTag::Test,
            other => {
                return Err(DataError::BadSplitFile {
                    path: path.display().to_string(),
                    reason: format!("line {}: unexpected token {other:?}", i + 1),
                })
            }
        });
    }
    if tags.is_empty() {
        return Err(DataError::BadSplitFile {
            path: path.display().to_string(),
            reason: "no tags".to_string(),
        });
    }
    Ok(tags)
}

/// Cross-validation fold assignment: `assignments[i]` is the fold of row `i`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn fold_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn complement_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }
}

/// Deterministic k-fold assignment, stratified by class for classification.
/// Requires each class to have at least `k` rows so every fold sees both
/// classes.
pub fn make_folds(data: &Dataset, k: usize, seed: u64) -> Result<FoldPlan, DataError> {
    let labels: Option<Vec<u8>> = match data.task {
        TaskKind::Classification => Some(data.response.iter().map(|&v| v as u8).collect()),
        TaskKind::Regression => None,
    };
    let assignments = fold_assignments(data.n_rows(), labels.as_deref(), k, seed)?;
    Ok(FoldPlan { k, assignments })
}

/// Round-robin fold assignment over shuffled indices; per class when labels
/// are given. Exposed separately so evaluation code can fold a bare label
/// vector without building a `Dataset`.
pub fn fold_assignments(
    n: usize,
    labels: Option<&[u8]>,
    k: usize,
    seed: u64,
) -> Result<Vec<usize>, DataError> {
    if k < 2 || k > n {
        return Err(DataError::BadFolds {
            k,
            reason: format!("need 2 <= k <= n ({n})"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0usize; n];
    match labels {
        Some(lab) => {
            let mut classes: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
            for (i, &c) in lab.iter().enumerate() {
                classes.entry(c).or_default().push(i);
            }
            for (c, idx) in &classes {
                if idx.len() < k {
                    return Err(DataError::BadFolds {
                        k,
                        reason: format!("class {c} has only {} rows", idx.len()),
                    });
                }
            }
            for idx in classes.values() {
                let mut shuffled = idx.clone();
                shuffled.shuffle(&mut rng);
                for (pos, &i) in shuffled.iter().enumerate() {
                    assignments[i] = pos % k;
                }
            }
        }
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            for (pos, &i) in idx.iter().enumerate() {
                assignments[i] = pos % k;
            }
        }
    }
    Ok(assignments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn toy_classification(n_pos: usize, n_neg: usize) -> Dataset {
        let n = n_pos + n_neg;
        let feats = Array2::from_shape_fn((n, 3), |(i, j)| (i * 3 + j) as f64 * 0.1 + 1.0);
        let mut y = Array1::zeros(n);
        for i in 0..n_pos {
            y[i] = 1.0;
        }
        Dataset::new(
            feats,
            vec!["f0".into(), "f1".into(), "f2".into()],
            y,
            TaskKind::Classification,
            None,
        )
        .unwrap()
    }

    #[test]
    fn load_csv_drops_all_missing_column_then_incomplete_rows() {
        // Column "g2" is missing everywhere; row 2 is missing g1.
        let f = write_csv(
            "g1,g2,g3,label\n\
             1.0,,2.0,a\n\
             2.0,NA,3.0,b\n\
             ,nan,4.0,a\n\
             4.0,,5.0,b\n",
        );
        let (ds, report) =
            load_csv(f.path(), "label", TaskKind::Classification).unwrap();
        assert_eq!(report.dropped_columns, vec!["g2".to_string()]);
        assert_eq!(report.dropped_rows, 1);
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.feature_names, vec!["g1", "g3"]);
        // Lexicographic label mapping: "a" -> 0, "b" -> 1.
        assert_eq!(ds.label_names.as_ref().unwrap()[0], "a");
        assert_eq!(ds.response.to_vec(), vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn load_csv_rejects_three_label_values() {
        let f = write_csv("g1,label\n1,a\n2,b\n3,c\n");
        let err = load_csv(f.path(), "label", TaskKind::Classification).unwrap_err();
        assert!(matches!(err, DataError::LabelCardinality(3)));
    }

    #[test]
    fn load_csv_rejects_non_numeric_feature() {
        let f = write_csv("g1,label\noops,a\n2,b\n");
        let err = load_csv(f.path(), "label", TaskKind::Classification).unwrap_err();
        assert!(matches!(err, DataError::NonNumeric { .. }));
    }

    #[test]
    fn standardize_uses_sample_sd_and_train_stats_only() {
        let train = Dataset::new(
            Array2::from_shape_vec((3, 1), vec![1.0, 2.0, 3.0]).unwrap(),
            vec!["x".into()],
            Array1::from_vec(vec![0.0, 1.0, 1.0]),
            TaskKind::Classification,
            None,
        )
        .unwrap();
        let test = Dataset::new(
            Array2::from_shape_vec((2, 1), vec![4.0, 2.0]).unwrap(),
            vec!["x".into()],
            Array1::from_vec(vec![0.0, 1.0]),
            TaskKind::Classification,
            None,
        )
        .unwrap();
        let (tr, others, stats) = standardize(&train, &[&test]).unwrap();
        // Sample sd of [1,2,3] is exactly 1.
        assert_abs_diff_eq!(stats.means[0], 2.0);
        assert_abs_diff_eq!(stats.scales[0], 1.0);
        assert_eq!(tr.features.column(0).to_vec(), vec![-1.0, 0.0, 1.0]);
        // Test transformed with train stats, not its own.
        assert_eq!(others[0].features.column(0).to_vec(), vec![2.0, 0.0]);
    }

    #[test]
    fn standardize_flags_zero_variance_with_scale_one() {
        let train = Dataset::new(
            Array2::from_shape_vec((3, 2), vec![5.0, 1.0, 5.0, 2.0, 5.0, 3.0]).unwrap(),
            vec!["const".into(), "x".into()],
            Array1::from_vec(vec![0.0, 1.0, 1.0]),
            TaskKind::Classification,
            None,
        )
        .unwrap();
        let (tr, _, stats) = standardize(&train, &[]).unwrap();
        assert_eq!(stats.zero_variance, vec![0]);
        assert_abs_diff_eq!(stats.scales[0], 1.0);
        // Constant column becomes all zeros (centered), scale untouched.
        assert!(tr.features.column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stratified_split_preserves_small_class() {
        // 8 positives, 2 negatives, fraction 0.5: exactly 1 negative per side.
        let ds = toy_classification(8, 2);
        let (train, test, tags) = split(&ds, 0.5, 7, true).unwrap();
        assert_eq!(tags.len(), 10);
        let neg_train = train.response.iter().filter(|&&v| v == 0.0).count();
        let neg_test = test.response.iter().filter(|&&v| v == 0.0).count();
        assert_eq!(neg_train, 1);
        assert_eq!(neg_test, 1);
        assert_eq!(train.n_rows() + test.n_rows(), 10);
    }

    #[test]
    fn split_is_deterministic_in_seed() {
        let ds = toy_classification(10, 10);
        let (_, _, t1) = split(&ds, 0.3, 42, true).unwrap();
        let (_, _, t2) = split(&ds, 0.3, 42, true).unwrap();
        let (_, _, t3) = split(&ds, 0.3, 43, true).unwrap();
        assert_eq!(t1, t2);
        assert_ne!(t1, t3);
    }

    #[test]
    fn split_rejects_degenerate_fractions() {
        let ds = toy_classification(5, 5);
        assert!(split(&ds, 0.0, 1, true).is_err());
        assert!(split(&ds, 1.0, 1, true).is_err());
    }

    #[test]
    fn split_file_round_trip() {
        let ds = toy_classification(6, 6);
        let (_, _, tags) = split(&ds, 0.5, 3, true).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("split.txt");
        write_split_file(&path, &tags).unwrap();
        let back = read_split_file(&path).unwrap();
        assert_eq!(back, tags);
        let (tr1, te1) = split_with_tags(&ds, &tags).unwrap();
        let (tr2, te2) = split_with_tags(&ds, &back).unwrap();
        assert_eq!(tr1.features, tr2.features);
        assert_eq!(te1.features, te2.features);
    }

    #[test]
    fn folds_are_stratified_and_balanced() {
        let ds = toy_classification(5, 5);
        let plan = make_folds(&ds, 5, 11).unwrap();
        for fold in 0..5 {
            let idx = plan.fold_indices(fold);
            assert_eq!(idx.len(), 2);
            let pos = idx.iter().filter(|&&i| ds.response[i] == 1.0).count();
            assert_eq!(pos, 1, "fold {fold} must hold one of each class");
        }
    }

    #[test]
    fn folds_reject_class_smaller_than_k() {
        let ds = toy_classification(4, 8);
        let err = make_folds(&ds, 5, 0).unwrap_err();
        assert!(matches!(err, DataError::BadFolds { k: 5, .. }));
    }

    #[test]
    fn folds_deterministic_by_seed() {
        let ds = toy_classification(10, 10);
        let a = make_folds(&ds, 4, 9).unwrap();
        let b = make_folds(&ds, 4, 9).unwrap();
        assert_eq!(a.assignments, b.assignments);
    }

    #[test]
    fn dataset_rejects_single_class() {
        let feats = Array2::zeros((3, 1));
        let err = Dataset::new(
            feats,
            vec!["x".into()],
            Array1::from_vec(vec![1.0, 1.0, 1.0]),
            TaskKind::Classification,
            None,
        )
        .unwrap_err();
        assert!(matches!(err, DataError::SingleClass));
    }
}
