//! Evaluation: classification/regression metrics, per-feature-count metric
//! curves read off a regularization path, win-ratio comparisons, feature
//! contribution summaries, and aggregation across splits.
//!
//! Metric curves are keyed by the number of active features. For a given
//! count the curve holds the best metric over every path entry attaining that
//! count. For small models (count at or below the refit threshold) the
//! predictions come from an l2-penalized logistic refit on the training data
//! restricted to the active set, with the ridge strength chosen by an
//! internal cross-validation over a small log-spaced grid.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::data::fold_assignments;
use crate::error::EvalError;
use crate::solver::{Family, RegularizationPath};

/// What a metric curve measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Misclassification,
    Auroc,
    Mse,
    Deviance,
}

impl MetricKind {
    pub fn lower_is_better(self) -> bool {
        !matches!(self, MetricKind::Auroc)
    }

    /// True when `a` is strictly better than `b` under this metric.
    pub fn better(self, a: f64, b: f64) -> bool {
        if self.lower_is_better() {
            a < b
        } else {
            a > b
        }
    }
}

/// Mean 0/1 loss at probability threshold 0.5; a prediction exactly at the
/// threshold counts as the positive class.
pub fn misclassification(probs: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    if probs.len() != y.len() {
        return Err(EvalError::LengthMismatch(probs.len(), y.len()));
    }
    if y.is_empty() {
        return Err(EvalError::LengthMismatch(0, 0));
    }
    let wrong = probs
        .iter()
        .zip(y.iter())
        .filter(|(&p, &yi)| {
            let pred = if p >= 0.5 { 1.0 } else { 0.0 };
            pred != yi
        })
        .count();
    Ok(wrong as f64 / y.len() as f64)
}

/// Area under the ROC curve by the rank-sum (Mann-Whitney) statistic with
/// midranks for ties: ties between a positive and a negative score count 1/2.
pub fn auroc(scores: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    if scores.len() != y.len() {
        return Err(EvalError::LengthMismatch(scores.len(), y.len()));
    }
    let n = y.len();
    let n_pos = y.iter().filter(|&&v| v == 1.0).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::AurocUndefined);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share the midrank.
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if y[idx] == 1.0 {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let np = n_pos as f64;
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// Mean squared error.
pub fn mse(pred: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    if pred.len() != y.len() || y.is_empty() {
        return Err(EvalError::LengthMismatch(pred.len(), y.len()));
    }
    Ok(pred
        .iter()
        .zip(y.iter())
        .map(|(&p, &yi)| (p - yi) * (p - yi))
        .sum::<f64>()
        / y.len() as f64)
}

/// Mean binomial deviance, -2 * mean log-likelihood, with probabilities
/// nudged away from {0,1} to keep logs finite.
pub fn binomial_deviance(probs: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    if probs.len() != y.len() || y.is_empty() {
        return Err(EvalError::LengthMismatch(probs.len(), y.len()));
    }
    let eps = 1e-12;
    let ll: f64 = probs
        .iter()
        .zip(y.iter())
        .map(|(&p, &yi)| {
            let p = p.clamp(eps, 1.0 - eps);
            yi * p.ln() + (1.0 - yi) * (1.0 - p).ln()
        })
        .sum();
    Ok(-2.0 * ll / y.len() as f64)
}

/// Dispatch on metric kind. `preds` are probabilities for classification
/// metrics and linear predictions for `Mse`.
pub fn metric_value(kind: MetricKind, preds: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    match kind {
        MetricKind::Misclassification => misclassification(preds, y),
        MetricKind::Auroc => auroc(preds, y),
        MetricKind::Mse => mse(preds, y),
        MetricKind::Deviance => binomial_deviance(preds, y),
    }
}

/// Metric value by number of active features. Counts are positive; count 0
/// (the null model) is never included.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricCurve {
    pub metric: MetricKind,
    pub points: BTreeMap<usize, f64>,
}

impl MetricCurve {
    pub fn new(metric: MetricKind) -> Self {
        MetricCurve {
            metric,
            points: BTreeMap::new(),
        }
    }

    /// Insert `value` at `count`, keeping whichever value is better. Returns
    /// true when the point was inserted or improved.
    pub fn merge_point(&mut self, count: usize, value: f64) -> bool {
        match self.points.get(&count) {
            Some(&old) if !self.metric.better(value, old) => false,
            _ => {
                self.points.insert(count, value);
                true
            }
        }
    }
}

/// A sparse model chosen to represent one feature count on a curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChosenModel {
    pub lambda_index: usize,
    pub lambda: f64,
    pub intercept: f64,
    /// (feature index, coefficient) pairs from the path entry.
    pub coefs: Vec<(usize, f64)>,
}

/// A metric curve together with the path entry behind each point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveDetail {
    pub curve: MetricCurve,
    pub models: BTreeMap<usize, ChosenModel>,
}

/// Configuration for the small-model logistic refit.
#[derive(Debug, Clone)]
pub struct RefitSpec<'a> {
    pub x_train: ArrayView2<'a, f64>,
    pub y_train: ArrayView1<'a, f64>,
    /// Refit applies to counts <= this.
    pub max_count: usize,
    /// Ridge strengths tried by the internal CV, in the order given.
    pub ridge_grid: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
}

/// Default ridge grid: 7 log-spaced strengths from 1e-3 to 1e3.
pub fn default_ridge_grid() -> Vec<f64> {
    (0..7).map(|i| 10f64.powi(i - 3)).collect()
}

/// Build the per-feature-count metric curve of a path on evaluation data.
///
/// Every path entry with a nonzero active count is evaluated; per count the
/// best metric wins and its model is recorded. When `refit` is given and the
/// path is binomial, entries with counts <= `refit.max_count` are scored with
/// an l2-logistic refit on the training data restricted to the entry's
/// active set (identical active sets share one refit).
pub fn curve_from_path(
    path: &RegularizationPath,
    x_eval: ArrayView2<f64>,
    y_eval: ArrayView1<f64>,
    kind: MetricKind,
    refit: Option<&RefitSpec>,
) -> Result<CurveDetail, EvalError> {
    let mut curve = MetricCurve::new(kind);
    let mut models: BTreeMap<usize, ChosenModel> = BTreeMap::new();
    let y_slice: Vec<f64> = y_eval.to_vec();
    let mut refit_cache: BTreeMap<Vec<usize>, f64> = BTreeMap::new();

    for i in 0..path.len() {
        let count = path.active_counts[i];
        if count == 0 {
            continue;
        }
        let active = path.active_set(i);
        let use_refit = match refit {
            Some(spec) => count <= spec.max_count && path.family == Family::Binomial,
            None => false,
        };
        let value = if use_refit {
            let spec = refit.unwrap();
            match refit_cache.get(&active) {
                Some(&v) => v,
                None => {
                    let preds = refit_predict(spec, &active, x_eval)?;
                    let v = metric_value(kind, &preds, &y_slice)?;
                    refit_cache.insert(active.clone(), v);
                    v
                }
            }
        } else {
            let preds = path.predict_at(i, x_eval);
            metric_value(kind, preds.as_slice().unwrap(), &y_slice)?
        };
        if curve.merge_point(count, value) {
            models.insert(
                count,
                ChosenModel {
                    lambda_index: i,
                    lambda: path.lambdas[i],
                    intercept: path.intercepts[i],
                    coefs: active
                        .iter()
                        .map(|&j| (j, path.coefs[i][j]))
                        .collect(),
                },
            );
        }
    }
    if curve.points.is_empty() {
        return Err(EvalError::EmptyCurve);
    }
    Ok(CurveDetail { curve, models })
}

pub(crate) fn gather_columns(x: ArrayView2<f64>, cols: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((x.nrows(), cols.len()));
    for (k, &j) in cols.iter().enumerate() {
        out.column_mut(k).assign(&x.column(j));
    }
    out
}

fn refit_predict(
    spec: &RefitSpec,
    active: &[usize],
    x_eval: ArrayView2<f64>,
) -> Result<Vec<f64>, EvalError> {
    let x_tr = gather_columns(spec.x_train, active);
    let x_ev = gather_columns(x_eval, active);
    let ridge = select_ridge(
        x_tr.view(),
        spec.y_train,
        &spec.ridge_grid,
        spec.folds,
        spec.seed,
    )?;
    let model = fit_ridge_logistic(x_tr.view(), spec.y_train, ridge)?;
    Ok(model.predict_proba(x_ev.view()).to_vec())
}

/// An l2-penalized logistic model (intercept unpenalized).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RidgeLogistic {
    pub intercept: f64,
    pub coefs: Vec<f64>,
    pub ridge: f64,
}

impl RidgeLogistic {
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Array1<f64> {
        let mut out = Array1::from_elem(x.nrows(), self.intercept);
        for (j, &b) in self.coefs.iter().enumerate() {
            if b != 0.0 {
                for (o, &v) in out.iter_mut().zip(x.column(j).iter()) {
                    *o += b * v;
                }
            }
        }
        out.mapv_inplace(|t| 1.0 / (1.0 + (-t).exp()));
        out
    }
}

/// Newton/IRLS fit of l2-penalized logistic regression:
/// minimize (1/n) sum_i [log(1+exp(eta_i)) - y_i eta_i] + (ridge/2) |beta|^2.
pub fn fit_ridge_logistic(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    ridge: f64,
) -> Result<RidgeLogistic, EvalError> {
    let (n, p) = x.dim();
    if y.len() != n {
        return Err(EvalError::LengthMismatch(y.len(), n));
    }
    let nf = n as f64;
    let dim = p + 1; // intercept first
    let mut theta = vec![0.0; dim];
    let clamp = 1e-5;
    for _ in 0..100 {
        // eta, mu, weights
        let mut grad = vec![0.0; dim];
        let mut hess = vec![vec![0.0; dim]; dim];
        for i in 0..n {
            let mut eta = theta[0];
            for j in 0..p {
                eta += theta[j + 1] * x[[i, j]];
            }
            let mu = (1.0 / (1.0 + (-eta).exp())).clamp(clamp, 1.0 - clamp);
            let s = mu * (1.0 - mu);
            let d = mu - y[i];
            grad[0] += d / nf;
            for j in 0..p {
                grad[j + 1] += x[[i, j]] * d / nf;
            }
            hess[0][0] += s / nf;
            for j in 0..p {
                let v = s * x[[i, j]] / nf;
                hess[0][j + 1] += v;
                hess[j + 1][0] += v;
                for k in j..p {
                    hess[j + 1][k + 1] += v * x[[i, k]];
                }
            }
        }
        // Mirror the upper triangle and add the ridge term (not on the
        // intercept).
        for j in 1..dim {
            for k in (j + 1)..dim {
                hess[k][j] = hess[j][k];
            }
        }
        for (j, g) in grad.iter_mut().enumerate().skip(1) {
            *g += ridge * theta[j];
            hess[j][j] += ridge;
        }
        let step = solve_spd(hess, grad.clone())
            .ok_or_else(|| EvalError::Refit("singular Newton system".to_string()))?;
        let mut max_step: f64 = 0.0;
        for j in 0..dim {
            theta[j] -= step[j];
            max_step = max_step.max(step[j].abs());
        }
        if max_step < 1e-10 {
            break;
        }
    }
    Ok(RidgeLogistic {
        intercept: theta[0],
        coefs: theta[1..].to_vec(),
        ridge,
    })
}

/// Cholesky solve of a symmetric positive-definite system; None if the
/// factorization breaks down.
fn solve_spd(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let nn = b.len();
    // In-place lower Cholesky.
    for j in 0..nn {
        let mut d = a[j][j];
        for k in 0..j {
            d -= a[j][k] * a[j][k];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let l = d.sqrt();
        a[j][j] = l;
        for i in (j + 1)..nn {
            let mut v = a[i][j];
            for k in 0..j {
                v -= a[i][k] * a[j][k];
            }
            a[i][j] = v / l;
        }
    }
    // Forward then backward substitution.
    for i in 0..nn {
        let mut v = b[i];
        for k in 0..i {
            v -= a[i][k] * b[k];
        }
        b[i] = v / a[i][i];
    }
    for i in (0..nn).rev() {
        let mut v = b[i];
        for k in (i + 1)..nn {
            v -= a[k][i] * b[k];
        }
        b[i] = v / a[i][i];
    }
    Some(b)
}

/// Pick a ridge strength by k-fold CV on deviance; ties keep the earlier
/// grid entry. Falls back to the middle of the grid if the data cannot be
/// folded (e.g. a class smaller than `folds`).
pub fn select_ridge(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<f64, EvalError> {
    if grid.is_empty() {
        return Err(EvalError::Refit("empty ridge grid".to_string()));
    }
    if grid.len() == 1 {
        return Ok(grid[0]);
    }
    let labels: Vec<u8> = y.iter().map(|&v| v as u8).collect();
    let assignment = match fold_assignments(y.len(), Some(&labels), folds, seed) {
        Ok(a) => a,
        Err(_) => return Ok(grid[grid.len() / 2]),
    };
    let mut best = (grid[0], f64::INFINITY);
    for &ridge in grid {
        let mut total = 0.0;
        for fold in 0..folds {
            let tr: Vec<usize> = (0..y.len()).filter(|&i| assignment[i] != fold).collect();
            let va: Vec<usize> = (0..y.len()).filter(|&i| assignment[i] == fold).collect();
            let x_tr = gather_rows(x, &tr);
            let y_tr = Array1::from_iter(tr.iter().map(|&i| y[i]));
            let x_va = gather_rows(x, &va);
            let y_va: Vec<f64> = va.iter().map(|&i| y[i]).collect();
            let model = fit_ridge_logistic(x_tr.view(), y_tr.view(), ridge)?;
            let preds = model.predict_proba(x_va.view());
            total += binomial_deviance(preds.as_slice().unwrap(), &y_va)?;
        }
        if total < best.1 {
            best = (ridge, total);
        }
    }
    Ok(best.0)
}

pub(crate) fn gather_rows(x: ArrayView2<f64>, rows: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((rows.len(), x.ncols()));
    for (k, &i) in rows.iter().enumerate() {
        out.row_mut(k).assign(&x.row(i));
    }
    out
}

/// Strict win counts between two curves over their common feature counts up
/// to `max_features`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct WinRatio {
    pub wins_a: usize,
    pub wins_b: usize,
    pub ties: usize,
}

impl WinRatio {
    /// wins_a / wins_b; reported as infinite when wins_b is zero.
    pub fn ratio(&self) -> f64 {
        if self.wins_b == 0 {
            f64::INFINITY
        } else {
            self.wins_a as f64 / self.wins_b as f64
        }
    }
}

pub fn win_ratio(a: &MetricCurve, b: &MetricCurve, max_features: usize) -> WinRatio {
    let mut out = WinRatio {
        wins_a: 0,
        wins_b: 0,
        ties: 0,
    };
    for (&count, &va) in &a.points {
        if count > max_features {
            continue;
        }
        if let Some(&vb) = b.points.get(&count) {
            if a.metric.better(va, vb) {
                out.wins_a += 1;
            } else if a.metric.better(vb, va) {
                out.wins_b += 1;
            } else {
                out.ties += 1;
            }
        }
    }
    out
}

/// Coefficient sign pattern of a feature across a set of models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignSummary {
    Positive,
    Negative,
    Mixed,
    Absent,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureContribution {
    pub name: String,
    /// Proportion of models in which the feature has a nonzero coefficient.
    pub proportion: f64,
    pub sign: SignSummary,
}

/// Proportion of models using each feature, with a sign summary. `models`
/// are sparse (index, coefficient) vectors over a shared feature space.
pub fn feature_contribution(
    models: &[Vec<(usize, f64)>],
    feature_names: &[String],
) -> Vec<FeatureContribution> {
    let p = feature_names.len();
    let mut hits = vec![0usize; p];
    let mut pos = vec![false; p];
    let mut neg = vec![false; p];
    for model in models {
        for &(j, b) in model {
            if b != 0.0 && j < p {
                hits[j] += 1;
                if b > 0.0 {
                    pos[j] = true;
                } else {
                    neg[j] = true;
                }
            }
        }
    }
    let total = models.len().max(1) as f64;
    (0..p)
        .map(|j| FeatureContribution {
            name: feature_names[j].clone(),
            proportion: hits[j] as f64 / total,
            sign: match (pos[j], neg[j]) {
                (true, true) => SignSummary::Mixed,
                (true, false) => SignSummary::Positive,
                (false, true) => SignSummary::Negative,
                (false, false) => SignSummary::Absent,
            },
        })
        .collect()
}

/// Mean and 5%/95% quantiles of a curve point across splits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregatePoint {
    pub mean: f64,
    pub q05: f64,
    pub q95: f64,
    /// How many splits attained this feature count.
    pub n: usize,
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q * (n as f64 - 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Aggregate curves from several splits: per feature count, the mean and the
/// 0.05/0.95 quantiles over the splits that attained that count.
pub fn aggregate_curves(curves: &[&MetricCurve]) -> BTreeMap<usize, AggregatePoint> {
    let mut by_count: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for curve in curves {
        for (&count, &value) in &curve.points {
            by_count.entry(count).or_default().push(value);
        }
    }
    by_count
        .into_iter()
        .map(|(count, mut values)| {
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            (
                count,
                AggregatePoint {
                    mean,
                    q05: quantile(&values, 0.05),
                    q95: quantile(&values, 0.95),
                    n: values.len(),
                },
            )
        })
        .collect()
}
