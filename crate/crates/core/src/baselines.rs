//! Reference feature-selection methods to compare the penalty-guided model
//! against.
//!
//! Every method produces a best-first feature ranking on the training data;
//! a performance curve is then traced by refitting an l2-regularized
//! logistic model on the top-1, top-2, … features and scoring it on held-out
//! data. All methods here assume a binary 0/1 response.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{EvalError, SolverError};
use crate::eval::{
    fit_ridge_logistic, gather_columns, metric_value, select_ridge, MetricCurve, MetricKind,
};
use crate::solver::{fit_path, Family, SolverConfig};

/// The reference selection methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    /// Rank by mutual information between the binned feature and the label.
    MutualInfo,
    /// Recursive feature elimination with an l2-logistic model, dropping the
    /// 10% of surviving features with the smallest |coefficient| each round.
    Rfe,
    /// Greedy max relevance (MI) minus mean redundancy (|Pearson| with the
    /// already-selected set).
    Mrmr,
    /// Uniformly random ranking.
    Random,
    /// Order of entry along an unweighted lasso path.
    Lasso,
}

impl BaselineMethod {
    pub fn id(self) -> &'static str {
        match self {
            BaselineMethod::MutualInfo => "mutual_info",
            BaselineMethod::Rfe => "rfe",
            BaselineMethod::Mrmr => "mrmr",
            BaselineMethod::Random => "random",
            BaselineMethod::Lasso => "lasso",
        }
    }

    pub fn all() -> [BaselineMethod; 5] {
        [
            BaselineMethod::MutualInfo,
            BaselineMethod::Rfe,
            BaselineMethod::Mrmr,
            BaselineMethod::Random,
            BaselineMethod::Lasso,
        ]
    }
}

/// Number of equal-width bins used to discretize features for MI.
const MI_BINS: usize = 10;
/// Fraction of surviving features RFE drops per round (at least one).
const RFE_DROP_FRACTION: f64 = 0.1;
/// Ridge strength for the internal RFE fits; selection only needs
/// coefficient ordering, not a tuned model.
const RFE_RIDGE: f64 = 1e-3;

fn bin_feature(col: ArrayView1<f64>) -> Vec<usize> {
    let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![0; col.len()];
    }
    let width = (hi - lo) / MI_BINS as f64;
    col.iter()
        .map(|&v| (((v - lo) / width) as usize).min(MI_BINS - 1))
        .collect()
}

/// Mutual information (nats) between a binned feature and the binary label.
pub fn mutual_information(col: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
    let n = col.len();
    if n == 0 {
        return 0.0;
    }
    let bins = bin_feature(col);
    let mut joint = [[0usize; 2]; MI_BINS];
    let mut marg_bin = [0usize; MI_BINS];
    let mut marg_y = [0usize; 2];
    for (b, &yy) in bins.iter().zip(y.iter()) {
        let c = if yy >= 0.5 { 1 } else { 0 };
        joint[*b][c] += 1;
        marg_bin[*b] += 1;
        marg_y[c] += 1;
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for b in 0..MI_BINS {
        for c in 0..2 {
            if joint[b][c] == 0 {
                continue;
            }
            let pj = joint[b][c] as f64 / nf;
            let pb = marg_bin[b] as f64 / nf;
            let py = marg_y[c] as f64 / nf;
            mi += pj * (pj / (pb * py)).ln();
        }
    }
    mi.max(0.0)
}

/// Pearson correlation; 0 when either side has zero variance.
pub fn pearson(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let n = a.len() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let ma = a.sum() / n;
    let mb = b.sum() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (&x, &y) in a.iter().zip(b.iter()) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va <= 0.0 || vb <= 0.0 {
        return 0.0;
    }
    cov / (va.sqrt() * vb.sqrt())
}

fn check_binary(y: ArrayView1<f64>) -> Result<(), EvalError> {
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(EvalError::Refit(
            "baseline rankings require a 0/1 response".to_string(),
        ));
    }
    Ok(())
}

fn rank_mutual_info(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Vec<usize> {
    let p = x.ncols();
    let mut scored: Vec<(usize, f64)> = (0..p)
        .map(|j| (j, mutual_information(x.column(j), y)))
        .collect();
    // Descending MI, ties by original index.
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.into_iter().map(|(j, _)| j).collect()
}

fn rank_mrmr(x: ArrayView2<f64>, y: ArrayView1<f64>, limit: usize) -> Vec<usize> {
    let p = x.ncols();
    let limit = limit.min(p);
    let relevance: Vec<f64> = (0..p).map(|j| mutual_information(x.column(j), y)).collect();
    let mut selected: Vec<usize> = Vec::with_capacity(limit);
    let mut remaining: Vec<usize> = (0..p).collect();
    // Running sum of |corr| with the selected set, per remaining feature.
    let mut redundancy = vec![0.0f64; p];
    while selected.len() < limit && !remaining.is_empty() {
        let mut best_pos = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (pos, &j) in remaining.iter().enumerate() {
            let red = if selected.is_empty() {
                0.0
            } else {
                redundancy[j] / selected.len() as f64
            };
            let score = relevance[j] - red;
            if score > best_score {
                best_score = score;
                best_pos = pos;
            }
        }
        let chosen = remaining.remove(best_pos);
        selected.push(chosen);
        for &j in &remaining {
            redundancy[j] += pearson(x.column(j), x.column(chosen)).abs();
        }
    }
    // Features past the greedy horizon keep index order at the tail.
    selected.extend(remaining);
    selected
}

fn rank_rfe(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<Vec<usize>, EvalError> {
    let p = x.ncols();
    let mut surviving: Vec<usize> = (0..p).collect();
    let mut eliminated: Vec<usize> = Vec::with_capacity(p); // worst first
    while !surviving.is_empty() {
        if surviving.len() == 1 {
            eliminated.push(surviving.pop().unwrap());
            break;
        }
        let xs = gather_columns(x, &surviving);
        let model = fit_ridge_logistic(xs.view(), y, RFE_RIDGE)?;
        let mut order: Vec<(usize, f64)> = (0..surviving.len())
            .map(|local| (local, model.coefs[local].abs()))
            .collect();
        // Ascending |coef|, ties by original feature index.
        order.sort_by(|a, b| {
            a.1.partial_cmp(&b.1)
                .unwrap()
                .then(surviving[a.0].cmp(&surviving[b.0]))
        });
        let drop_n = ((surviving.len() as f64 * RFE_DROP_FRACTION).ceil() as usize)
            .max(1)
            .min(surviving.len() - 1);
        let dropped_locals: Vec<usize> = order[..drop_n].iter().map(|&(l, _)| l).collect();
        let mut dropped: Vec<usize> = dropped_locals.iter().map(|&l| surviving[l]).collect();
        // Record worst-first within the round (smallest |coef| first).
        eliminated.append(&mut dropped);
        let drop_set: std::collections::BTreeSet<usize> =
            dropped_locals.into_iter().collect();
        surviving = surviving
            .iter()
            .enumerate()
            .filter(|(l, _)| !drop_set.contains(l))
            .map(|(_, &j)| j)
            .collect();
    }
    eliminated.reverse(); // best-first
    Ok(eliminated)
}

fn rank_random(p: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..p).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    order
}

fn rank_lasso(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<Vec<usize>, SolverError> {
    let p = x.ncols();
    let weights = vec![1.0; p];
    let cfg = SolverConfig::default();
    let path = fit_path(x, y, &weights, Family::Binomial, &cfg)?;
    // First lambda index at which each feature becomes active.
    let mut entry = vec![usize::MAX; p];
    for (i, coefs) in path.coefs.iter().enumerate() {
        for (j, &c) in coefs.iter().enumerate() {
            if c != 0.0 && entry[j] == usize::MAX {
                entry[j] = i;
            }
        }
    }
    // Magnitude at the densest end breaks entry ties; never-active features
    // trail in index order.
    let last = path.coefs.last().expect("path has at least one entry");
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        entry[a]
            .cmp(&entry[b])
            .then_with(|| {
                last[b]
                    .abs()
                    .partial_cmp(&last[a].abs())
                    .expect("coefficients are finite")
            })
            .then(a.cmp(&b))
    });
    Ok(order)
}

/// Best-first feature ranking on training data. `seed` only affects
/// [`BaselineMethod::Random`]; `limit` bounds the greedy horizon of mRMR
/// (other methods always rank everything).
pub fn rank_features(
    method: BaselineMethod,
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    seed: u64,
    limit: usize,
) -> Result<Vec<usize>, EvalError> {
    check_binary(y)?;
    match method {
        BaselineMethod::MutualInfo => Ok(rank_mutual_info(x, y)),
        BaselineMethod::Mrmr => Ok(rank_mrmr(x, y, limit)),
        BaselineMethod::Rfe => rank_rfe(x, y),
        BaselineMethod::Random => Ok(rank_random(x.ncols(), seed)),
        BaselineMethod::Lasso => {
            rank_lasso(x, y).map_err(|e| EvalError::Refit(format!("lasso ranking failed: {e}")))
        }
    }
}

/// Refit policy for tracing a ranking's performance curve.
#[derive(Debug, Clone)]
pub struct BaselineCurveConfig {
    pub max_features: usize,
    pub ridge_grid: Vec<f64>,
    pub refit_folds: usize,
    pub seed: u64,
}

/// Trace metric-vs-feature-count for one ranking: for each count k, refit an
/// l2-logistic model on the top-k features of the ranking (ridge chosen by
/// internal cross-validation on the training set) and evaluate on the
/// held-out set.
pub fn baseline_curve(
    ranking: &[usize],
    x_train: ArrayView2<f64>,
    y_train: ArrayView1<f64>,
    x_eval: ArrayView2<f64>,
    y_eval: ArrayView1<f64>,
    kind: MetricKind,
    cfg: &BaselineCurveConfig,
) -> Result<MetricCurve, EvalError> {
    check_binary(y_train)?;
    check_binary(y_eval)?;
    let p = x_train.ncols();
    if ranking.len() > p || ranking.iter().any(|&j| j >= p) {
        return Err(EvalError::Refit("ranking indexes out of range".to_string()));
    }
    let mut curve = MetricCurve::new(kind);
    let y_eval_slice: Vec<f64> = y_eval.iter().cloned().collect();
    let upto = cfg.max_features.min(ranking.len());
    for count in 1..=upto {
        let subset = &ranking[..count];
        let xs_train = gather_columns(x_train, subset);
        let ridge = select_ridge(
            xs_train.view(),
            y_train,
            &cfg.ridge_grid,
            cfg.refit_folds,
            cfg.seed,
        )?;
        let model = fit_ridge_logistic(xs_train.view(), y_train, ridge)?;
        let xs_eval = gather_columns(x_eval, subset);
        let probs: Array1<f64> = model.predict_proba(xs_eval.view());
        let value = metric_value(kind, probs.as_slice().unwrap(), &y_eval_slice)?;
        curve.merge_point(count, value);
    }
    if curve.points.is_empty() {
        return Err(EvalError::EmptyCurve);
    }
    Ok(curve)
}
