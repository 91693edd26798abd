//! Turning importance scores into penalty-weight vectors, and selecting the
//! transformation by cross-validation.
//!
//! Two parametric families are supported:
//!
//! * inverse importance: w_j = v_j^eta for eta in {0, 1, 2, ...}; eta = 0
//!   yields all-ones weights, i.e. the plain Lasso;
//! * rank ReLU: with ranks 1..p assigned in ascending score order (rank 1 =
//!   smallest score = most important, ties broken by original index),
//!   w_(rank) = relu(rank - (1 - gamma) * p) / (gamma * p) * (w_max - 1),
//!   so the top (1 - gamma) fraction of features is left unpenalized and the
//!   least important feature gets w_max - 1.
//!
//! `cv_select` fits the weighted path for every candidate on each fold-train
//! part, scores fold-validation metric curves keyed by active feature count,
//! and totals a loss per candidate. Because the candidate set always contains
//! eta = 0 and selection is an argmin, the chosen transform can never have a
//! higher CV loss than the plain Lasso: strategies that would hurt fall back.

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::FoldPlan;
use crate::error::TransformError;
use crate::eval::{gather_rows, metric_value, MetricCurve, MetricKind};
use crate::solver::{fit_path, Family, SolverConfig};

/// A penalty-weight transformation candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transform {
    InverseImportance { eta: u32 },
    Relu { gamma: f64, w_max: f64 },
}

impl Transform {
    pub fn apply(&self, scores: &[f64]) -> Result<Vec<f64>, TransformError> {
        match *self {
            Transform::InverseImportance { eta } => inverse_importance(scores, eta),
            Transform::Relu { gamma, w_max } => relu_transform(scores, gamma, w_max),
        }
    }

    /// Ordering key for tie-breaking: inverse-importance candidates before
    /// relu candidates, then smaller eta / smaller gamma.
    fn order_key(&self) -> (u8, f64) {
        match *self {
            Transform::InverseImportance { eta } => (0, eta as f64),
            Transform::Relu { gamma, .. } => (1, gamma),
        }
    }

    /// Short identifier used in file names and reports.
    pub fn id(&self) -> String {
        match *self {
            Transform::InverseImportance { eta } => format!("eta{eta}"),
            Transform::Relu { gamma, w_max } => format!("relu-g{gamma}-w{w_max}"),
        }
    }
}

/// w_j = v_j^eta. Scores must be strictly positive; eta = 0 returns exact
/// ones regardless of the scores.
pub fn inverse_importance(scores: &[f64], eta: u32) -> Result<Vec<f64>, TransformError> {
    if let Some(j) = scores.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(TransformError::NonPositiveScore(j));
    }
    if eta == 0 {
        return Ok(vec![1.0; scores.len()]);
    }
    Ok(scores.iter().map(|&v| v.powi(eta as i32)).collect())
}

/// Rank-based ReLU weights; see the module docs for the formula. `gamma` in
/// (0, 1], `w_max` > 1.
pub fn relu_transform(scores: &[f64], gamma: f64, w_max: f64) -> Result<Vec<f64>, TransformError> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(TransformError::BadGamma(gamma));
    }
    if !(w_max > 1.0) {
        return Err(TransformError::BadWMax(w_max));
    }
    if let Some(j) = scores.iter().position(|v| !v.is_finite()) {
        return Err(TransformError::NonPositiveScore(j));
    }
    let p = scores.len();
    let pf = p as f64;
    let mut order: Vec<usize> = (0..p).collect();
    // Ascending by score, ties by original index (sort is stable).
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut weights = vec![0.0; p];
    for (pos, &j) in order.iter().enumerate() {
        let rank = (pos + 1) as f64;
        weights[j] = (rank - (1.0 - gamma) * pf).max(0.0) / (gamma * pf) * (w_max - 1.0);
    }
    Ok(weights)
}

/// The default candidate family: inverse importance with eta = 0..=eta_max.
pub fn default_family(eta_max: u32) -> Vec<Transform> {
    (0..=eta_max)
        .map(|eta| Transform::InverseImportance { eta })
        .collect()
}

/// ReLU candidates over the standard gamma grid 0.1, 0.2, ..., 0.9.
pub fn relu_grid(w_max: f64) -> Vec<Transform> {
    (1..=9)
        .map(|i| Transform::Relu {
            gamma: i as f64 / 10.0,
            w_max,
        })
        .collect()
}

/// Loss used to compare candidates in `cv_select`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvLoss {
    /// Signed area between the candidate's fold-validation misclassification
    /// curve and the plain-Lasso curve of the same fold (negative = better
    /// than the baseline). The baseline's own loss is exactly zero.
    AreaVsLassoMisclass,
    /// Same, on AUROC (sign flipped so lower loss is still better).
    AreaVsLassoAuroc,
    /// Mean of the per-count best deviance values (MSE for gaussian);
    /// offered for regression tasks where the area losses do not apply.
    MeanDeviance,
}

impl CvLoss {
    pub fn metric_kind(self, family: Family) -> MetricKind {
        match self {
            CvLoss::AreaVsLassoMisclass => MetricKind::Misclassification,
            CvLoss::AreaVsLassoAuroc => MetricKind::Auroc,
            CvLoss::MeanDeviance => match family {
                Family::Binomial => MetricKind::Deviance,
                Family::Gaussian => MetricKind::Mse,
            },
        }
    }
}

/// Controls for `cv_select`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvConfig {
    pub loss: CvLoss,
    /// Curves are compared over feature counts 1..=max_features.
    pub max_features: usize,
    pub solver: SolverConfig,
}

/// Everything recorded for one candidate transform.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateReport {
    pub transform: Transform,
    /// One fold-validation metric curve per fold.
    pub fold_curves: Vec<MetricCurve>,
    pub fold_losses: Vec<f64>,
    pub total_loss: f64,
}

/// Output of `cv_select`: per-candidate curves and losses, the selected
/// transform, and the final weights it induces on the full score vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvReport {
    pub loss: CvLoss,
    pub metric: MetricKind,
    pub max_features: usize,
    pub candidates: Vec<CandidateReport>,
    pub selected_index: usize,
    /// Index of the eta = 0 (plain Lasso) candidate.
    pub baseline_index: usize,
    pub selected_weights: Vec<f64>,
}

impl CvReport {
    pub fn selected(&self) -> &Transform {
        &self.candidates[self.selected_index].transform
    }

    pub fn selected_loss(&self) -> f64 {
        self.candidates[self.selected_index].total_loss
    }

    pub fn baseline_loss(&self) -> f64 {
        self.candidates[self.baseline_index].total_loss
    }
}

/// Trapezoid integral of (candidate - baseline) over the feature counts both
/// curves attain within 1..=max_features, oriented so that lower is better.
/// Fewer than two common counts integrate to zero.
fn signed_area(
    candidate: &MetricCurve,
    baseline: &MetricCurve,
    max_features: usize,
    higher_is_better: bool,
) -> f64 {
    let common: Vec<usize> = candidate
        .points
        .keys()
        .filter(|&&c| c >= 1 && c <= max_features && baseline.points.contains_key(&c))
        .copied()
        .collect();
    let mut area = 0.0;
    for w in common.windows(2) {
        let (k0, k1) = (w[0], w[1]);
        let d0 = candidate.points[&k0] - baseline.points[&k0];
        let d1 = candidate.points[&k1] - baseline.points[&k1];
        area += (d0 + d1) / 2.0 * (k1 - k0) as f64;
    }
    if higher_is_better {
        -area
    } else {
        area
    }
}

/// Mean of the per-count values within 1..=max_features.
fn mean_level(curve: &MetricCurve, max_features: usize) -> f64 {
    let vals: Vec<f64> = curve
        .points
        .iter()
        .filter(|(&c, _)| c >= 1 && c <= max_features)
        .map(|(_, &v)| v)
        .collect();
    if vals.is_empty() {
        f64::INFINITY
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

/// Cross-validated transform selection.
///
/// For every candidate and fold, fits the weighted path on the fold-train
/// part and scores the fold-validation metric curve keyed by active feature
/// count, recording for each count the best metric over the lambdas that
/// attain it. Candidate losses are summed over folds; the argmin wins, with
/// ties broken toward smaller eta (or smaller gamma) and inverse-importance
/// before relu. An eta = 0 candidate is inserted if the family lacks one, so
/// the selected transform never has a higher CV loss than the plain Lasso.
pub fn cv_select(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    scores: &[f64],
    family: Family,
    family_spec: &[Transform],
    folds: &FoldPlan,
    cfg: &CvConfig,
) -> Result<CvReport, TransformError> {
    if family_spec.is_empty() {
        return Err(TransformError::EmptyFamily);
    }
    let p = x.ncols();
    if scores.len() != p {
        return Err(TransformError::ScoreLength {
            got: scores.len(),
            want: p,
        });
    }
    if folds.assignments.len() != x.nrows() {
        return Err(TransformError::FoldMismatch {
            got: folds.assignments.len(),
            want: x.nrows(),
        });
    }

    let mut candidates: Vec<Transform> = family_spec.to_vec();
    let baseline_index = match candidates
        .iter()
        .position(|t| matches!(t, Transform::InverseImportance { eta: 0 }))
    {
        Some(i) => i,
        None => {
            candidates.insert(0, Transform::InverseImportance { eta: 0 });
            0
        }
    };

    let metric = cfg.loss.metric_kind(family);

    // Fold-validation curves for every candidate.
    let mut all_curves: Vec<Vec<MetricCurve>> = Vec::with_capacity(candidates.len());
    for transform in &candidates {
        let weights = transform.apply(scores)?;
        let mut fold_curves = Vec::with_capacity(folds.k);
        for fold in 0..folds.k {
            let tr = folds.complement_indices(fold);
            let va = folds.fold_indices(fold);
            let x_tr = gather_rows(x, &tr);
            let y_tr = Array1::from_iter(tr.iter().map(|&i| y[i]));
            let x_va = gather_rows(x, &va);
            let y_va: Vec<f64> = va.iter().map(|&i| y[i]).collect();
            let path = fit_path(x_tr.view(), y_tr.view(), &weights, family, &cfg.solver)?;
            let mut curve = MetricCurve::new(metric);
            for i in 0..path.len() {
                let count = path.active_counts[i];
                if count == 0 {
                    continue;
                }
                let preds = path.predict_at(i, x_va.view());
                if let Ok(v) = metric_value(metric, preds.as_slice().unwrap(), &y_va) {
                    curve.merge_point(count, v);
                }
            }
            fold_curves.push(curve);
        }
        all_curves.push(fold_curves);
    }

    // Candidate losses against the per-fold baseline curves.
    let baseline_curves = all_curves[baseline_index].clone();
    let mut reports: Vec<CandidateReport> = Vec::with_capacity(candidates.len());
    for (c, transform) in candidates.iter().enumerate() {
        let fold_losses: Vec<f64> = (0..folds.k)
            .map(|f| match cfg.loss {
                CvLoss::AreaVsLassoMisclass => {
                    signed_area(&all_curves[c][f], &baseline_curves[f], cfg.max_features, false)
                }
                CvLoss::AreaVsLassoAuroc => {
                    signed_area(&all_curves[c][f], &baseline_curves[f], cfg.max_features, true)
                }
                CvLoss::MeanDeviance => mean_level(&all_curves[c][f], cfg.max_features),
            })
            .collect();
        let total_loss = fold_losses.iter().sum();
        reports.push(CandidateReport {
            transform: *transform,
            fold_curves: all_curves[c].clone(),
            fold_losses,
            total_loss,
        });
    }

    // Argmin with deterministic tie-breaking.
    let mut selected_index = 0;
    for c in 1..reports.len() {
        let (best, cand) = (&reports[selected_index], &reports[c]);
        let better = cand.total_loss < best.total_loss
            || (cand.total_loss == best.total_loss
                && cand.transform.order_key() < best.transform.order_key());
        if better {
            selected_index = c;
        }
    }

    let selected_weights = reports[selected_index].transform.apply(scores)?;
    Ok(CvReport {
        loss: cfg.loss,
        metric,
        max_features: cfg.max_features,
        candidates: reports,
        selected_index,
        baseline_index,
        selected_weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_folds, Dataset, TaskKind};
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eta_zero_is_exact_ones() {
        let v = [0.1, 0.73, 1.0, 2.5];
        let w = inverse_importance(&v, 0).unwrap();
        assert_eq!(w, vec![1.0; 4]);
    }

    #[test]
    fn inverse_importance_matches_direct_powers() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p = rng.gen_range(1..20);
            let v: Vec<f64> = (0..p).map(|_| rng.gen_range(0.05..3.0)).collect();
            let eta = rng.gen_range(0..6u32);
            let w = inverse_importance(&v, eta).unwrap();
            for j in 0..p {
                // Independent oracle: repeated multiplication.
                let mut expect = 1.0;
                for _ in 0..eta {
                    expect *= v[j];
                }
                assert_abs_diff_eq!(w[j], expect, epsilon = 1e-12 * expect.max(1.0));
            }
        }
    }

    #[test]
    fn inverse_importance_rejects_non_positive() {
        assert!(matches!(
            inverse_importance(&[0.5, 0.0], 2),
            Err(TransformError::NonPositiveScore(1))
        ));
        assert!(matches!(
            inverse_importance(&[-0.1], 1),
            Err(TransformError::NonPositiveScore(0))
        ));
    }

    #[test]
    fn relu_ten_feature_example() {
        // p=10, gamma=0.5, w_max=3: five most important get 0, the least
        // important gets w_max - 1 = 2.
        let v: Vec<f64> = (0..10).map(|j| 10.0 - j as f64).collect();
        let w = relu_transform(&v, 0.5, 3.0).unwrap();
        // Indices 5..=9 hold the five smallest scores (ranks 1..=5).
        for j in 5..10 {
            assert_eq!(w[j], 0.0, "rank <= 5 must be unpenalized (index {j})");
        }
        // Index 0 holds the largest score: rank 10 -> (10-5)/5 * 2 = 2.
        assert_abs_diff_eq!(w[0], 2.0, epsilon = 1e-12);
        // Index 4 holds rank 6 -> (6-5)/5 * 2 = 0.4.
        assert_abs_diff_eq!(w[4], 0.4, epsilon = 1e-12);
        for &wj in &w {
            assert!((0.0..=2.0).contains(&wj));
        }
    }

    #[test]
    fn relu_ties_break_by_original_index() {
        // All-equal scores: ranks follow original indices.
        let v = vec![1.0; 4];
        let w = relu_transform(&v, 0.5, 3.0).unwrap();
        // (1-gamma)p = 2: ranks 1,2 -> 0; rank 3 -> (1/2)*2 = 1; rank 4 -> 2.
        assert_eq!(w, vec![0.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn relu_gamma_boundary_and_validation() {
        // gamma = 1: nothing unpenalized except rank 0 cannot occur; rank 1
        // gets (1/p)(w_max-1).
        let v = [3.0, 1.0, 2.0];
        let w = relu_transform(&v, 1.0, 4.0).unwrap();
        assert_abs_diff_eq!(w[1], 1.0, epsilon = 1e-12); // rank 1: 1/3 * 3
        assert_abs_diff_eq!(w[2], 2.0, epsilon = 1e-12); // rank 2: 2/3 * 3
        assert_abs_diff_eq!(w[0], 3.0, epsilon = 1e-12); // rank 3: 3/3 * 3
        assert!(relu_transform(&v, 0.0, 4.0).is_err());
        assert!(relu_transform(&v, 1.1, 4.0).is_err());
        assert!(relu_transform(&v, 0.5, 1.0).is_err());
    }

    fn synth_classification(
        seed: u64,
        n: usize,
        p: usize,
        informative: usize,
    ) -> (Dataset, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, p), |_| rng.gen_range(-1.0..1.0));
        let mut y = ndarray::Array1::zeros(n);
        for i in 0..n {
            let t: f64 = (0..informative).map(|j| 1.5 * x[[i, j]]).sum();
            y[i] = if rng.gen_bool((1.0 / (1.0 + (-t).exp())).clamp(0.02, 0.98)) {
                1.0
            } else {
                0.0
            };
        }
        // Guarantee both classes.
        y[0] = 1.0;
        y[1] = 0.0;
        let names = (0..p).map(|j| format!("f{j}")).collect();
        let ds = Dataset::new(x, names, y, TaskKind::Classification, None).unwrap();
        // Informative scores: true features cheap, the rest expensive.
        let scores = (0..p)
            .map(|j| if j < informative { 0.2 } else { 1.0 })
            .collect();
        (ds, scores)
    }

    fn quick_cv_config() -> CvConfig {
        CvConfig {
            loss: CvLoss::AreaVsLassoMisclass,
            max_features: 30,
            solver: SolverConfig {
                n_lambda: 40,
                ..Default::default()
            },
        }
    }

    #[test]
    fn cv_select_never_loses_to_plain_lasso() {
        for seed in 0..5 {
            let (ds, scores) = synth_classification(seed, 60, 12, 3);
            let folds = make_folds(&ds, 4, seed).unwrap();
            let report = cv_select(
                ds.features.view(),
                ds.response.view(),
                &scores,
                Family::Binomial,
                &default_family(4),
                &folds,
                &quick_cv_config(),
            )
            .unwrap();
            assert!(
                report.selected_loss() <= report.baseline_loss(),
                "seed {seed}: selected {} > baseline {}",
                report.selected_loss(),
                report.baseline_loss()
            );
            // Area-vs-baseline loss of the baseline itself is exactly zero.
            assert_eq!(report.baseline_loss(), 0.0);
        }
    }

    #[test]
    fn cv_select_ties_fall_back_to_eta_zero() {
        // Constant scores: every eta yields weight vectors proportional to
        // all-ones, so the curves coincide and the tie goes to eta = 0.
        let (ds, _) = synth_classification(11, 50, 8, 2);
        let scores = vec![0.7; 8];
        let folds = make_folds(&ds, 4, 2).unwrap();
        let report = cv_select(
            ds.features.view(),
            ds.response.view(),
            &scores,
            Family::Binomial,
            &default_family(3),
            &folds,
            &quick_cv_config(),
        )
        .unwrap();
        assert_eq!(
            *report.selected(),
            Transform::InverseImportance { eta: 0 },
            "ties must break to the plain Lasso"
        );
        assert!(report.selected_weights.iter().all(|&w| w == 1.0));
    }

    #[test]
    fn cv_select_inserts_missing_baseline() {
        let (ds, scores) = synth_classification(13, 50, 8, 2);
        let folds = make_folds(&ds, 4, 3).unwrap();
        // Family without eta = 0.
        let family: Vec<Transform> = (1..=3)
            .map(|eta| Transform::InverseImportance { eta })
            .collect();
        let report = cv_select(
            ds.features.view(),
            ds.response.view(),
            &scores,
            Family::Binomial,
            &family,
            &folds,
            &quick_cv_config(),
        )
        .unwrap();
        assert_eq!(report.baseline_index, 0);
        assert_eq!(
            report.candidates[0].transform,
            Transform::InverseImportance { eta: 0 }
        );
        assert_eq!(report.candidates.len(), 4);
        assert!(report.selected_loss() <= report.baseline_loss());
    }

    #[test]
    fn cv_select_report_is_deterministic() {
        let (ds, scores) = synth_classification(17, 60, 10, 3);
        let folds = make_folds(&ds, 5, 4).unwrap();
        let run = || {
            let r = cv_select(
                ds.features.view(),
                ds.response.view(),
                &scores,
                Family::Binomial,
                &default_family(4),
                &folds,
                &quick_cv_config(),
            )
            .unwrap();
            serde_json::to_string(&r).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn cv_select_validates_inputs() {
        let (ds, scores) = synth_classification(19, 40, 6, 2);
        let folds = make_folds(&ds, 4, 5).unwrap();
        let cfg = quick_cv_config();
        assert!(matches!(
            cv_select(
                ds.features.view(),
                ds.response.view(),
                &scores,
                Family::Binomial,
                &[],
                &folds,
                &cfg
            ),
            Err(TransformError::EmptyFamily)
        ));
        assert!(matches!(
            cv_select(
                ds.features.view(),
                ds.response.view(),
                &scores[..3],
                Family::Binomial,
                &default_family(2),
                &folds,
                &cfg
            ),
            Err(TransformError::ScoreLength { .. })
        ));
    }

    #[test]
    fn informative_scores_get_selected_over_baseline() {
        // With strongly informative scores on sparse truth, some eta > 0
        // should win the CV on most seeds; at minimum it must never lose.
        let mut wins = 0;
        for seed in 0..4 {
            let (ds, scores) = synth_classification(100 + seed, 80, 30, 4);
            let folds = make_folds(&ds, 4, seed).unwrap();
            let report = cv_select(
                ds.features.view(),
                ds.response.view(),
                &scores,
                Family::Binomial,
                &default_family(4),
                &folds,
                &quick_cv_config(),
            )
            .unwrap();
            assert!(report.selected_loss() <= report.baseline_loss());
            if !matches!(report.selected(), Transform::InverseImportance { eta: 0 }) {
                wins += 1;
            }
        }
        assert!(
            wins >= 2,
            "informative scores should beat the baseline on some seeds (won {wins}/4)"
        );
    }
}
