//! Browser playground for the score-weighted lasso.
//!
//! Every exported function is a pure string-in/string-out wrapper around the
//! core library so the whole demo surface is testable natively; the
//! `wasm-bindgen` attributes only add the JS glue when compiled for wasm.
//!
//! Build the browser bundle with:
//!
//! ```sh
//! wasm-pack build crates/demo --target web --out-dir static/pkg
//! ```
//!
//! then serve `crates/demo/static/` and open `index.html`.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use wasm_bindgen::prelude::wasm_bindgen;

use llm_lasso::data::{make_folds, Dataset, TaskKind};
use llm_lasso::solver::{fit_path, Family, RegularizationPath, SolverConfig};
use llm_lasso::transform::{cv_select, default_family, CvConfig, CvLoss, Transform};

/// Feature names for the built-in dataset; the first three carry signal.
const FEATURE_NAMES: [&str; 10] = [
    "TP53", "BRCA1", "EGFR", "MYC", "KRAS", "PTEN", "RB1", "AKT1", "VEGFA", "GAPDH",
];

/// Built-in penalty scores in [0.1, 1]: low (important) for the three
/// informative features, high for the rest.
const DEMO_SCORES: [f64; 10] = [0.10, 0.15, 0.20, 0.85, 0.90, 0.80, 0.95, 0.88, 0.92, 1.00];

const DEMO_ROWS: usize = 80;

/// The built-in scores shifted by the standard +2 offset, which keeps the
/// penalty ratios between features moderate when a score approaches zero.
fn shifted_demo_scores() -> Vec<f64> {
    DEMO_SCORES.iter().map(|v| v + 2.0).collect()
}

/// Deterministic two-class dataset: ten uniform features, a logistic label
/// driven by the first three with decaying strength.
fn demo_dataset() -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_817);
    let p = FEATURE_NAMES.len();
    let mut x = Array2::<f64>::zeros((DEMO_ROWS, p));
    let mut y = Array1::<f64>::zeros(DEMO_ROWS);
    let beta = [1.6, -1.2, 0.9];
    for i in 0..DEMO_ROWS {
        for j in 0..p {
            x[[i, j]] = rng.gen_range(-1.0..1.0);
        }
        let eta: f64 = (0..3).map(|j| beta[j] * x[[i, j]]).sum();
        let noise: f64 = rng.gen_range(-0.8..0.8);
        y[i] = if eta + noise > 0.0 { 1.0 } else { 0.0 };
    }
    Dataset::new(
        x,
        FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        y,
        TaskKind::Classification,
        None,
    )
    .expect("built-in dataset is valid")
}

fn demo_solver() -> SolverConfig {
    SolverConfig {
        n_lambda: 60,
        ..SolverConfig::default()
    }
}

fn err_json(message: &str) -> String {
    json!({"ok": false, "error": message}).to_string()
}

/// Parse a comma/whitespace separated list of strictly positive floats.
fn parse_score_list(text: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for token in text.split([',', ';', '\n', '\t', ' ']) {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        let v: f64 = token
            .parse()
            .map_err(|_| format!("'{token}' is not a number"))?;
        if !v.is_finite() || v <= 0.0 {
            return Err(format!("score {v} must be a finite positive number"));
        }
        out.push(v);
    }
    if out.len() < 2 {
        return Err("enter at least two scores".to_string());
    }
    Ok(out)
}

/// Transform explorer: apply one member of the transform families to a
/// user-supplied score list and return the penalty weights as JSON.
#[wasm_bindgen]
pub fn weights_json(scores_csv: &str, kind: &str, eta: u32, gamma: f64, w_max: f64) -> String {
    let scores = match parse_score_list(scores_csv) {
        Ok(s) => s,
        Err(e) => return err_json(&e),
    };
    let transform = match kind {
        "inverse_importance" => Transform::InverseImportance { eta },
        "relu" => Transform::Relu { gamma, w_max },
        other => return err_json(&format!("unknown transform kind '{other}'")),
    };
    match transform.apply(&scores) {
        Ok(weights) => json!({
            "ok": true,
            "label": transform.id(),
            "scores": scores,
            "weights": weights,
        })
        .to_string(),
        Err(e) => err_json(&e.to_string()),
    }
}

fn color(j: usize) -> String {
    format!("hsl({}, 70%, 42%)", (j * 137) % 360)
}

/// Render a coefficient-path chart as a standalone SVG string.
fn path_svg_string(path: &RegularizationPath, names: &[String], title: &str) -> String {
    let steps = path.len();
    let p = names.len();
    let (w, h) = (640.0, 360.0);
    let (ml, mr, mt, mb) = (52.0, 150.0, 30.0, 40.0);
    let max_abs = path
        .coefs
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1e-9);
    let px = |i: usize| ml + (w - ml - mr) * i as f64 / (steps - 1).max(1) as f64;
    let py = |v: f64| mt + (h - mt - mb) * (1.0 - (v + max_abs) / (2.0 * max_abs));

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" \
         font-family=\"sans-serif\" font-size=\"12\">"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"18\" font-size=\"14\" font-weight=\"bold\">{title}</text>",
        ml
    ));
    // Axes and the zero line.
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"#888\"/>",
        h - mb
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"#888\"/>",
        h - mb,
        w - mr
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{0:.2}\" x2=\"{1}\" y2=\"{0:.2}\" stroke=\"#bbb\" \
         stroke-dasharray=\"4 3\"/>",
        py(0.0),
        w - mr
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"#555\">strong penalty → weak</text>",
        ml + 4.0,
        h - mb + 16.0
    ));
    svg.push_str(&format!(
        "<text x=\"14\" y=\"{:.1}\" fill=\"#555\" transform=\"rotate(-90 14 {:.1})\">coefficient</text>",
        (h - mb + mt) / 2.0 + 30.0,
        (h - mb + mt) / 2.0 + 30.0
    ));
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"#555\">{max_abs:.2}</text><text x=\"{:.1}\" y=\"{:.1}\" fill=\"#555\">-{max_abs:.2}</text>",
        6.0, mt + 10.0, 6.0, h - mb
    ));

    // One polyline per feature that ever becomes active, plus a legend.
    let mut legend_y = mt + 8.0;
    for j in 0..p {
        let enters = path.coefs.iter().any(|c| c[j].abs() > 1e-10);
        if !enters {
            continue;
        }
        let pts: Vec<String> = (0..steps)
            .map(|i| format!("{:.2},{:.2}", px(i), py(path.coefs[i][j])))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\" points=\"{}\"/>",
            color(j),
            pts.join(" ")
        ));
        svg.push_str(&format!(
            "<line x1=\"{0:.1}\" y1=\"{1:.1}\" x2=\"{2:.1}\" y2=\"{1:.1}\" stroke=\"{3}\" \
             stroke-width=\"3\"/><text x=\"{4:.1}\" y=\"{5:.1}\">{6}</text>",
            w - mr + 10.0,
            legend_y,
            w - mr + 28.0,
            color(j),
            w - mr + 34.0,
            legend_y + 4.0,
            names[j]
        ));
        legend_y += 18.0;
    }
    svg.push_str("</svg>");
    svg
}

/// Path explorer: fit the weighted path on the built-in dataset using the
/// inverse-importance transform at the given exponent and return an SVG
/// chart of the coefficient paths.
#[wasm_bindgen]
pub fn demo_path_svg(eta: u32) -> String {
    let data = demo_dataset();
    let weights = match (Transform::InverseImportance { eta }).apply(&shifted_demo_scores()) {
        Ok(w) => w,
        Err(e) => return format!("<svg xmlns=\"http://www.w3.org/2000/svg\"><text x=\"10\" y=\"20\">{e}</text></svg>"),
    };
    match fit_path(
        data.features.view(),
        data.response.view(),
        &weights,
        Family::Binomial,
        &demo_solver(),
    ) {
        Ok(path) => path_svg_string(
            &path,
            &data.feature_names,
            &format!("Coefficient paths at eta = {eta}"),
        ),
        Err(e) => format!("<svg xmlns=\"http://www.w3.org/2000/svg\"><text x=\"10\" y=\"20\">{e}</text></svg>"),
    }
}

/// Transform-selection explorer: cross-validate the inverse-importance
/// family on the built-in dataset and report every candidate's loss.
#[wasm_bindgen]
pub fn demo_cv_json(eta_max: u32) -> String {
    let data = demo_dataset();
    let shifted = shifted_demo_scores();
    let folds = match make_folds(&data, 4, 99) {
        Ok(f) => f,
        Err(e) => return err_json(&e.to_string()),
    };
    let report = match cv_select(
        data.features.view(),
        data.response.view(),
        &shifted,
        Family::Binomial,
        &default_family(eta_max),
        &folds,
        &CvConfig {
            loss: CvLoss::AreaVsLassoMisclass,
            max_features: 8,
            solver: demo_solver(),
        },
    ) {
        Ok(r) => r,
        Err(e) => return err_json(&e.to_string()),
    };
    let candidates: Vec<serde_json::Value> = report
        .candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            json!({
                "label": c.transform.id(),
                "total_loss": c.total_loss,
                "selected": i == report.selected_index,
            })
        })
        .collect();
    json!({
        "ok": true,
        "feature_names": FEATURE_NAMES,
        "scores": DEMO_SCORES,
        "offset_scores": shifted,
        "candidates": candidates,
        "selected_label": report.selected().id(),
        "selected_weights": report.selected_weights,
    })
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use llm_lasso::transform::relu_transform;

    #[test]
    fn weights_json_applies_the_power_rule() {
        let out = weights_json("0.5, 2.0", "inverse_importance", 2, 0.5, 3.0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["ok"], true);
        assert_eq!(v["weights"][0], 0.25);
        assert_eq!(v["weights"][1], 4.0);
    }

    #[test]
    fn weights_json_matches_the_rank_rectifier() {
        let scores = [0.3, 0.9, 0.6, 0.1];
        let out = weights_json("0.3,0.9,0.6,0.1", "relu", 0, 0.5, 3.0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["ok"], true);
        let expect = relu_transform(&scores, 0.5, 3.0).unwrap();
        for (j, e) in expect.iter().enumerate() {
            assert!((v["weights"][j].as_f64().unwrap() - e).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_json_rejects_bad_input() {
        for (text, kind) in [
            ("abc", "inverse_importance"),
            ("1.0", "inverse_importance"),
            ("0.0, 1.0", "inverse_importance"),
            ("1.0, 2.0", "mystery"),
        ] {
            let v: serde_json::Value =
                serde_json::from_str(&weights_json(text, kind, 1, 0.5, 3.0)).unwrap();
            assert_eq!(v["ok"], false, "{text} / {kind} should be rejected");
            assert!(!v["error"].as_str().unwrap().is_empty());
        }
    }

    #[test]
    fn demo_dataset_is_deterministic_and_two_class() {
        let a = demo_dataset();
        let b = demo_dataset();
        assert_eq!(a.features, b.features);
        assert_eq!(a.response, b.response);
        let ones = a.response.iter().filter(|&&v| v == 1.0).count();
        assert!(ones >= 20 && ones <= DEMO_ROWS - 20, "classes unbalanced: {ones}");
    }

    #[test]
    fn path_chart_is_wellformed_and_depends_on_eta() {
        let flat = demo_path_svg(0);
        assert!(flat.starts_with("<svg"), "must be a standalone svg");
        assert!(flat.ends_with("</svg>"));
        assert!(flat.matches("<polyline").count() >= 3, "paths missing");
        assert_eq!(flat, demo_path_svg(0), "chart must be deterministic");
        assert_ne!(flat, demo_path_svg(4), "exponent must change the chart");
    }

    #[test]
    fn cv_report_selects_within_the_family() {
        let v: serde_json::Value = serde_json::from_str(&demo_cv_json(3)).unwrap();
        assert_eq!(v["ok"], true);
        let candidates = v["candidates"].as_array().unwrap();
        assert_eq!(candidates.len(), 4);
        let selected: Vec<&serde_json::Value> = candidates
            .iter()
            .filter(|c| c["selected"] == true)
            .collect();
        assert_eq!(selected.len(), 1, "exactly one winner");
        // The family includes the identity member, whose loss is zero by
        // construction, so the winner can never have positive loss.
        assert_eq!(candidates[0]["total_loss"], 0.0);
        assert!(selected[0]["total_loss"].as_f64().unwrap() <= 0.0);
        // The informative built-in scores should make a reliance-raising
        // exponent win on this dataset.
        assert_ne!(v["selected_label"], "eta0");
    }
}
