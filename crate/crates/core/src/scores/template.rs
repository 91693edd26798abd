//! Prompt templates and rendering.
//!
//! A template has a body with `{genes}` / `{category}` / `{broader_topic}` /
//! `{range_lo}` / `{range_hi}` placeholders and a block of formatting rules
//! that is appended verbatim so every response can be machine-parsed.

use serde::{Deserialize, Serialize};

use crate::error::ScoreError;

/// System message sent alongside every scoring prompt.
pub const SYSTEM_MESSAGE: &str =
    "you are an expert assistant with access to gene and cancer knowledge.";

/// Formatting rules appended to every built-in template. The `**NAME**:
/// VALUE` convention is what the response parser recognizes, and scientific
/// notation is banned because the parser only accepts plain decimals.
const FORMAT_RULES: &str = "\
Formatting rules:
1. Score representation: write each score as a plain decimal number (e.g., 0.5). \
Avoid scientific notation (e.g., 10**(-2) or 1e-2) and any extra formatting.
2. Include all features: assign a score to every name in the input list, in the \
input order, each exactly once.
3. Consistency: each score must immediately follow its name, with the name wrapped \
in double asterisks, one per line:
- **GENE NAME**: VALUE (float)
- Example: **AASS**: 0.15
4. After a score you may add at most one short line of reasoning.
Do not include disclaimers about lacking full data.";

const EMPIRICAL_BODY: &str = "\
**Background**: We are fitting a sparse (Lasso) classifier that distinguishes \
\"{category}\". Each feature below is a gene; your scores become per-gene penalty \
factors, so low scores keep a gene in the model and high scores push it out.

**Task**: Assign each gene in the following list a penalty score between {range_lo} \
and {range_hi}, based on its importance in distinguishing \"{category}\". A score \
near {range_lo} marks a gene that is highly predictive for this distinction, while \
a score near {range_hi} marks a gene of relatively minor importance. Rely only on \
established evidence or strong biological rationale rather than speculation, and \
expect only a limited subset of genes to be truly predictive: most genes should \
receive a score close to {range_hi}, and very few (maybe none) a score close to \
{range_lo}. If a gene is only generally relevant to {broader_topic} and does not \
specifically help distinguish \"{category}\", give it a penalty closer to {range_hi}.

The list of genes is [{genes}].";

const BAYESIAN_BODY: &str = "\
**Background**: We are fitting a Bayesian sparse regression that distinguishes \
\"{category}\", with an independent Laplace prior on each coefficient. Each feature \
below is a gene.

**Task**: For each gene in the following list, report the inverse prior scale you \
would place on its coefficient, as a penalty score between {range_lo} and \
{range_hi}. A gene you believe is strongly associated with this distinction \
deserves a wide prior, i.e. a low penalty near {range_lo}; a gene with no credible \
link deserves a prior tightly concentrated at zero, i.e. a high penalty near \
{range_hi}. Ground your beliefs in established evidence about {broader_topic} \
rather than speculation, and keep in mind that only a small minority of genes \
should earn a low penalty.

The list of genes is [{genes}].";

const RELU_FORM_BODY: &str = "\
**Background**: We are fitting an l1-penalized classifier that distinguishes \
\"{category}\", and your scores are post-processed by a rank-based rectifier \
before being used as penalty factors: the genes you rank best keep a penalty of \
zero, and penalties grow with rank after that. Each feature below is a gene.

**Task**: Provide a score between {range_lo} and {range_hi} for each gene in the \
following list — {range_lo} for the genes most useful in distinguishing \
\"{category}\", {range_hi} for genes with no relevance. Because only the ordering \
you induce matters, be deliberate about which genes you place in the best-ranked \
group, and reserve it for genes with established evidence rather than generic \
relevance to {broader_topic}.

The list of genes is [{genes}].";

const ADVERSARIAL_GAME_BODY: &str = "\
**Background**: Treat feature selection for distinguishing \"{category}\" as a \
game against an adversary: you spend a limited low-penalty budget across genes, \
and the adversary afterwards challenges every low penalty you cannot defend with \
biological evidence. Each feature below is a gene.

**Task**: Allocate each gene in the following list a penalty score between \
{range_lo} and {range_hi}. Give a penalty near {range_lo} only where the evidence \
that the gene helps distinguish \"{category}\" is strong enough to survive the \
adversary's challenge; give every gene you could not defend a penalty near \
{range_hi}. Generic relevance to {broader_topic} without a specific link to \
\"{category}\" loses the challenge.

The list of genes is [{genes}].";

const SMALL_SCALE_BODY: &str = "\
**Background**: We are fitting a sparse (Lasso) model for \"{category}\" on a \
small feature set, so coarse integer penalties are enough. Features may be genes \
or other tabular covariates.

**Task**: Provide penalty factors for each of the features in the following list. \
These penalty factors should be integers between {range_lo} and {range_hi} \
(inclusive), where {range_lo} marks a feature strongly associated with the \
outcome and {range_hi} marks a feature with minimal relevance. Rely on \
established evidence or strong rationale rather than speculation, and prefer \
features immediately predictive for this task over features only generally \
related to {broader_topic}.

The list of features is [{genes}].";

/// A scoring prompt: body with placeholders plus verbatim formatting rules.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: String,
    pub body: String,
    pub format_rules: String,
}

impl PromptTemplate {
    /// The built-in template ids.
    pub fn builtin_ids() -> [&'static str; 5] {
        [
            "empirical",
            "bayesian",
            "relu_form",
            "adversarial_game",
            "small_scale",
        ]
    }

    /// Look up a built-in template by id.
    pub fn builtin(id: &str) -> Result<PromptTemplate, ScoreError> {
        let body = match id {
            "empirical" => EMPIRICAL_BODY,
            "bayesian" => BAYESIAN_BODY,
            "relu_form" => RELU_FORM_BODY,
            "adversarial_game" => ADVERSARIAL_GAME_BODY,
            "small_scale" => SMALL_SCALE_BODY,
            _ => return Err(ScoreError::UnknownTemplate(id.to_string())),
        };
        Ok(PromptTemplate {
            id: id.to_string(),
            body: body.to_string(),
            format_rules: FORMAT_RULES.to_string(),
        })
    }

    /// Check the invariants rendering relies on. Custom templates must carry
    /// the gene-list and category placeholders, and the format rules must
    /// keep the `**NAME**: VALUE` convention the parser recognizes.
    pub fn validate(&self) -> Result<(), ScoreError> {
        if self.id.is_empty() {
            return Err(ScoreError::BadTemplate("empty template id".to_string()));
        }
        for needed in ["{genes}", "{category}"] {
            if !self.body.contains(needed) {
                return Err(ScoreError::BadTemplate(format!(
                    "body lacks required placeholder {needed}"
                )));
            }
        }
        if !self.format_rules.contains("**GENE NAME**: VALUE") {
            return Err(ScoreError::BadTemplate(
                "format rules lack the **GENE NAME**: VALUE convention".to_string(),
            ));
        }
        if !self.format_rules.contains("scientific notation") {
            return Err(ScoreError::BadTemplate(
                "format rules must ban scientific notation".to_string(),
            ));
        }
        Ok(())
    }
}

/// Render a prompt for one batch of feature names.
///
/// Retrieved context passages (if any) are deduplicated preserving first
/// occurrence and prepended; the body placeholders are substituted; the
/// format rules are appended verbatim.
pub fn render_prompt(
    template: &PromptTemplate,
    names: &[String],
    category: &str,
    broader_topic: &str,
    range: (f64, f64),
    context_docs: &[String],
) -> Result<String, ScoreError> {
    template.validate()?;
    if names.is_empty() {
        return Err(ScoreError::BadBatchPlan("empty batch".to_string()));
    }
    if !(range.0 < range.1) || !range.0.is_finite() || !range.1.is_finite() {
        return Err(ScoreError::BadRange(range.0, range.1));
    }
    let mut out = String::new();
    if !context_docs.is_empty() {
        let mut seen: Vec<&str> = Vec::new();
        let mut block = String::new();
        for doc in context_docs {
            let trimmed = doc.trim();
            if trimmed.is_empty() || seen.contains(&trimmed) {
                continue;
            }
            seen.push(trimmed);
            block.push_str("- ");
            block.push_str(trimmed);
            block.push('\n');
        }
        if !block.is_empty() {
            out.push_str("Retrieved context:\n");
            out.push_str(&block);
            out.push('\n');
        }
    }
    let body = template
        .body
        .replace("{genes}", &names.join(", "))
        .replace("{category}", category)
        .replace("{broader_topic}", broader_topic)
        .replace("{range_lo}", &format!("{}", range.0))
        .replace("{range_hi}", &format!("{}", range.1));
    out.push_str(&body);
    out.push_str("\n\n");
    out.push_str(&template.format_rules);
    Ok(out)
}
