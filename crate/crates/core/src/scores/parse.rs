//! Parsing provider responses into per-feature scores.
//!
//! Responses are expected to contain one line per feature in the form
//! `**NAME**: VALUE`; the variant `**NAME:**  VALUE` (colon inside the
//! asterisks) is tolerated, as is surrounding prose, bullet prefixes, extra
//! whitespace, and a trailing reasoning line after each score. Values must
//! be plain decimals: scientific notation is rejected with the offending
//! names, as are values outside the declared range, duplicates, and missing
//! names.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::ScoreError;

/// Scores recovered from one response.
#[derive(Debug, Clone)]
pub struct ParsedScores {
    /// Score per expected feature name (always complete on success).
    pub by_name: BTreeMap<String, f64>,
    /// Well-formed score lines whose name was not in the expected list;
    /// these are skipped but counted so callers can log a warning.
    pub ignored_unexpected: usize,
}

enum Token {
    Plain(f64),
    Scientific,
    Unusable,
}

fn classify(token: &str) -> Token {
    if token.is_empty() {
        return Token::Unusable;
    }
    let has_digit = token.bytes().any(|b| b.is_ascii_digit());
    // Plain decimal: optional sign, digits, at most one dot.
    let body = token.strip_prefix(['+', '-']).unwrap_or(token);
    let plain = has_digit
        && !body.is_empty()
        && body.bytes().all(|b| b.is_ascii_digit() || b == b'.')
        && body.bytes().filter(|&b| b == b'.').count() <= 1;
    if plain {
        if let Ok(v) = token.parse::<f64>() {
            return Token::Plain(v);
        }
        return Token::Unusable;
    }
    // Scientific notation in any of its common shapes: 1e-2, 2.5E3,
    // 10**(-2), 10^-2.
    let exponentish = token.parse::<f64>().is_ok() && (token.contains('e') || token.contains('E'));
    if has_digit && (exponentish || token.contains("**") || token.contains('^')) {
        return Token::Scientific;
    }
    Token::Unusable
}

/// Scan a response for `**NAME**: VALUE` score lines and return the score
/// for every expected name.
///
/// Error precedence when a response is bad in several ways: duplicate names
/// first (reported as soon as a name is scored twice), then scientific
/// notation, then out-of-range values, then missing names. Each error carries
/// the offending names so retries and logs can say what went wrong.
pub fn parse_scores(
    raw: &str,
    expected: &[String],
    range: (f64, f64),
) -> Result<ParsedScores, ScoreError> {
    if !(range.0 < range.1) || !range.0.is_finite() || !range.1.is_finite() {
        return Err(ScoreError::BadRange(range.0, range.1));
    }
    let expected_set: BTreeSet<&str> = expected.iter().map(String::as_str).collect();
    let mut recorded: BTreeMap<String, f64> = BTreeMap::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut scientific: Vec<String> = Vec::new();
    let mut out_of_range: Vec<(String, f64)> = Vec::new();
    let mut ignored_unexpected = 0usize;

    let mut pos = 0usize;
    while let Some(rel) = raw[pos..].find("**") {
        let open = pos + rel;
        let after_open = open + 2;
        let Some(close_rel) = raw[after_open..].find("**") else {
            break;
        };
        let close = after_open + close_rel;
        let inner = raw[after_open..close].trim();
        // Where the value text begins, if this is a score marker at all.
        let value_from = if let Some(stripped) = inner.strip_suffix(':') {
            // Variant: **NAME:** value
            Some((stripped.trim_end(), close + 2))
        } else {
            // Variant: **NAME**: value (whitespace allowed before the colon)
            let rest = &raw[close + 2..];
            let ws = rest.len() - rest.trim_start_matches([' ', '\t']).len();
            rest[ws..]
                .starts_with(':')
                .then(|| (inner, close + 2 + ws + 1))
        };
        let Some((name, value_from)) = value_from else {
            // Plain bold text, not a score line; retry from just past this
            // opener so every `**` gets a chance to start a marker.
            pos = after_open;
            continue;
        };
        if name.is_empty() {
            pos = after_open;
            continue;
        }
        // Value token: skip spaces/tabs, take until whitespace, strip
        // trailing punctuation.
        let rest = &raw[value_from..];
        let ws = rest.len() - rest.trim_start_matches([' ', '\t']).len();
        let vstart = value_from + ws;
        let vrest = &raw[vstart..];
        let vlen = vrest
            .find(char::is_whitespace)
            .unwrap_or(vrest.len());
        let mut token = &vrest[..vlen];
        while let Some(t) = token.strip_suffix([',', ';', ')', ']', '.', '*']) {
            token = t;
        }
        // A value the model wrapped in bold or parens is still a value.
        while let Some(t) = token.strip_prefix(['*', '(', '[']) {
            token = t;
        }
        pos = vstart + vlen;

        if !expected_set.contains(name) {
            ignored_unexpected += 1;
            continue;
        }
        if !seen.insert(name.to_string()) {
            return Err(ScoreError::DuplicateName(name.to_string()));
        }
        match classify(token) {
            Token::Plain(v) => {
                if v >= range.0 && v <= range.1 {
                    recorded.insert(name.to_string(), v);
                } else {
                    out_of_range.push((name.to_string(), v));
                }
            }
            Token::Scientific => scientific.push(name.to_string()),
            Token::Unusable => {} // surfaces as a missing name below
        }
    }

    if !scientific.is_empty() {
        return Err(ScoreError::ScientificNotation(scientific));
    }
    if !out_of_range.is_empty() {
        return Err(ScoreError::OutOfRange(out_of_range));
    }
    let missing: Vec<String> = expected
        .iter()
        .filter(|n| !recorded.contains_key(n.as_str()))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(ScoreError::MissingNames(missing));
    }
    Ok(ParsedScores {
        by_name: recorded,
        ignored_unexpected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expect(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    const RANGE: (f64, f64) = (0.1, 1.0);

    #[test]
    fn parses_canonical_lines() {
        let raw = "**TP53**: 0.15\n**BRCA1**: 0.5\n**EGFR**: 1\n";
        let got = parse_scores(raw, &expect(&["TP53", "BRCA1", "EGFR"]), RANGE).unwrap();
        assert_eq!(got.by_name["TP53"], 0.15);
        assert_eq!(got.by_name["BRCA1"], 0.5);
        assert_eq!(got.by_name["EGFR"], 1.0);
        assert_eq!(got.ignored_unexpected, 0);
    }

    #[test]
    fn parses_colon_inside_asterisks_variant() {
        let raw = "**TP53:** 0.2\n**BRCA1:**0.9";
        let got = parse_scores(raw, &expect(&["TP53", "BRCA1"]), RANGE).unwrap();
        assert_eq!(got.by_name["TP53"], 0.2);
        assert_eq!(got.by_name["BRCA1"], 0.9);
    }

    #[test]
    fn tolerates_whitespace_bullets_and_reasoning() {
        let raw = "Here are the scores.\n\n- ** TP53 ** :  0.15, a key tumor suppressor\n\
                   * **BRCA1**:\t0.30 (DNA repair)\nSome closing remarks.";
        let got = parse_scores(raw, &expect(&["TP53", "BRCA1"]), RANGE).unwrap();
        assert_eq!(got.by_name["TP53"], 0.15);
        assert_eq!(got.by_name["BRCA1"], 0.3);
    }

    #[test]
    fn bold_prose_does_not_confuse_the_scanner() {
        let raw = "**Note** scores follow **carefully**\n**TP53**: 0.5\n";
        let got = parse_scores(raw, &expect(&["TP53"]), RANGE).unwrap();
        assert_eq!(got.by_name["TP53"], 0.5);
    }

    #[test]
    fn missing_name_is_reported_by_name() {
        let raw = "**TP53**: 0.5";
        let err = parse_scores(raw, &expect(&["TP53", "BRCA1"]), RANGE).unwrap_err();
        match err {
            ScoreError::MissingNames(names) => assert_eq!(names, vec!["BRCA1".to_string()]),
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn duplicate_name_is_an_error_even_with_equal_values() {
        let raw = "**TP53**: 0.5\n**TP53**: 0.5";
        let err = parse_scores(raw, &expect(&["TP53"]), RANGE).unwrap_err();
        assert!(matches!(err, ScoreError::DuplicateName(n) if n == "TP53"));
    }

    #[test]
    fn scientific_notation_is_rejected_with_names() {
        for raw in [
            "**TP53**: 1e-1\n**BRCA1**: 0.5",
            "**TP53**: 10**(-1)\n**BRCA1**: 0.5",
            "**TP53**: 10^-1\n**BRCA1**: 0.5",
        ] {
            let err = parse_scores(raw, &expect(&["TP53", "BRCA1"]), RANGE).unwrap_err();
            match err {
                ScoreError::ScientificNotation(names) => {
                    assert_eq!(names, vec!["TP53".to_string()], "raw: {raw}")
                }
                other => panic!("wrong error for {raw}: {other}"),
            }
        }
    }

    #[test]
    fn out_of_range_is_rejected_with_name_and_value() {
        let raw = "**TP53**: 1.5\n**BRCA1**: 0.5";
        let err = parse_scores(raw, &expect(&["TP53", "BRCA1"]), RANGE).unwrap_err();
        match err {
            ScoreError::OutOfRange(pairs) => assert_eq!(pairs, vec![("TP53".to_string(), 1.5)]),
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn range_bounds_are_inclusive() {
        let raw = "**A**: 0.1\n**B**: 1.0";
        let got = parse_scores(raw, &expect(&["A", "B"]), RANGE).unwrap();
        assert_eq!(got.by_name["A"], 0.1);
        assert_eq!(got.by_name["B"], 1.0);
    }

    #[test]
    fn unexpected_names_are_ignored_and_counted() {
        let raw = "**TP53**: 0.5\n**KRAS**: 0.3\n**MYC**: 0.2";
        let got = parse_scores(raw, &expect(&["TP53"]), RANGE).unwrap();
        assert_eq!(got.by_name.len(), 1);
        assert_eq!(got.ignored_unexpected, 2);
    }

    #[test]
    fn garbage_value_surfaces_as_missing() {
        let raw = "**TP53**: high\n**BRCA1**: 0.4";
        let err = parse_scores(raw, &expect(&["TP53", "BRCA1"]), RANGE).unwrap_err();
        assert!(matches!(err, ScoreError::MissingNames(n) if n == vec!["TP53".to_string()]));
    }

    #[test]
    fn trailing_punctuation_on_values_is_stripped() {
        let raw = "**A**: 0.5,\n**B**: 0.25.\n**C**: 0.75;";
        let got = parse_scores(raw, &expect(&["A", "B", "C"]), RANGE).unwrap();
        assert_eq!(got.by_name["A"], 0.5);
        assert_eq!(got.by_name["B"], 0.25);
        assert_eq!(got.by_name["C"], 0.75);
    }

    #[test]
    fn bold_wrapped_values_parse_as_plain_decimals() {
        let raw = "**TP53**: **0.5**\n**BRCA1**: (0.25)";
        let got = parse_scores(raw, &expect(&["TP53", "BRCA1"]), RANGE).unwrap();
        assert_eq!(got.by_name["TP53"], 0.5);
        assert_eq!(got.by_name["BRCA1"], 0.25);
    }

    #[test]
    fn display_formatted_floats_round_trip_exactly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let names: Vec<String> = (0..50).map(|i| format!("G{i}")).collect();
        for _ in 0..20 {
            let vals: Vec<f64> = (0..50).map(|_| rng.gen_range(0.1..=1.0)).collect();
            let raw: String = names
                .iter()
                .zip(&vals)
                .map(|(n, v)| format!("**{n}**: {v}\n"))
                .collect();
            let got = parse_scores(&raw, &names, RANGE).unwrap();
            for (n, v) in names.iter().zip(&vals) {
                assert_eq!(got.by_name[n], *v, "bit-exact round trip for {n}");
            }
        }
    }
}
