//! Adversarial feature-name corruption.
//!
//! Selected feature names are replaced with short random strings over the
//! base64 alphabet that collide with nothing the model could recognize:
//! not with any real identifier in the registry, any current feature name,
//! or any replacement already assigned.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::ScoreError;

const ALPHABET: &[u8; 64] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
const MIN_LEN: usize = 4;
const MAX_LEN: usize = 8;
const MAX_ATTEMPTS: usize = 10_000;

/// Replace the names at `targets` with fresh random identifiers.
///
/// Returns the full corrupted name vector plus the old-name → new-name map.
/// Deterministic for a given `(names, targets, registry, seed)`.
pub fn corrupt_names(
    names: &[String],
    targets: &[usize],
    registry: &BTreeSet<String>,
    seed: u64,
) -> Result<(Vec<String>, BTreeMap<String, String>), ScoreError> {
    let mut seen_targets = BTreeSet::new();
    for &t in targets {
        if t >= names.len() {
            return Err(ScoreError::BadBatchPlan(format!(
                "corruption target {t} out of range for {} names",
                names.len()
            )));
        }
        if !seen_targets.insert(t) {
            return Err(ScoreError::BadBatchPlan(format!(
                "corruption target {t} listed twice"
            )));
        }
    }
    let mut avoid: BTreeSet<String> = registry.clone();
    avoid.extend(names.iter().cloned());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corrupted = names.to_vec();
    let mut mapping = BTreeMap::new();
    // BTreeSet iteration gives ascending target order, keeping the RNG
    // stream independent of the caller's target ordering.
    for &t in &seen_targets {
        let mut replacement = None;
        for _ in 0..MAX_ATTEMPTS {
            let len = rng.gen_range(MIN_LEN..=MAX_LEN);
            let cand: String = (0..len)
                .map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())] as char)
                .collect();
            if !avoid.contains(&cand) {
                replacement = Some(cand);
                break;
            }
        }
        let Some(new_name) = replacement else {
            return Err(ScoreError::CorruptExhausted(MAX_ATTEMPTS));
        };
        avoid.insert(new_name.clone());
        mapping.insert(names[t].clone(), new_name.clone());
        corrupted[t] = new_name;
    }
    Ok((corrupted, mapping))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn corruption_is_deterministic_and_well_formed() {
        let original = names(&["TP53", "BRCA1", "EGFR", "KRAS"]);
        let registry: BTreeSet<String> = names(&["MYC", "PTEN"]).into_iter().collect();
        let (a, map_a) = corrupt_names(&original, &[1, 3], &registry, 11).unwrap();
        let (b, map_b) = corrupt_names(&original, &[3, 1], &registry, 11).unwrap();
        assert_eq!(a, b, "target order does not matter");
        assert_eq!(map_a, map_b);
        assert_eq!(a[0], "TP53");
        assert_eq!(a[2], "EGFR");
        for idx in [1usize, 3] {
            let new = &a[idx];
            assert!((4..=8).contains(&new.len()));
            assert!(new.bytes().all(|c| ALPHABET.contains(&c)));
            assert!(!registry.contains(new));
            assert!(!original.contains(new));
        }
        assert_ne!(a[1], a[3]);
        assert_eq!(map_a["BRCA1"], a[1]);
        assert_eq!(map_a["KRAS"], a[3]);
        // Different seed, different names.
        let (c, _) = corrupt_names(&original, &[1, 3], &registry, 12).unwrap();
        assert_ne!(a[1], c[1]);
    }

    #[test]
    fn bad_targets_are_rejected() {
        let original = names(&["A", "B"]);
        let registry = BTreeSet::new();
        assert!(corrupt_names(&original, &[2], &registry, 0).is_err());
        assert!(corrupt_names(&original, &[0, 0], &registry, 0).is_err());
    }
}
