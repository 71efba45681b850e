//! Controlled corruption of gold targets, used to script mock replies with a
//! known number of each error type.
//!
//! Error sites are drawn without replacement over the whole corpus, so the
//! realized counts are `round(rate * sites)` exactly.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use redactkit_core::corpus::Corpus;
use redactkit_core::masking::{parse_masked, TokenKind};
use redactkit_core::taxonomy::{PiiLabel, Placeholder, PlaceholderStyle};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    /// Share of gold placeholders left as the original surface text.
    pub missed: f64,
    /// Share of gold placeholders given a different label.
    pub mislabel: f64,
    /// Share of eligible plain words replaced by a placeholder.
    pub spurious: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InjectionLog {
    pub gold_placeholders: usize,
    pub eligible_words: usize,
    pub target_tokens: usize,
    pub missed: usize,
    pub mislabeled: usize,
    pub spurious: usize,
}

const SPURIOUS_LABELS: [PiiLabel; 3] = [PiiLabel::City, PiiLabel::GivenName, PiiLabel::Country];

#[derive(Clone, Copy)]
enum Action {
    Miss,
    Relabel,
    Spurious,
}

/// Returns corrupted predictions keyed by record id, plus the exact counts.
///
/// Only records with a target are included. Eligible words are alphabetic
/// plain tokens whose neighbours are not placeholders, so each injected
/// error stays isolated and aligns as a single event.
pub fn inject_errors(corpus: &Corpus, rates: ErrorRates, seed: u64) -> (HashMap<String, String>, InjectionLog) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = InjectionLog::default();
    let mut placeholders = Vec::new();
    let mut words = Vec::new();
    let parsed: Vec<_> = corpus
        .records
        .iter()
        .filter_map(|r| r.target_text.as_deref().map(|t| (r, t, parse_masked(t))))
        .collect();
    for (ri, (_, _, seq)) in parsed.iter().enumerate() {
        log.target_tokens += seq.len();
        for (ti, t) in seq.tokens.iter().enumerate() {
            if t.is_placeholder() {
                placeholders.push((ri, ti));
                continue;
            }
            let near_mask = |j: Option<usize>| j.and_then(|j| seq.tokens.get(j)).is_some_and(|n| n.is_placeholder());
            if t.text.chars().all(char::is_alphabetic) && !near_mask(ti.checked_sub(1)) && !near_mask(Some(ti + 1)) {
                words.push((ri, ti));
            }
        }
    }
    log.gold_placeholders = placeholders.len();
    log.eligible_words = words.len();

    let count = |rate: f64, n: usize| ((rate.clamp(0.0, 1.0) * n as f64).round() as usize).min(n);
    placeholders.shuffle(&mut rng);
    words.shuffle(&mut rng);
    let n_miss = count(rates.missed, placeholders.len());
    let n_relabel = count(rates.mislabel, placeholders.len()).min(placeholders.len() - n_miss);
    // spurious sites must not touch each other either
    let mut taken: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
    let mut spurious = Vec::new();
    let n_spurious = count(rates.spurious, words.len());
    for &(ri, ti) in &words {
        if spurious.len() == n_spurious {
            break;
        }
        if (ti > 0 && taken.contains(&(ri, ti - 1))) || taken.contains(&(ri, ti + 1)) {
            continue;
        }
        taken.insert((ri, ti));
        spurious.push((ri, ti));
    }

    let mut actions: HashMap<(usize, usize), Action> = HashMap::new();
    for (i, &site) in placeholders.iter().enumerate() {
        if i < n_miss {
            actions.insert(site, Action::Miss);
        } else if i < n_miss + n_relabel {
            actions.insert(site, Action::Relabel);
        }
    }
    for &site in &spurious {
        actions.insert(site, Action::Spurious);
    }
    log.missed = n_miss;
    log.mislabeled = n_relabel;
    log.spurious = spurious.len();

    let mut out = HashMap::new();
    for (ri, (record, target, seq)) in parsed.iter().enumerate() {
        let mut text = String::with_capacity(target.len());
        let mut cursor = 0;
        let mut span_idx = 0;
        for (ti, t) in seq.tokens.iter().enumerate() {
            let gold_span = if t.is_placeholder() {
                span_idx += 1;
                record.spans.get(span_idx - 1)
            } else {
                None
            };
            let Some(action) = actions.get(&(ri, ti)) else { continue };
            let replacement = match (action, &t.kind) {
                (Action::Miss, _) => gold_span.map(|s| s.surface.clone()).unwrap_or_else(|| t.text.clone()),
                (Action::Relabel, TokenKind::Placeholder(p)) => other_label(&p.label, &mut rng),
                (Action::Spurious, _) => Placeholder::new(SPURIOUS_LABELS[rng.random_range(0..SPURIOUS_LABELS.len())].clone())
                    .render(PlaceholderStyle::Single),
                _ => t.text.clone(),
            };
            text.push_str(&target[cursor..t.span.start]);
            text.push_str(&replacement);
            cursor = t.span.end;
        }
        text.push_str(&target[cursor..]);
        out.insert(record.id.clone(), text);
    }
    (out, log)
}

fn other_label(label: &PiiLabel, rng: &mut ChaCha8Rng) -> String {
    let choices: Vec<&PiiLabel> = PiiLabel::CANONICAL.iter().filter(|l| *l != label).collect();
    Placeholder::new(choices[rng.random_range(0..choices.len())].clone()).render(PlaceholderStyle::Single)
}

#[cfg(test)]
mod tests {
    use super::*;
    use redactkit_core::synthetic::{gen_synthetic, uniform_mix};

    #[test]
    fn zero_rates_reproduce_targets() {
        let corpus = gen_synthetic(1, 30, &["en"], &uniform_mix()).unwrap();
        let zero = ErrorRates { missed: 0.0, mislabel: 0.0, spurious: 0.0 };
        let (preds, log) = inject_errors(&corpus, zero, 3);
        for r in &corpus.records {
            assert_eq!(preds[&r.id].as_str(), r.target_text.as_deref().unwrap());
        }
        assert_eq!((log.missed, log.mislabeled, log.spurious), (0, 0, 0));
    }

    #[test]
    fn counts_follow_rates() {
        let corpus = gen_synthetic(2, 200, &["en", "es"], &uniform_mix()).unwrap();
        let rates = ErrorRates { missed: 0.1, mislabel: 0.05, spurious: 0.02 };
        let (_, log) = inject_errors(&corpus, rates, 4);
        let n = log.gold_placeholders as f64;
        assert_eq!(log.missed, (0.1 * n).round() as usize);
        assert_eq!(log.mislabeled, (0.05 * n).round() as usize);
        assert_eq!(log.spurious, (0.02 * log.eligible_words as f64).round() as usize);
    }

    #[test]
    fn deterministic() {
        let corpus = gen_synthetic(2, 50, &["it"], &uniform_mix()).unwrap();
        let rates = ErrorRates { missed: 0.2, mislabel: 0.2, spurious: 0.1 };
        assert_eq!(inject_errors(&corpus, rates, 9), inject_errors(&corpus, rates, 9));
    }
}
