//! ROUGE-1/2/L and BLEU over token keys.
//!
//! Tokens compare by [`Token::key`](crate::masking::Token::key), so
//! placeholder surface style is irrelevant.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::masking::TokenSeq;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RougeVariant {
    N1,
    N2,
    L,
}

fn ngram_counts(keys: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut map = HashMap::new();
    if n > 0 && keys.len() >= n {
        for w in keys.windows(n) {
            *map.entry(w).or_default() += 1;
        }
    }
    map
}

fn clipped_overlap(hyp: &HashMap<&[String], u64>, reference: &HashMap<&[String], u64>) -> u64 {
    hyp.iter().map(|(g, &c)| c.min(reference.get(g).copied().unwrap_or(0))).sum()
}

fn f1(overlap: u64, hyp_total: u64, ref_total: u64) -> f64 {
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / hyp_total as f64;
    let r = overlap as f64 / ref_total as f64;
    2.0 * p * r / (p + r)
}

pub(crate) fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE F1. When neither side has a single n-gram of the requested order
/// the score is 1 for identical sequences and 0 otherwise.
pub fn rouge(reference: &TokenSeq, hypothesis: &TokenSeq, variant: RougeVariant) -> f64 {
    rouge_keys(&reference.keys(), &hypothesis.keys(), variant)
}

pub fn rouge_keys(reference: &[String], hypothesis: &[String], variant: RougeVariant) -> f64 {
    let n = match variant {
        RougeVariant::N1 | RougeVariant::L => 1,
        RougeVariant::N2 => 2,
    };
    let ref_total = reference.len().saturating_sub(n - 1) as u64;
    let hyp_total = hypothesis.len().saturating_sub(n - 1) as u64;
    if ref_total == 0 && hyp_total == 0 {
        return if reference == hypothesis { 1.0 } else { 0.0 };
    }
    if ref_total == 0 || hyp_total == 0 {
        return 0.0;
    }
    let overlap = match variant {
        RougeVariant::L => lcs_len(reference, hypothesis) as u64,
        _ => clipped_overlap(&ngram_counts(hypothesis, n), &ngram_counts(reference, n)),
    };
    f1(overlap, hyp_total, ref_total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    pub score: f64,
    pub brevity_penalty: f64,
    /// Modified precision per order, after smoothing; orders where neither
    /// side has an n-gram are omitted.
    pub precisions: Vec<f64>,
    /// True if any order had zero matches and was smoothed.
    pub smoothed: bool,
}

/// Sentence BLEU with uniform weights and brevity penalty.
///
/// An order with zero clipped matches gets precision `1 / (2 * c_n)` where
/// `c_n` is the hypothesis n-gram count (at least 1). Orders for which
/// neither sequence has an n-gram are dropped and the weights renormalized
/// over the rest, so `bleu(x, x) == 1` for every non-empty `x`.
pub fn bleu(reference: &TokenSeq, hypothesis: &TokenSeq, max_n: usize) -> BleuScore {
    bleu_keys(&reference.keys(), &hypothesis.keys(), max_n)
}

pub fn bleu_keys(reference: &[String], hypothesis: &[String], max_n: usize) -> BleuScore {
    let max_n = max_n.max(1);
    let (c, r) = (hypothesis.len(), reference.len());
    if c == 0 {
        let score = if r == 0 { 1.0 } else { 0.0 };
        return BleuScore { score, brevity_penalty: score, precisions: Vec::new(), smoothed: false };
    }
    let mut precisions = Vec::with_capacity(max_n);
    let mut smoothed = false;
    for n in 1..=max_n {
        let hyp_total = c.saturating_sub(n - 1) as u64;
        let ref_total = r.saturating_sub(n - 1) as u64;
        if hyp_total == 0 && ref_total == 0 {
            break;
        }
        let matches = clipped_overlap(&ngram_counts(hypothesis, n), &ngram_counts(reference, n));
        let p = if matches == 0 {
            smoothed = true;
            1.0 / (2.0 * hyp_total.max(1) as f64)
        } else {
            matches as f64 / hyp_total as f64
        };
        precisions.push(p);
    }
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    let weight = 1.0 / precisions.len() as f64;
    let log_mean: f64 = precisions.iter().map(|p| weight * p.ln()).sum();
    BleuScore { score: bp * log_mean.exp(), brevity_penalty: bp, precisions, smoothed }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SeqScores {
    pub rouge1_f1: f64,
    pub rouge2_f1: f64,
    pub rouge_l_f1: f64,
    pub bleu: f64,
}

impl SeqScores {
    pub fn compute(reference: &TokenSeq, hypothesis: &TokenSeq, bleu_max_n: usize) -> Self {
        let (r, h) = (reference.keys(), hypothesis.keys());
        SeqScores {
            rouge1_f1: rouge_keys(&r, &h, RougeVariant::N1),
            rouge2_f1: rouge_keys(&r, &h, RougeVariant::N2),
            rouge_l_f1: rouge_keys(&r, &h, RougeVariant::L),
            bleu: bleu_keys(&r, &h, bleu_max_n).score,
        }
    }

    /// Arithmetic mean in iteration order; all zeros for an empty input.
    pub fn mean<'a>(scores: impl IntoIterator<Item = &'a SeqScores>) -> SeqScores {
        let mut sum = SeqScores::default();
        let mut n = 0usize;
        for s in scores {
            sum.rouge1_f1 += s.rouge1_f1;
            sum.rouge2_f1 += s.rouge2_f1;
            sum.rouge_l_f1 += s.rouge_l_f1;
            sum.bleu += s.bleu;
            n += 1;
        }
        if n == 0 {
            return sum;
        }
        let n = n as f64;
        SeqScores {
            rouge1_f1: sum.rouge1_f1 / n,
            rouge2_f1: sum.rouge2_f1 / n,
            rouge_l_f1: sum.rouge_l_f1 / n,
            bleu: sum.bleu / n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masking::tokenize;
    use proptest::prelude::*;

    fn seq(s: &str) -> TokenSeq {
        tokenize(s)
    }

    #[test]
    fn identical_is_one() {
        for s in ["a", "a b", "Dear [GIVENNAME1] , hi", "x y z w v"] {
            for v in [RougeVariant::N1, RougeVariant::N2, RougeVariant::L] {
                assert_eq!(rouge(&seq(s), &seq(s), v), 1.0, "{s} {v:?}");
            }
            assert!((bleu(&seq(s), &seq(s), 4).score - 1.0).abs() < 1e-12, "{s}");
        }
    }

    #[test]
    fn rouge_hand_counts() {
        let (r, h) = (seq("a b c"), seq("a c"));
        assert!((rouge(&r, &h, RougeVariant::N1) - 0.8).abs() < 1e-12);
        assert!((rouge(&r, &h, RougeVariant::L) - 0.8).abs() < 1e-12);
        assert_eq!(rouge(&r, &h, RougeVariant::N2), 0.0);
        assert_eq!(rouge(&seq(""), &seq(""), RougeVariant::N1), 1.0);
        assert_eq!(rouge(&seq("a"), &seq(""), RougeVariant::N1), 0.0);
        assert_eq!(rouge(&seq("a"), &seq("b"), RougeVariant::N2), 0.0);
    }

    #[test]
    fn bleu_empty_hypothesis() {
        assert_eq!(bleu(&seq("a b"), &seq(""), 4).score, 0.0);
    }

    #[test]
    fn bleu_brevity_penalty_case() {
        // independent evaluation: exp(1 - 4/3) * (1 * 1 * 1 * 0.5)^(1/4)
        let expected = 0.6025286104785453;
        let b = bleu(&seq("a b c d"), &seq("a b c"), 4);
        assert!((b.brevity_penalty - 0.7165313105737893).abs() < 1e-12);
        assert!((b.score - expected).abs() < 1e-12, "{}", b.score);
        assert!(b.smoothed);
        assert_eq!(b.precisions, vec![1.0, 1.0, 1.0, 0.5]);
    }

    #[test]
    fn placeholder_styles_compare_equal() {
        assert_eq!(rouge(&seq("hi [[EMAIL]]"), &seq("hi <EMAIL>"), RougeVariant::N2), 1.0);
    }

    #[test]
    fn mean_of_scores() {
        let a = SeqScores { rouge1_f1: 1.0, rouge2_f1: 0.5, rouge_l_f1: 1.0, bleu: 0.2 };
        let b = SeqScores { rouge1_f1: 0.0, rouge2_f1: 0.5, rouge_l_f1: 0.5, bleu: 0.4 };
        let m = SeqScores::mean([&a, &b]);
        assert_eq!(m.rouge1_f1, 0.5);
        assert!((m.bleu - 0.3).abs() < 1e-12);
    }

    fn words() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "[X]"]), 0..10)
            .prop_map(|v| v.into_iter().map(String::from).collect())
    }

    proptest! {
        #[test]
        fn rouge_is_symmetric(a in words(), b in words()) {
            for v in [RougeVariant::N1, RougeVariant::N2, RougeVariant::L] {
                prop_assert!((rouge_keys(&a, &b, v) - rouge_keys(&b, &a, v)).abs() < 1e-12);
            }
        }

        #[test]
        fn scores_are_bounded(a in words(), b in words()) {
            for v in [RougeVariant::N1, RougeVariant::N2, RougeVariant::L] {
                let s = rouge_keys(&a, &b, v);
                prop_assert!((0.0..=1.0).contains(&s));
            }
            let s = bleu_keys(&a, &b, 4).score;
            prop_assert!((0.0..=1.0 + 1e-12).contains(&s));
        }
    }
}
