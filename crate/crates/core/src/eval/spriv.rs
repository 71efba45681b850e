//! Privacy leakage: the share of output tokens that are surviving gold PII.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::corpus::Span;
use crate::masking::{tokenize, TokenKind, TokenSeq};

/// Gold tokens shorter than this (in chars) are ignored.
pub const MIN_LEAK_TOKEN_CHARS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SprivScore {
    pub leaked_tokens: u64,
    pub total_tokens: u64,
    pub score: f64,
}

impl SprivScore {
    pub fn from_counts(leaked_tokens: u64, total_tokens: u64) -> Self {
        let score = if total_tokens == 0 { 0.0 } else { leaked_tokens as f64 / total_tokens as f64 };
        SprivScore { leaked_tokens, total_tokens, score }
    }
}

/// Lowercased plain tokens of every gold span surface.
pub fn gold_pii_tokens(gold_spans: &[Span]) -> HashSet<String> {
    gold_spans
        .iter()
        .flat_map(|s| tokenize(&s.surface).tokens)
        .filter(|t| t.kind == TokenKind::Plain && t.text.chars().count() >= MIN_LEAK_TOKEN_CHARS)
        .map(|t| t.text.to_lowercase())
        .collect()
}

/// Counts hypothesis plain tokens that match a gold PII token
/// (case-insensitive, exact) and divides by the hypothesis length.
pub fn spriv(gold_spans: &[Span], hypothesis: &TokenSeq) -> SprivScore {
    let gold = gold_pii_tokens(gold_spans);
    let leaked = hypothesis
        .iter()
        .filter(|t| t.kind == TokenKind::Plain && gold.contains(&t.text.to_lowercase()))
        .count();
    SprivScore::from_counts(leaked as u64, hypothesis.len() as u64)
}
