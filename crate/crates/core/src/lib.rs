//! PII redaction and evaluation toolkit.
//!
//! Covers the placeholder taxonomy, gold masking, rule and prompt based
//! redaction helpers, BM25 exemplar retrieval, and the evaluation suite
//! (structural alignment, ROUGE/BLEU, SPriV).

pub mod corpus;
pub mod eval;
pub mod formats;
pub mod latency;
pub mod masking;
pub mod prompts;
pub mod rag;
pub mod report;
pub mod rules;
pub mod synthetic;
pub mod taxonomy;

pub use corpus::{load_jsonl, Corpus, Record, Span};
pub use masking::{apply_gold_mask, parse_masked, tokenize, Token, TokenKind, TokenSeq};
pub use rules::{rule_redact, RuleSet};
pub use taxonomy::{parse_label, PiiLabel, Placeholder, PlaceholderStyle};
