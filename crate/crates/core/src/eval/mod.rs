//! Structural alignment scoring, sequence overlap and leakage metrics.

pub mod align;
pub mod corpus_eval;
pub mod metrics;
pub mod oracle;
pub mod overlap;
pub mod spriv;

pub use align::{align, align_tokens, AlignKind, AlignOp, AlignmentResult, Counts, EvalMode, Matcher};
pub use corpus_eval::{
    evaluate_corpus, evaluate_record, CorpusReport, EvalError, EvalOptions, GroupKey, GroupReport, Prediction,
    RecordEval,
};
pub use metrics::{compute_prf, MetricReport};
pub use oracle::{brute_force_align, brute_force_align_tokens, SizeLimitExceeded, MAX_ORACLE_LEN};
pub use overlap::{bleu, rouge, BleuScore, RougeVariant, SeqScores};
pub use spriv::{spriv, SprivScore};
