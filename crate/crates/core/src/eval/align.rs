//! Mask-aware token edit-distance alignment.
//!
//! The reference (gold masked text) and hypothesis (model output) are aligned
//! by unit-cost Levenshtein over tokens. Every aligned pair or unmatched token
//! is then classified by the kinds of tokens involved, which yields the
//! confusion counts used for precision, recall and accuracy.
//!
//! Among alignments of minimal cost the one with the most matches is chosen;
//! remaining ties are broken leftmost-first, preferring a diagonal step over
//! skipping a reference token over skipping a hypothesis token.

use serde::{Deserialize, Serialize};

use crate::masking::{Token, TokenKind, TokenSeq};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EvalMode {
    /// Any placeholder over the right token counts as correct.
    SpanCorrect,
    /// The placeholder label must match too.
    LabelExact,
}

impl EvalMode {
    pub const BOTH: [EvalMode; 2] = [EvalMode::SpanCorrect, EvalMode::LabelExact];

    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::SpanCorrect => "span-correct",
            EvalMode::LabelExact => "label-exact",
        }
    }
}

/// How two tokens are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Matcher {
    pub mode: EvalMode,
    /// Also require equal coreference indices when comparing labels.
    pub strict_coref: bool,
}

impl Matcher {
    pub fn new(mode: EvalMode) -> Self {
        Matcher { mode, strict_coref: false }
    }

    fn same_label(&self, a: &Token, b: &Token) -> bool {
        match (&a.kind, &b.kind) {
            (TokenKind::Placeholder(p), TokenKind::Placeholder(q)) => {
                p.label == q.label && (!self.strict_coref || p.coref_index == q.coref_index)
            }
            _ => false,
        }
    }

    pub fn matches(&self, a: &Token, b: &Token) -> bool {
        match (&a.kind, &b.kind) {
            (TokenKind::Plain, TokenKind::Plain) => a.text == b.text,
            (TokenKind::Placeholder(_), TokenKind::Placeholder(_)) => match self.mode {
                EvalMode::SpanCorrect => true,
                EvalMode::LabelExact => self.same_label(a, b),
            },
            _ => false,
        }
    }
}

impl From<EvalMode> for Matcher {
    fn from(mode: EvalMode) -> Self {
        Matcher::new(mode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlignKind {
    MatchPlaceholder,
    MatchPlain,
    /// A reference placeholder left unmasked or dropped (false negative).
    MissedMask,
    /// A hypothesis placeholder where the reference has plain text or nothing
    /// (false positive).
    SpuriousMask,
    /// Placeholder aligned to placeholder with a different label.
    Mislabel,
    /// Plain text rewritten, inserted or deleted.
    ContentEdit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignOp {
    pub kind: AlignKind,
    pub ref_index: Option<usize>,
    pub hyp_index: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub mislabels: u64,
    pub content_edits: u64,
}

impl Counts {
    /// Adds one classified op under `mode`'s bookkeeping. In label-exact mode
    /// a mislabel is both a wrong label emitted (FP) and a right label missed
    /// (FN); in span-correct mode it is a true positive.
    pub fn tally(&mut self, kind: AlignKind, mode: EvalMode) {
        match kind {
            AlignKind::MatchPlaceholder => self.tp += 1,
            AlignKind::MatchPlain => self.tn += 1,
            AlignKind::MissedMask => self.fn_ += 1,
            AlignKind::SpuriousMask => self.fp += 1,
            AlignKind::ContentEdit => self.content_edits += 1,
            AlignKind::Mislabel => {
                self.mislabels += 1;
                match mode {
                    EvalMode::SpanCorrect => self.tp += 1,
                    EvalMode::LabelExact => {
                        self.fp += 1;
                        self.fn_ += 1;
                    }
                }
            }
        }
    }

    pub fn from_ops(ops: &[AlignOp], mode: EvalMode) -> Counts {
        let mut c = Counts::default();
        for op in ops {
            c.tally(op.kind, mode);
        }
        c
    }
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
        self.tn += o.tn;
        self.mislabels += o.mislabels;
        self.content_edits += o.content_edits;
    }
}

impl std::iter::Sum for Counts {
    fn sum<I: Iterator<Item = Counts>>(iter: I) -> Counts {
        let mut total = Counts::default();
        for c in iter {
            total += c;
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub mode: EvalMode,
    pub counts: Counts,
    pub ops: Vec<AlignOp>,
    /// Number of non-matching steps.
    pub cost: u64,
}

pub fn align(reference: &TokenSeq, hypothesis: &TokenSeq, mode: EvalMode) -> AlignmentResult {
    align_tokens(&reference.tokens, &hypothesis.tokens, Matcher::new(mode))
}

/// Classifies one alignment step. `None` on a side means the token on the
/// other side is unmatched.
pub(crate) fn classify(r: Option<&Token>, h: Option<&Token>, matcher: &Matcher) -> AlignKind {
    match (r, h) {
        (Some(a), Some(b)) => match (a.is_placeholder(), b.is_placeholder()) {
            (true, true) if matcher.same_label(a, b) => AlignKind::MatchPlaceholder,
            (true, true) => AlignKind::Mislabel,
            (true, false) => AlignKind::MissedMask,
            (false, true) => AlignKind::SpuriousMask,
            (false, false) if a.text == b.text => AlignKind::MatchPlain,
            (false, false) => AlignKind::ContentEdit,
        },
        (Some(a), None) if a.is_placeholder() => AlignKind::MissedMask,
        (None, Some(b)) if b.is_placeholder() => AlignKind::SpuriousMask,
        _ => AlignKind::ContentEdit,
    }
}

pub fn align_tokens(reference: &[Token], hypothesis: &[Token], matcher: Matcher) -> AlignmentResult {
    let (n, m) = (reference.len(), hypothesis.len());
    // value = cost * weight - matches, so cost dominates and ties favor matches
    let weight = (n + m + 1) as i64;
    let cols = m + 1;
    let mut best = vec![0i64; (n + 1) * cols];
    let at = |i: usize, j: usize| i * cols + j;
    for i in (0..=n).rev() {
        for j in (0..=m).rev() {
            best[at(i, j)] = if i == n {
                (m - j) as i64 * weight
            } else if j == m {
                (n - i) as i64 * weight
            } else {
                let diag = if matcher.matches(&reference[i], &hypothesis[j]) { -1 } else { weight };
                (diag + best[at(i + 1, j + 1)])
                    .min(weight + best[at(i + 1, j)])
                    .min(weight + best[at(i, j + 1)])
            };
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let mut cost = 0u64;
    let (mut i, mut j) = (0, 0);
    while i < n || j < m {
        let here = best[at(i, j)];
        if i < n && j < m {
            let is_match = matcher.matches(&reference[i], &hypothesis[j]);
            let step = if is_match { -1 } else { weight };
            if step + best[at(i + 1, j + 1)] == here {
                ops.push(AlignOp {
                    kind: classify(Some(&reference[i]), Some(&hypothesis[j]), &matcher),
                    ref_index: Some(i),
                    hyp_index: Some(j),
                });
                cost += u64::from(!is_match);
                i += 1;
                j += 1;
                continue;
            }
        }
        if i < n && weight + best[at(i + 1, j)] == here {
            ops.push(AlignOp { kind: classify(Some(&reference[i]), None, &matcher), ref_index: Some(i), hyp_index: None });
            cost += 1;
            i += 1;
        } else {
            ops.push(AlignOp { kind: classify(None, Some(&hypothesis[j]), &matcher), ref_index: None, hyp_index: Some(j) });
            cost += 1;
            j += 1;
        }
    }
    let counts = Counts::from_ops(&ops, matcher.mode);
    AlignmentResult { mode: matcher.mode, counts, ops, cost }
}
