//! Exhaustive reference alignment for short sequences.
//!
//! Enumerates every monotone alignment and keeps the first one (in
//! leftmost-first step order: diagonal, skip reference, skip hypothesis) with
//! the lowest cost and, at equal cost, the most matches. It shares no code
//! with the dynamic program in [`super::align`] besides the token types.

use thiserror::Error;

use super::align::{AlignKind, AlignOp, AlignmentResult, Counts, EvalMode, Matcher};
use crate::masking::{Token, TokenKind, TokenSeq};

pub const MAX_ORACLE_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("sequence lengths {ref_len}/{hyp_len} exceed the oracle limit of {MAX_ORACLE_LEN}")]
pub struct SizeLimitExceeded {
    pub ref_len: usize,
    pub hyp_len: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Step {
    Diag,
    SkipRef,
    SkipHyp,
}

struct Search<'a> {
    r: &'a [Token],
    h: &'a [Token],
    matcher: Matcher,
    path: Vec<Step>,
    best: Option<(u64, u64, Vec<Step>)>,
}

impl Search<'_> {
    fn is_match(&self, a: &Token, b: &Token) -> bool {
        match (&a.kind, &b.kind) {
            (TokenKind::Plain, TokenKind::Plain) => a.text == b.text,
            (TokenKind::Placeholder(p), TokenKind::Placeholder(q)) => match self.matcher.mode {
                EvalMode::SpanCorrect => true,
                EvalMode::LabelExact => {
                    p.label == q.label && (!self.matcher.strict_coref || p.coref_index == q.coref_index)
                }
            },
            _ => false,
        }
    }

    fn walk(&mut self, i: usize, j: usize, cost: u64, matches: u64) {
        if let Some((best_cost, _, _)) = &self.best {
            if cost > *best_cost {
                return;
            }
        }
        if i == self.r.len() && j == self.h.len() {
            let better = match &self.best {
                None => true,
                Some((c, m, _)) => cost < *c || (cost == *c && matches > *m),
            };
            if better {
                self.best = Some((cost, matches, self.path.clone()));
            }
            return;
        }
        if i < self.r.len() && j < self.h.len() {
            let hit = self.is_match(&self.r[i], &self.h[j]);
            self.path.push(Step::Diag);
            self.walk(i + 1, j + 1, cost + u64::from(!hit), matches + u64::from(hit));
            self.path.pop();
        }
        if i < self.r.len() {
            self.path.push(Step::SkipRef);
            self.walk(i + 1, j, cost + 1, matches);
            self.path.pop();
        }
        if j < self.h.len() {
            self.path.push(Step::SkipHyp);
            self.walk(i, j + 1, cost + 1, matches);
            self.path.pop();
        }
    }
}

fn kind_of(r: Option<&Token>, h: Option<&Token>, matcher: &Matcher) -> AlignKind {
    let ph = |t: &Token| matches!(t.kind, TokenKind::Placeholder(_));
    match (r, h) {
        (Some(a), Some(b)) if ph(a) && ph(b) => {
            let (TokenKind::Placeholder(p), TokenKind::Placeholder(q)) = (&a.kind, &b.kind) else { unreachable!() };
            let same = p.label == q.label && (!matcher.strict_coref || p.coref_index == q.coref_index);
            if same { AlignKind::MatchPlaceholder } else { AlignKind::Mislabel }
        }
        (Some(a), Some(_)) if ph(a) => AlignKind::MissedMask,
        (Some(_), Some(b)) if ph(b) => AlignKind::SpuriousMask,
        (Some(a), Some(b)) => {
            if a.text == b.text { AlignKind::MatchPlain } else { AlignKind::ContentEdit }
        }
        (Some(a), None) if ph(a) => AlignKind::MissedMask,
        (None, Some(b)) if ph(b) => AlignKind::SpuriousMask,
        _ => AlignKind::ContentEdit,
    }
}

pub fn brute_force_align(
    reference: &TokenSeq,
    hypothesis: &TokenSeq,
    mode: EvalMode,
) -> Result<AlignmentResult, SizeLimitExceeded> {
    brute_force_align_tokens(&reference.tokens, &hypothesis.tokens, Matcher::new(mode))
}

pub fn brute_force_align_tokens(
    reference: &[Token],
    hypothesis: &[Token],
    matcher: Matcher,
) -> Result<AlignmentResult, SizeLimitExceeded> {
    if reference.len() > MAX_ORACLE_LEN || hypothesis.len() > MAX_ORACLE_LEN {
        return Err(SizeLimitExceeded { ref_len: reference.len(), hyp_len: hypothesis.len() });
    }
    let mut search = Search { r: reference, h: hypothesis, matcher, path: Vec::new(), best: None };
    search.walk(0, 0, 0, 0);
    let (cost, _, steps) = search.best.expect("at least one alignment exists");

    let mut ops = Vec::with_capacity(steps.len());
    let mut counts = Counts::default();
    let (mut i, mut j) = (0, 0);
    for step in steps {
        let (ri, hj) = match step {
            Step::Diag => (Some(i), Some(j)),
            Step::SkipRef => (Some(i), None),
            Step::SkipHyp => (None, Some(j)),
        };
        let kind = kind_of(ri.map(|x| &reference[x]), hj.map(|x| &hypothesis[x]), &matcher);
        match kind {
            AlignKind::MatchPlaceholder => counts.tp += 1,
            AlignKind::MatchPlain => counts.tn += 1,
            AlignKind::MissedMask => counts.fn_ += 1,
            AlignKind::SpuriousMask => counts.fp += 1,
            AlignKind::ContentEdit => counts.content_edits += 1,
            AlignKind::Mislabel => {
                counts.mislabels += 1;
                if matcher.mode == EvalMode::SpanCorrect {
                    counts.tp += 1;
                } else {
                    counts.fp += 1;
                    counts.fn_ += 1;
                }
            }
        }
        ops.push(AlignOp { kind, ref_index: ri, hyp_index: hj });
        i += usize::from(ri.is_some());
        j += usize::from(hj.is_some());
    }
    Ok(AlignmentResult { mode: matcher.mode, counts, ops, cost })
}
