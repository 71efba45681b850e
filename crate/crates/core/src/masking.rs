//! Tokenization of raw and masked text, and the gold redaction transform.

use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use crate::corpus::Span;
use crate::taxonomy::{canonical_placeholder, Placeholder, PlaceholderStyle};

static PLACEHOLDER_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\[\[([A-Z][A-Z0-9_]*)\]\]|\[([A-Z][A-Z0-9_]*)\]|<([A-Z][A-Z0-9_]*)>").unwrap()
});

/// Characters split off the edges of a whitespace fragment.
///
/// Brackets are included so that stray `[`/`]` from non-placeholder fragments
/// such as `[10]` or `[Sejd]` become their own tokens.
fn is_edge_punct(c: char) -> bool {
    matches!(
        c,
        '.' | ',' | ';' | ':' | '!' | '?' | '"' | '\'' | '(' | ')' | '[' | ']' | '<' | '>' | '{' | '}'
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Plain,
    Placeholder(Placeholder),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub text: String,
    /// Byte range of the token within the tokenized string.
    pub span: Range<usize>,
    pub kind: TokenKind,
}

impl Token {
    pub fn is_placeholder(&self) -> bool {
        matches!(self.kind, TokenKind::Placeholder(_))
    }

    pub fn placeholder(&self) -> Option<&Placeholder> {
        match &self.kind {
            TokenKind::Placeholder(p) => Some(p),
            TokenKind::Plain => None,
        }
    }

    /// Comparison key for sequence metrics: plain text, or the canonical
    /// single-bracket rendering for placeholders, so `[[EMAIL]]` and `<EMAIL>`
    /// compare equal.
    pub fn key(&self) -> String {
        match &self.kind {
            TokenKind::Plain => self.text.clone(),
            TokenKind::Placeholder(p) => canonical_placeholder(p, PlaceholderStyle::Single),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSeq {
    pub tokens: Vec<Token>,
    pub source: String,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Token> {
        self.tokens.iter()
    }

    pub fn keys(&self) -> Vec<String> {
        self.tokens.iter().map(Token::key).collect()
    }

    pub fn placeholders(&self) -> impl Iterator<Item = &Placeholder> {
        self.tokens.iter().filter_map(Token::placeholder)
    }

    /// Token texts joined by single spaces.
    pub fn join(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&t.text);
        }
        out
    }
}

impl<'a> IntoIterator for &'a TokenSeq {
    type Item = &'a Token;
    type IntoIter = std::slice::Iter<'a, Token>;

    fn into_iter(self) -> Self::IntoIter {
        self.tokens.iter()
    }
}

/// Splits text into plain and placeholder tokens.
///
/// Placeholder surface forms are extracted first as atomic tokens. The
/// remaining text is split on whitespace and each fragment sheds leading and
/// trailing punctuation one character at a time; internal punctuation stays,
/// so `bob@gmail.com` and `555-0192` remain whole.
pub fn tokenize(text: &str) -> TokenSeq {
    let mut tokens = Vec::new();
    let mut cursor = 0;
    for caps in PLACEHOLDER_RE.captures_iter(text) {
        let m = caps.get(0).unwrap();
        push_plain_region(text, cursor..m.start(), &mut tokens);
        let name = caps
            .get(1)
            .or_else(|| caps.get(2))
            .or_else(|| caps.get(3))
            .unwrap()
            .as_str();
        // the regex only admits valid label names
        let placeholder = Placeholder::from_name(name).expect("grammar-checked label name");
        tokens.push(Token {
            text: m.as_str().to_string(),
            span: m.range(),
            kind: TokenKind::Placeholder(placeholder),
        });
        cursor = m.end();
    }
    push_plain_region(text, cursor..text.len(), &mut tokens);
    TokenSeq { tokens, source: text.to_string() }
}

/// Tokenizes model output or gold masked text. Never fails; malformed bracket
/// fragments degrade to plain tokens.
pub fn parse_masked(text: &str) -> TokenSeq {
    tokenize(text)
}

fn push_plain_region(text: &str, region: Range<usize>, out: &mut Vec<Token>) {
    let slice = &text[region.clone()];
    let mut frag_start: Option<usize> = None;
    for (i, c) in slice.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = frag_start.take() {
                push_fragment(text, region.start + s..region.start + i, out);
            }
        } else if frag_start.is_none() {
            frag_start = Some(i);
        }
    }
    if let Some(s) = frag_start {
        push_fragment(text, region.start + s..region.end, out);
    }
}

fn push_fragment(text: &str, range: Range<usize>, out: &mut Vec<Token>) {
    let frag = &text[range.clone()];
    let mut lead_end = 0;
    for (i, c) in frag.char_indices() {
        if is_edge_punct(c) {
            lead_end = i + c.len_utf8();
        } else {
            break;
        }
    }
    let mut trail_start = frag.len();
    if lead_end < frag.len() {
        for (i, c) in frag.char_indices().rev() {
            if i < lead_end || !is_edge_punct(c) {
                break;
            }
            trail_start = i;
        }
    }
    let plain = |s: usize, e: usize| Token {
        text: frag[s..e].to_string(),
        span: range.start + s..range.start + e,
        kind: TokenKind::Plain,
    };
    for (i, c) in frag[..lead_end].char_indices() {
        out.push(plain(i, i + c.len_utf8()));
    }
    if lead_end < trail_start {
        out.push(plain(lead_end, trail_start));
    }
    for (i, c) in frag[trail_start..].char_indices() {
        let s = trail_start + i;
        out.push(plain(s, s + c.len_utf8()));
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaskError {
    #[error("invalid span {index} ({start}..{end}): {reason}")]
    InvalidSpan { index: usize, start: usize, end: usize, reason: String },
}

/// Byte offset of every char boundary, including the end of the string.
pub(crate) fn char_to_byte_table(text: &str) -> Vec<usize> {
    text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len())).collect()
}

/// Replaces every span with its rendered placeholder, leaving all other
/// characters untouched.
pub fn apply_gold_mask(
    source_text: &str,
    spans: &[Span],
    style: PlaceholderStyle,
) -> Result<String, MaskError> {
    let offsets = char_to_byte_table(source_text);
    let n_chars = offsets.len() - 1;
    let mut out = String::with_capacity(source_text.len());
    let mut prev_end = 0usize;
    for (index, span) in spans.iter().enumerate() {
        let invalid = |reason: &str| MaskError::InvalidSpan {
            index,
            start: span.start_char,
            end: span.end_char,
            reason: reason.to_string(),
        };
        if span.start_char >= span.end_char {
            return Err(invalid("empty or inverted range"));
        }
        if span.end_char > n_chars {
            return Err(invalid("range exceeds text length"));
        }
        if span.start_char < prev_end {
            return Err(invalid("overlaps or precedes the previous span"));
        }
        let (bs, be) = (offsets[span.start_char], offsets[span.end_char]);
        if source_text[bs..be] != span.surface {
            return Err(invalid("surface does not match source text"));
        }
        out.push_str(&source_text[offsets[prev_end]..bs]);
        out.push_str(&canonical_placeholder(&span.placeholder(), style));
        prev_end = span.end_char;
    }
    out.push_str(&source_text[offsets[prev_end]..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::PiiLabel;
    use proptest::prelude::*;

    fn texts(seq: &TokenSeq) -> Vec<&str> {
        seq.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    #[test]
    fn keeps_emails_whole() {
        let seq = tokenize("Bob emailed me at bob@gmail.com.");
        assert_eq!(texts(&seq), ["Bob", "emailed", "me", "at", "bob@gmail.com", "."]);
        assert!(seq.tokens.iter().all(|t| !t.is_placeholder()));
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(tokenize(" \t\n ").is_empty());
    }

    #[test]
    fn placeholder_then_punct() {
        let seq = tokenize("Hi [GIVENNAME1]!");
        assert_eq!(texts(&seq), ["Hi", "[GIVENNAME1]", "!"]);
        assert_eq!(
            seq.tokens[1].kind,
            TokenKind::Placeholder(Placeholder::indexed(PiiLabel::GivenName, 1))
        );
        assert_eq!(seq.tokens[1].span, 3..15);
    }

    #[test]
    fn parse_masked_double_brackets() {
        let seq = parse_masked("Dear [[GIVENNAME1]],");
        assert_eq!(texts(&seq), ["Dear", "[[GIVENNAME1]]", ","]);
        assert_eq!(seq.tokens[1].key(), "[GIVENNAME1]");
    }

    #[test]
    fn parse_masked_extension_labels() {
        let seq = parse_masked("[NAME] went to [ORG].");
        assert_eq!(texts(&seq), ["[NAME]", "went", "to", "[ORG]", "."]);
        assert_eq!(
            seq.tokens[0].placeholder().unwrap().label,
            PiiLabel::Extension("NAME".into())
        );
        assert_eq!(
            seq.tokens[3].placeholder().unwrap().label,
            PiiLabel::Extension("ORG".into())
        );
    }

    #[test]
    fn digit_brackets_are_plain() {
        let seq = parse_masked("price [10] dollars");
        assert_eq!(texts(&seq), ["price", "[", "10", "]", "dollars"]);
        assert!(seq.tokens.iter().all(|t| !t.is_placeholder()));
    }

    #[test]
    fn nested_brackets_prefer_double() {
        let seq = tokenize("[[[EMAIL]]] <<DATE>>");
        assert_eq!(texts(&seq), ["[", "[[EMAIL]]", "]", "<", "<DATE>", ">"]);
    }

    #[test]
    fn edge_punct_splits_per_char() {
        let seq = tokenize("(hello)...  \"quoted\"");
        assert_eq!(texts(&seq), ["(", "hello", ")", ".", ".", ".", "\"", "quoted", "\""]);
        let seq = tokenize("?!");
        assert_eq!(texts(&seq), ["?", "!"]);
    }

    #[test]
    fn gold_mask_double_style() {
        let src = "Dear Sejd, I am writing...";
        let spans = vec![Span::new(Placeholder::indexed(PiiLabel::GivenName, 1), 5, 9, "Sejd")];
        assert_eq!(
            apply_gold_mask(src, &spans, PlaceholderStyle::Double).unwrap(),
            "Dear [[GIVENNAME1]], I am writing..."
        );
    }

    #[test]
    fn gold_mask_single_style() {
        let spans = vec![Span::new(Placeholder::new(PiiLabel::Tel), 5, 13, "555-0192")];
        assert_eq!(
            apply_gold_mask("Call 555-0192 now", &spans, PlaceholderStyle::Single).unwrap(),
            "Call [TEL] now"
        );
        assert_eq!(
            apply_gold_mask("untouched  text ", &[], PlaceholderStyle::Single).unwrap(),
            "untouched  text "
        );
    }

    #[test]
    fn gold_mask_uses_char_offsets() {
        let src = "Señor Núñez llamó";
        let spans = vec![Span::new(Placeholder::indexed(PiiLabel::LastName, 1), 6, 11, "Núñez")];
        assert_eq!(
            apply_gold_mask(src, &spans, PlaceholderStyle::Single).unwrap(),
            "Señor [LASTNAME1] llamó"
        );
    }

    #[test]
    fn gold_mask_rejects_bad_spans() {
        let tel = Placeholder::new(PiiLabel::Tel);
        let bad = [
            vec![Span::new(tel.clone(), 5, 5, "")],
            vec![Span::new(tel.clone(), 5, 40, "555-0192")],
            vec![Span::new(tel.clone(), 5, 13, "555-0193")],
            vec![Span::new(tel.clone(), 5, 13, "555-0192"), Span::new(tel.clone(), 10, 17, "192 now")],
        ];
        for spans in bad {
            assert!(matches!(
                apply_gold_mask("Call 555-0192 now", &spans, PlaceholderStyle::Single),
                Err(MaskError::InvalidSpan { .. })
            ));
        }
    }

    fn token_pairs(seq: &TokenSeq) -> Vec<(String, TokenKind)> {
        seq.tokens.iter().map(|t| (t.text.clone(), t.kind.clone())).collect()
    }

    fn normalize_ws(s: &str) -> String {
        s.split_whitespace().collect::<Vec<_>>().join(" ")
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent(text in "[a-zA-Z0-9 .,!?()\\[\\]<>@_\\-]{0,60}") {
            let first = tokenize(&text);
            let second = tokenize(&first.join());
            prop_assert_eq!(token_pairs(&first), token_pairs(&second));
        }

        #[test]
        fn spans_are_disjoint_and_cover_non_whitespace(text in "\\PC{0,80}") {
            let seq = parse_masked(&text);
            let mut prev = 0;
            for t in &seq.tokens {
                prop_assert!(t.span.start >= prev && t.span.start < t.span.end);
                prop_assert_eq!(&text[t.span.clone()], t.text.as_str());
                prev = t.span.end;
            }
            let stripped: String = text.chars().filter(|c| !c.is_whitespace()).collect();
            let joined: String = seq.tokens.iter().map(|t| t.text.as_str()).collect();
            prop_assert_eq!(stripped, joined);
        }

        #[test]
        fn joined_tokens_normalize_to_source(text in "[a-z A-Z.,\\[\\]]{0,60}") {
            let seq = tokenize(&text);
            let joined = seq.join();
            let rejoined: String = normalize_ws(&joined).chars().filter(|c| !c.is_whitespace()).collect();
            let source: String = text.chars().filter(|c| !c.is_whitespace()).collect();
            prop_assert_eq!(rejoined, source);
        }
    }
}
