//! Dataset model and JSONL ingestion.
//!
//! Each line of a corpus file is one record:
//!
//! ```json
//! {"id":"r1","language":"en","domain":"email","source_text":"Hi Bob",
//!  "target_text":"Hi [GIVENNAME1]",
//!  "privacy_mask":[{"label":"GIVENNAME1","start":3,"end":6,"value":"Bob"}]}
//! ```
//!
//! `start`/`end` count Unicode scalar values, not bytes. AI4Privacy exports
//! use the same field names; `uid` is accepted for `id` and a missing
//! `domain` defaults to `"general"`.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::masking::{apply_gold_mask, parse_masked, TokenKind};
use crate::taxonomy::{PiiLabel, Placeholder, PlaceholderStyle};

/// An annotated PII span over a record's source text, in char offsets.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Span {
    pub label: PiiLabel,
    pub coref_index: Option<u32>,
    pub start_char: usize,
    pub end_char: usize,
    pub surface: String,
}

impl Span {
    pub fn new(placeholder: Placeholder, start_char: usize, end_char: usize, surface: impl Into<String>) -> Self {
        Span {
            label: placeholder.label,
            coref_index: placeholder.coref_index,
            start_char,
            end_char,
            surface: surface.into(),
        }
    }

    pub fn placeholder(&self) -> Placeholder {
        Placeholder { label: self.label.clone(), coref_index: self.coref_index }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub id: String,
    pub language: String,
    pub domain: String,
    pub source_text: String,
    pub target_text: Option<String>,
    pub spans: Vec<Span>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub name: String,
    pub records: Vec<Record>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, records: Vec<Record>) -> Self {
        Corpus { name: name.into(), records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptySpan { span: usize },
    OutOfBounds { span: usize, end_char: usize, text_len: usize },
    SurfaceMismatch { span: usize, expected: String, found: String },
    OverlappingSpans { first: usize, second: usize },
    UnsortedSpans { first: usize, second: usize },
    ExtensionLabel { span: usize, label: String },
    RoundTripMismatch { expected: String, found: String },
    DuplicateId,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptySpan { span } => write!(f, "span {span} is empty"),
            Violation::OutOfBounds { span, end_char, text_len } => {
                write!(f, "span {span} ends at {end_char} beyond text length {text_len}")
            }
            Violation::SurfaceMismatch { span, expected, found } => {
                write!(f, "span {span} value {expected:?} does not match source substring {found:?}")
            }
            Violation::OverlappingSpans { first, second } => {
                write!(f, "spans {first} and {second} overlap")
            }
            Violation::UnsortedSpans { first, second } => {
                write!(f, "spans {first} and {second} are out of order")
            }
            Violation::ExtensionLabel { span, label } => {
                write!(f, "span {span} uses non-canonical label {label}")
            }
            Violation::RoundTripMismatch { expected, found } => {
                write!(f, "target_text {found:?} does not match gold mask {expected:?}")
            }
            Violation::DuplicateId => f.write_str("duplicate record id"),
        }
    }
}

/// Checks span invariants and, when a target is present, that applying the
/// gold mask reproduces it (modulo placeholder style and whitespace).
pub fn validate_record(record: &Record) -> Vec<Violation> {
    let mut out = Vec::new();
    let text_len = record.source_text.chars().count();
    let chars: Vec<char> = record.source_text.chars().collect();
    for (i, span) in record.spans.iter().enumerate() {
        if span.start_char >= span.end_char {
            out.push(Violation::EmptySpan { span: i });
            continue;
        }
        if span.end_char > text_len {
            out.push(Violation::OutOfBounds { span: i, end_char: span.end_char, text_len });
            continue;
        }
        let found: String = chars[span.start_char..span.end_char].iter().collect();
        if found != span.surface {
            out.push(Violation::SurfaceMismatch { span: i, expected: span.surface.clone(), found });
        }
    }
    for (i, pair) in record.spans.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        if b.start_char < a.start_char {
            out.push(Violation::UnsortedSpans { first: i, second: i + 1 });
        } else if b.start_char < a.end_char {
            out.push(Violation::OverlappingSpans { first: i, second: i + 1 });
        }
    }
    if !out.is_empty() {
        return out;
    }
    if let Some(target) = &record.target_text {
        // spans are known valid at this point
        if let Ok(expected) = apply_gold_mask(&record.source_text, &record.spans, PlaceholderStyle::Single) {
            if !same_masked_tokens(&expected, target) {
                out.push(Violation::RoundTripMismatch { expected, found: target.clone() });
            }
        }
    }
    out
}

fn same_masked_tokens(a: &str, b: &str) -> bool {
    let (a, b) = (parse_masked(a), parse_masked(b));
    a.len() == b.len()
        && a.iter().zip(b.iter()).all(|(x, y)| match (&x.kind, &y.kind) {
            (TokenKind::Plain, TokenKind::Plain) => x.text == y.text,
            (TokenKind::Placeholder(p), TokenKind::Placeholder(q)) => p == q,
            _ => false,
        })
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("failed to read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// A record rejected by validation, with every violation found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub record_id: String,
    pub line: usize,
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "record {} (line {}): ", self.record_id, self.line)?;
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Reject labels outside the canonical taxonomy.
    pub strict_taxonomy: bool,
}

/// Valid records plus the ones rejected by validation.
#[derive(Debug, Clone, Default)]
pub struct Loaded {
    pub corpus: Corpus,
    pub rejected: Vec<ValidationError>,
}

#[derive(Debug, Deserialize, Serialize)]
struct RawSpan {
    label: String,
    start: usize,
    end: usize,
    value: String,
}

#[derive(Debug, Deserialize, Serialize)]
struct RawRecord {
    #[serde(alias = "uid")]
    id: serde_json::Value,
    #[serde(default = "default_language")]
    language: String,
    #[serde(default = "default_domain")]
    domain: String,
    source_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_text: Option<String>,
    #[serde(default)]
    privacy_mask: Vec<RawSpan>,
}

fn default_language() -> String {
    "en".to_string()
}

fn default_domain() -> String {
    "general".to_string()
}

pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Loaded, LoadError> {
    load_jsonl_with(path, &LoadOptions::default())
}

pub fn load_jsonl_with(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Loaded, LoadError> {
    let path = path.as_ref();
    let io_err = |source| LoadError::Io { path: path.display().to_string(), source };
    let file = File::open(path).map_err(io_err)?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    read_jsonl(BufReader::new(file), name, opts).map_err(|e| match e {
        LoadError::Io { source, .. } => io_err(source),
        other => other,
    })
}

pub fn read_jsonl(reader: impl BufRead, name: String, opts: &LoadOptions) -> Result<Loaded, LoadError> {
    let mut loaded = Loaded { corpus: Corpus::new(name, Vec::new()), rejected: Vec::new() };
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| LoadError::Io { path: String::new(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line)
            .map_err(|e| LoadError::Parse { line: line_no, reason: e.to_string() })?;
        let record = convert(raw).map_err(|reason| LoadError::Parse { line: line_no, reason })?;
        let mut violations = validate_record(&record);
        if opts.strict_taxonomy {
            for (i, s) in record.spans.iter().enumerate() {
                if s.label.is_extension() {
                    violations.push(Violation::ExtensionLabel { span: i, label: s.label.to_string() });
                }
            }
        }
        if !seen.insert(record.id.clone()) {
            violations.push(Violation::DuplicateId);
        }
        if violations.is_empty() {
            loaded.corpus.records.push(record);
        } else {
            loaded.rejected.push(ValidationError { record_id: record.id, line: line_no, violations });
        }
    }
    Ok(loaded)
}

fn convert(raw: RawRecord) -> Result<Record, String> {
    let id = match raw.id {
        serde_json::Value::String(s) => s,
        serde_json::Value::Number(n) => n.to_string(),
        other => return Err(format!("id must be a string or number, got {other}")),
    };
    let mut spans = raw
        .privacy_mask
        .into_iter()
        .map(|s| {
            let placeholder = Placeholder::from_name(&s.label)
                .map_err(|e| format!("record {id}: {e}"))?;
            Ok(Span::new(placeholder, s.start, s.end, s.value))
        })
        .collect::<Result<Vec<_>, String>>()?;
    // order in the file carries no meaning
    spans.sort_by_key(|s| (s.start_char, s.end_char));
    Ok(Record {
        id,
        language: raw.language,
        domain: raw.domain,
        source_text: raw.source_text,
        target_text: raw.target_text,
        spans,
    })
}

fn to_raw(record: &Record) -> RawRecord {
    RawRecord {
        id: serde_json::Value::String(record.id.clone()),
        language: record.language.clone(),
        domain: record.domain.clone(),
        source_text: record.source_text.clone(),
        target_text: record.target_text.clone(),
        privacy_mask: record
            .spans
            .iter()
            .map(|s| RawSpan {
                label: s.placeholder().inner_name(),
                start: s.start_char,
                end: s.end_char,
                value: s.surface.clone(),
            })
            .collect(),
    }
}

pub fn write_jsonl(corpus: &Corpus, mut out: impl Write) -> std::io::Result<()> {
    for record in &corpus.records {
        serde_json::to_writer(&mut out, &to_raw(record))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_jsonl(corpus: &Corpus, path: impl AsRef<Path>) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(File::create(path)?);
    write_jsonl(corpus, &mut w)?;
    w.flush()
}
