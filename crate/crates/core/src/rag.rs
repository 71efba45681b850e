//! Retrieval-augmented redaction: query construction, BM25 exemplar
//! retrieval and prompt assembly.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::masking::{parse_masked, tokenize, TokenKind};
use crate::prompts::RAG_RESPONSE_MARKER;
use crate::taxonomy::PiiLabel;

pub const DEFAULT_K: usize = 3;
pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;

const RAG_INSTRUCTION: &str = "Below is a sentence-to-mask and examples of unmasked - masked sentences. Based on the examples, write a privacy protection version of sentence-to-mask in the form of a masked-sentence.
Sensitive information should be replaced by placeholders like [NAME], [EMAIL], [ORG], etc.
Always put your response after masked-sentence:";

/// An (unmasked, masked) demonstration pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exemplar {
    pub unmasked: String,
    pub masked: String,
    pub labels: BTreeSet<PiiLabel>,
}

impl Exemplar {
    pub fn new(unmasked: impl Into<String>, masked: impl Into<String>) -> Self {
        let masked = masked.into();
        let labels = parse_masked(&masked).placeholders().map(|p| p.label.clone()).collect();
        Exemplar { unmasked: unmasked.into(), masked, labels }
    }
}

#[derive(Serialize, Deserialize)]
struct StoredExemplar {
    unmasked: String,
    masked: String,
}

#[derive(Debug, Error)]
pub enum RagError {
    #[error("cannot build an index over zero exemplars")]
    EmptyExemplarSet,
    #[error("exemplar store line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn exemplars_from_corpus(corpus: &Corpus) -> Vec<Exemplar> {
    corpus
        .records
        .iter()
        .filter_map(|r| r.target_text.as_ref().map(|t| Exemplar::new(r.source_text.clone(), t.clone())))
        .collect()
}

pub fn load_exemplars(path: impl AsRef<Path>) -> Result<Vec<Exemplar>, RagError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let stored: StoredExemplar = serde_json::from_str(&line)
            .map_err(|e| RagError::Parse { line: i + 1, reason: e.to_string() })?;
        out.push(Exemplar::new(stored.unmasked, stored.masked));
    }
    Ok(out)
}

pub fn save_exemplars(exemplars: &[Exemplar], path: impl AsRef<Path>) -> Result<(), RagError> {
    let mut w = BufWriter::new(File::create(path)?);
    for e in exemplars {
        let stored = StoredExemplar { unmasked: e.unmasked.clone(), masked: e.masked.clone() };
        serde_json::to_writer(&mut w, &stored).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Lowercased plain tokens of `text`, skipping pure punctuation.
fn terms(text: &str) -> Vec<String> {
    tokenize(text)
        .tokens
        .into_iter()
        .filter(|t| t.kind == TokenKind::Plain && t.text.chars().any(char::is_alphanumeric))
        .map(|t| t.text.to_lowercase())
        .collect()
}

/// A bag of query terms with multiplicities.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Query {
    pub terms: BTreeMap<String, u32>,
}

impl Query {
    pub fn weight(&self, term: &str) -> u32 {
        self.terms.get(term).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Builds the retrieval query from the input itself; each hinted label name
/// is added as an extra term with weight 2.
pub fn construct_query(input: &str, hint_labels: Option<&BTreeSet<PiiLabel>>) -> Query {
    let mut q = Query::default();
    for t in terms(input) {
        *q.terms.entry(t).or_default() += 1;
    }
    for label in hint_labels.into_iter().flatten() {
        *q.terms.entry(label.name().to_lowercase()).or_default() += 2;
    }
    q
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredExemplar<'a> {
    pub exemplar: &'a Exemplar,
    /// Position in the indexed exemplar list.
    pub position: usize,
    pub score: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RetrieveOptions {
    pub label_filter: Option<BTreeSet<PiiLabel>>,
    pub min_score: f64,
}

/// Anything that can rank exemplars for a query.
pub trait Retriever {
    fn exemplars(&self) -> &[Exemplar];

    fn score(&self, query: &Query, position: usize) -> f64;

    /// Top-`k` exemplars by descending score, ties by ascending position.
    fn retrieve(&self, query: &Query, k: usize, opts: &RetrieveOptions) -> Vec<ScoredExemplar<'_>> {
        let mut scored: Vec<ScoredExemplar<'_>> = self
            .exemplars()
            .iter()
            .enumerate()
            .filter(|(_, e)| match &opts.label_filter {
                Some(filter) => !e.labels.is_disjoint(filter),
                None => true,
            })
            .map(|(position, exemplar)| ScoredExemplar { exemplar, position, score: self.score(query, position) })
            .filter(|s| s.score >= opts.min_score)
            .collect();
        scored.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.position.cmp(&b.position)));
        scored.truncate(k);
        scored
    }
}

/// Okapi BM25 over exemplar terms.
///
/// Document terms are the unmasked sentence's words plus the lowercased
/// label names of the masked sentence's placeholders, so label hints in the
/// query can match.
#[derive(Debug, Clone)]
pub struct Bm25Index {
    exemplars: Vec<Exemplar>,
    doc_freq: HashMap<String, usize>,
    term_counts: Vec<HashMap<String, u32>>,
    doc_lens: Vec<usize>,
    avg_len: f64,
    k1: f64,
    b: f64,
}

impl Bm25Index {
    pub fn build(exemplars: Vec<Exemplar>) -> Result<Self, RagError> {
        Bm25Index::with_params(exemplars, DEFAULT_K1, DEFAULT_B)
    }

    pub fn with_params(exemplars: Vec<Exemplar>, k1: f64, b: f64) -> Result<Self, RagError> {
        if exemplars.is_empty() {
            return Err(RagError::EmptyExemplarSet);
        }
        let mut doc_freq: HashMap<String, usize> = HashMap::new();
        let mut term_counts = Vec::with_capacity(exemplars.len());
        let mut doc_lens = Vec::with_capacity(exemplars.len());
        for e in &exemplars {
            let mut counts: HashMap<String, u32> = HashMap::new();
            let masked = parse_masked(&e.masked);
            let doc_terms = terms(&e.unmasked)
                .into_iter()
                .chain(masked.placeholders().map(|p| p.label.name().to_lowercase()));
            let mut len = 0;
            for t in doc_terms {
                *counts.entry(t).or_default() += 1;
                len += 1;
            }
            for t in counts.keys() {
                *doc_freq.entry(t.clone()).or_default() += 1;
            }
            term_counts.push(counts);
            doc_lens.push(len);
        }
        let avg_len = doc_lens.iter().sum::<usize>() as f64 / exemplars.len() as f64;
        Ok(Bm25Index { exemplars, doc_freq, term_counts, doc_lens, avg_len, k1, b })
    }

    pub fn len(&self) -> usize {
        self.exemplars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exemplars.is_empty()
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }

    pub fn avg_len(&self) -> f64 {
        self.avg_len
    }

    /// Non-negative IDF: `ln(1 + (N - df + 0.5) / (df + 0.5))`.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.exemplars.len() as f64;
        let df = self.doc_freq(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }
}

impl Retriever for Bm25Index {
    fn exemplars(&self) -> &[Exemplar] {
        &self.exemplars
    }

    fn score(&self, query: &Query, position: usize) -> f64 {
        let counts = &self.term_counts[position];
        let len_norm = if self.avg_len > 0.0 {
            1.0 - self.b + self.b * self.doc_lens[position] as f64 / self.avg_len
        } else {
            1.0
        };
        query
            .terms
            .iter()
            .filter_map(|(term, &qw)| {
                let tf = *counts.get(term)? as f64;
                Some(qw as f64 * self.idf(term) * tf * (self.k1 + 1.0) / (tf + self.k1 * len_norm))
            })
            .sum()
    }
}

/// Renders the RAG prompt: instruction, numbered examples in the given
/// order, the sentence to mask, and a trailing `masked-sentence:` stem.
pub fn assemble_context<'a>(exemplars: impl IntoIterator<Item = &'a Exemplar>, input: &str) -> String {
    let mut out = String::from(RAG_INSTRUCTION);
    out.push_str("\n\nExamples:\n");
    for (i, e) in exemplars.into_iter().enumerate() {
        out.push_str(&format!("Example {}:\nunmasked: {}\nmasked: {}\n\n", i + 1, e.unmasked, e.masked));
    }
    out.push_str("End of examples\n\nSentence-to-mask:\n");
    out.push_str(input);
    out.push_str("\n\n");
    out.push_str(RAG_RESPONSE_MARKER);
    out
}

/// The three demonstration pairs of the reference RAG prompt.
pub fn reference_exemplars() -> Vec<Exemplar> {
    vec![
        Exemplar::new("Alice went to Stanford University.", "[NAME] went to [ORG]."),
        Exemplar::new("Bob emailed me at bob@gmail.com.", "[NAME] emailed me at [EMAIL]."),
        Exemplar::new("Carla was born on May 4, 1990.", "[NAME] was born on [DATE]."),
    ]
}
