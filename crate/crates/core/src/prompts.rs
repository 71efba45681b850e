//! Prompt templates for the fine-tuned (FT), instruction-tuned (IT) and
//! retrieval-augmented (RAG) redactors, response extraction, and training
//! file emission.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;

pub const FT_INSTRUCTION: &str = "Mask the PII in the following text:";

/// Answer stem of the IT template; the masked sentence follows it.
pub const IT_RESPONSE_STEM: &str = "(1) a privacy-protected version of the sentence:";

/// Marker after which RAG completions carry the masked sentence.
pub const RAG_RESPONSE_MARKER: &str = "masked-sentence:";

const IT_PREAMBLE: &str = "Below is a sentence. Sensitive information in the sentence should be replaced by placeholders like [NAME], [EMAIL], [DATE], etc.
Write:
(1) a privacy-protected version of the sentence.

Example:
team addressed concerns from diverse participants, including students with Biesenkamp and Verdiani
(1) a privacy-protected version of the sentence: team addressed concerns from diverse participants, including students with [LASTNAME] and [LASTNAME]

### Input
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptMode {
    Ft,
    It,
    Rag,
}

impl PromptMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PromptMode::Ft => "FT",
            PromptMode::It => "IT",
            PromptMode::Rag => "RAG",
        }
    }
}

/// How a prediction was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RedactorMode {
    Rule,
    Ft,
    It,
    Rag,
}

impl RedactorMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RedactorMode::Rule => "Rule",
            RedactorMode::Ft => "FT",
            RedactorMode::It => "IT",
            RedactorMode::Rag => "RAG",
        }
    }

    /// The prompt template, or `None` for the rule baseline.
    pub fn prompt_mode(self) -> Option<PromptMode> {
        match self {
            RedactorMode::Rule => None,
            RedactorMode::Ft => Some(PromptMode::Ft),
            RedactorMode::It => Some(PromptMode::It),
            RedactorMode::Rag => Some(PromptMode::Rag),
        }
    }
}

impl From<PromptMode> for RedactorMode {
    fn from(m: PromptMode) -> Self {
        match m {
            PromptMode::Ft => RedactorMode::Ft,
            PromptMode::It => RedactorMode::It,
            PromptMode::Rag => RedactorMode::Rag,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedactionResult {
    pub masked_text: String,
    pub raw_output: String,
    pub format_compliant: bool,
    pub latency_ms: f64,
    pub prompt_mode: RedactorMode,
}

impl RedactionResult {
    /// Wraps a rule-baseline output; rules are always compliant.
    pub fn rule(masked_text: String, latency_ms: f64) -> Self {
        RedactionResult {
            raw_output: masked_text.clone(),
            masked_text,
            format_compliant: true,
            latency_ms,
            prompt_mode: RedactorMode::Rule,
        }
    }

    /// Parses a raw completion with [`extract_masked_sentence`].
    pub fn from_completion(raw_output: String, mode: PromptMode, latency_ms: f64) -> Self {
        let (masked_text, format_compliant) = extract_masked_sentence(&raw_output, mode);
        RedactionResult { masked_text, raw_output, format_compliant, latency_ms, prompt_mode: mode.into() }
    }
}

pub fn build_ft_prompt(text: &str) -> String {
    format!("{FT_INSTRUCTION}\n\n{text}")
}

pub fn build_it_prompt(text: &str) -> String {
    format!("{IT_PREAMBLE}{text}\n\n### Response\n{IT_RESPONSE_STEM}")
}

/// Recovers the masked sentence from a raw completion.
///
/// Returns the text and whether the expected marker was present. When the
/// marker is missing (or nothing follows it) the whole trimmed completion is
/// returned so downstream metrics still run.
pub fn extract_masked_sentence(raw_output: &str, mode: PromptMode) -> (String, bool) {
    let trimmed = raw_output.trim();
    let fallback = || {
        if trimmed.is_empty() {
            raw_output.to_string()
        } else {
            trimmed.to_string()
        }
    };
    let marker = match mode {
        PromptMode::Ft => return (fallback(), true),
        PromptMode::It => IT_RESPONSE_STEM,
        PromptMode::Rag => RAG_RESPONSE_MARKER,
    };
    // an echoed prompt precedes the answer, so the last marker is the one
    match trimmed.rfind(marker) {
        Some(pos) => {
            let answer = trimmed[pos + marker.len()..].trim();
            if answer.is_empty() {
                (fallback(), false)
            } else {
                (answer.to_string(), true)
            }
        }
        None => (fallback(), false),
    }
}

#[derive(Debug, Error)]
pub enum TrainingFileError {
    #[error("record {0} has no target_text")]
    MissingTarget(String),
    #[error("mode {0} has no training template")]
    UnsupportedMode(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct TrainingExample {
    pub prompt: String,
    pub completion: String,
}

/// Writes one `{prompt, completion}` JSON object per record, in corpus order.
///
/// Every record must carry a target; nothing is written otherwise.
pub fn write_training_examples(corpus: &Corpus, mode: PromptMode, mut out: impl Write) -> Result<usize, TrainingFileError> {
    let build: fn(&str) -> String = match mode {
        PromptMode::Ft => build_ft_prompt,
        PromptMode::It => build_it_prompt,
        PromptMode::Rag => return Err(TrainingFileError::UnsupportedMode("RAG")),
    };
    if let Some(r) = corpus.records.iter().find(|r| r.target_text.is_none()) {
        return Err(TrainingFileError::MissingTarget(r.id.clone()));
    }
    for record in &corpus.records {
        let example = TrainingExample {
            prompt: build(&record.source_text),
            completion: record.target_text.clone().unwrap_or_default(),
        };
        serde_json::to_writer(&mut out, &example).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(corpus.len())
}

pub fn emit_training_file(corpus: &Corpus, mode: PromptMode, path: impl AsRef<Path>) -> Result<usize, TrainingFileError> {
    // check before creating the file so a failed run leaves nothing behind
    if let Some(r) = corpus.records.iter().find(|r| r.target_text.is_none()) {
        return Err(TrainingFileError::MissingTarget(r.id.clone()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    let n = write_training_examples(corpus, mode, &mut w)?;
    w.flush()?;
    Ok(n)
}
