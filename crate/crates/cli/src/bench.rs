use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use redactkit_client::{LlmClient, RedactRequest};
use redactkit_core::corpus::{load_jsonl, Corpus, LoadError};
use redactkit_core::eval::{evaluate_corpus, Counts, EvalError, EvalOptions, Prediction, SprivScore};
use redactkit_core::prompts::RedactionResult;
use redactkit_core::rag::{assemble_context, construct_query, load_exemplars, Bm25Index, RagError, RetrieveOptions, Retriever};
use redactkit_core::report::{render_markdown, write_csv, ModelResult, RunStats};
use redactkit_core::rules::{rule_redact, RuleSet};

use crate::config::{BenchMode, ConfigError, RunConfig};

pub const CSV_FILE: &str = "summary.csv";
pub const MARKDOWN_FILE: &str = "report.md";
pub const RECORDS_FILE: &str = "records.jsonl";

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Rag(#[from] RagError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("cannot write reports: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("{failed} of {requests} requests failed; per-record results are in {records}")]
    TooManyFailures { failed: usize, requests: usize, records: String },
}

/// One line of `records.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub id: String,
    pub language: String,
    pub domain: String,
    pub mode: String,
    pub prediction: Option<String>,
    pub raw_output: Option<String>,
    pub format_compliant: Option<bool>,
    pub latency_ms: Option<f64>,
    pub error: Option<String>,
    pub error_class: Option<String>,
    pub span_correct: Option<Counts>,
    pub label_exact: Option<Counts>,
    pub spriv: Option<SprivScore>,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub result: ModelResult,
    pub rows: Vec<RecordRow>,
    /// Records dropped by corpus validation.
    pub rejected: usize,
    pub csv_path: PathBuf,
    pub markdown_path: PathBuf,
    pub records_path: PathBuf,
}

/// Redacts every record, scores both evaluation modes and writes
/// `summary.csv`, `report.md` and `records.jsonl` into the output directory.
///
/// Failed requests are recorded per record and excluded from the metrics;
/// the run itself fails only when more than half of the requests fail.
pub async fn run_benchmark(config: &RunConfig) -> Result<BenchOutcome, BenchError> {
    config.validate()?;
    let loaded = load_jsonl(&config.corpus)?;
    let corpus = loaded.corpus;
    let results = redact_all(config, &corpus).await?;

    let mut predictions = HashMap::new();
    let mut latencies = Vec::new();
    let mut failed = 0;
    for (record, result) in corpus.records.iter().zip(&results) {
        match result {
            Ok(r) => {
                predictions.insert(record.id.clone(), Prediction::new(r.masked_text.clone(), r.format_compliant));
                latencies.push(r.latency_ms);
            }
            Err(_) => failed += 1,
        }
    }
    let opts = EvalOptions { strict_coref: config.strict_coref, ..EvalOptions::default() };
    let report = evaluate_corpus(&corpus, &predictions, &opts)?;

    let evals: HashMap<&str, _> = report.records.iter().map(|e| (e.id.as_str(), e)).collect();
    let rows: Vec<RecordRow> = corpus
        .records
        .iter()
        .zip(&results)
        .map(|(record, result)| {
            let eval = evals.get(record.id.as_str());
            let (ok, err) = match result {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e)),
            };
            RecordRow {
                id: record.id.clone(),
                language: record.language.clone(),
                domain: record.domain.clone(),
                mode: config.mode.as_str().to_string(),
                prediction: ok.map(|r| r.masked_text.clone()),
                raw_output: ok.map(|r| r.raw_output.clone()),
                format_compliant: ok.map(|r| r.format_compliant),
                latency_ms: ok.map(|r| r.latency_ms),
                error: err.map(|e| e.to_string()),
                error_class: err.map(|e| e.class().to_string()),
                span_correct: eval.map(|e| e.span_correct),
                label_exact: eval.map(|e| e.label_exact),
                spriv: eval.map(|e| e.spriv),
            }
        })
        .collect();

    let requests = results.len();
    let mean_latency_ms =
        (!latencies.is_empty()).then(|| latencies.iter().sum::<f64>() / latencies.len() as f64);
    let result = ModelResult {
        model: config.model_label(),
        report,
        stats: RunStats { requests, failed, mean_latency_ms },
    };

    fs::create_dir_all(&config.output_dir)?;
    let records_path = config.output_dir.join(RECORDS_FILE);
    let mut w = BufWriter::new(File::create(&records_path)?);
    for row in &rows {
        serde_json::to_writer(&mut w, row).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    if failed * 2 > requests {
        return Err(BenchError::TooManyFailures { failed, requests, records: records_path.display().to_string() });
    }

    let csv_path = config.output_dir.join(CSV_FILE);
    write_csv(std::slice::from_ref(&result), BufWriter::new(File::create(&csv_path)?))?;
    let markdown_path = config.output_dir.join(MARKDOWN_FILE);
    fs::write(&markdown_path, render_markdown(std::slice::from_ref(&result)))?;

    Ok(BenchOutcome { result, rows, rejected: loaded.rejected.len(), csv_path, markdown_path, records_path })
}

type Outcome = Result<RedactionResult, redactkit_client::ClientError>;

async fn redact_all(config: &RunConfig, corpus: &Corpus) -> Result<Vec<Outcome>, BenchError> {
    let timed = |f: &dyn Fn(&str) -> String, text: &str| {
        let start = Instant::now();
        let out = f(text);
        RedactionResult::rule(out, start.elapsed().as_secs_f64() * 1000.0)
    };
    match config.mode {
        BenchMode::Rule => {
            let rules = RuleSet::default_rules();
            let f = |t: &str| rule_redact(t, &rules);
            Ok(corpus.records.iter().map(|r| Ok(timed(&f, &r.source_text))).collect())
        }
        BenchMode::Gold => Ok(corpus
            .records
            .iter()
            .map(|r| Ok(RedactionResult::rule(r.target_text.clone().unwrap_or_default(), 0.0)))
            .collect()),
        BenchMode::Ft | BenchMode::It | BenchMode::Rag => {
            let mode = config.mode.prompt_mode().expect("LLM mode");
            let client = LlmClient::new(config.endpoint.clone()).map_err(ConfigError::from)?;
            let requests: Vec<RedactRequest> = if config.mode == BenchMode::Rag {
                let path = config.rag_index.as_ref().ok_or(ConfigError::MissingRagIndex)?;
                let index = Bm25Index::build(load_exemplars(path)?)?;
                corpus
                    .records
                    .iter()
                    .map(|r| {
                        let hits = index.retrieve(&construct_query(&r.source_text, None), config.rag_k, &RetrieveOptions::default());
                        let context = assemble_context(hits.iter().map(|h| h.exemplar), &r.source_text);
                        RedactRequest { text: r.source_text.clone(), context: Some(context) }
                    })
                    .collect()
            } else {
                corpus.records.iter().map(|r| RedactRequest::plain(r.source_text.clone())).collect()
            };
            Ok(client.redact_batch(&requests, mode).await)
        }
    }
}
