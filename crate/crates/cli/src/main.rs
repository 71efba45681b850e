use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use redactkit_cli::{run_benchmark, BenchMode, RunConfig};
use redactkit_client::{bench_latency, EndpointConfig, LlmClient, RedactRequest};
use redactkit_core::corpus::{load_jsonl, save_jsonl};
use redactkit_core::eval::{evaluate_corpus, EvalOptions, Prediction};
use redactkit_core::prompts::{emit_training_file, PromptMode};
use redactkit_core::rag::{
    assemble_context, construct_query, exemplars_from_corpus, load_exemplars, save_exemplars, Bm25Index,
    RetrieveOptions, Retriever, DEFAULT_K,
};
use redactkit_core::report::{render_latency_table, render_markdown, write_csv, LatencyRow, ModelResult, RunStats};
use redactkit_core::rules::{rule_redact, RuleSet};
use redactkit_core::synthetic::{gen_synthetic, regex_label_mix, uniform_mix};
use redactkit_core::taxonomy::PiiLabel;

#[derive(Parser)]
#[command(name = "redactkit", version, about = "PII redaction and evaluation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Redact text with the rule baseline or an LLM endpoint.
    Redact(RedactArgs),
    /// Score a predictions file against a corpus.
    Evaluate(EvaluateArgs),
    /// Redact and score a whole corpus, writing CSV, Markdown and per-record JSONL.
    Bench(BenchArgs),
    /// Measure generation latency per 150 tokens.
    BenchLatency(LatencyArgs),
    /// Write a seeded synthetic corpus.
    GenSynthetic(GenArgs),
    /// Build or query a BM25 exemplar index.
    RagIndex {
        #[command(subcommand)]
        command: RagCommand,
    },
    /// Write FT or IT training pairs for a corpus.
    EmitTraining(EmitArgs),
}

#[derive(Args, Default)]
struct EndpointArgs {
    /// Base URL of an OpenAI-compatible API, e.g. http://localhost:8000/v1
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    max_tokens: Option<u32>,
    #[arg(long)]
    timeout_ms: Option<u64>,
    #[arg(long)]
    max_parallel: Option<usize>,
    /// Environment variable that holds the bearer token.
    #[arg(long)]
    auth_env: Option<String>,
}

impl EndpointArgs {
    fn apply(&self, cfg: &mut EndpointConfig) {
        if let Some(v) = &self.endpoint {
            cfg.base_url = v.clone();
        }
        if let Some(v) = &self.model {
            cfg.model = v.clone();
        }
        if let Some(v) = self.temperature {
            cfg.temperature = v;
        }
        if let Some(v) = self.max_tokens {
            cfg.max_tokens = v;
        }
        if let Some(v) = self.timeout_ms {
            cfg.timeout_ms = v;
        }
        if let Some(v) = self.max_parallel {
            cfg.max_parallel = v;
        }
        if let Some(v) = &self.auth_env {
            cfg.auth_env_var = Some(v.clone());
        }
    }

    fn config(&self) -> EndpointConfig {
        let mut cfg = EndpointConfig::default();
        self.apply(&mut cfg);
        cfg
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RedactMode {
    Rule,
    Ft,
    It,
    Rag,
}

#[derive(Args)]
struct RedactArgs {
    /// Text to redact; omit to read one text per line from --input.
    text: Option<String>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rule")]
    mode: RedactMode,
    /// Exemplar JSONL, required for --mode rag.
    #[arg(long)]
    rag_index: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    #[command(flatten)]
    endpoint: EndpointArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// JSONL of {"id", "masked_text", optional "format_compliant"}.
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long, default_value = "redactkit-out")]
    output_dir: PathBuf,
    #[arg(long, default_value = "model")]
    label: String,
    #[arg(long)]
    strict_coref: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<BenchMode>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rag_index: Option<PathBuf>,
    #[arg(long)]
    rag_k: Option<usize>,
    #[arg(long)]
    strict_coref: bool,
    #[command(flatten)]
    endpoint: EndpointArgs,
}

#[derive(Args)]
struct LatencyArgs {
    /// File holding the prompt to send.
    #[arg(long, conflicts_with = "prompt")]
    prompt_file: Option<PathBuf>,
    #[arg(long)]
    prompt: Option<String>,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    /// Row label in the latency table.
    #[arg(long)]
    label: Option<String>,
    #[command(flatten)]
    endpoint: EndpointArgs,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Comma-separated language codes.
    #[arg(long, default_value = "en")]
    languages: String,
    /// `all`, `regex`, or comma-separated LABEL=weight pairs.
    #[arg(long, default_value = "all")]
    labels: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum RagCommand {
    /// Store a corpus's (source, target) pairs as exemplars.
    Build {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Show the top exemplars for a sentence.
    Query {
        #[arg(long)]
        index: PathBuf,
        text: String,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        /// Print the assembled prompt instead of the ranking.
        #[arg(long)]
        prompt: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TrainMode {
    Ft,
    It,
}

#[derive(Args)]
struct EmitArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum)]
    mode: TrainMode,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let rt = tokio::runtime::Runtime::new()?;
    match cli.command {
        Command::Redact(a) => rt.block_on(redact(a)),
        Command::Evaluate(a) => evaluate(a),
        Command::Bench(a) => rt.block_on(bench(a)),
        Command::BenchLatency(a) => rt.block_on(latency(a)),
        Command::GenSynthetic(a) => gen(a),
        Command::RagIndex { command } => rag(command),
        Command::EmitTraining(a) => emit(a),
    }
}

async fn redact(a: RedactArgs) -> Result<()> {
    let texts: Vec<String> = match (&a.text, &a.input) {
        (Some(t), None) => vec![t.clone()],
        (None, Some(p)) => BufReader::new(fs::File::open(p).with_context(|| p.display().to_string())?)
            .lines()
            .collect::<std::io::Result<_>>()?,
        _ => bail!("give either TEXT or --input"),
    };
    let mode = match a.mode {
        RedactMode::Rule => {
            let rules = RuleSet::default_rules();
            for t in &texts {
                println!("{}", rule_redact(t, &rules));
            }
            return Ok(());
        }
        RedactMode::Ft => PromptMode::Ft,
        RedactMode::It => PromptMode::It,
        RedactMode::Rag => PromptMode::Rag,
    };
    let index = match (mode, &a.rag_index) {
        (PromptMode::Rag, Some(p)) => Some(Bm25Index::build(load_exemplars(p)?)?),
        (PromptMode::Rag, None) => bail!("--mode rag needs --rag-index"),
        _ => None,
    };
    let requests: Vec<RedactRequest> = texts
        .iter()
        .map(|t| RedactRequest {
            text: t.clone(),
            context: index.as_ref().map(|idx| {
                let hits = idx.retrieve(&construct_query(t, None), a.k, &RetrieveOptions::default());
                assemble_context(hits.iter().map(|h| h.exemplar), t)
            }),
        })
        .collect();
    let client = LlmClient::new(a.endpoint.config())?;
    for r in client.redact_batch(&requests, mode).await {
        match r {
            Ok(r) if r.format_compliant => println!("{}", r.masked_text),
            Ok(r) => println!("{}\t(non-compliant output)", r.masked_text),
            Err(e) => eprintln!("error: {e}"),
        }
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let loaded = load_jsonl(&a.corpus)?;
    if !loaded.rejected.is_empty() {
        eprintln!("{} records failed validation and were skipped", loaded.rejected.len());
    }
    #[derive(serde::Deserialize)]
    struct Line {
        id: serde_json::Value,
        #[serde(flatten)]
        prediction: Prediction,
    }
    let mut preds = HashMap::new();
    let file = fs::File::open(&a.predictions).with_context(|| a.predictions.display().to_string())?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let l: Line = serde_json::from_str(&line).with_context(|| format!("predictions line {}", i + 1))?;
        let id = match l.id {
            serde_json::Value::String(s) => s,
            other => other.to_string(),
        };
        preds.insert(id, l.prediction);
    }
    let opts = EvalOptions { strict_coref: a.strict_coref, ..EvalOptions::default() };
    let report = evaluate_corpus(&loaded.corpus, &preds, &opts)?;
    if !report.missing_predictions.is_empty() {
        eprintln!("{} records have no prediction and were skipped", report.missing_predictions.len());
    }
    let results = [ModelResult { model: a.label, report, stats: RunStats::default() }];
    fs::create_dir_all(&a.output_dir)?;
    write_csv(&results, fs::File::create(a.output_dir.join("summary.csv"))?)?;
    let md = render_markdown(&results);
    fs::write(a.output_dir.join("report.md"), &md)?;
    print!("{md}");
    Ok(())
}

async fn bench(a: BenchArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => {
            let corpus = a.corpus.clone().context("--corpus or --config is required")?;
            RunConfig::new(corpus, BenchMode::Rule)
        }
    };
    if let Some(v) = a.corpus {
        cfg.corpus = v;
    }
    if let Some(v) = a.mode {
        cfg.mode = v;
    }
    if let Some(v) = a.output_dir {
        cfg.output_dir = v;
    }
    if let Some(v) = a.label {
        cfg.label = Some(v);
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.rag_index {
        cfg.rag_index = Some(v);
    }
    if let Some(v) = a.rag_k {
        cfg.rag_k = v;
    }
    cfg.strict_coref |= a.strict_coref;
    a.endpoint.apply(&mut cfg.endpoint);

    let out = run_benchmark(&cfg).await?;
    if out.rejected > 0 {
        eprintln!("{} records failed validation and were skipped", out.rejected);
    }
    if out.result.stats.failed > 0 {
        eprintln!("{} of {} requests failed", out.result.stats.failed, out.result.stats.requests);
    }
    print!("{}", fs::read_to_string(&out.markdown_path)?);
    eprintln!("wrote {}, {}, {}", out.csv_path.display(), out.markdown_path.display(), out.records_path.display());
    Ok(())
}

async fn latency(a: LatencyArgs) -> Result<()> {
    let prompt = match (&a.prompt, &a.prompt_file) {
        (Some(p), _) => p.clone(),
        (None, Some(f)) => fs::read_to_string(f).with_context(|| f.display().to_string())?,
        (None, None) => bail!("give --prompt or --prompt-file"),
    };
    if a.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let cfg = a.endpoint.config();
    let label = a.label.clone().unwrap_or_else(|| cfg.model.clone());
    let client = LlmClient::new(cfg)?;
    let (report, err) = bench_latency(&client, &label, &prompt, a.trials).await;
    print!("{}", render_latency_table(&[LatencyRow::from(&report)]));
    if let Some(e) = err {
        bail!("stopped after {} of {} trials: {e}", report.trials.len(), a.trials);
    }
    Ok(())
}

fn parse_mix(spec: &str) -> Result<BTreeMap<PiiLabel, f64>> {
    match spec {
        "all" => Ok(uniform_mix()),
        "regex" => Ok(regex_label_mix()),
        _ => spec
            .split(',')
            .map(|pair| {
                let (label, weight) = pair.split_once('=').unwrap_or((pair, "1"));
                let label: PiiLabel = label.trim().parse().map_err(|e| anyhow::anyhow!("{label}: {e}"))?;
                Ok((label, weight.trim().parse::<f64>().with_context(|| format!("weight in {pair:?}"))?))
            })
            .collect(),
    }
}

fn gen(a: GenArgs) -> Result<()> {
    let langs: Vec<&str> = a.languages.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let corpus = gen_synthetic(a.seed, a.n, &langs, &parse_mix(&a.labels)?)?;
    save_jsonl(&corpus, &a.out)?;
    eprintln!("wrote {} records to {}", corpus.len(), a.out.display());
    Ok(())
}

fn rag(cmd: RagCommand) -> Result<()> {
    match cmd {
        RagCommand::Build { corpus, out } => {
            let loaded = load_jsonl(&corpus)?;
            let ex = exemplars_from_corpus(&loaded.corpus);
            save_exemplars(&ex, &out)?;
            eprintln!("wrote {} exemplars to {}", ex.len(), out.display());
        }
        RagCommand::Query { index, text, k, prompt } => {
            let idx = Bm25Index::build(load_exemplars(&index)?)?;
            let hits = idx.retrieve(&construct_query(&text, None), k, &RetrieveOptions::default());
            if prompt {
                println!("{}", assemble_context(hits.iter().map(|h| h.exemplar), &text));
            } else {
                for h in hits {
                    println!("{:.4}\t{}\t{}", h.score, h.exemplar.unmasked, h.exemplar.masked);
                }
            }
        }
    }
    Ok(())
}

fn emit(a: EmitArgs) -> Result<()> {
    let loaded = load_jsonl(&a.corpus)?;
    let mode = match a.mode {
        TrainMode::Ft => PromptMode::Ft,
        TrainMode::It => PromptMode::It,
    };
    let n = emit_training_file(&loaded.corpus, mode, &a.out)?;
    eprintln!("wrote {n} training examples to {}", a.out.display());
    Ok(())
}
