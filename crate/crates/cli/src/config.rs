use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use redactkit_client::EndpointConfig;
use redactkit_core::prompts::PromptMode;

/// How predictions are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BenchMode {
    Rule,
    Ft,
    It,
    Rag,
    /// Replays each record's target as its prediction.
    Gold,
}

impl BenchMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BenchMode::Rule => "rule",
            BenchMode::Ft => "ft",
            BenchMode::It => "it",
            BenchMode::Rag => "rag",
            BenchMode::Gold => "gold",
        }
    }

    pub fn prompt_mode(self) -> Option<PromptMode> {
        match self {
            BenchMode::Ft => Some(PromptMode::Ft),
            BenchMode::It => Some(PromptMode::It),
            BenchMode::Rag => Some(PromptMode::Rag),
            BenchMode::Rule | BenchMode::Gold => None,
        }
    }
}

/// Benchmark run settings, read from TOML. Both evaluation modes are always
/// computed, so there is no mode selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: PathBuf,
    #[serde(default = "default_mode")]
    pub mode: BenchMode,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Model name used in report rows; defaults to the mode (and endpoint model).
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub seed: u64,
    /// Exemplar JSONL for RAG mode.
    #[serde(default)]
    pub rag_index: Option<PathBuf>,
    #[serde(default = "default_k")]
    pub rag_k: usize,
    #[serde(default)]
    pub strict_coref: bool,
    #[serde(default)]
    pub endpoint: EndpointConfig,
}

fn default_mode() -> BenchMode {
    BenchMode::Rule
}

fn default_output() -> PathBuf {
    PathBuf::from("redactkit-out")
}

fn default_k() -> usize {
    redactkit_core::rag::DEFAULT_K
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{what} not found: {path}")]
    MissingPath { what: &'static str, path: String },
    #[error("RAG mode needs rag_index")]
    MissingRagIndex,
    #[error(transparent)]
    Endpoint(#[from] redactkit_client::ClientError),
}

impl RunConfig {
    pub fn new(corpus: impl Into<PathBuf>, mode: BenchMode) -> Self {
        RunConfig {
            corpus: corpus.into(),
            mode,
            output_dir: default_output(),
            label: None,
            seed: 0,
            rag_index: None,
            rag_k: default_k(),
            strict_coref: false,
            endpoint: EndpointConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        RunConfig::from_toml(&text)
    }

    /// Checks that referenced files exist and the endpoint settings are sane.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.corpus.is_file() {
            return Err(ConfigError::MissingPath { what: "corpus", path: self.corpus.display().to_string() });
        }
        if self.mode == BenchMode::Rag {
            let index = self.rag_index.as_ref().ok_or(ConfigError::MissingRagIndex)?;
            if !index.is_file() {
                return Err(ConfigError::MissingPath { what: "rag index", path: index.display().to_string() });
            }
        }
        if self.mode.prompt_mode().is_some() {
            self.endpoint.validate()?;
        }
        Ok(())
    }

    pub fn model_label(&self) -> String {
        self.label.clone().unwrap_or_else(|| match self.mode.prompt_mode() {
            Some(_) => format!("{} ({})", self.endpoint.model, self.mode.as_str().to_uppercase()),
            None => self.mode.as_str().to_string(),
        })
    }
}
