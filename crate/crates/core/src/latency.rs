//! Generation latency normalized to 150-token completions.

use serde::{Deserialize, Serialize};

pub const REFERENCE_TOKENS: f64 = 150.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySample {
    pub tokens: u64,
    pub wall_ms: f64,
}

impl LatencySample {
    pub fn ms_per_150(&self) -> f64 {
        REFERENCE_TOKENS * self.wall_ms / self.tokens as f64
    }

    pub fn tokens_per_sec(&self) -> f64 {
        self.tokens as f64 * 1000.0 / self.wall_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub label: String,
    pub trials: Vec<LatencySample>,
    /// Mean tokens and wall time over the trials.
    pub tokens: f64,
    pub wall_ms: f64,
    pub ms_per_150: f64,
    pub tokens_per_sec: f64,
    /// Set when a trial failed and the averages cover only the trials before it.
    pub partial: bool,
}

impl LatencyReport {
    /// Averages tokens and wall time first, then applies the rate formulas,
    /// so equal trials give the single-trial figures.
    pub fn from_trials(label: impl Into<String>, trials: Vec<LatencySample>, partial: bool) -> Self {
        let n = trials.len().max(1) as f64;
        let tokens = trials.iter().map(|t| t.tokens as f64).sum::<f64>() / n;
        let wall_ms = trials.iter().map(|t| t.wall_ms).sum::<f64>() / n;
        let (ms_per_150, tokens_per_sec) = if trials.is_empty() || tokens == 0.0 || wall_ms == 0.0 {
            (0.0, 0.0)
        } else {
            (REFERENCE_TOKENS * wall_ms / tokens, tokens * 1000.0 / wall_ms)
        };
        LatencyReport { label: label.into(), trials, tokens, wall_ms, ms_per_150, tokens_per_sec, partial }
    }
}
