use redactkit_core::latency::{LatencyReport, LatencySample};

use crate::{ClientError, LlmClient};

/// Sends `prompt` sequentially `trials` times and averages the timings.
///
/// Token counts come from `usage.completion_tokens`, or the whitespace word
/// count of the completion when the endpoint omits usage. The first failure
/// stops the run; the report then covers the completed trials and is flagged
/// partial, and the error is returned alongside it.
pub async fn bench_latency(
    client: &LlmClient,
    label: &str,
    prompt: &str,
    trials: usize,
) -> (LatencyReport, Option<ClientError>) {
    let mut samples = Vec::with_capacity(trials);
    for _ in 0..trials.max(1) {
        match client.complete(prompt).await {
            Ok(c) => {
                let tokens = c.completion_tokens.unwrap_or(c.text.split_whitespace().count() as u64);
                samples.push(LatencySample { tokens, wall_ms: c.latency_ms });
            }
            Err(e) => return (LatencyReport::from_trials(label, samples, true), Some(e)),
        }
    }
    (LatencyReport::from_trials(label, samples, false), None)
}
