//! Markdown and CSV rendering of evaluation and latency results.

use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};

use crate::eval::{CorpusReport, EvalMode, GroupReport};
use crate::latency::LatencyReport;

pub const SPAN_COLUMNS: [&str; 4] = ["Model", "Accuracy", "Precision", "Recall"];
pub const LABEL_COLUMNS: [&str; 5] = ["Model", "Mislabel #", "Accuracy", "Precision", "Recall"];
pub const SEQ_COLUMNS: [&str; 4] = ["Model", "ROUGE-1/2/L", "BLEU", "SPriV"];
pub const GROUP_COLUMNS: [&str; 5] = ["Model", "Accuracy", "Precision", "Recall", "SPriV"];
pub const RUN_COLUMNS: [&str; 6] = ["Model", "Records", "Missing", "Failed", "Compliance", "Latency (ms)"];
pub const LATENCY_COLUMNS: [&str; 3] = ["Model (Adaptation)", "Latency (ms)", "Tokens/sec"];

/// Request-level facts that the evaluator does not see.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub requests: usize,
    pub failed: usize,
    pub mean_latency_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub model: String,
    pub report: CorpusReport,
    pub stats: RunStats,
}

fn table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let line = |cells: &[&str]| format!("| {} |\n", cells.join(" | "));
    out.push_str(&line(header));
    let rule: Vec<String> = header.iter().enumerate().map(|(i, _)| if i == 0 { ":--".into() } else { "--:".into() }).collect();
    out.push_str(&line(&rule.iter().map(String::as_str).collect::<Vec<_>>()));
    for r in rows {
        out.push_str(&line(&r.iter().map(String::as_str).collect::<Vec<_>>()));
    }
}

fn f3(x: f64) -> String {
    format!("{x:.3}")
}

fn span_row(model: &str, g: &GroupReport) -> Vec<String> {
    let m = g.metrics(EvalMode::SpanCorrect);
    vec![model.to_string(), f3(m.accuracy), f3(m.precision), f3(m.recall)]
}

fn label_row(model: &str, g: &GroupReport) -> Vec<String> {
    let m = g.metrics(EvalMode::LabelExact);
    vec![model.to_string(), m.mislabel_count.to_string(), f3(m.accuracy), f3(m.precision), f3(m.recall)]
}

fn seq_row(model: &str, g: &GroupReport) -> Vec<String> {
    let s = &g.seq;
    vec![
        model.to_string(),
        format!("{} / {} / {}", f3(s.rouge1_f1), f3(s.rouge2_f1), f3(s.rouge_l_f1)),
        f3(s.bleu),
        f3(g.spriv.score),
    ]
}

pub fn render_span_table(results: &[ModelResult]) -> String {
    let mut out = String::new();
    let rows: Vec<_> = results.iter().map(|r| span_row(&r.model, &r.report.overall)).collect();
    table(&mut out, &SPAN_COLUMNS, &rows);
    out
}

pub fn render_label_table(results: &[ModelResult]) -> String {
    let mut out = String::new();
    let rows: Vec<_> = results.iter().map(|r| label_row(&r.model, &r.report.overall)).collect();
    table(&mut out, &LABEL_COLUMNS, &rows);
    out
}

pub fn render_seq_table(results: &[ModelResult]) -> String {
    let mut out = String::new();
    let rows: Vec<_> = results.iter().map(|r| seq_row(&r.model, &r.report.overall)).collect();
    table(&mut out, &SEQ_COLUMNS, &rows);
    out
}

/// One span-correct table per (language, domain) group, in group order.
pub fn render_group_tables(results: &[ModelResult]) -> String {
    let mut keys: Vec<_> = results.iter().flat_map(|r| r.report.groups.keys().cloned()).collect();
    keys.sort();
    keys.dedup();
    let mut out = String::new();
    for key in keys {
        let _ = writeln!(out, "### {key}\n");
        let rows: Vec<Vec<String>> = results
            .iter()
            .filter_map(|r| r.report.groups.get(&key).map(|g| (r, g)))
            .map(|(r, g)| {
                let mut row = span_row(&r.model, g);
                row.push(f3(g.spriv.score));
                row
            })
            .collect();
        table(&mut out, &GROUP_COLUMNS, &rows);
        out.push('\n');
    }
    out
}

pub fn render_run_table(results: &[ModelResult]) -> String {
    let mut out = String::new();
    let rows: Vec<_> = results
        .iter()
        .map(|r| {
            vec![
                r.model.clone(),
                r.report.overall.records.to_string(),
                r.report.missing_predictions.len().to_string(),
                r.stats.failed.to_string(),
                f3(r.report.overall.compliance_rate),
                r.stats.mean_latency_ms.map_or_else(|| "-".to_string(), |ms| format!("{ms:.0}")),
            ]
        })
        .collect();
    table(&mut out, &RUN_COLUMNS, &rows);
    out
}

/// Full benchmark report: both evaluation modes, sequence metrics, groups
/// and run statistics.
pub fn render_markdown(results: &[ModelResult]) -> String {
    let mut out = String::new();
    out.push_str("## Span-correct evaluation\n\n");
    out.push_str(&render_span_table(results));
    out.push_str("\n## Label-exact evaluation\n\n");
    out.push_str(&render_label_table(results));
    out.push_str("\n## Sequence metrics\n\n");
    out.push_str(&render_seq_table(results));
    out.push_str("\n## Per group (span-correct)\n\n");
    out.push_str(&render_group_tables(results));
    out.push_str("## Run\n\n");
    out.push_str(&render_run_table(results));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyRow {
    pub model: String,
    pub latency_ms: f64,
    pub tokens_per_sec: f64,
}

impl From<&LatencyReport> for LatencyRow {
    fn from(r: &LatencyReport) -> Self {
        LatencyRow { model: r.label.clone(), latency_ms: r.ms_per_150, tokens_per_sec: r.tokens_per_sec }
    }
}

/// Latency normalized to 150 generated tokens, rounded to whole numbers.
pub fn render_latency_table(rows: &[LatencyRow]) -> String {
    let mut out = String::new();
    let rows: Vec<_> = rows
        .iter()
        .map(|r| vec![r.model.clone(), format!("{:.0}", r.latency_ms), format!("{:.0}", r.tokens_per_sec)])
        .collect();
    table(&mut out, &LATENCY_COLUMNS, &rows);
    out
}

/// Flat CSV row; one per model and group plus one `overall` row per model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: String,
    pub group: String,
    pub records: usize,
    pub span_accuracy: f64,
    pub span_precision: f64,
    pub span_recall: f64,
    pub label_accuracy: f64,
    pub label_precision: f64,
    pub label_recall: f64,
    pub mislabels: u64,
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
    pub bleu: f64,
    pub spriv: f64,
    pub compliance_rate: f64,
    pub failed: usize,
    pub mean_latency_ms: Option<f64>,
}

fn summary_row(model: &str, group: String, g: &GroupReport, stats: &RunStats) -> SummaryRow {
    let (s, l) = (&g.span_correct, &g.label_exact);
    SummaryRow {
        model: model.to_string(),
        group,
        records: g.records,
        span_accuracy: s.accuracy,
        span_precision: s.precision,
        span_recall: s.recall,
        label_accuracy: l.accuracy,
        label_precision: l.precision,
        label_recall: l.recall,
        mislabels: l.mislabel_count,
        rouge1: g.seq.rouge1_f1,
        rouge2: g.seq.rouge2_f1,
        rouge_l: g.seq.rouge_l_f1,
        bleu: g.seq.bleu,
        spriv: g.spriv.score,
        compliance_rate: g.compliance_rate,
        failed: stats.failed,
        mean_latency_ms: stats.mean_latency_ms,
    }
}

pub fn summary_rows(results: &[ModelResult]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for r in results {
        rows.push(summary_row(&r.model, "overall".into(), &r.report.overall, &r.stats));
        for (k, g) in &r.report.groups {
            rows.push(summary_row(&r.model, k.to_string(), g, &r.stats));
        }
    }
    rows
}

pub fn write_csv(results: &[ModelResult], out: impl io::Write) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in summary_rows(results) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Column names of the first Markdown table found after `heading`.
pub fn table_header_after(markdown: &str, heading: &str) -> Option<Vec<String>> {
    let rest = &markdown[markdown.find(heading)?..];
    let line = rest.lines().find(|l| l.starts_with('|'))?;
    Some(line.trim_matches('|').split('|').map(|c| c.trim().to_string()).collect())
}
