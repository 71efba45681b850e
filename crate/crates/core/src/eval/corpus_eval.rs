//! Corpus-level scoring with per-(language, domain) breakdown.
//!
//! Confusion counts and SPriV token counts are summed across records before
//! any ratio is taken (micro-averaging). ROUGE and BLEU are averaged per
//! record in corpus order.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::align::{align_tokens, Counts, EvalMode, Matcher};
use super::metrics::MetricReport;
use super::overlap::SeqScores;
use super::spriv::{spriv, SprivScore};
use crate::corpus::{Corpus, Record};
use crate::masking::parse_masked;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub masked_text: String,
    #[serde(default = "yes")]
    pub format_compliant: bool,
}

fn yes() -> bool {
    true
}

impl Prediction {
    pub fn new(masked_text: impl Into<String>, format_compliant: bool) -> Self {
        Prediction { masked_text: masked_text.into(), format_compliant }
    }
}

impl From<String> for Prediction {
    fn from(masked_text: String) -> Self {
        Prediction { masked_text, format_compliant: true }
    }
}

impl From<&str> for Prediction {
    fn from(masked_text: &str) -> Self {
        Prediction::from(masked_text.to_string())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub strict_coref: bool,
    pub bleu_max_n: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { strict_coref: false, bleu_max_n: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    pub language: String,
    pub domain: String,
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.language, self.domain)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordEval {
    pub id: String,
    pub group: GroupKey,
    pub span_correct: Counts,
    pub label_exact: Counts,
    pub seq: SeqScores,
    pub spriv: SprivScore,
    pub format_compliant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub records: usize,
    pub span_correct: MetricReport,
    pub label_exact: MetricReport,
    pub seq: SeqScores,
    pub spriv: SprivScore,
    pub compliance_rate: f64,
}

impl GroupReport {
    pub fn metrics(&self, mode: EvalMode) -> &MetricReport {
        match mode {
            EvalMode::SpanCorrect => &self.span_correct,
            EvalMode::LabelExact => &self.label_exact,
        }
    }

    fn aggregate<'a>(evals: impl IntoIterator<Item = &'a RecordEval> + Clone) -> GroupReport {
        let records = evals.clone().into_iter().count();
        let span: Counts = evals.clone().into_iter().map(|e| e.span_correct).sum();
        let label: Counts = evals.clone().into_iter().map(|e| e.label_exact).sum();
        let (leaked, total) = evals
            .clone()
            .into_iter()
            .fold((0, 0), |(l, t), e| (l + e.spriv.leaked_tokens, t + e.spriv.total_tokens));
        let compliant = evals.clone().into_iter().filter(|e| e.format_compliant).count();
        GroupReport {
            records,
            span_correct: MetricReport::from_counts(span, EvalMode::SpanCorrect),
            label_exact: MetricReport::from_counts(label, EvalMode::LabelExact),
            seq: SeqScores::mean(evals.into_iter().map(|e| &e.seq)),
            spriv: SprivScore::from_counts(leaked, total),
            compliance_rate: if records == 0 { 1.0 } else { compliant as f64 / records as f64 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub overall: GroupReport,
    pub groups: BTreeMap<GroupKey, GroupReport>,
    pub records: Vec<RecordEval>,
    /// Records with no prediction; they are left out of every aggregate.
    pub missing_predictions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("record {0} has a prediction but no target_text")]
    MissingTarget(String),
}

/// Scores one prediction against a record's gold target in both modes.
pub fn evaluate_record(record: &Record, prediction: &Prediction, opts: &EvalOptions) -> Result<RecordEval, EvalError> {
    let target = record.target_text.as_deref().ok_or_else(|| EvalError::MissingTarget(record.id.clone()))?;
    let gold = parse_masked(target);
    let hyp = parse_masked(&prediction.masked_text);
    let counts = |mode| align_tokens(&gold.tokens, &hyp.tokens, Matcher { mode, strict_coref: opts.strict_coref }).counts;
    Ok(RecordEval {
        id: record.id.clone(),
        group: GroupKey { language: record.language.clone(), domain: record.domain.clone() },
        span_correct: counts(EvalMode::SpanCorrect),
        label_exact: counts(EvalMode::LabelExact),
        seq: SeqScores::compute(&gold, &hyp, opts.bleu_max_n),
        spriv: spriv(&record.spans, &hyp),
        format_compliant: prediction.format_compliant,
    })
}

pub fn evaluate_corpus(
    corpus: &Corpus,
    predictions: &HashMap<String, Prediction>,
    opts: &EvalOptions,
) -> Result<CorpusReport, EvalError> {
    let missing_predictions: Vec<String> = corpus
        .records
        .iter()
        .filter(|r| !predictions.contains_key(&r.id))
        .map(|r| r.id.clone())
        .collect();
    let scored: Vec<&Record> = corpus.records.iter().filter(|r| predictions.contains_key(&r.id)).collect();
    // collect keeps corpus order, so aggregation is independent of scheduling
    let records = scored
        .par_iter()
        .map(|r| evaluate_record(r, &predictions[&r.id], opts))
        .collect::<Result<Vec<_>, _>>()?;

    let mut by_group: BTreeMap<GroupKey, Vec<&RecordEval>> = BTreeMap::new();
    for e in &records {
        by_group.entry(e.group.clone()).or_default().push(e);
    }
    let groups = by_group
        .into_iter()
        .map(|(k, evals)| (k, GroupReport::aggregate(evals.iter().copied())))
        .collect();
    Ok(CorpusReport { overall: GroupReport::aggregate(records.iter()), groups, records, missing_predictions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Span;
    use crate::taxonomy::{PiiLabel, Placeholder};

    fn record(id: &str, lang: &str, src: &str, target: &str, spans: Vec<Span>) -> Record {
        Record {
            id: id.into(),
            language: lang.into(),
            domain: "chat".into(),
            source_text: src.into(),
            target_text: Some(target.into()),
            spans,
        }
    }

    fn tel_record(id: &str, lang: &str) -> Record {
        record(
            id,
            lang,
            "Call 555-0192 now",
            "Call [TEL] now",
            vec![Span::new(Placeholder::new(PiiLabel::Tel), 5, 13, "555-0192")],
        )
    }

    #[test]
    fn identity_predictions_score_perfectly() {
        let corpus = Corpus::new("c", vec![tel_record("a", "es"), tel_record("b", "it")]);
        let preds = corpus.records.iter().map(|r| (r.id.clone(), Prediction::from(r.target_text.clone().unwrap()))).collect();
        let rep = evaluate_corpus(&corpus, &preds, &EvalOptions::default()).unwrap();
        let keys: Vec<String> = rep.groups.keys().map(|k| k.language.clone()).collect();
        assert_eq!(keys, ["es", "it"]);
        for g in rep.groups.values().chain(std::iter::once(&rep.overall)) {
            for mode in EvalMode::BOTH {
                let m = g.metrics(mode);
                assert_eq!((m.accuracy, m.precision, m.recall), (1.0, 1.0, 1.0));
            }
            assert_eq!(g.spriv.score, 0.0);
            assert_eq!(g.seq, SeqScores { rouge1_f1: 1.0, rouge2_f1: 1.0, rouge_l_f1: 1.0, bleu: 1.0 });
        }
    }

    #[test]
    fn micro_aggregation_sums_counts() {
        // (tp=1, fp=0, fn=1, tn=3) and (tp=2, fp=1, fn=0, tn=3)
        let a = record(
            "a",
            "en",
            "x",
            "[TEL] and [EMAIL] ok now",
            vec![],
        );
        let b = record("b", "en", "x", "[TEL] [IP] are both fine here", vec![]);
        let corpus = Corpus::new("c", vec![a, b]);
        let preds: HashMap<String, Prediction> = [
            ("a".to_string(), Prediction::from("[TEL] and me@x.org ok now")),
            ("b".to_string(), Prediction::from("[TEL] [IP] are [CITY] fine here")),
        ]
        .into_iter()
        .collect();
        let rep = evaluate_corpus(&corpus, &preds, &EvalOptions::default()).unwrap();
        let ca = rep.records[0].span_correct;
        let cb = rep.records[1].span_correct;
        assert_eq!((ca.tp, ca.fp, ca.fn_, ca.tn), (1, 0, 1, 3));
        assert_eq!((cb.tp, cb.fp, cb.fn_, cb.tn), (2, 1, 0, 3));
        let m = rep.overall.span_correct;
        assert_eq!(m.counts.tp, 3);
        assert!((m.precision - 0.75).abs() < 1e-12);
        assert!((m.recall - 0.75).abs() < 1e-12);
    }

    #[test]
    fn missing_predictions_are_listed() {
        let corpus = Corpus::new("c", vec![tel_record("a", "en"), tel_record("b", "en")]);
        let preds: HashMap<_, _> = [("a".to_string(), Prediction::from("Call [TEL] now"))].into_iter().collect();
        let rep = evaluate_corpus(&corpus, &preds, &EvalOptions::default()).unwrap();
        assert_eq!(rep.missing_predictions, ["b"]);
        assert_eq!(rep.overall.records, 1);
    }

    #[test]
    fn prediction_without_target_is_an_error() {
        let mut r = tel_record("a", "en");
        r.target_text = None;
        let corpus = Corpus::new("c", vec![r]);
        let preds: HashMap<_, _> = [("a".to_string(), Prediction::from("x"))].into_iter().collect();
        assert_eq!(
            evaluate_corpus(&corpus, &preds, &EvalOptions::default()),
            Err(EvalError::MissingTarget("a".into()))
        );
    }

    #[test]
    fn compliance_rate_counts_flags() {
        let corpus = Corpus::new("c", vec![tel_record("a", "en"), tel_record("b", "en")]);
        let preds: HashMap<_, _> = [
            ("a".to_string(), Prediction::new("Call [TEL] now", true)),
            ("b".to_string(), Prediction::new("Call [TEL] now", false)),
        ]
        .into_iter()
        .collect();
        let rep = evaluate_corpus(&corpus, &preds, &EvalOptions::default()).unwrap();
        assert_eq!(rep.overall.compliance_rate, 0.5);
    }
}
