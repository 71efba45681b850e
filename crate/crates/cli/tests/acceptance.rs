//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any failed.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use redactkit_cli::{run_benchmark, BenchMode, RunConfig};
use redactkit_client::inject::{inject_errors, ErrorRates};
use redactkit_client::mock::{MockConfig, MockServer, Script};
use redactkit_client::{bench_latency, EndpointConfig, LlmClient};
use redactkit_core::corpus::{save_jsonl, Corpus};
use redactkit_core::eval::{
    align, bleu, brute_force_align, compute_prf, evaluate_corpus, rouge, spriv, Counts, EvalMode, EvalOptions,
    MetricReport, Prediction, RougeVariant, SeqScores,
};
use redactkit_core::latency::{LatencyReport, LatencySample};
use redactkit_core::masking::{parse_masked, TokenSeq};
use redactkit_core::prompts::{build_ft_prompt, build_it_prompt};
use redactkit_core::rag::{assemble_context, construct_query, reference_exemplars, Bm25Index, RetrieveOptions, Retriever};
use redactkit_core::report::{render_latency_table, table_header_after, LatencyRow, LATENCY_COLUMNS};
use redactkit_core::rules::{rule_redact, RuleSet};
use redactkit_core::synthetic::{gen_synthetic, regex_label_mix, uniform_mix};
use redactkit_core::taxonomy::{PiiLabel, Placeholder};
use redactkit_core::Span;

type Outcome = Result<String, String>;

fn main() {
    let rt = tokio::runtime::Runtime::new().expect("runtime");
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("alignment oracle equivalence", Box::new(oracle_equivalence)),
        ("gold round-trip", Box::new(gold_round_trip)),
        ("hand fixtures", Box::new(hand_fixtures)),
        ("mode ordering", Box::new(mode_ordering)),
        ("rule baseline", Box::new(rule_baseline)),
        ("prompt templates byte-exact", Box::new(golden_prompts)),
        ("retrieval sanity", Box::new(retrieval_sanity)),
        ("mock error injection", Box::new(|| rt.block_on(error_injection()))),
        ("latency math", Box::new(|| rt.block_on(latency_math()))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_message(&p))));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail} ({secs:.2}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail} ({secs:.2}s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn panic_message(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn five(c: &Counts) -> (u64, u64, u64, u64, u64) {
    (c.tp, c.fp, c.fn_, c.tn, c.mislabels)
}

// 1
fn oracle_equivalence() -> Outcome {
    const WORDS: [&str; 7] = ["alpha", "beta", "gamma", "delta", "[EMAIL]", "[TEL]", "[CITY]"];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let gen = |rng: &mut ChaCha8Rng| {
        let n = rng.random_range(0..=8);
        let words: Vec<&str> = (0..n).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect();
        parse_masked(&words.join(" "))
    };
    let start = Instant::now();
    let mut compared = 0;
    for i in 0..1000 {
        let (r, h) = (gen(&mut rng), gen(&mut rng));
        for mode in EvalMode::BOTH {
            let fast = align(&r, &h, mode);
            let slow = brute_force_align(&r, &h, mode).map_err(|e| e.to_string())?;
            check(fast.cost == slow.cost && five(&fast.counts) == five(&slow.counts), || {
                format!("pair {i} {:?}/{:?} {mode:?}: dp {:?} vs oracle {:?}", r.join(), h.join(), fast.counts, slow.counts)
            })?;
            compared += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!("{compared}/{compared} alignments identical in cost and counters, {secs:.2}s"))
}

// 2
fn gold_round_trip() -> Outcome {
    let corpus = gen_synthetic(500, 500, &["en", "es", "it"], &uniform_mix()).map_err(|e| e.to_string())?;
    for r in &corpus.records {
        let gold = parse_masked(r.target_text.as_deref().unwrap());
        for mode in EvalMode::BOTH {
            let m = compute_prf(&align(&gold, &gold, mode));
            check(
                (m.accuracy, m.precision, m.recall, m.mislabel_count) == (1.0, 1.0, 1.0, 0),
                || format!("{} {mode:?}: {m:?}", r.id),
            )?;
        }
        let s = spriv(&r.spans, &gold);
        let seq = SeqScores::compute(&gold, &gold, 4);
        check(s.score == 0.0, || format!("{} SPriV {}", r.id, s.score))?;
        check(seq == SeqScores { rouge1_f1: 1.0, rouge2_f1: 1.0, rouge_l_f1: 1.0, bleu: 1.0 }, || {
            format!("{} {seq:?}", r.id)
        })?;
    }
    Ok(format!("{} records: all metrics exactly 1, mislabels 0, SPriV 0", corpus.len()))
}

// 3
fn hand_fixtures() -> Outcome {
    const TOL: f64 = 1e-9;
    let p = parse_masked;
    let m = |r: &str, h: &str, mode| compute_prf(&align(&p(r), &p(h), mode));
    let mut n = 0;
    let mut expect = |what: &str, got: f64, want: f64| -> Result<(), String> {
        n += 1;
        check(close(got, want, TOL), || format!("{what}: got {got}, want {want}"))
    };

    let a = align(&p("Call [TEL] now"), &p("Call 555-0192 now"), EvalMode::SpanCorrect);
    check(five(&a.counts) == (0, 0, 1, 2, 0), || format!("Call [TEL] counts {:?}", a.counts))?;
    let r = compute_prf(&a);
    expect("Call [TEL] accuracy", r.accuracy, 2.0 / 3.0)?;
    expect("Call [TEL] recall", r.recall, 0.0)?;

    let s = m("Contact [EMAIL] today", "Contact [USERNAME] today", EvalMode::SpanCorrect);
    check(five(&s.counts) == (1, 0, 0, 2, 1), || format!("span mislabel counts {:?}", s.counts))?;
    expect("mislabel span precision", s.precision, 1.0)?;
    expect("mislabel span recall", s.recall, 1.0)?;
    let l = m("Contact [EMAIL] today", "Contact [USERNAME] today", EvalMode::LabelExact);
    check(five(&l.counts) == (0, 1, 1, 2, 1), || format!("label mislabel counts {:?}", l.counts))?;
    expect("mislabel label accuracy", l.accuracy, 0.5)?;

    let q = m("I like Quantum Bistro", "I like [CITY] Bistro", EvalMode::SpanCorrect);
    check(five(&q.counts) == (0, 1, 0, 3, 0), || format!("over-redaction counts {:?}", q.counts))?;
    expect("over-redaction accuracy", q.accuracy, 0.75)?;

    let c = |tp, fp, fn_, tn| MetricReport::from_counts(Counts { tp, fp, fn_, tn, ..Counts::default() }, EvalMode::SpanCorrect);
    let v = c(0, 0, 1, 2);
    expect("vacuous precision", v.precision, 1.0)?;
    expect("vacuous recall", v.recall, 0.0)?;
    expect("vacuous accuracy", v.accuracy, 2.0 / 3.0)?;
    let x = c(3, 1, 2, 14);
    expect("mixed precision", x.precision, 0.75)?;
    expect("mixed recall", x.recall, 0.6)?;
    expect("mixed accuracy", x.accuracy, 0.85)?;

    expect("ROUGE-1 a b c / a c", rouge(&p("a b c"), &p("a c"), RougeVariant::N1), 0.8)?;
    expect("ROUGE-L a b c / a c", rouge(&p("a b c"), &p("a c"), RougeVariant::L), 0.8)?;

    // values from an independent evaluation of the BLEU formula
    let b = bleu(&p("a b c d"), &p("a b c"), 4);
    expect("BLEU brevity penalty", b.brevity_penalty, 0.7165313105737893)?;
    expect("BLEU score", b.score, 0.6025286104785453)?;

    let spans = vec![
        Span::new(Placeholder::indexed(PiiLabel::GivenName, 1), 12, 18, "Jordan"),
        Span::new(Placeholder::new(PiiLabel::Date), 30, 38, "the 22nd"),
    ];
    expect("SPriV under-redaction", spriv(&spans, &p("Here's what Jordan emailed on [DATE] .")).score, 1.0 / 7.0)?;

    let lat = LatencySample { tokens: 150, wall_ms: 1500.0 };
    expect("ms per 150 tokens", lat.ms_per_150(), 1500.0)?;
    expect("tokens per second", lat.tokens_per_sec(), 100.0)?;

    let rules = RuleSet::default_rules();
    check(rule_redact("ping 192.168.0.1 at 10:30", &rules) == "ping [IP] at [TIME]", || "rule example".into())?;
    check(rule_redact("Bob emailed me at bob@gmail.com.", &rules) == "Bob emailed me at [EMAIL].", || {
        "rule email example".into()
    })?;
    Ok(format!("{n} numeric fixtures within 1e-9, counters and rule examples exact"))
}

fn corrupt(gold: &TokenSeq, rng: &mut ChaCha8Rng) -> String {
    const LABELS: [&str; 5] = ["[EMAIL]", "[TEL]", "[CITY]", "[GIVENNAME1]", "[DATE]"];
    let mut out = Vec::new();
    for t in gold.iter() {
        match rng.random_range(0..10) {
            0 => {}
            1 => out.push(if t.is_placeholder() { "Leaked".to_string() } else { LABELS[rng.random_range(0..5)].to_string() }),
            2 if t.is_placeholder() => out.push(LABELS[rng.random_range(0..5)].to_string()),
            3 => {
                out.push(t.text.clone());
                out.push(if rng.random_bool(0.5) { "extra".into() } else { LABELS[rng.random_range(0..5)].to_string() });
            }
            _ => out.push(t.text.clone()),
        }
    }
    out.join(" ")
}

// 4
fn mode_ordering() -> Outcome {
    let corpus = gen_synthetic(404, 250, &["en", "es", "it"], &uniform_mix()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut strict_drops = 0;
    for i in 0..1000 {
        let record = &corpus.records[i % corpus.len()];
        let gold = parse_masked(record.target_text.as_deref().unwrap());
        let hyp = parse_masked(&corrupt(&gold, &mut rng));
        let span = compute_prf(&align(&gold, &hyp, EvalMode::SpanCorrect));
        let label = compute_prf(&align(&gold, &hyp, EvalMode::LabelExact));
        check(label.counts.tp <= span.counts.tp, || format!("case {i}: tp {} > {}", label.counts.tp, span.counts.tp))?;
        let has = |m: &MetricReport| m.counts.tp + m.counts.fp > 0;
        if has(&span) && has(&label) {
            check(label.precision <= span.precision, || {
                format!("case {i}: precision {} > {}", label.precision, span.precision)
            })?;
        }
        if label.precision < span.precision {
            strict_drops += 1;
        }
    }
    Ok(format!("1000 corruptions, LabelExact never above SpanCorrect ({strict_drops} strictly lower)"))
}

// 5
fn rule_baseline() -> Outcome {
    let corpus = gen_synthetic(55, 600, &["en", "es", "it"], &regex_label_mix()).map_err(|e| e.to_string())?;
    let rules = RuleSet::default_rules();
    let covered: HashSet<PiiLabel> = rules.labels().into_iter().collect();
    let labels: HashSet<&PiiLabel> = corpus.records.iter().flat_map(|r| &r.spans).map(|s| &s.label).collect();
    check(labels.len() == covered.len(), || format!("corpus covers {} of {} labels", labels.len(), covered.len()))?;
    let preds: HashMap<String, Prediction> = corpus
        .records
        .iter()
        .map(|r| (r.id.clone(), Prediction::from(rule_redact(&r.source_text, &rules))))
        .collect();
    let rep = evaluate_corpus(&corpus, &preds, &EvalOptions::default()).map_err(|e| e.to_string())?;
    let (s, l) = (&rep.overall.span_correct, &rep.overall.label_exact);
    check(s.recall == 1.0 && l.recall == 1.0, || format!("recall {} / {}", s.recall, l.recall))?;
    check(rep.overall.spriv.score == 0.0, || format!("SPriV {}", rep.overall.spriv.score))?;
    check(l.precision >= 0.95, || format!("precision {}", l.precision))?;
    Ok(format!(
        "{} records, {} labels: recall 1.0, SPriV 0.0, label-exact precision {:.4}",
        corpus.len(),
        covered.len(),
        l.precision
    ))
}

fn fixture(name: &str) -> Result<String, String> {
    let path = format!("{}/../core/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))
}

// 6
fn golden_prompts() -> Outcome {
    let rag = assemble_context(&reference_exemplars(), "John registered for the app with email 1909@gmail.com");
    check(rag == fixture("rag_prompt.txt")?, || "RAG prompt differs from golden file".into())?;
    let ft = build_ft_prompt("Dear [Sejd], I am writing to inform you of an important ...");
    check(ft == fixture("ft_prompt.txt")?, || "FT prompt differs from golden file".into())?;
    check(build_it_prompt("Hi Bob") == fixture("it_prompt_hi_bob.txt")?, || "IT prompt differs from golden file".into())?;
    Ok(format!("RAG ({} bytes), FT and IT prompts byte-identical to golden files", rag.len()))
}

/// Independent BM25 over the same term definition: lowercase words with
/// edge punctuation trimmed, plus label names from the masked side.
fn oracle_bm25(docs: &[(&str, &str)], query: &str) -> Vec<f64> {
    let words = |s: &str| -> Vec<String> {
        s.split_whitespace()
            .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
            .filter(|w| !w.is_empty())
            .collect()
    };
    let labels = |s: &str| -> Vec<String> {
        s.split('[').skip(1).filter_map(|p| p.split(']').next()).map(|l| l.to_lowercase()).collect()
    };
    let doc_terms: Vec<Vec<String>> = docs.iter().map(|(u, m)| [words(u), labels(m)].concat()).collect();
    let n = docs.len() as f64;
    let avg = doc_terms.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let mut q: BTreeMap<String, f64> = BTreeMap::new();
    for w in words(query) {
        *q.entry(w).or_default() += 1.0;
    }
    doc_terms
        .iter()
        .map(|d| {
            q.iter()
                .map(|(t, qw)| {
                    let tf = d.iter().filter(|x| *x == t).count() as f64;
                    if tf == 0.0 {
                        return 0.0;
                    }
                    let df = doc_terms.iter().filter(|dd| dd.contains(t)).count() as f64;
                    let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                    qw * idf * tf * 2.2 / (tf + 1.2 * (0.25 + 0.75 * d.len() as f64 / avg))
                })
                .sum()
        })
        .collect()
}

// 7
fn retrieval_sanity() -> Outcome {
    let exemplars = reference_exemplars();
    let input = "Bob emailed me at x@y.com";
    let index = Bm25Index::build(exemplars.clone()).map_err(|e| e.to_string())?;
    let hits = index.retrieve(&construct_query(input, None), 3, &RetrieveOptions::default());
    let docs: Vec<(&str, &str)> = exemplars.iter().map(|e| (e.unmasked.as_str(), e.masked.as_str())).collect();
    let oracle = oracle_bm25(&docs, input);
    let mut oracle_rank: Vec<usize> = (0..3).collect();
    oracle_rank.sort_by(|&a, &b| oracle[b].total_cmp(&oracle[a]).then(a.cmp(&b)));
    let rank: Vec<usize> = hits.iter().map(|h| h.position).collect();
    check(rank == oracle_rank, || format!("ranking {rank:?}, oracle {oracle_rank:?}"))?;
    for h in &hits {
        check(close(h.score, oracle[h.position], 1e-9), || {
            format!("doc {} score {} vs oracle {}", h.position, h.score, oracle[h.position])
        })?;
    }
    check(hits[0].exemplar.unmasked == "Bob emailed me at bob@gmail.com.", || "Example 2 is not first".into())?;
    Ok(format!("Example 2 ranked first (score {:.4}), ranking and scores match brute-force BM25", hits[0].score))
}

// 8
async fn error_injection() -> Outcome {
    let generated = gen_synthetic(8, 900, &["en", "es", "it"], &uniform_mix()).map_err(|e| e.to_string())?;
    // the mock keys replies by prompt, so sources must be unique
    let mut seen = HashSet::new();
    let records = generated.records.into_iter().filter(|r| seen.insert(r.source_text.clone())).collect();
    let corpus = Corpus::new("injection", records);
    let rates = ErrorRates { missed: 0.10, mislabel: 0.08, spurious: 0.03 };
    let (preds, log) = inject_errors(&corpus, rates, 17);
    check(log.target_tokens >= 10_000, || format!("only {} tokens", log.target_tokens))?;

    let replies: HashMap<String, String> =
        corpus.records.iter().map(|r| (build_ft_prompt(&r.source_text), preds[&r.id].clone())).collect();
    let server = MockServer::start(MockConfig::new(Script::ByPrompt { replies, fallback: String::new() }))
        .await
        .map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus_path = dir.path().join("corpus.jsonl");
    save_jsonl(&corpus, &corpus_path).map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::new(&corpus_path, BenchMode::Ft);
    cfg.output_dir = dir.path().join("out");
    cfg.endpoint = EndpointConfig { base_url: server.base_url(), max_parallel: 8, ..EndpointConfig::default() };
    let out = run_benchmark(&cfg).await.map_err(|e| e.to_string())?;
    check(out.result.stats.failed == 0, || format!("{} requests failed", out.result.stats.failed))?;
    let overall = &out.result.report.overall;

    let p = log.gold_placeholders as f64;
    let (miss, mis, spur) = (log.missed as f64, log.mislabeled as f64, log.spurious as f64);
    let span_tp = p - miss;
    let label_tp = p - miss - mis;
    let expected = [
        ("span recall", overall.span_correct.recall, span_tp / p),
        ("span precision", overall.span_correct.precision, span_tp / (span_tp + spur)),
        ("label recall", overall.label_exact.recall, label_tp / p),
        ("label precision", overall.label_exact.precision, label_tp / (label_tp + spur + mis)),
        ("missed rate", overall.span_correct.counts.fn_ as f64 / p, rates.missed),
        ("mislabel rate", overall.label_exact.mislabel_count as f64 / p, rates.mislabel),
        ("spurious rate", overall.span_correct.counts.fp as f64 / log.eligible_words as f64, rates.spurious),
    ];
    for (what, got, want) in expected {
        check(close(got, want, 0.01), || format!("{what}: measured {got:.4}, injected {want:.4}"))?;
    }
    let mislabels = overall.label_exact.mislabel_count as f64;
    check((mislabels - mis).abs() <= 0.01 * mis, || format!("mislabel count {mislabels} vs injected {mis}"))?;
    Ok(format!(
        "{} records, {} tokens via mock endpoint; measured rates within 0.01 of injected (miss {:.4}, mislabel {:.4}, spurious {:.4})",
        corpus.len(),
        log.target_tokens,
        overall.span_correct.counts.fn_ as f64 / p,
        mislabels / p,
        overall.span_correct.counts.fp as f64 / log.eligible_words as f64,
    ))
}

// 9
async fn latency_math() -> Outcome {
    let server = MockServer::start(
        MockConfig::fixed("masked output").with_delay(Duration::from_millis(1500)).with_completion_tokens(150),
    )
    .await
    .map_err(|e| e.to_string())?;
    let client = LlmClient::new(EndpointConfig { base_url: server.base_url(), ..EndpointConfig::default() })
        .map_err(|e| e.to_string())?;
    let (rep, err) = bench_latency(&client, "mock", &build_ft_prompt("Hi Bob"), 2).await;
    check(err.is_none(), || format!("{err:?}"))?;
    check((rep.ms_per_150 - 1500.0).abs() / 1500.0 < 0.05, || format!("ms/150 {}", rep.ms_per_150))?;
    check((rep.tokens_per_sec - 100.0).abs() / 100.0 < 0.05, || format!("tokens/sec {}", rep.tokens_per_sec))?;

    let exact = LatencyReport::from_trials("mock", vec![LatencySample { tokens: 150, wall_ms: 1500.0 }; 3], false);
    check((exact.ms_per_150, exact.tokens_per_sec) == (1500.0, 100.0), || format!("{exact:?}"))?;

    let table = render_latency_table(&[
        LatencyRow::from(&rep),
        LatencyRow { model: "DeepSeek-Q1".into(), latency_ms: 1456.0, tokens_per_sec: 102.0 },
    ]);
    let header = table_header_after(&table, "|").ok_or("no table")?;
    check(header == LATENCY_COLUMNS, || format!("columns {header:?}"))?;
    check(table.contains("| DeepSeek-Q1 | 1456 | 102 |"), || "fixture row missing".into())?;
    Ok(format!(
        "measured {:.1} ms/150 tokens and {:.2} tokens/sec over {} trials; columns {:?}",
        rep.ms_per_150,
        rep.tokens_per_sec,
        rep.trials.len(),
        LATENCY_COLUMNS
    ))
}
