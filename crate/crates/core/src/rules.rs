//! Regular-expression redaction baseline.

use std::ops::Range;

use regex::Regex;

use crate::formats::regex_grammars;
use crate::taxonomy::{canonical_placeholder, PiiLabel, Placeholder, PlaceholderStyle};

#[derive(Debug, Clone)]
pub struct Rule {
    pub label: PiiLabel,
    pub regex: Regex,
}

/// Ordered rules; at equal start and length the earlier rule wins.
#[derive(Debug, Clone)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleMatch {
    pub label: PiiLabel,
    pub range: Range<usize>,
}

impl RuleSet {
    pub fn new<S: AsRef<str>>(rules: impl IntoIterator<Item = (PiiLabel, S)>) -> Result<Self, regex::Error> {
        let rules = rules
            .into_iter()
            .map(|(label, pattern)| Ok(Rule { label, regex: Regex::new(pattern.as_ref())? }))
            .collect::<Result<Vec<_>, regex::Error>>()?;
        Ok(RuleSet { rules })
    }

    /// Patterns for EMAIL, GEOCOORD, IP, DATE, TIME, SOCIALNUMBER,
    /// DRIVERLICENSE, TEL, PASSPORT, IDCARD, POSTCODE and USERNAME.
    pub fn default_rules() -> Self {
        RuleSet::new(regex_grammars().into_iter().map(|g| (g.label, g.pattern)))
            .expect("built-in patterns compile")
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn labels(&self) -> Vec<PiiLabel> {
        self.rules.iter().map(|r| r.label.clone()).collect()
    }

    /// Non-overlapping matches, leftmost first; among matches at the same
    /// start the longest wins, then the earliest rule.
    pub fn find_all(&self, text: &str) -> Vec<RuleMatch> {
        let mut out = Vec::new();
        let mut pos = 0;
        while pos <= text.len() {
            let mut best: Option<(usize, usize, usize)> = None;
            for (idx, rule) in self.rules.iter().enumerate() {
                let Some(m) = rule.regex.find_at(text, pos) else { continue };
                if m.is_empty() {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((s, e, _)) => m.start() < s || (m.start() == s && m.end() > e),
                };
                if better {
                    best = Some((m.start(), m.end(), idx));
                }
            }
            let Some((start, end, idx)) = best else { break };
            out.push(RuleMatch { label: self.rules[idx].label.clone(), range: start..end });
            pos = end;
        }
        out
    }
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet::default_rules()
    }
}

pub fn rule_redact(text: &str, rules: &RuleSet) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for m in rules.find_all(text) {
        out.push_str(&text[last..m.range.start]);
        out.push_str(&canonical_placeholder(&Placeholder::new(m.label), PlaceholderStyle::Single));
        last = m.range.end;
    }
    out.push_str(&text[last..]);
    out
}
