//! Marker matching and the binary uncertainty label.
//!
//! A post is uncertain iff at least one marker fires. Matching scans tokens
//! left to right; at each position the longest marker wins and consumes its
//! tokens, so `من هو` never also reports bare `من`. Markers with a context
//! rule are only counted when the rule holds; blocked candidates are kept in
//! `suppressed` for diagnostics.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, CorpusError, TweetRecord};
use crate::lexicon::{
    is_question_mark, normalize_with, ContextRule, Lexicon, MarkerCategory, NormalizeOptions, NormalizedText,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerMatch {
    pub surface: String,
    pub category: MarkerCategory,
    /// Half-open token range.
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuppressedMatch {
    pub surface: String,
    pub rule: ContextRule,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub tweet_id: String,
    pub is_uncertain: bool,
    pub matches: Vec<MarkerMatch>,
    pub suppressed: Vec<SuppressedMatch>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleOutcome {
    Fire,
    Suppress,
}

/// Interrogative test for the particle at `index`.
///
/// Fires when the next token is `؟` or `?`, or when the tokens starting at
/// `index` spell one of `phrases` (the multi-token who-question markers).
pub fn who_particle_rule(tokens: &[String], index: usize, phrases: &[Vec<String>]) -> RuleOutcome {
    if tokens.get(index + 1).is_some_and(|t| is_question_mark(t)) {
        return RuleOutcome::Fire;
    }
    let rest = &tokens[index..];
    let opens_phrase = phrases
        .iter()
        .any(|p| p.len() > 1 && p[0] == tokens[index] && rest.starts_with(p));
    if opens_phrase {
        RuleOutcome::Fire
    } else {
        RuleOutcome::Suppress
    }
}

#[derive(Debug, Clone)]
struct CompiledMarker {
    tokens: Vec<String>,
    surface: String,
    category: MarkerCategory,
    rule: Option<ContextRule>,
}

/// A lexicon compiled for matching under one set of normalization options.
#[derive(Debug, Clone)]
pub struct Classifier {
    opts: NormalizeOptions,
    rules_enabled: bool,
    markers: Vec<CompiledMarker>,
    /// First token → marker indices, longest first, then lexicon order.
    by_first: HashMap<String, Vec<usize>>,
    who_phrases: Vec<Vec<String>>,
}

impl Classifier {
    pub fn new(lexicon: &Lexicon) -> Classifier {
        Classifier::with_options(lexicon, NormalizeOptions::default(), true)
    }

    /// `rules_enabled = false` lets every context-ruled marker fire
    /// unconditionally.
    pub fn with_options(lexicon: &Lexicon, opts: NormalizeOptions, rules_enabled: bool) -> Classifier {
        let markers: Vec<CompiledMarker> = lexicon
            .markers
            .iter()
            .filter_map(|m| {
                let tokens = normalize_with(&m.raw, opts).tokens;
                (!tokens.is_empty()).then(|| CompiledMarker {
                    surface: tokens.join(" "),
                    tokens,
                    category: m.category,
                    rule: m.context_rule,
                })
            })
            .collect();

        let mut by_first: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, m) in markers.iter().enumerate() {
            by_first.entry(m.tokens[0].clone()).or_default().push(i);
        }
        for list in by_first.values_mut() {
            list.sort_by_key(|&i| (std::cmp::Reverse(markers[i].tokens.len()), i));
        }
        let who_phrases = markers
            .iter()
            .filter(|m| m.category == MarkerCategory::WhoQuestion && m.tokens.len() > 1)
            .map(|m| m.tokens.clone())
            .collect();

        Classifier {
            opts,
            rules_enabled,
            markers,
            by_first,
            who_phrases,
        }
    }

    pub fn options(&self) -> NormalizeOptions {
        self.opts
    }

    pub fn classify_text(&self, tweet_id: &str, text: &str) -> ClassificationResult {
        self.classify_tokens(tweet_id, &normalize_with(text, self.opts))
    }

    pub fn classify_tokens(&self, tweet_id: &str, text: &NormalizedText) -> ClassificationResult {
        let tokens = &text.tokens;
        let mut matches = Vec::new();
        let mut suppressed = Vec::new();

        let mut i = 0;
        while i < tokens.len() {
            let mut matched_len = None;
            for &mi in self.by_first.get(&tokens[i]).map(Vec::as_slice).unwrap_or_default() {
                let m = &self.markers[mi];
                let len = m.tokens.len();
                if matched_len.is_some_and(|l| len < l) {
                    break;
                }
                if !tokens[i..].starts_with(&m.tokens) {
                    continue;
                }
                if let Some(rule) = m.rule.filter(|_| self.rules_enabled) {
                    if self.check_rule(rule, tokens, i) == RuleOutcome::Suppress {
                        suppressed.push(SuppressedMatch {
                            surface: m.surface.clone(),
                            rule,
                            start: i,
                            end: i + len,
                        });
                        continue;
                    }
                }
                matches.push(MarkerMatch {
                    surface: m.surface.clone(),
                    category: m.category,
                    start: i,
                    end: i + len,
                });
                matched_len = Some(len);
            }
            i += matched_len.unwrap_or(1);
        }

        ClassificationResult {
            tweet_id: tweet_id.to_string(),
            is_uncertain: !matches.is_empty(),
            matches,
            suppressed,
        }
    }

    fn check_rule(&self, rule: ContextRule, tokens: &[String], index: usize) -> RuleOutcome {
        match rule {
            ContextRule::Interrogative => who_particle_rule(tokens, index, &self.who_phrases),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledRecord {
    #[serde(flatten)]
    pub record: TweetRecord,
    pub is_uncertain: bool,
    pub matches: Vec<MarkerMatch>,
    pub suppressed: Vec<SuppressedMatch>,
}

impl LabeledRecord {
    pub fn new(record: TweetRecord, result: ClassificationResult) -> LabeledRecord {
        LabeledRecord {
            record,
            is_uncertain: result.is_uncertain,
            matches: result.matches,
            suppressed: result.suppressed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceSummary {
    pub total: usize,
    pub uncertain: usize,
    pub certain: usize,
    pub prevalence: f64,
}

impl PrevalenceSummary {
    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a LabeledRecord>) -> PrevalenceSummary {
        let (mut total, mut uncertain) = (0, 0);
        for r in labels {
            total += 1;
            uncertain += usize::from(r.is_uncertain);
        }
        PrevalenceSummary {
            total,
            uncertain,
            certain: total - uncertain,
            prevalence: if total == 0 { 0.0 } else { uncertain as f64 / total as f64 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledCorpus {
    pub records: Vec<LabeledRecord>,
    pub summary: PrevalenceSummary,
}

/// Label every record. Work is spread over the rayon pool; output keeps input
/// order.
pub fn classify_corpus(corpus: &Corpus, classifier: &Classifier) -> LabeledCorpus {
    let records: Vec<LabeledRecord> = corpus
        .records
        .par_iter()
        .map(|r| LabeledRecord::new(r.clone(), classifier.classify_text(&r.tweet_id, &r.text)))
        .collect();
    LabeledCorpus {
        summary: PrevalenceSummary::from_labels(&records),
        records,
    }
}

pub fn write_labeled_jsonl<W: Write>(records: &[LabeledRecord], mut out: W) -> Result<(), CorpusError> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_labeled_jsonl<R: Read>(reader: R) -> Result<Vec<LabeledRecord>, CorpusError> {
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LabeledRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Row {
            row: idx + 1,
            message: format!("not a labeled record: {e}"),
        })?;
        out.push(rec);
    }
    if out.is_empty() {
        return Err(CorpusError::Empty { rejected: 0 });
    }
    Ok(out)
}

pub fn load_labeled(path: impl AsRef<Path>) -> Result<Vec<LabeledRecord>, CorpusError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_labeled_jsonl(file)
}
