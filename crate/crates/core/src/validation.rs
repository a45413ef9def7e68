//! Classifier-versus-annotator agreement.
//!
//! The positive class is "uncertain" throughout; the human annotation is the
//! reference. Precision, recall and F1 fall back to 0 when their denominator
//! is empty. Cohen's κ is `None` when chance agreement is 1.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::LabeledRecord;

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("stratum {stratum} has {available} records, {requested} requested")]
    StratumTooSmall {
        stratum: &'static str,
        available: usize,
        requested: usize,
    },
    #[error("no items to evaluate")]
    Empty,
    #[error("gold id {0:?} has no prediction")]
    UnmatchedId(String),
    #[error("gold id {0:?} appears more than once")]
    DuplicateGold(String),
    #[error("gold row {row}: {message}")]
    GoldRow { row: usize, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ConfusionMatrix { tp, fp, fn_, tn }
    }

    /// Tally (predicted, gold) pairs.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut m = ConfusionMatrix::default();
        for (pred, gold) in pairs {
            match (pred, gold) {
                (true, true) => m.tp += 1,
                (true, false) => m.fp += 1,
                (false, true) => m.fn_ += 1,
                (false, false) => m.tn += 1,
            }
        }
        m
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub matrix: ConfusionMatrix,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub kappa: Option<f64>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ValidationReport {
    pub fn from_matrix(m: ConfusionMatrix) -> Result<ValidationReport, ValidationError> {
        let n = m.total();
        if n == 0 {
            return Err(ValidationError::Empty);
        }
        let accuracy = ratio(m.tp + m.tn, n);
        let precision = ratio(m.tp, m.tp + m.fp);
        let recall = ratio(m.tp, m.tp + m.fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        let nf = n as f64;
        let pred_pos = (m.tp + m.fp) as f64 / nf;
        let gold_pos = (m.tp + m.fn_) as f64 / nf;
        let p_e = pred_pos * gold_pos + (1.0 - pred_pos) * (1.0 - gold_pos);
        let kappa = (p_e < 1.0).then(|| (accuracy - p_e) / (1.0 - p_e));
        Ok(ValidationReport {
            matrix: m,
            accuracy,
            precision,
            recall,
            f1,
            kappa,
        })
    }
}

/// One gold label per tweet id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldLabel {
    pub tweet_id: String,
    pub human_label: bool,
}

fn parse_label(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "uncertain" | "yes" => Some(true),
        "0" | "false" | "certain" | "no" => Some(false),
        _ => None,
    }
}

/// Read `tweet_id,human_label` CSV (extra columns ignored).
pub fn read_gold_csv<R: Read>(reader: R) -> Result<Vec<GoldLabel>, ValidationError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| ValidationError::GoldRow {
            row: 0,
            message: format!("missing column {name:?}"),
        })
    };
    let (id_col, label_col) = (col("tweet_id")?, col("human_label")?);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let id = rec.get(id_col).unwrap_or("").trim().to_string();
        let raw = rec.get(label_col).unwrap_or("");
        let human_label = parse_label(raw).ok_or_else(|| ValidationError::GoldRow {
            row,
            message: format!("label {raw:?} is not one of 1/0, true/false, uncertain/certain"),
        })?;
        if id.is_empty() {
            return Err(ValidationError::GoldRow {
                row,
                message: "empty tweet_id".into(),
            });
        }
        out.push(GoldLabel { tweet_id: id, human_label });
    }
    Ok(out)
}

/// Score predictions against gold labels; every gold id must be predicted.
pub fn evaluate(predictions: &[LabeledRecord], gold: &[GoldLabel]) -> Result<ValidationReport, ValidationError> {
    let predicted: HashMap<&str, bool> = predictions
        .iter()
        .map(|r| (r.record.tweet_id.as_str(), r.is_uncertain))
        .collect();
    let mut seen = HashSet::new();
    let mut pairs = Vec::with_capacity(gold.len());
    for g in gold {
        if !seen.insert(g.tweet_id.as_str()) {
            return Err(ValidationError::DuplicateGold(g.tweet_id.clone()));
        }
        let pred = *predicted
            .get(g.tweet_id.as_str())
            .ok_or_else(|| ValidationError::UnmatchedId(g.tweet_id.clone()))?;
        pairs.push((pred, g.human_label));
    }
    ValidationReport::from_matrix(ConfusionMatrix::from_pairs(pairs))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub tweet_id: String,
    pub stratum: String,
    pub predicted_uncertain: bool,
    pub text: String,
    /// Left blank for the annotator.
    pub human_label: String,
}

/// Draw `per_stratum` records without replacement from each predicted class.
///
/// Rows are listed uncertain stratum first, each stratum in corpus order.
pub fn stratified_sample(records: &[LabeledRecord], per_stratum: usize, seed: u64) -> Result<Vec<ManifestRow>, ValidationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(2 * per_stratum);
    for (stratum, label) in [("uncertain", true), ("certain", false)] {
        let members: Vec<&LabeledRecord> = records.iter().filter(|r| r.is_uncertain == label).collect();
        if members.len() < per_stratum {
            return Err(ValidationError::StratumTooSmall {
                stratum,
                available: members.len(),
                requested: per_stratum,
            });
        }
        let mut picked = sample(&mut rng, members.len(), per_stratum).into_vec();
        picked.sort_unstable();
        rows.extend(picked.into_iter().map(|i| ManifestRow {
            tweet_id: members[i].record.tweet_id.clone(),
            stratum: stratum.to_string(),
            predicted_uncertain: label,
            text: members[i].record.text.clone(),
            human_label: String::new(),
        }));
    }
    Ok(rows)
}

pub fn write_manifest_csv<W: Write>(rows: &[ManifestRow], out: W) -> Result<(), ValidationError> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["tweet_id", "stratum", "predicted_uncertain", "text", "human_label"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
