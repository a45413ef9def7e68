use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::InferenceError;
use crate::classifier::LabeledRecord;

pub const ENGAGEMENT_COLUMNS: [&str; 5] = ["intercept", "uncertainty", "length_chars", "has_link", "verified"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeScale {
    /// Natural log of one plus total engagement.
    Log1p,
    /// Raw total engagement counts.
    Counts,
}

/// Regressors, outcome, and cluster labels for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub clusters: Vec<String>,
}

impl DesignMatrix {
    pub fn new(names: Vec<String>, x: DMatrix<f64>, y: DVector<f64>, clusters: Vec<String>) -> Result<Self, InferenceError> {
        let (n, k) = x.shape();
        if names.len() != k {
            return Err(InferenceError::Shape(format!("{} names for {k} columns", names.len())));
        }
        if y.len() != n || clusters.len() != n {
            return Err(InferenceError::Shape(format!(
                "{n} rows but outcome has {} and clusters {}",
                y.len(),
                clusters.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(InferenceError::Shape(format!("duplicate column name {dup:?}")));
        }
        if n <= k {
            return Err(InferenceError::TooFewRows { n, k });
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(InferenceError::Shape("non-finite cell".to_string()));
        }
        Ok(DesignMatrix { names, x, y, clusters })
    }

    /// The engagement model: intercept, uncertainty, length, link, verified,
    /// clustered by author.
    pub fn engagement(records: &[LabeledRecord], scale: OutcomeScale) -> Result<Self, InferenceError> {
        let n = records.len();
        let x = DMatrix::from_fn(n, ENGAGEMENT_COLUMNS.len(), |i, j| {
            let r = &records[i];
            match j {
                0 => 1.0,
                1 => f64::from(u8::from(r.is_uncertain)),
                2 => r.record.length_chars as f64,
                3 => f64::from(u8::from(r.record.has_link)),
                _ => f64::from(u8::from(r.record.verified)),
            }
        });
        let y = DVector::from_iterator(
            n,
            records.iter().map(|r| {
                let total = r.record.total_engagement as f64;
                match scale {
                    OutcomeScale::Log1p => total.ln_1p(),
                    OutcomeScale::Counts => total,
                }
            }),
        );
        let clusters = records.iter().map(|r| r.record.author_id.clone()).collect();
        DesignMatrix::new(ENGAGEMENT_COLUMNS.iter().map(|s| s.to_string()).collect(), x, y, clusters)
    }

    pub fn with_outcome(mut self, y: DVector<f64>) -> Result<Self, InferenceError> {
        if y.len() != self.n() {
            return Err(InferenceError::Shape(format!("outcome length {} != {}", y.len(), self.n())));
        }
        self.y = y;
        Ok(self)
    }

    pub fn with_clusters(mut self, clusters: Vec<String>) -> Result<Self, InferenceError> {
        if clusters.len() != self.n() {
            return Err(InferenceError::Shape(format!("{} cluster ids for {} rows", clusters.len(), self.n())));
        }
        self.clusters = clusters;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Keep rows where `keep` is true.
    pub fn select_rows(&self, keep: &[bool]) -> Result<Self, InferenceError> {
        let rows: Vec<usize> = keep.iter().enumerate().filter(|(_, &k)| k).map(|(i, _)| i).collect();
        let x = self.x.select_rows(rows.iter());
        let y = self.y.select_rows(rows.iter());
        let clusters = rows.iter().map(|&i| self.clusters[i].clone()).collect();
        DesignMatrix::new(self.names.clone(), x, y, clusters)
    }
}
