//! Engagement models: group means, log-linear OLS and NB2 regression with
//! author-clustered standard errors, and the top-quantile robustness refit.

mod cluster;
mod describe;
mod design;
mod negbin;
mod ols;
pub mod special;

pub use cluster::{
    cluster_meat, hc0, sandwich, small_sample_factor, t_inference, ClusterIndex, CoefficientInference, CovarianceKind,
};
pub use describe::{describe, one_decimal, DescriptiveReport, GroupMeans, Metric, MetricGap};
pub use design::{DesignMatrix, OutcomeScale, ENGAGEMENT_COLUMNS};
pub use negbin::{fit_negbin, log_likelihood, negbin_scores, NegBinFit, NegBinOptions, ALPHA_MAX, ALPHA_MIN};
pub use ols::{fit_ols, ols_scores, OlsFit};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::LabeledRecord;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("design matrix is rank deficient: column {column:?} is a linear combination of earlier columns")]
    Singular { column: String },
    #[error("need more rows than columns (n = {n}, k = {k})")]
    TooFewRows { n: usize, k: usize },
    #[error("cluster-robust variance needs at least 2 clusters, found {0}")]
    TooFewClusters(usize),
    #[error("group {0:?} is empty; percent difference undefined")]
    DegenerateGroup(String),
    #[error("invalid outcome: {0}")]
    Domain(String),
    #[error("no convergence after {iterations} iterations (log-likelihood trace {trace:?})")]
    Convergence { iterations: usize, trace: Vec<f64> },
    #[error("invalid design: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ols,
    NegBin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub t: f64,
    pub p: f64,
    pub ci95: (f64, f64),
    /// exp(estimate) and its exponentiated interval, for count models.
    pub irr: Option<f64>,
    pub irr_ci95: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub model: ModelKind,
    pub covariance: CovarianceKind,
    pub terms: Vec<Term>,
    pub r_squared: Option<f64>,
    pub dispersion_alpha: Option<f64>,
    pub log_likelihood: Option<f64>,
    pub iterations: Option<usize>,
    pub n: usize,
    pub n_clusters: usize,
    pub df: f64,
}

impl RegressionResult {
    pub fn term(&self, name: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.name == name)
    }

    pub fn uncertainty(&self) -> Option<&Term> {
        self.term("uncertainty")
    }
}

fn build_terms(names: &[String], coefficients: &nalgebra::DVector<f64>, inf: &CoefficientInference, exponentiate: bool) -> Vec<Term> {
    names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let b = coefficients[j];
            let ci = inf.ci95[j];
            Term {
                name: name.clone(),
                estimate: b,
                se: inf.se[j],
                t: inf.t[j],
                p: inf.p[j],
                ci95: ci,
                irr: exponentiate.then(|| b.exp()),
                irr_ci95: exponentiate.then(|| (ci.0.exp(), ci.1.exp())),
            }
        })
        .collect()
}

/// OLS with cluster-robust inference on the design's cluster ids.
pub fn ols_clustered(design: &DesignMatrix, kind: CovarianceKind) -> Result<RegressionResult, InferenceError> {
    let fit = fit_ols(design)?;
    let clusters = ClusterIndex::new(&design.clusters);
    let cov = sandwich(&fit.xtx_inv, &ols_scores(design, &fit), &clusters, kind)?;
    let df = (clusters.n_clusters - 1) as f64;
    let inf = t_inference(&fit.coefficients, &cov, df)?;
    Ok(RegressionResult {
        model: ModelKind::Ols,
        covariance: kind,
        terms: build_terms(&fit.names, &fit.coefficients, &inf, false),
        r_squared: Some(fit.r_squared),
        dispersion_alpha: None,
        log_likelihood: None,
        iterations: None,
        n: fit.n,
        n_clusters: clusters.n_clusters,
        df,
    })
}

/// NB2 with cluster-robust inference; terms carry IRRs.
pub fn negbin_clustered(design: &DesignMatrix, kind: CovarianceKind, opts: &NegBinOptions) -> Result<RegressionResult, InferenceError> {
    let fit = fit_negbin(design, opts)?;
    let clusters = ClusterIndex::new(&design.clusters);
    let cov = sandwich(&fit.bread, &negbin_scores(design, &fit), &clusters, kind)?;
    let df = (clusters.n_clusters - 1) as f64;
    let inf = t_inference(&fit.coefficients, &cov, df)?;
    Ok(RegressionResult {
        model: ModelKind::NegBin,
        covariance: kind,
        terms: build_terms(&fit.names, &fit.coefficients, &inf, true),
        r_squared: None,
        dispersion_alpha: Some(fit.alpha),
        log_likelihood: Some(fit.log_likelihood),
        iterations: Some(fit.iterations),
        n: fit.n,
        n_clusters: clusters.n_clusters,
        df,
    })
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessComparison {
    pub quantile: f64,
    pub threshold: f64,
    pub excluded: usize,
    pub full: RegressionResult,
    pub trimmed: RegressionResult,
    pub sign_preserved: bool,
    pub significant_in_both: bool,
}

/// Refit the log-linear OLS model without rows whose total engagement lies
/// above the given quantile.
pub fn outlier_robustness(records: &[LabeledRecord], q: f64, kind: CovarianceKind) -> Result<RobustnessComparison, InferenceError> {
    let design = DesignMatrix::engagement(records, OutcomeScale::Log1p)?;
    let totals: Vec<f64> = records.iter().map(|r| r.record.total_engagement as f64).collect();
    let threshold = quantile(&totals, q);
    let keep: Vec<bool> = totals.iter().map(|&t| t <= threshold).collect();
    let excluded = keep.iter().filter(|k| !**k).count();

    let full = ols_clustered(&design, kind)?;
    let trimmed = if excluded == 0 {
        full.clone()
    } else {
        ols_clustered(&design.select_rows(&keep)?, kind)?
    };
    let (a, b) = (full.uncertainty(), trimmed.uncertainty());
    let (sign_preserved, significant_in_both) = match (a, b) {
        (Some(a), Some(b)) => (a.estimate.signum() == b.estimate.signum(), a.p < 0.05 && b.p < 0.05),
        _ => (false, false),
    };
    Ok(RobustnessComparison {
        quantile: q,
        threshold,
        excluded,
        full,
        trimmed,
        sign_preserved,
        significant_in_both,
    })
}

/// Relative change in the expected outcome implied by a log-scale coefficient.
pub fn percent_change(beta: f64) -> f64 {
    100.0 * beta.exp_m1()
}

/// e.g. `β = 0.221 → exp(β)−1 = 24.7% (≈25% higher expected engagement)`.
pub fn render_log_effect(beta: f64) -> String {
    let pct = percent_change(beta);
    let direction = if pct >= 0.0 { "higher" } else { "lower" };
    format!(
        "β = {beta:.3} → exp(β)−1 = {pct:.1}% (≈{:.0}% {direction} expected engagement)",
        pct.abs()
    )
}

/// e.g. `IRR = 1.301 → β = ln(IRR) = 0.2631 (≈30% higher expected count)`.
pub fn render_irr(irr: f64) -> String {
    let beta = irr_to_coefficient(irr);
    let pct = 100.0 * (irr - 1.0);
    let direction = if pct >= 0.0 { "higher" } else { "lower" };
    format!(
        "IRR = {irr:.3} → β = ln(IRR) = {beta:.4} (≈{:.0}% {direction} expected count)",
        pct.abs()
    )
}

pub fn irr_to_coefficient(irr: f64) -> f64 {
    irr.ln()
}

pub fn coefficient_to_irr(beta: f64) -> f64 {
    beta.exp()
}

/// `B·M·B` with the design's own cluster ids and no correction.
pub fn ols_cr0(design: &DesignMatrix) -> Result<DMatrix<f64>, InferenceError> {
    let fit = fit_ols(design)?;
    sandwich(&fit.xtx_inv, &ols_scores(design, &fit), &ClusterIndex::new(&design.clusters), CovarianceKind::Cr0)
}
