//! Cluster-robust (sandwich) covariance.
//!
//! `V = c · B · (Σ_g s_g s_gᵀ) · B` where `B` is the bread (inverse
//! information), `s_g` the sum of per-row scores within cluster `g`, and `c`
//! the small-sample factor: 1 for CR0, `G/(G−1) · (N−1)/(N−K)` for CR1.
//! Inference uses a t distribution with `G − 1` degrees of freedom.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::InferenceError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceKind {
    Cr0,
    #[default]
    Cr1,
}

/// Dense cluster index per row, numbered by first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterIndex {
    pub assignment: Vec<usize>,
    pub n_clusters: usize,
}

impl ClusterIndex {
    pub fn new<S: AsRef<str>>(ids: &[S]) -> ClusterIndex {
        let mut lookup: HashMap<&str, usize> = HashMap::new();
        let assignment = ids
            .iter()
            .map(|id| {
                let next = lookup.len();
                *lookup.entry(id.as_ref()).or_insert(next)
            })
            .collect();
        ClusterIndex {
            assignment,
            n_clusters: lookup.len(),
        }
    }
}

/// Sum score rows within clusters and form the meat matrix.
pub fn cluster_meat(scores: &DMatrix<f64>, clusters: &ClusterIndex) -> DMatrix<f64> {
    let k = scores.ncols();
    let mut sums = DMatrix::<f64>::zeros(clusters.n_clusters, k);
    for (i, &g) in clusters.assignment.iter().enumerate() {
        let mut row = sums.row_mut(g);
        row += scores.row(i);
    }
    sums.transpose() * sums
}

pub fn small_sample_factor(kind: CovarianceKind, n: usize, k: usize, g: usize) -> f64 {
    match kind {
        CovarianceKind::Cr0 => 1.0,
        CovarianceKind::Cr1 => {
            let (n, k, g) = (n as f64, k as f64, g as f64);
            (g / (g - 1.0)) * ((n - 1.0) / (n - k))
        }
    }
}

pub fn sandwich(
    bread: &DMatrix<f64>,
    scores: &DMatrix<f64>,
    clusters: &ClusterIndex,
    kind: CovarianceKind,
) -> Result<DMatrix<f64>, InferenceError> {
    if clusters.n_clusters < 2 {
        return Err(InferenceError::TooFewClusters(clusters.n_clusters));
    }
    let (n, k) = scores.shape();
    let meat = cluster_meat(scores, clusters);
    let c = small_sample_factor(kind, n, k, clusters.n_clusters);
    Ok(bread * meat * bread * c)
}

/// Heteroskedasticity-robust HC0: `B (Σ_i s_i s_iᵀ) B`.
pub fn hc0(bread: &DMatrix<f64>, scores: &DMatrix<f64>) -> DMatrix<f64> {
    bread * (scores.transpose() * scores) * bread
}

/// Standard errors, t statistics, two-tailed p-values and 95% intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientInference {
    pub se: Vec<f64>,
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    pub ci95: Vec<(f64, f64)>,
    pub df: f64,
    pub t_crit: f64,
}

pub fn t_inference(coefficients: &DVector<f64>, cov: &DMatrix<f64>, df: f64) -> Result<CoefficientInference, InferenceError> {
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| InferenceError::Shape(format!("t distribution: {e}")))?;
    let t_crit = dist.inverse_cdf(0.975);
    let mut out = CoefficientInference {
        se: Vec::new(),
        t: Vec::new(),
        p: Vec::new(),
        ci95: Vec::new(),
        df,
        t_crit,
    };
    for (j, &b) in coefficients.iter().enumerate() {
        let se = cov[(j, j)].max(0.0).sqrt();
        let t = b / se;
        let p = if se > 0.0 { (2.0 * dist.sf(t.abs())).min(1.0) } else { f64::NAN };
        out.se.push(se);
        out.t.push(t);
        out.p.push(p);
        out.ci95.push((b - t_crit * se, b + t_crit * se));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cluster_index_by_first_appearance() {
        let idx = ClusterIndex::new(&["b", "a", "b", "c", "a"]);
        assert_eq!(idx.assignment, vec![0, 1, 0, 2, 1]);
        assert_eq!(idx.n_clusters, 3);
    }

    #[test]
    fn cr1_factor() {
        assert_relative_eq!(small_sample_factor(CovarianceKind::Cr1, 4, 2, 2), 2.0 * 3.0 / 2.0);
        assert_eq!(small_sample_factor(CovarianceKind::Cr0, 4, 2, 2), 1.0);
    }

    #[test]
    fn single_cluster_is_an_error() {
        let s = DMatrix::from_element(3, 1, 1.0);
        let b = DMatrix::identity(1, 1);
        assert!(matches!(
            sandwich(&b, &s, &ClusterIndex::new(&["x", "x", "x"]), CovarianceKind::Cr0),
            Err(InferenceError::TooFewClusters(1))
        ));
    }

    #[test]
    fn t_quantile_and_p() {
        let inf = t_inference(&DVector::from_vec(vec![2.0]), &DMatrix::from_element(1, 1, 1.0), 10.0).unwrap();
        // t_{0.975, 10} = 2.228138851986...
        assert_relative_eq!(inf.t_crit, 2.228_138_851_986_27, epsilon = 1e-9);
        // two-sided p for t=2 with 10 df = 0.07338803...
        assert_relative_eq!(inf.p[0], 0.073_388_03, epsilon = 1e-7);
    }
}
