//! Least squares through a thin Householder QR.

use nalgebra::{DMatrix, DVector};

use super::{DesignMatrix, InferenceError};

/// Relative threshold on |R_jj| / ‖x_j‖ below which column j is treated as a
/// linear combination of the columns before it.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub names: Vec<String>,
    pub coefficients: DVector<f64>,
    pub residuals: DVector<f64>,
    /// (XᵀX)⁻¹, assembled from the triangular factor.
    pub xtx_inv: DMatrix<f64>,
    pub r_squared: f64,
    pub n: usize,
    pub k: usize,
}

pub fn fit_ols(design: &DesignMatrix) -> Result<OlsFit, InferenceError> {
    let (n, k) = design.x.shape();
    let qr = design.x.clone().qr();
    let r = qr.r();

    for j in 0..k {
        let col_norm = design.x.column(j).norm();
        if col_norm == 0.0 || r[(j, j)].abs() <= RANK_TOL * col_norm {
            return Err(InferenceError::Singular {
                column: design.names[j].clone(),
            });
        }
    }

    let qty = qr.q().transpose() * &design.y;
    let coefficients = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| InferenceError::Singular {
            column: design.names[k - 1].clone(),
        })?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .expect("diagonal checked nonzero");
    let xtx_inv = &r_inv * r_inv.transpose();

    let residuals = &design.y - &design.x * &coefficients;
    let ssr = residuals.norm_squared();
    let mean = design.y.mean();
    let sst: f64 = design.y.iter().map(|v| (v - mean).powi(2)).sum();
    let r_squared = if sst > 0.0 { (1.0 - ssr / sst).clamp(0.0, 1.0) } else { 0.0 };

    Ok(OlsFit {
        names: design.names.clone(),
        coefficients,
        residuals,
        xtx_inv,
        r_squared,
        n,
        k,
    })
}

/// Per-row scores x_i·e_i, one row per observation.
pub fn ols_scores(design: &DesignMatrix, fit: &OlsFit) -> DMatrix<f64> {
    let mut s = design.x.clone();
    for (mut row, e) in s.row_iter_mut().zip(fit.residuals.iter()) {
        row *= *e;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn design(x: DMatrix<f64>, y: Vec<f64>) -> DesignMatrix {
        let n = x.nrows();
        let names = (0..x.ncols()).map(|j| format!("c{j}")).collect();
        DesignMatrix::new(names, x, DVector::from_vec(y), (0..n).map(|i| i.to_string()).collect()).unwrap()
    }

    #[test]
    fn exact_line() {
        let x = DMatrix::from_fn(5, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let y = (0..5).map(|i| 2.0 * i as f64 + 1.0).collect();
        let fit = fit_ols(&design(x, y)).unwrap();
        assert_relative_eq!(fit.coefficients[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.coefficients[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn intercept_only_is_mean() {
        let y = vec![3.0, 5.0, 10.0, 2.0];
        let fit = fit_ols(&design(DMatrix::from_element(4, 1, 1.0), y)).unwrap();
        assert_relative_eq!(fit.coefficients[0], 5.0, epsilon = 1e-12);
        assert_eq!(fit.r_squared, 0.0);
    }

    #[test]
    fn dependent_column_is_named() {
        let x = DMatrix::from_fn(6, 3, |i, j| match j {
            0 => 1.0,
            1 => i as f64,
            _ => 3.0 * i as f64 - 2.0,
        });
        let err = fit_ols(&design(x, vec![1.0, 2.0, 0.0, 4.0, 3.0, 5.0])).unwrap_err();
        match err {
            InferenceError::Singular { column } => assert_eq!(column, "c2"),
            other => panic!("unexpected {other:?}"),
        }
        let zero = DMatrix::from_fn(4, 2, |_, j| if j == 0 { 1.0 } else { 0.0 });
        assert!(matches!(fit_ols(&design(zero, vec![1.0, 2.0, 3.0, 4.0])), Err(InferenceError::Singular { .. })));
    }

    #[test]
    fn too_few_rows_rejected() {
        let x = DMatrix::from_element(2, 2, 1.0);
        let err = DesignMatrix::new(
            vec!["a".into(), "b".into()],
            x,
            DVector::from_vec(vec![1.0, 2.0]),
            vec!["1".into(), "2".into()],
        )
        .unwrap_err();
        assert!(matches!(err, InferenceError::TooFewRows { n: 2, k: 2 }));
    }
}
