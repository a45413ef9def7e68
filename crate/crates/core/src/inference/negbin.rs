//! NB2 regression (variance μ + αμ², log link) by maximum likelihood.
//!
//! Each outer iteration runs IRLS for the coefficients at fixed α, then a
//! safeguarded Newton search on ln α at fixed μ. Both steps backtrack until
//! the log-likelihood does not decrease, so the recorded trace is monotone.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::special::{digamma_diff, ln_factorial, ln_gamma_ratio_scaled, trigamma_diff};
use super::{DesignMatrix, InferenceError};

/// α is kept inside this range; the lower end stands in for the Poisson limit.
pub const ALPHA_MIN: f64 = 1e-8;
pub const ALPHA_MAX: f64 = 1e4;

const RANK_TOL: f64 = 1e-10;
const MAX_HALVINGS: usize = 40;
const ETA_MAX: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegBinOptions {
    /// Stop when the outer log-likelihood change falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Hold α fixed instead of estimating it; `Some(0.0)` fits a Poisson model.
    pub fixed_alpha: Option<f64>,
}

impl Default for NegBinOptions {
    fn default() -> Self {
        NegBinOptions {
            tol: 1e-8,
            max_iter: 100,
            fixed_alpha: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegBinFit {
    pub names: Vec<String>,
    pub coefficients: DVector<f64>,
    pub alpha: f64,
    pub log_likelihood: f64,
    /// Log-likelihood after each outer iteration, starting with the initial value.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub mu: DVector<f64>,
    /// Inverse Fisher information for the coefficients.
    pub bread: DMatrix<f64>,
    pub n: usize,
    pub k: usize,
}

/// NB2 log-likelihood; `alpha == 0` gives the Poisson log-likelihood.
pub fn log_likelihood(y: &DVector<f64>, mu: &DVector<f64>, alpha: f64) -> f64 {
    let ll: f64 = if alpha == 0.0 {
        y.iter()
            .zip(mu.iter())
            .map(|(&y, &m)| y * m.ln() - m - ln_factorial(y))
            .sum()
    } else {
        let r = 1.0 / alpha;
        y.iter()
            .zip(mu.iter())
            .map(|(&y, &m)| ln_gamma_ratio_scaled(y, r, m) - ln_factorial(y) - r * (m / r).ln_1p() + y * m.ln())
            .sum()
    };
    if ll.is_nan() {
        f64::NEG_INFINITY
    } else {
        ll
    }
}

fn mean_of(x: &DMatrix<f64>, beta: &DVector<f64>) -> DVector<f64> {
    (x * beta).map(|eta| eta.min(ETA_MAX).exp())
}

/// Weighted least squares through QR of √w·X. Returns the solution and
/// (XᵀWX)⁻¹.
fn weighted_lstsq(
    design: &DesignMatrix,
    z: &DVector<f64>,
    w: &DVector<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>), InferenceError> {
    let k = design.k();
    let sw = w.map(f64::sqrt);
    let mut xw = design.x.clone();
    for (mut row, s) in xw.row_iter_mut().zip(sw.iter()) {
        row *= *s;
    }
    let zw = z.component_mul(&sw);
    let qr = xw.clone().qr();
    let r = qr.r();
    for j in 0..k {
        let norm = xw.column(j).norm();
        if norm == 0.0 || r[(j, j)].abs() <= RANK_TOL * norm {
            return Err(InferenceError::Singular {
                column: design.names[j].clone(),
            });
        }
    }
    let beta = r
        .solve_upper_triangular(&(qr.q().transpose() * zw))
        .expect("diagonal checked nonzero");
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .expect("diagonal checked nonzero");
    Ok((beta, &r_inv * r_inv.transpose()))
}

fn irls_weights(mu: &DVector<f64>, alpha: f64) -> DVector<f64> {
    mu.map(|m| m / (1.0 + alpha * m))
}

/// One Fisher-scoring step for β at fixed α, halved until the likelihood does
/// not decrease. Returns the accepted β and its log-likelihood.
fn irls_step(design: &DesignMatrix, beta: &DVector<f64>, alpha: f64, ll: f64) -> Result<(DVector<f64>, f64), InferenceError> {
    let mu = mean_of(&design.x, beta);
    let eta = &design.x * beta;
    let z = DVector::from_fn(design.n(), |i, _| eta[i] + (design.y[i] - mu[i]) / mu[i]);
    let (proposal, _) = weighted_lstsq(design, &z, &irls_weights(&mu, alpha))?;

    let mut step = &proposal - beta;
    for _ in 0..MAX_HALVINGS {
        let candidate = beta + &step;
        let cand_ll = log_likelihood(&design.y, &mean_of(&design.x, &candidate), alpha);
        if cand_ll >= ll {
            return Ok((candidate, cand_ll));
        }
        step /= 2.0;
    }
    Ok((beta.clone(), ll))
}

/// Profile search over u = ln α with μ held fixed.
fn update_alpha(y: &DVector<f64>, mu: &DVector<f64>, alpha: f64) -> (f64, f64) {
    let (u_min, u_max) = (ALPHA_MIN.ln(), ALPHA_MAX.ln());
    let mut u = alpha.ln().clamp(u_min, u_max);
    let mut ll = log_likelihood(y, mu, u.exp());

    for _ in 0..100 {
        let r = (-u).exp();
        let (mut g, mut h) = (0.0, 0.0);
        for (&yi, &m) in y.iter().zip(mu.iter()) {
            g += digamma_diff(yi, r) - (m / r).ln_1p() + (m - yi) / (r + m);
            h += trigamma_diff(yi, r) + 1.0 / r - 1.0 / (r + m) - (m - yi) / (r + m).powi(2);
        }
        // Chain rule: dr/du = −r.
        let grad = -r * g;
        let curv = r * r * h + r * g;
        let mut step = if curv < 0.0 { -grad / curv } else { grad.signum() };
        step = step.clamp(-2.0, 2.0);
        if (u <= u_min && step < 0.0) || (u >= u_max && step > 0.0) {
            break;
        }

        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let cand = (u + step).clamp(u_min, u_max);
            let cand_ll = log_likelihood(y, mu, cand.exp());
            if cand_ll >= ll {
                let moved = (cand - u).abs();
                u = cand;
                ll = cand_ll;
                accepted = moved > 0.0;
                break;
            }
            step /= 2.0;
        }
        if !accepted || step.abs() < 1e-10 {
            break;
        }
    }
    (u.exp(), ll)
}

pub fn fit_negbin(design: &DesignMatrix, opts: &NegBinOptions) -> Result<NegBinFit, InferenceError> {
    let y = &design.y;
    if let Some(bad) = y.iter().position(|&v| v < 0.0 || v.fract() != 0.0) {
        return Err(InferenceError::Domain(format!(
            "outcome must be nonnegative integers; row {} is {}",
            bad + 1,
            y[bad]
        )));
    }
    if y.iter().all(|&v| v == 0.0) {
        return Err(InferenceError::Domain("outcome is zero in every row; the mean is not identified".into()));
    }
    if let Some(a) = opts.fixed_alpha {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(InferenceError::Domain(format!("fixed alpha must be >= 0, got {a}")));
        }
    }

    // Start from a Poisson-scale least squares fit of ln((y + ȳ)/2).
    let ybar = y.mean();
    let start = y.map(|v| ((v + ybar) / 2.0).ln());
    let (mut beta, _) = weighted_lstsq(design, &start, &DVector::from_element(design.n(), 1.0))?;

    let mut alpha = match opts.fixed_alpha {
        Some(a) => a,
        None => {
            let mu = mean_of(&design.x, &beta);
            let excess: f64 = y.iter().zip(mu.iter()).map(|(&v, &m)| ((v - m).powi(2) - m) / (m * m)).sum();
            (excess / design.n() as f64).clamp(0.01, 10.0)
        }
    };

    let mut ll = log_likelihood(y, &mean_of(&design.x, &beta), alpha);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let prev = ll;

        for _ in 0..25 {
            let before = ll;
            let (b, l) = irls_step(design, &beta, alpha, ll)?;
            beta = b;
            ll = l;
            if ll - before < opts.tol * 0.1 {
                break;
            }
        }
        if opts.fixed_alpha.is_none() {
            let mu = mean_of(&design.x, &beta);
            let (a, l) = update_alpha(y, &mu, alpha);
            if l >= ll {
                alpha = a;
                ll = l;
            }
        }
        trace.push(ll);
        if !ll.is_finite() {
            break;
        }
        if (ll - prev).abs() < opts.tol {
            converged = true;
            break;
        }
    }

    if !converged {
        return Err(InferenceError::Convergence { iterations, trace });
    }

    let mu = mean_of(&design.x, &beta);
    let (_, bread) = weighted_lstsq(design, &DVector::zeros(design.n()), &irls_weights(&mu, alpha))?;
    Ok(NegBinFit {
        names: design.names.clone(),
        coefficients: beta,
        alpha,
        log_likelihood: ll,
        trace,
        iterations,
        mu,
        bread,
        n: design.n(),
        k: design.k(),
    })
}

/// Per-row score contributions x_i (y_i − μ_i)/(1 + αμ_i).
pub fn negbin_scores(design: &DesignMatrix, fit: &NegBinFit) -> DMatrix<f64> {
    let mut s = design.x.clone();
    for (i, mut row) in s.row_iter_mut().enumerate() {
        let m = fit.mu[i];
        row *= (design.y[i] - m) / (1.0 + fit.alpha * m);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Gamma, Poisson};

    fn design(x: DMatrix<f64>, y: Vec<f64>) -> DesignMatrix {
        let n = x.nrows();
        let names = (0..x.ncols()).map(|j| format!("c{j}")).collect();
        DesignMatrix::new(names, x, DVector::from_vec(y), (0..n).map(|i| (i % 50).to_string()).collect()).unwrap()
    }

    fn simulated(n: usize, alpha: Option<f64>, seed: u64) -> DesignMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { (i % 2) as f64 });
        let y = (0..n)
            .map(|i| {
                let mu = (1.0 + 0.3 * x[(i, 1)]).exp();
                let lambda = match alpha {
                    Some(a) => mu * Gamma::new(1.0 / a, a).unwrap().sample(&mut rng),
                    None => mu,
                };
                Poisson::new(lambda).unwrap().sample(&mut rng)
            })
            .collect();
        design(x, y)
    }

    #[test]
    fn log_likelihood_matches_pmf() {
        // NB2 pmf at y=3, μ=2, α=0.5 (r=2): Γ(5)/(Γ(2)·3!) · (2/4)^2 · (2/4)^3
        let pmf: f64 = 24.0 / 6.0 * 0.5f64.powi(2) * 0.5f64.powi(3);
        let ll = log_likelihood(&DVector::from_vec(vec![3.0]), &DVector::from_vec(vec![2.0]), 0.5);
        assert_relative_eq!(ll, pmf.ln(), epsilon = 1e-12);
        // Poisson limit
        let p: f64 = (-2.0f64).exp() * 8.0 / 6.0;
        let lp = log_likelihood(&DVector::from_vec(vec![3.0]), &DVector::from_vec(vec![2.0]), 0.0);
        assert_relative_eq!(lp, p.ln(), epsilon = 1e-12);
        let near = log_likelihood(&DVector::from_vec(vec![3.0]), &DVector::from_vec(vec![2.0]), 1e-9);
        assert_relative_eq!(near, p.ln(), epsilon = 1e-7);
    }

    #[test]
    fn recovers_overdispersed_data() {
        let d = simulated(4000, Some(0.5), 7);
        let fit = fit_negbin(&d, &NegBinOptions::default()).unwrap();
        assert!((fit.coefficients[1] - 0.3).abs() < 0.1, "{}", fit.coefficients[1]);
        assert!((fit.alpha - 0.5).abs() < 0.1, "{}", fit.alpha);
        for w in fit.trace.windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn poisson_data_gives_tiny_alpha() {
        let d = simulated(3000, None, 11);
        let nb = fit_negbin(&d, &NegBinOptions::default()).unwrap();
        assert!(nb.alpha < 0.01, "alpha {}", nb.alpha);
        let pois = fit_negbin(
            &d,
            &NegBinOptions {
                fixed_alpha: Some(0.0),
                ..NegBinOptions::default()
            },
        )
        .unwrap();
        for j in 0..2 {
            let se = pois.bread[(j, j)].sqrt();
            assert!((nb.coefficients[j] - pois.coefficients[j]).abs() < 2.0 * se);
        }
    }

    #[test]
    fn gradient_vanishes_at_optimum() {
        let d = simulated(1500, Some(1.0), 3);
        let fit = fit_negbin(&d, &NegBinOptions::default()).unwrap();
        let s = negbin_scores(&d, &fit);
        for j in 0..s.ncols() {
            let g: f64 = s.column(j).sum();
            assert!(g.abs() < 1e-4, "score {j} = {g}");
        }
        // Finite-difference check on α.
        let h = 1e-5;
        let up = log_likelihood(&d.y, &fit.mu, fit.alpha * (1.0 + h));
        let down = log_likelihood(&d.y, &fit.mu, fit.alpha * (1.0 - h));
        assert!(((up - down) / (2.0 * h)).abs() < 1e-3);
    }

    #[test]
    fn domain_errors() {
        let x = DMatrix::from_fn(4, 1, |_, _| 1.0);
        assert!(matches!(
            fit_negbin(&design(x.clone(), vec![0.0; 4]), &NegBinOptions::default()),
            Err(InferenceError::Domain(_))
        ));
        assert!(matches!(
            fit_negbin(&design(x.clone(), vec![1.0, 2.5, 0.0, 1.0]), &NegBinOptions::default()),
            Err(InferenceError::Domain(_))
        ));
        assert!(matches!(
            fit_negbin(&design(x, vec![1.0, -2.0, 0.0, 1.0]), &NegBinOptions::default()),
            Err(InferenceError::Domain(_))
        ));
    }

    #[test]
    fn iteration_cap_reports_trace() {
        let d = simulated(500, Some(0.5), 5);
        let err = fit_negbin(
            &d,
            &NegBinOptions {
                max_iter: 1,
                tol: 0.0,
                fixed_alpha: None,
            },
        )
        .unwrap_err();
        match err {
            InferenceError::Convergence { iterations, trace } => {
                assert_eq!(iterations, 1);
                assert_eq!(trace.len(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
