//! Gamma-function pieces needed by the negative binomial likelihood.

use statrs::function::gamma::{digamma, ln_gamma};

/// Below this count the gamma-ratio terms are summed term by term, which
/// stays accurate when the shape `r` is huge (α → 0).
const EXACT_SUM_LIMIT: f64 = 10_000.0;

/// ψ'(x) for x > 0: recurrence up to x ≥ 10, then the asymptotic series.
pub fn trigamma(x: f64) -> f64 {
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + inv + 0.5 * inv2 + inv * inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * 5.0 / 66.0))))
}

/// ln Γ(y + r) − ln Γ(r) − y·ln(r + μ), for integer y ≥ 0.
pub fn ln_gamma_ratio_scaled(y: f64, r: f64, mu: f64) -> f64 {
    if y < EXACT_SUM_LIMIT {
        let base = r + mu;
        (0..y as u64).map(|j| ((j as f64 - mu) / base).ln_1p()).sum()
    } else {
        ln_gamma(y + r) - ln_gamma(r) - y * (r + mu).ln()
    }
}

/// ψ(y + r) − ψ(r).
pub fn digamma_diff(y: f64, r: f64) -> f64 {
    if y < EXACT_SUM_LIMIT {
        (0..y as u64).map(|j| 1.0 / (r + j as f64)).sum()
    } else {
        digamma(y + r) - digamma(r)
    }
}

/// ψ'(y + r) − ψ'(r).
pub fn trigamma_diff(y: f64, r: f64) -> f64 {
    if y < EXACT_SUM_LIMIT {
        -(0..y as u64).map(|j| (r + j as f64).powi(-2)).sum::<f64>()
    } else {
        trigamma(y + r) - trigamma(r)
    }
}

pub fn ln_factorial(y: f64) -> f64 {
    ln_gamma(y + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn trigamma_known_values() {
        // ψ'(1) = π²/6, ψ'(1/2) = π²/2
        let pi2 = std::f64::consts::PI.powi(2);
        assert_relative_eq!(trigamma(1.0), pi2 / 6.0, epsilon = 1e-12);
        assert_relative_eq!(trigamma(0.5), pi2 / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn trigamma_matches_digamma_derivative() {
        for &x in &[0.3f64, 1.7, 4.0, 12.5, 250.0] {
            let h = 1e-5 * x.max(1.0);
            let fd = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
            assert_relative_eq!(trigamma(x), fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn summed_and_closed_forms_agree() {
        for &(y, r, mu) in &[(3.0, 2.0, 4.5), (40.0, 0.7, 12.0), (9_999.0, 3.0, 5000.0)] {
            let closed = ln_gamma(y + r) - ln_gamma(r) - y * (r + mu).ln();
            assert_relative_eq!(ln_gamma_ratio_scaled(y, r, mu), closed, max_relative = 1e-9);
            assert_relative_eq!(digamma_diff(y, r), digamma(y + r) - digamma(r), max_relative = 1e-9);
            assert_relative_eq!(trigamma_diff(y, r), trigamma(y + r) - trigamma(r), max_relative = 1e-8);
        }
    }
}
