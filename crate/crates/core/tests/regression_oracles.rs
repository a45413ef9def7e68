use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use shakk::inference::{
    fit_ols, hc0, ols_clustered, ols_scores, sandwich, ClusterIndex, CovarianceKind, DesignMatrix,
};

/// Gauss-Jordan with partial pivoting on XᵀX b = Xᵀy.
fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let k = x[0].len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for (row, &yi) in x.iter().zip(y) {
        for i in 0..k {
            for j in 0..k {
                a[i][j] += row[i] * row[j];
            }
            a[i][k] += row[i] * yi;
        }
    }
    for col in 0..k {
        let pivot = (col..k).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs())).unwrap();
        a.swap(col, pivot);
        for r in 0..k {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=k {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..k).map(|i| a[i][k] / a[i][i]).collect()
}

fn design(x: &[Vec<f64>], y: &[f64], clusters: Vec<String>) -> DesignMatrix {
    let (n, k) = (x.len(), x[0].len());
    let names = (0..k).map(|j| format!("x{j}")).collect();
    DesignMatrix::new(
        names,
        DMatrix::from_fn(n, k, |i, j| x[i][j]),
        DVector::from_column_slice(y),
        clusters,
    )
    .unwrap()
}

fn random_design(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<f64>) {
    let k = rng.random_range(2..=6);
    let n = rng.random_range(k + 3..=40);
    let beta: Vec<f64> = (0..k)
        .map(|_| rng.random_range(0.5..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = vec![1.0];
        row.extend((1..k).map(|_| -> f64 { StandardNormal.sample(rng) }));
        let e: f64 = StandardNormal.sample(rng);
        y.push(row.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + 0.1 * e);
        x.push(row);
    }
    (x, y)
}

#[test]
fn ols_matches_normal_equations_on_random_designs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for case in 0..100 {
        let (x, y) = random_design(&mut rng);
        let n = x.len();
        let d = design(&x, &y, (0..n).map(|i| i.to_string()).collect());
        let fit = fit_ols(&d).unwrap();
        let oracle = normal_equations(&x, &y);
        for (j, want) in oracle.iter().enumerate() {
            let got = fit.coefficients[j];
            assert!((got - want).abs() <= 1e-8 * want.abs(), "case {case} coef {j}: {got} vs {want}");
        }
        let xte = d.x.transpose() * &fit.residuals;
        assert!(xte.amax() < 1e-8, "case {case}: Xᵀe = {}", xte.amax());
    }
}

#[test]
fn cr0_with_singleton_clusters_is_hc0() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let (x, y) = random_design(&mut rng);
        let n = x.len();
        let d = design(&x, &y, (0..n).map(|i| format!("c{i}")).collect());
        let fit = fit_ols(&d).unwrap();
        let scores = ols_scores(&d, &fit);
        let cr0 = sandwich(&fit.xtx_inv, &scores, &ClusterIndex::new(&d.clusters), CovarianceKind::Cr0).unwrap();
        let h = hc0(&fit.xtx_inv, &scores);
        assert!((cr0 - &h).amax() <= 1e-12 * h.amax().max(1.0));
    }
}

/// Four rows, two clusters, intercept plus slope, all arithmetic by hand.
fn two_cluster_hand(kind: CovarianceKind) -> ([[f64; 2]; 2], DMatrix<f64>) {
    let xs = [0.0, 1.0, 2.0, 4.0];
    let ys = [1.0, 2.0, 2.0, 5.0];
    let g = ["a", "a", "b", "b"];
    let n = 4.0;
    let (sx, sy) = (xs.iter().sum::<f64>(), ys.iter().sum::<f64>());
    let sxx: f64 = xs.iter().map(|v| v * v).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| a * b).sum();
    let det = n * sxx - sx * sx;
    let b1 = (n * sxy - sx * sy) / det;
    let b0 = (sy - b1 * sx) / n;
    // (XᵀX)⁻¹ for [[n, sx], [sx, sxx]].
    let bread = [[sxx / det, -sx / det], [-sx / det, n / det]];
    let mut sums = [[0.0; 2]; 2];
    for i in 0..4 {
        let e = ys[i] - b0 - b1 * xs[i];
        let c = usize::from(g[i] == "b");
        sums[c][0] += e;
        sums[c][1] += e * xs[i];
    }
    let mut meat = [[0.0; 2]; 2];
    for s in &sums {
        for r in 0..2 {
            for c in 0..2 {
                meat[r][c] += s[r] * s[c];
            }
        }
    }
    let factor = match kind {
        CovarianceKind::Cr0 => 1.0,
        CovarianceKind::Cr1 => (2.0 / 1.0) * ((n - 1.0) / (n - 2.0)),
    };
    let mut bm = [[0.0; 2]; 2];
    let mut v = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            bm[r][c] = bread[r][0] * meat[0][c] + bread[r][1] * meat[1][c];
        }
    }
    for r in 0..2 {
        for c in 0..2 {
            v[r][c] = factor * (bm[r][0] * bread[0][c] + bm[r][1] * bread[1][c]);
        }
    }
    let x: Vec<Vec<f64>> = xs.iter().map(|&v| vec![1.0, v]).collect();
    let d = design(&x, &ys, g.iter().map(|s| s.to_string()).collect());
    let fit = fit_ols(&d).unwrap();
    let got = sandwich(&fit.xtx_inv, &ols_scores(&d, &fit), &ClusterIndex::new(&d.clusters), kind).unwrap();
    (v, got)
}

#[test]
fn two_cluster_sandwich_matches_hand_arithmetic() {
    for kind in [CovarianceKind::Cr0, CovarianceKind::Cr1] {
        let (want, got) = two_cluster_hand(kind);
        for r in 0..2 {
            for c in 0..2 {
                assert!((got[(r, c)] - want[r][c]).abs() < 1e-10, "{kind:?} ({r},{c}): {} vs {}", got[(r, c)], want[r][c]);
            }
        }
    }
}

#[test]
fn one_cluster_is_rejected() {
    let x: Vec<Vec<f64>> = [0.0, 1.0, 2.0, 3.0].iter().map(|&v| vec![1.0, v]).collect();
    let d = design(&x, &[1.0, 3.0, 2.0, 5.0], vec!["a".into(); 4]);
    assert!(ols_clustered(&d, CovarianceKind::Cr1).is_err());
}

fn arb_case() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<String>)> {
    (6usize..30).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), n),
            prop::collection::vec(-10.0f64..10.0, n),
            prop::collection::vec(0u8..4, n),
        )
            .prop_map(|(cols, y, g)| {
                let x = cols.into_iter().map(|c| vec![1.0, c[0], c[1]]).collect();
                let g = g.into_iter().enumerate().map(|(i, c)| if i < 2 { i.to_string() } else { c.to_string() }).collect();
                (x, y, g)
            })
    })
}

proptest! {
    #[test]
    fn intercept_shift_moves_only_the_intercept((x, y, g) in arb_case(), shift in -50.0f64..50.0) {
        let d = design(&x, &y, g.clone());
        prop_assume!(fit_ols(&d).is_ok());
        let shifted: Vec<f64> = y.iter().map(|v| v + shift).collect();
        let a = ols_clustered(&d, CovarianceKind::Cr1).unwrap();
        let b = ols_clustered(&design(&x, &shifted, g), CovarianceKind::Cr1).unwrap();
        let tol = 1e-7 * (1.0 + shift.abs());
        prop_assert!((b.terms[0].estimate - a.terms[0].estimate - shift).abs() < tol);
        for j in 1..3 {
            prop_assert!((b.terms[j].estimate - a.terms[j].estimate).abs() < tol);
            prop_assert!((b.terms[j].se - a.terms[j].se).abs() < tol);
        }
    }

    #[test]
    fn duplicating_rows_keeps_coefficients((x, y, g) in arb_case()) {
        let d = design(&x, &y, g.clone());
        prop_assume!(fit_ols(&d).is_ok());
        let x2: Vec<Vec<f64>> = x.iter().chain(&x).cloned().collect();
        let y2: Vec<f64> = y.iter().chain(&y).copied().collect();
        let g2: Vec<String> = g.iter().chain(&g).cloned().collect();
        let a = fit_ols(&d).unwrap();
        let b = fit_ols(&design(&x2, &y2, g2)).unwrap();
        for j in 0..3 {
            prop_assert!((a.coefficients[j] - b.coefficients[j]).abs() < 1e-8 * (1.0 + a.coefficients[j].abs()));
        }
    }

    #[test]
    fn cr1_exceeds_cr0_by_the_correction_factor((x, y, g) in arb_case()) {
        let d = design(&x, &y, g);
        prop_assume!(fit_ols(&d).is_ok());
        let a = ols_clustered(&d, CovarianceKind::Cr0).unwrap();
        let b = ols_clustered(&d, CovarianceKind::Cr1).unwrap();
        let (n, k, gs) = (a.n as f64, 3.0, a.n_clusters as f64);
        let c = (gs / (gs - 1.0) * (n - 1.0) / (n - k)).sqrt();
        for j in 0..3 {
            prop_assert!((b.terms[j].se - c * a.terms[j].se).abs() <= 1e-9 * (1.0 + b.terms[j].se));
        }
    }
}
