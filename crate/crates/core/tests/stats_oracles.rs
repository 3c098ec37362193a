use dbe_core::stats::{marginal_homogeneity, wilcoxon_exact_p, wilcoxon_signed_rank, PairedTable};

/// `d^T S^{-1} d` for a 2x2 `S` via the cofactor inverse.
fn quad_form_cofactor(d: [f64; 2], s: [[f64; 2]; 2]) -> f64 {
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let inv = [
        [s[1][1] / det, -s[0][1] / det],
        [-s[1][0] / det, s[0][0] / det],
    ];
    (0..2)
        .map(|i| (0..2).map(|j| d[i] * inv[i][j] * d[j]).sum::<f64>())
        .sum()
}

#[test]
fn stuart_maxwell_three_categories_matches_cofactor_solve() {
    let n = [[20u64, 10, 5], [3, 30, 15], [2, 4, 25]];
    let table = PairedTable::from_counts(n.iter().map(|r| r.to_vec()).collect()).unwrap();
    let f = |i: usize, j: usize| n[i][j] as f64;
    let row = |i: usize| (0..3).map(|j| f(i, j)).sum::<f64>();
    let col = |j: usize| (0..3).map(|i| f(i, j)).sum::<f64>();
    let d = [row(0) - col(0), row(1) - col(1)];
    let s = [
        [row(0) + col(0) - 2.0 * f(0, 0), -(f(0, 1) + f(1, 0))],
        [-(f(1, 0) + f(0, 1)), row(1) + col(1) - 2.0 * f(1, 1)],
    ];
    let expected = quad_form_cofactor(d, s);
    let got = marginal_homogeneity(&table).unwrap();
    assert!(
        (got.statistic - expected).abs() < 1e-10 * expected,
        "{} vs {expected}",
        got.statistic
    );
    assert_eq!(got.df, Some(2));
    // chi-square(2) survival is exp(-x/2)
    assert!((got.p_value - (-expected / 2.0).exp()).abs() < 1e-12);
    // more mass above the diagonal: y tends to fall in higher categories
    assert!(got.standardized.unwrap() > 0.0);
}

#[test]
fn dropped_category_reduces_degrees_of_freedom() {
    // middle category has no discordant pairs
    let table =
        PairedTable::from_counts(vec![vec![5, 0, 7], vec![0, 9, 0], vec![2, 0, 6]]).unwrap();
    let r = marginal_homogeneity(&table).unwrap();
    assert_eq!(r.df, Some(1));
    assert_eq!(r.statistic, 25.0 / 9.0);
}

#[test]
fn exact_and_approximate_wilcoxon_agree_on_small_samples() {
    let pairs: Vec<(f64, f64)> = [
        0.3, -0.1, 0.8, 1.2, -0.4, 0.9, 0.15, 0.6, -0.05, 1.1, 0.7, 0.45,
    ]
    .iter()
    .map(|&d| (0.0, d))
    .collect();
    let exact = wilcoxon_exact_p(&pairs).unwrap();
    let approx = wilcoxon_signed_rank(&pairs).unwrap().p_value;
    assert!((exact - approx).abs() < 0.01, "{exact} vs {approx}");
}
