//! Paired categorical comparison: quantile binning and the Stuart-Maxwell
//! marginal homogeneity test.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{TestKind, TestResult};
use crate::error::{Error, Result};

/// `k x k` counts; rows are categories of `x`, columns of `y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedTable {
    pub counts: Vec<Vec<u64>>,
    /// Upper category boundaries (right-closed); empty for hand-built tables.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub boundaries: Vec<f64>,
}

impl PairedTable {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.len();
        if k < 2 || counts.iter().any(|r| r.len() != k) {
            return Err(Error::invalid("paired table must be square with k >= 2"));
        }
        Ok(PairedTable {
            counts,
            boundaries: Vec::new(),
        })
    }

    pub fn size(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn transpose(&self) -> PairedTable {
        let k = self.size();
        let counts = (0..k)
            .map(|i| (0..k).map(|j| self.counts[j][i]).collect())
            .collect();
        PairedTable {
            counts,
            boundaries: self.boundaries.clone(),
        }
    }
}

/// Bins each pair into `k` categories cut at the k-quantiles of the pooled
/// sample. Intervals are right-closed: category `c` holds values in
/// `(b_{c-1}, b_c]`.
pub fn bin_paired(pairs: &[(f64, f64)], k: usize) -> Result<PairedTable> {
    if k < 2 {
        return Err(Error::invalid("need at least 2 categories"));
    }
    let mut pooled: Vec<f64> = pairs.iter().flat_map(|&(x, y)| [x, y]).collect();
    if pooled.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("NaN in paired sample"));
    }
    pooled.sort_by(f64::total_cmp);
    let mut distinct = pooled.clone();
    distinct.dedup();
    if distinct.len() < k {
        return Err(Error::degenerate(format!(
            "{} distinct pooled values cannot fill {k} categories",
            distinct.len()
        )));
    }
    let n = pooled.len();
    // lower empirical quantile: smallest value with at least j/k of the sample at or below it
    let boundaries: Vec<f64> = (1..k).map(|j| pooled[(j * n).div_ceil(k) - 1]).collect();
    let cat = |v: f64| boundaries.iter().filter(|&&b| v > b).count();
    let mut counts = vec![vec![0u64; k]; k];
    for &(x, y) in pairs {
        counts[cat(x)][cat(y)] += 1;
    }
    Ok(PairedTable { counts, boundaries })
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting; `None`
/// when `a` is numerically singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let (top, rest) = a.split_at_mut(col + 1);
        let pivot = &top[col];
        for (k, r) in rest.iter_mut().enumerate() {
            let f = r[col] / pivot[col];
            if f != 0.0 {
                for (x, p) in r[col..].iter_mut().zip(&pivot[col..]) {
                    *x -= f * p;
                }
                b[col + 1 + k] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Stuart-Maxwell test of marginal homogeneity.
///
/// Categories with no discordant pairs carry no information and are dropped
/// first; with none left the margins are trivially equal. For `k = 2` the
/// statistic is McNemar's `(b - c)^2 / (b + c)`. The `standardized` field
/// holds the ordinal statistic
/// `sum_i i (col_i - row_i) / sqrt(sum_{i<j} (n_ij + n_ji)(j - i)^2)`,
/// positive when `y` falls in higher categories than `x`; for `k = 2` it is
/// `(b - c) / sqrt(b + c)`.
pub fn marginal_homogeneity(table: &PairedTable) -> Result<TestResult> {
    let k = table.size();
    if k < 2 {
        return Err(Error::invalid("need at least 2 categories"));
    }
    let total = table.total();
    if total == 0 {
        return Err(Error::Empty("paired table"));
    }
    let n = &table.counts;
    let f = |i: usize, j: usize| n[i][j] as f64;
    let row: Vec<f64> = (0..k).map(|i| (0..k).map(|j| f(i, j)).sum()).collect();
    let col: Vec<f64> = (0..k).map(|j| (0..k).map(|i| f(i, j)).sum()).collect();

    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..k {
        num += (i + 1) as f64 * (col[i] - row[i]);
        for j in i + 1..k {
            den += (f(i, j) + f(j, i)) * ((j - i) as f64).powi(2);
        }
    }
    let standardized = (den > 0.0).then(|| num / den.sqrt());

    let active: Vec<usize> = (0..k)
        .filter(|&i| row[i] + col[i] - 2.0 * f(i, i) > 0.0)
        .collect();
    let dropped = k - active.len();
    let mut result = TestResult {
        test: TestKind::MarginalHomogeneity,
        statistic: 0.0,
        p_value: 1.0,
        two_tailed: true,
        n_effective: total as f64,
        df: Some(active.len().saturating_sub(1)),
        standardized,
        notes: format!("Stuart-Maxwell; {dropped} category(ies) without discordant pairs dropped"),
    };
    if active.len() < 2 {
        result.standardized = Some(0.0);
        return Ok(result);
    }
    // drop the last active category to remove the linear dependency
    let idx = &active[..active.len() - 1];
    let d: Vec<f64> = idx.iter().map(|&i| row[i] - col[i]).collect();
    let s: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| {
            idx.iter()
                .map(|&j| {
                    if i == j {
                        row[i] + col[i] - 2.0 * f(i, i)
                    } else {
                        -(f(i, j) + f(j, i))
                    }
                })
                .collect()
        })
        .collect();
    let s11 = s[0][0];
    let x = solve(s, d.clone()).ok_or_else(|| {
        Error::degenerate(format!(
            "singular covariance: categories {active:?} split into groups with no discordant \
             pairs between them"
        ))
    })?;
    // one free margin: d^2 / s directly, bit-identical to McNemar's formula
    let chi2 = if d.len() == 1 {
        d[0] * d[0] / s11
    } else {
        d.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>().max(0.0)
    };
    let df = idx.len();
    result.statistic = chi2;
    result.df = Some(df);
    result.p_value = ChiSquared::new(df as f64)
        .expect("df >= 1")
        .sf(chi2)
        .clamp(0.0, 1.0);
    Ok(result)
}
