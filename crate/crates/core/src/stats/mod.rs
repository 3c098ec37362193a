//! Degree-distribution analysis and the nonparametric tests run on
//! local-efficiency samples.

mod degree;
mod ks;
mod marginal;
mod wilcoxon;

pub use degree::{ccdf, fit_power_law, hurwitz_zeta, CcdfPoint, PowerLawFit};
pub use ks::{kolmogorov_survival, ks_statistic, ks_two_sample};
pub use marginal::{bin_paired, marginal_homogeneity, PairedTable};
pub use wilcoxon::{wilcoxon_exact_p, wilcoxon_signed_rank};

use serde::Serialize;
use statrs::distribution::Normal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    WilcoxonSignedRank,
    KsTwoSample,
    MarginalHomogeneity,
}

/// Outcome of one hypothesis test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub test: TestKind,
    pub statistic: f64,
    pub p_value: f64,
    pub two_tailed: bool,
    pub n_effective: f64,
    /// Degrees of freedom for chi-square based tests.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub df: Option<usize>,
    /// Signed standardized companion statistic, where one exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standardized: Option<f64>,
    pub notes: String,
}

pub(crate) fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Average ranks (1-based) with ties sharing the mean of their positions.
pub(crate) fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}
