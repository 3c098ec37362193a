use serde::{Deserialize, Serialize};

use super::Partition;
use crate::error::{Error, Result};
use crate::graph::EcosystemGraph;

/// Fractions of edge endpoints joining each pair of groups.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingMatrix {
    /// Row-major `m x m`, symmetric, sums to 1.
    pub e: Vec<Vec<f64>>,
    /// Row sums of `e`.
    pub a: Vec<f64>,
}

impl MixingMatrix {
    pub fn groups(&self) -> usize {
        self.a.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModularityVariant {
    /// `sum_i (e_ii - a_i^2)`, the Newman-Girvan form.
    #[default]
    Standard,
    /// `sum_i (e_ii - a_i)^2`, kept only to trace the typeset formula.
    PaperLiteral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModularityScore {
    pub q: f64,
    /// `None` when there is a single group.
    pub q_norm: Option<f64>,
    pub groups: usize,
    pub variant: ModularityVariant,
}

impl ModularityScore {
    pub fn compute(mx: &MixingMatrix, variant: ModularityVariant) -> Self {
        let q = modularity(mx, variant);
        let groups = mx.groups();
        ModularityScore {
            q,
            q_norm: normalized_modularity(q, groups).ok(),
            groups,
            variant,
        }
    }
}

pub fn mixing_matrix(g: &EcosystemGraph, p: &Partition) -> Result<MixingMatrix> {
    p.check_covers(g)?;
    if g.edge_count() == 0 {
        return Err(Error::degenerate(
            "mixing matrix undefined on an edgeless graph",
        ));
    }
    let k = p.group_count();
    let mut counts = vec![vec![0u64; k]; k];
    for (u, v) in g.edges() {
        let (r, s) = (p.group_of(u), p.group_of(v));
        counts[r][s] += 1;
        counts[s][r] += 1;
    }
    let total = 2.0 * g.edge_count() as f64;
    let e: Vec<Vec<f64>> = counts
        .iter()
        .map(|row| row.iter().map(|&c| c as f64 / total).collect())
        .collect();
    // row sums from integer counts so that a_r is exact per row
    let a = counts
        .iter()
        .map(|row| row.iter().sum::<u64>() as f64 / total)
        .collect();
    Ok(MixingMatrix { e, a })
}

pub fn modularity(mx: &MixingMatrix, variant: ModularityVariant) -> f64 {
    (0..mx.groups())
        .map(|i| {
            let (eii, ai) = (mx.e[i][i], mx.a[i]);
            match variant {
                ModularityVariant::Standard => eii - ai * ai,
                ModularityVariant::PaperLiteral => (eii - ai) * (eii - ai),
            }
        })
        .sum()
}

/// `m / (m - 1) * q`.
pub fn normalized_modularity(q: f64, groups: usize) -> Result<f64> {
    if groups < 2 {
        return Err(Error::invalid(
            "normalized modularity needs at least 2 groups",
        ));
    }
    let m = groups as f64;
    Ok(m / (m - 1.0) * q)
}
