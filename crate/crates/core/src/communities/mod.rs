//! Community structure: degree-corrected blockmodel fitting, modularity and
//! per-community physical/virtual composition.

mod composition;
mod dcsbm;
mod modularity;

pub use composition::{composition, gini, CompositionReport};
pub use dcsbm::{dcsbm_objective, fit_dcsbm, sweep_group_count, SweepRow, DEFAULT_RESTARTS};
pub use modularity::{
    mixing_matrix, modularity, normalized_modularity, MixingMatrix, ModularityScore,
    ModularityVariant,
};

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::graph::EcosystemGraph;

/// Assignment of every node (by graph index) to one of `m` nonempty groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    groups: usize,
}

impl Partition {
    /// Validates that group labels are exactly `0..m` with none empty.
    pub fn new(assignment: Vec<usize>) -> Result<Self> {
        if assignment.is_empty() {
            return Err(Error::Empty("partition"));
        }
        let groups = assignment.iter().max().map_or(0, |&g| g + 1);
        let mut used = vec![false; groups];
        for &g in &assignment {
            used[g] = true;
        }
        if let Some(gap) = used.iter().position(|u| !u) {
            return Err(Error::invalid(format!("group {gap} is empty")));
        }
        Ok(Partition { assignment, groups })
    }

    /// Relabels arbitrary labels to `0..m` in order of first appearance.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let mut map = HashMap::new();
        let assignment = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Partition::new(assignment)
    }

    /// Everything in one group.
    pub fn single(n: usize) -> Result<Self> {
        Partition::new(vec![0; n])
    }

    pub fn group_count(&self) -> usize {
        self.groups
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn group_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.groups];
        for &g in &self.assignment {
            sizes[g] += 1;
        }
        sizes
    }

    pub(crate) fn check_covers(&self, g: &EcosystemGraph) -> Result<()> {
        if self.assignment.len() != g.node_count() {
            return Err(Error::invalid(format!(
                "partition covers {} nodes, graph has {}",
                self.assignment.len(),
                g.node_count()
            )));
        }
        Ok(())
    }

    /// Writes `node_id,group` rows in node-id order.
    pub fn write_csv<W: Write>(&self, g: &EcosystemGraph, mut w: W) -> Result<()> {
        self.check_covers(g)?;
        writeln!(w, "node_id,group")?;
        for (i, grp) in self.assignment.iter().enumerate() {
            writeln!(w, "{},{}", csv_field(&g.node(i).id), grp)?;
        }
        Ok(())
    }
}

pub(crate) fn csv_field(s: &str) -> std::borrow::Cow<'_, str> {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\"")).into()
    } else {
        s.into()
    }
}

/// Normalized mutual information `2 I(a;b) / (H(a) + H(b))` between two
/// labelings of the same nodes. Defined as 1 when both are trivial.
pub fn normalized_mutual_information(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid("labelings differ in length"));
    }
    if a.is_empty() {
        return Err(Error::Empty("labeling"));
    }
    let n = a.len() as f64;
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut pa: HashMap<usize, f64> = HashMap::new();
    let mut pb: HashMap<usize, f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1.0;
        *pa.entry(x).or_default() += 1.0;
        *pb.entry(y).or_default() += 1.0;
    }
    let entropy = |m: &HashMap<usize, f64>| {
        let mut cs: Vec<f64> = m.values().copied().collect();
        cs.sort_by(f64::total_cmp);
        -cs.iter().map(|c| c / n * (c / n).ln()).sum::<f64>()
    };
    let (ha, hb) = (entropy(&pa), entropy(&pb));
    if ha + hb == 0.0 {
        return Ok(1.0);
    }
    let mut cells: Vec<((usize, usize), f64)> = joint.into_iter().collect();
    cells.sort_by_key(|c| c.0);
    let mi: f64 = cells
        .iter()
        .map(|&((x, y), c)| c / n * (c * n / (pa[&x] * pb[&y])).ln())
        .sum();
    Ok(2.0 * mi / (ha + hb))
}
