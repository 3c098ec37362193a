use serde::Serialize;

use super::Partition;
use crate::error::{Error, Result};
use crate::graph::{EcosystemGraph, NodeKind};

/// Share of virtual nodes in each community and how evenly it is spread.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionReport {
    pub virtual_fraction: Vec<f64>,
    pub mean_virtual_fraction: f64,
    pub gini: f64,
}

pub fn composition(g: &EcosystemGraph, p: &Partition) -> Result<CompositionReport> {
    p.check_covers(g)?;
    let k = p.group_count();
    let mut virt = vec![0usize; k];
    for i in 0..g.node_count() {
        if g.kind(i) == NodeKind::Virtual {
            virt[p.group_of(i)] += 1;
        }
    }
    let virtual_fraction: Vec<f64> = virt
        .iter()
        .zip(p.group_sizes())
        .map(|(&v, size)| v as f64 / size as f64)
        .collect();
    let mean_virtual_fraction = virtual_fraction.iter().sum::<f64>() / k as f64;
    let gini = gini(&virtual_fraction)?;
    Ok(CompositionReport {
        virtual_fraction,
        mean_virtual_fraction,
        gini,
    })
}

/// Gini coefficient `sum_ij |x_i - x_j| / (2 n sum x)`, via the sorted form
/// `sum_i (2i - n - 1) x_(i) / (n sum x)`. All-zero input gives 0.
pub fn gini(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("value list"));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::invalid(format!(
            "gini needs finite nonnegative values, got {bad}"
        )));
    }
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let total: f64 = xs.iter().sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    let n = xs.len() as f64;
    let weighted: f64 = xs
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i as f64 + 1.0) - n - 1.0) * x)
        .sum();
    Ok((weighted / (n * total)).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Node;
    use proptest::prelude::*;

    #[test]
    fn gini_fixtures() {
        assert_eq!(gini(&[0.3, 0.3, 0.3]).unwrap(), 0.0);
        assert_eq!(gini(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 0.75);
        assert!((gini(&[1.0, 2.0, 3.0]).unwrap() - 2.0 / 9.0).abs() < 1e-15);
        assert_eq!(gini(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(gini(&[]).is_err());
        assert!(gini(&[1.0, -0.5]).is_err());
        assert!(gini(&[f64::NAN]).is_err());
    }

    fn mixed_graph() -> EcosystemGraph {
        // group 0: v1 v2 p1 p2, group 1: p3 p4 p5
        let nodes = vec![
            Node::new("v1", NodeKind::Virtual),
            Node::new("v2", NodeKind::Virtual),
            Node::new("p1", NodeKind::Physical),
            Node::new("p2", NodeKind::Physical),
            Node::new("p3", NodeKind::Physical),
            Node::new("p4", NodeKind::Physical),
            Node::new("p5", NodeKind::Physical),
        ];
        EcosystemGraph::from_parts(nodes, [("v1", "p1"), ("p3", "p4")]).unwrap()
    }

    #[test]
    fn composition_fixture() {
        let g = mixed_graph();
        // node order: p1 p2 p3 p4 p5 v1 v2
        let p = Partition::new(vec![0, 0, 1, 1, 1, 0, 0]).unwrap();
        let c = composition(&g, &p).unwrap();
        assert_eq!(c.virtual_fraction, [0.5, 0.0]);
        assert_eq!(c.mean_virtual_fraction, 0.25);
        assert_eq!(c.gini, 0.5);
    }

    #[test]
    fn composition_uniform_and_all_physical() {
        let g = mixed_graph();
        let p = Partition::new(vec![0, 1, 0, 1, 1, 0, 1]).unwrap();
        let c = composition(&g, &p).unwrap();
        assert!((c.virtual_fraction[0] - 1.0 / 3.0).abs() < 1e-15);
        let phys = crate::graph::physical_projection(&g);
        let q = Partition::new(vec![0, 1, 0, 1, 0]).unwrap();
        let c = composition(&phys, &q).unwrap();
        assert_eq!(c.virtual_fraction, [0.0, 0.0]);
        assert_eq!(c.gini, 0.0);
    }

    proptest! {
        #[test]
        fn gini_scale_and_permutation_invariant(
            xs in proptest::collection::vec(0.0f64..10.0, 1..30),
            scale in 0.01f64..100.0,
        ) {
            let g0 = gini(&xs).unwrap();
            let scaled: Vec<f64> = xs.iter().map(|x| x * scale).collect();
            let mut rev = xs.clone();
            rev.reverse();
            prop_assert!((gini(&scaled).unwrap() - g0).abs() < 1e-12);
            prop_assert!((gini(&rev).unwrap() - g0).abs() < 1e-12);
            prop_assert!(g0 <= 1.0 - 1.0 / xs.len() as f64 + 1e-12);
        }
    }
}
