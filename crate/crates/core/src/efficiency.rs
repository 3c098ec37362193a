//! Cost-weighted global and local efficiency.
//!
//! Global efficiency is the unnormalized harmonic form
//! `E = 1/(N(N-1)) * sum_{i != j} 1/d_ij` with `1/inf = 0`. Local efficiency
//! of a node is the global efficiency of the subgraph induced by its
//! neighbours, 0 when it has fewer than two.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{physical_projection, EcosystemGraph, NodeKind};

/// Traversal cost per edge by endpoint kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostScheme {
    pub vv: f64,
    pub vp: f64,
    pub pp: f64,
}

impl Default for CostScheme {
    fn default() -> Self {
        CostScheme {
            vv: 1.0,
            vp: 2.0,
            pp: 3.0,
        }
    }
}

impl CostScheme {
    pub fn new(vv: f64, vp: f64, pp: f64) -> Result<Self> {
        for (name, c) in [("vv", vv), ("vp", vp), ("pp", pp)] {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::invalid(format!(
                    "cost {name} must be positive, got {c}"
                )));
            }
        }
        Ok(CostScheme { vv, vp, pp })
    }

    pub fn cost(&self, a: NodeKind, b: NodeKind) -> f64 {
        match (a, b) {
            (NodeKind::Virtual, NodeKind::Virtual) => self.vv,
            (NodeKind::Physical, NodeKind::Physical) => self.pp,
            _ => self.vp,
        }
    }
}

impl FromStr for CostScheme {
    type Err = Error;

    /// Parses `vv,vp,pp`, e.g. `1,2,3`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::invalid(format!("cost scheme {s:?}: {e}")))?;
        match parts[..] {
            [vv, vp, pp] => CostScheme::new(vv, vp, pp),
            _ => Err(Error::invalid(format!(
                "cost scheme {s:?} needs three values vv,vp,pp"
            ))),
        }
    }
}

impl fmt::Display for CostScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.vv, self.vp, self.pp)
    }
}

/// Undirected graph with a positive cost on every edge.
#[derive(Debug, Clone, PartialEq)]
pub struct CostedGraph {
    ids: Vec<String>,
    kinds: Vec<Option<NodeKind>>,
    adj: Vec<Vec<(usize, f64)>>,
}

impl CostedGraph {
    /// Graph over `ids` (in index order) with `(u, v, cost)` edges.
    pub fn new(ids: Vec<String>, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let n = ids.len();
        let mut adj = vec![Vec::new(); n];
        for &(u, v, c) in edges {
            if u >= n || v >= n || u == v {
                return Err(Error::invalid(format!("bad edge ({u},{v}) for {n} nodes")));
            }
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::invalid(format!(
                    "edge cost must be positive, got {c}"
                )));
            }
            adj[u].push((v, c));
            adj[v].push((u, c));
        }
        for list in &mut adj {
            list.sort_by_key(|e| e.0);
        }
        Ok(CostedGraph {
            kinds: vec![None; n],
            ids,
            adj,
        })
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn kind(&self, i: usize) -> Option<NodeKind> {
        self.kinds[i]
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    fn index_of(&self, id: &str) -> Result<usize> {
        // ids are sorted when built from an EcosystemGraph, but not necessarily via new()
        self.ids
            .iter()
            .position(|x| x == id)
            .ok_or_else(|| Error::NoSuchNode(id.to_owned()))
    }

    /// Dijkstra from node index `source`; unreachable nodes get `inf`.
    pub fn distances_from(&self, source: usize) -> Vec<f64> {
        dijkstra(&self.adj, source)
    }

    /// Distances from `source` to every node, in index order.
    pub fn shortest_costs_from(&self, source: &str) -> Result<Vec<f64>> {
        Ok(self.distances_from(self.index_of(source)?))
    }

    pub fn global_efficiency(&self) -> Result<f64> {
        if self.node_count() < 2 {
            return Err(Error::invalid("global efficiency needs at least 2 nodes"));
        }
        Ok(harmonic_efficiency(&self.adj))
    }

    pub fn local_efficiency(&self, node: &str) -> Result<f64> {
        Ok(self.local_efficiency_at(self.index_of(node)?))
    }

    pub fn local_efficiency_at(&self, i: usize) -> f64 {
        let nbrs = &self.adj[i];
        if nbrs.len() < 2 {
            return 0.0;
        }
        // neighbour lists are sorted, so a binary search maps global to local indices
        let members: Vec<usize> = nbrs.iter().map(|&(v, _)| v).collect();
        let sub: Vec<Vec<(usize, f64)>> = members
            .iter()
            .map(|&u| {
                self.adj[u]
                    .iter()
                    .filter_map(|&(w, c)| members.binary_search(&w).ok().map(|j| (j, c)))
                    .collect()
            })
            .collect();
        harmonic_efficiency(&sub)
    }

    /// Local efficiency of every node, in index order.
    pub fn local_efficiencies(&self) -> Vec<f64> {
        (0..self.node_count())
            .into_par_iter()
            .map(|i| self.local_efficiency_at(i))
            .collect()
    }
}

#[derive(Copy, Clone, PartialEq)]
struct State {
    dist: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(State {
        dist: 0.0,
        node: source,
    });
    while let Some(State { dist: d, node: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, c) in &adj[u] {
            let nd = d + c;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(State { dist: nd, node: v });
            }
        }
    }
    dist
}

/// Sources run in parallel; their row sums are added in index order so the
/// result does not depend on scheduling.
fn harmonic_efficiency(adj: &[Vec<(usize, f64)>]) -> f64 {
    let n = adj.len();
    if n < 2 {
        return 0.0;
    }
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|s| {
            dijkstra(adj, s)
                .iter()
                .enumerate()
                .filter(|&(t, d)| t != s && d.is_finite())
                .map(|(_, d)| 1.0 / d)
                .sum()
        })
        .collect();
    rows.iter().sum::<f64>() / (n as f64 * (n - 1) as f64)
}

/// Attaches scheme costs to every edge of `g`.
pub fn assign_costs(g: &EcosystemGraph, scheme: &CostScheme) -> CostedGraph {
    let mut adj = vec![Vec::new(); g.node_count()];
    for (u, v) in g.edges() {
        let c = scheme.cost(g.kind(u), g.kind(v));
        adj[u].push((v, c));
        adj[v].push((u, c));
    }
    for list in &mut adj {
        list.sort_by_key(|e| e.0);
    }
    CostedGraph {
        ids: g.nodes().iter().map(|n| n.id.clone()).collect(),
        kinds: g.nodes().iter().map(|n| Some(n.kind)).collect(),
        adj,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    Ecosystem,
    PhysicalOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyReport {
    pub scope: Scope,
    pub scheme: CostScheme,
    pub e_glob: f64,
    pub e_loc: BTreeMap<String, f64>,
}

pub fn efficiency_report(g: &CostedGraph, scheme: CostScheme, scope: Scope) -> EfficiencyReport {
    let e_glob = harmonic_efficiency(&g.adj);
    let e_loc = g.ids.iter().cloned().zip(g.local_efficiencies()).collect();
    EfficiencyReport {
        scope,
        scheme,
        e_glob,
        e_loc,
    }
}

/// One physical node's local efficiency in both scopes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElocPair {
    pub node_id: String,
    pub physical: f64,
    pub ecosystem: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub physical: EfficiencyReport,
    pub ecosystem: EfficiencyReport,
    /// `(E_eco - E_phys) / E_phys`; `None` when the physical value is 0.
    pub relative_difference: Option<f64>,
    /// Relative difference in whole percent, for display.
    pub difference_percent: Option<i64>,
    pub pairs: Vec<ElocPair>,
}

pub fn relative_difference(physical: f64, ecosystem: f64) -> Option<f64> {
    (physical != 0.0).then(|| (ecosystem - physical) / physical)
}

pub fn display_percent(relative: f64) -> i64 {
    (relative * 100.0).round() as i64
}

/// Efficiency of the whole ecosystem against its physical projection, the
/// projection being costed with the physical-physical rate throughout.
pub fn compare_components(g: &EcosystemGraph, scheme: CostScheme) -> Result<ComparisonReport> {
    let n_phys = g.count_kind(NodeKind::Physical);
    if n_phys < 2 {
        return Err(Error::degenerate(format!(
            "comparison needs at least 2 physical nodes, found {n_phys}"
        )));
    }
    let eco = efficiency_report(&assign_costs(g, &scheme), scheme, Scope::Ecosystem);
    let proj = physical_projection(g);
    let phys = efficiency_report(&assign_costs(&proj, &scheme), scheme, Scope::PhysicalOnly);
    let pairs = phys
        .e_loc
        .iter()
        .map(|(id, &p)| ElocPair {
            node_id: id.clone(),
            physical: p,
            ecosystem: eco.e_loc[id],
        })
        .collect();
    let relative_difference = relative_difference(phys.e_glob, eco.e_glob);
    Ok(ComparisonReport {
        difference_percent: relative_difference.map(display_percent),
        relative_difference,
        physical: phys,
        ecosystem: eco,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Node;
    use proptest::prelude::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("n{i:02}")).collect()
    }

    fn unit(n: usize, edges: &[(usize, usize)]) -> CostedGraph {
        let es: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        CostedGraph::new(ids(n), &es).unwrap()
    }

    fn clique(n: usize) -> Vec<(usize, usize)> {
        (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect()
    }

    #[test]
    fn scheme_costs_by_kind() {
        let g = EcosystemGraph::from_parts(
            vec![
                Node::new("v1", NodeKind::Virtual),
                Node::new("v2", NodeKind::Virtual),
                Node::new("p1", NodeKind::Physical),
                Node::new("p2", NodeKind::Physical),
            ],
            [("v1", "v2"), ("v1", "p1"), ("p2", "v2"), ("p1", "p2")],
        )
        .unwrap();
        let c = assign_costs(&g, &CostScheme::default());
        let cost = |a: &str, b: &str| {
            let (i, j) = (c.index_of(a).unwrap(), c.index_of(b).unwrap());
            c.neighbors(i).iter().find(|e| e.0 == j).unwrap().1
        };
        assert_eq!(cost("v1", "v2"), 1.0);
        assert_eq!(cost("v1", "p1"), 2.0);
        assert_eq!(cost("p1", "v1"), 2.0);
        assert_eq!(cost("v2", "p2"), 2.0);
        assert_eq!(cost("p1", "p2"), 3.0);
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!(
            "1,2,3".parse::<CostScheme>().unwrap(),
            CostScheme::default()
        );
        assert_eq!(
            " 1.5, 2 ,4".parse::<CostScheme>().unwrap(),
            CostScheme::new(1.5, 2.0, 4.0).unwrap()
        );
        assert!("1,2".parse::<CostScheme>().is_err());
        assert!("1,0,3".parse::<CostScheme>().is_err());
        assert!("a,b,c".parse::<CostScheme>().is_err());
    }

    #[test]
    fn additive_path_distances() {
        let g = CostedGraph::new(ids(4), &[(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
        assert_eq!(
            g.shortest_costs_from("n00").unwrap(),
            [0.0, 1.0, 3.0, f64::INFINITY]
        );
        assert!(matches!(
            g.shortest_costs_from("zz"),
            Err(Error::NoSuchNode(_))
        ));
    }

    #[test]
    fn global_efficiency_fixtures() {
        assert_eq!(unit(5, &clique(5)).global_efficiency().unwrap(), 1.0);
        let path = unit(3, &[(0, 1), (1, 2)]).global_efficiency().unwrap();
        assert!((path - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(unit(2, &[]).global_efficiency().unwrap(), 0.0);
        assert!(unit(1, &[]).global_efficiency().is_err());
    }

    #[test]
    fn local_efficiency_fixtures() {
        let tri = unit(3, &clique(3));
        for id in tri.ids().to_vec() {
            assert_eq!(tri.local_efficiency(&id).unwrap(), 1.0);
        }
        let star = unit(4, &[(0, 1), (0, 2), (0, 3)]);
        assert_eq!(star.local_efficiency("n00").unwrap(), 0.0);
        assert_eq!(star.local_efficiency("n01").unwrap(), 0.0);
        assert!(star.local_efficiency("x").is_err());
    }

    #[test]
    fn clique_local_efficiency_is_inverse_cost() {
        let es: Vec<_> = clique(6).into_iter().map(|(u, v)| (u, v, 2.5)).collect();
        let g = CostedGraph::new(ids(6), &es).unwrap();
        for e in g.local_efficiencies() {
            assert!((e - 0.4).abs() < 1e-15);
        }
    }

    #[test]
    fn percent_rounding_examples() {
        assert_eq!(
            display_percent(relative_difference(0.118, 0.154).unwrap()),
            31
        );
        // Rounding the inputs first can move the displayed percent by one.
        assert_eq!(
            display_percent(relative_difference(0.144, 0.188).unwrap()),
            31
        );
        assert_eq!(
            display_percent(relative_difference(0.1444, 0.1876).unwrap()),
            30
        );
        assert_eq!(relative_difference(0.0, 0.3), None);
    }

    #[test]
    fn all_physical_comparison_is_identity() {
        let nodes = (0..5)
            .map(|i| Node::new(format!("p{i}"), NodeKind::Physical))
            .collect();
        let g = EcosystemGraph::from_parts(
            nodes,
            [("p0", "p1"), ("p1", "p2"), ("p2", "p0"), ("p3", "p2")],
        )
        .unwrap();
        let r = compare_components(&g, CostScheme::default()).unwrap();
        assert_eq!(r.physical.e_glob, r.ecosystem.e_glob);
        assert_eq!(r.relative_difference, Some(0.0));
        assert_eq!(r.difference_percent, Some(0));
        assert!(r.pairs.iter().all(|p| p.physical == p.ecosystem));
        assert_eq!(r.pairs.len(), 5);
    }

    #[test]
    fn comparison_needs_two_physical_nodes() {
        let g = EcosystemGraph::from_parts(
            vec![
                Node::new("p", NodeKind::Physical),
                Node::new("v", NodeKind::Virtual),
            ],
            [("p", "v")],
        )
        .unwrap();
        assert!(compare_components(&g, CostScheme::default()).is_err());
    }

    fn arb_costed() -> impl Strategy<Value = (usize, Vec<(usize, usize, f64)>)> {
        (2usize..20).prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec((0..n, 0..n, 0.5f64..4.0), 0..50),
            )
        })
    }

    fn build((n, edges): &(usize, Vec<(usize, usize, f64)>)) -> CostedGraph {
        let mut seen = std::collections::BTreeSet::new();
        let es: Vec<_> = edges
            .iter()
            .filter(|(u, v, _)| u != v && seen.insert((*u.min(v), *u.max(v))))
            .copied()
            .collect();
        CostedGraph::new(ids(*n), &es).unwrap()
    }

    proptest! {
        #[test]
        fn efficiency_bounds_and_scaling(case in arb_costed(), lambda in 0.1f64..10.0) {
            let g = build(&case);
            let e = g.global_efficiency().unwrap();
            let min_cost = g.adj.iter().flatten().map(|e| e.1).fold(f64::INFINITY, f64::min);
            prop_assert!(e >= 0.0);
            if min_cost.is_finite() {
                prop_assert!(e <= 1.0 / min_cost + 1e-12);
            }
            let mut scaled = g.clone();
            for list in &mut scaled.adj {
                for e in list.iter_mut() {
                    e.1 *= lambda;
                }
            }
            prop_assert!((scaled.global_efficiency().unwrap() - e / lambda).abs() < 1e-9);
        }

        #[test]
        fn adding_an_edge_never_lowers_efficiency(case in arb_costed(), extra in (0usize..20, 0usize..20, 0.5f64..4.0)) {
            let g = build(&case);
            let n = g.node_count();
            let (u, v) = (extra.0 % n, extra.1 % n);
            prop_assume!(u != v && !g.adj[u].iter().any(|e| e.0 == v));
            let mut edges = case.1.clone();
            edges.push((u, v, extra.2));
            let bigger = build(&(n, edges));
            prop_assert!(bigger.global_efficiency().unwrap() >= g.global_efficiency().unwrap() - 1e-12);
        }
    }
}
