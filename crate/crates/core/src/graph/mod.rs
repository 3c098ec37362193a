//! Two-kind ecosystem graph: the network model everything else analyses.
//!
//! Nodes are kept sorted by id, so node indices follow lexicographic id
//! order and every derived quantity is independent of input row order.

mod io;

pub use io::{load_network, read_network, write_edges, write_nodes};

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which side of the ecosystem a node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    /// A company or organisation.
    Physical,
    /// A website or other digital representation.
    Virtual,
}

impl NodeKind {
    pub const ALL: [NodeKind; 2] = [NodeKind::Physical, NodeKind::Virtual];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Physical => "physical",
            NodeKind::Virtual => "virtual",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("physical") {
            Ok(NodeKind::Physical)
        } else if s.eq_ignore_ascii_case("virtual") {
            Ok(NodeKind::Virtual)
        } else {
            Err(format!(
                "unknown node kind {s:?} (expected physical or virtual)"
            ))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    pub label: Option<String>,
}

impl Node {
    pub fn new(id: impl Into<String>, kind: NodeKind) -> Self {
        Node {
            id: id.into(),
            kind,
            label: None,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

/// Ingestion switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOptions {
    /// Accept `(a,b)` and `(b,a)` as one undirected edge. When off, a
    /// reversed pair is rejected as directed input.
    pub symmetrize_directed_input: bool,
    /// Silently drop `(a,a)` rows. When off they are an error.
    pub drop_self_loops: bool,
    pub restrict_to_largest_component: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            symmetrize_directed_input: true,
            drop_self_loops: true,
            restrict_to_largest_component: false,
        }
    }
}

/// Undirected simple graph whose nodes carry a [`NodeKind`].
///
/// Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EcosystemGraph {
    nodes: Vec<Node>,
    index: HashMap<String, usize>,
    adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl EcosystemGraph {
    /// Builds a graph from nodes and undirected edges given by id, using
    /// default [`IngestOptions`].
    pub fn from_parts<I, S>(nodes: Vec<Node>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        let mut b = GraphBuilder::new(IngestOptions::default());
        for n in nodes {
            b.add_node(n, 0)?;
        }
        for (u, v) in edges {
            b.add_edge(u.as_ref(), v.as_ref(), 0)?;
        }
        b.build()
    }

    pub fn empty() -> Self {
        EcosystemGraph {
            nodes: Vec::new(),
            index: HashMap::new(),
            adj: Vec::new(),
            edge_count: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn kind(&self, i: usize) -> NodeKind {
        self.nodes[i].kind
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Sorted neighbour indices.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    /// Edges as index pairs `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    pub fn count_kind(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    /// Subgraph induced by the nodes for which `keep` returns true.
    pub fn induced_subgraph(&self, keep: impl Fn(usize) -> bool) -> EcosystemGraph {
        let mut remap = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if keep(i) {
                remap[i] = nodes.len();
                nodes.push(n.clone());
            }
        }
        let mut adj = vec![Vec::new(); nodes.len()];
        let mut edge_count = 0;
        for (u, v) in self.edges() {
            let (a, b) = (remap[u], remap[v]);
            if a != usize::MAX && b != usize::MAX {
                adj[a].push(b);
                adj[b].push(a);
                edge_count += 1;
            }
        }
        // remap is monotone, so adjacency lists stay sorted
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();
        EcosystemGraph {
            nodes,
            index,
            adj,
            edge_count,
        }
    }

    /// Connected components as sorted index lists, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.nodes.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            queue.push_back(s);
            let mut comp = Vec::new();
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for &v in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// Induced subgraph on the physical nodes.
pub fn physical_projection(g: &EcosystemGraph) -> EcosystemGraph {
    g.induced_subgraph(|i| g.kind(i) == NodeKind::Physical)
}

/// Degrees of the nodes passing `kind_filter`, in node-id order. Edges to
/// nodes of any kind are counted.
pub fn degree_sequence(g: &EcosystemGraph, kind_filter: Option<NodeKind>) -> Vec<usize> {
    (0..g.node_count())
        .filter(|&i| kind_filter.is_none_or(|k| g.kind(i) == k))
        .map(|i| g.degree(i))
        .collect()
}

/// Largest connected component. Ties go to the component holding the
/// lexicographically smallest id.
pub fn largest_component(g: &EcosystemGraph) -> Result<EcosystemGraph> {
    if g.is_empty() {
        return Err(Error::Empty("graph"));
    }
    // components() is ordered by smallest member, so the first maximum wins ties
    let comps = g.components();
    let best = comps
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.len().cmp(&b.len()).then(ib.cmp(ia)))
        .map(|(i, _)| i)
        .expect("nonempty graph has a component");
    let keep: BTreeSet<usize> = comps[best].iter().copied().collect();
    Ok(g.induced_subgraph(|i| keep.contains(&i)))
}

/// Incremental graph construction with validation.
#[derive(Debug)]
pub struct GraphBuilder {
    options: IngestOptions,
    nodes: Vec<Node>,
    ids: HashMap<String, usize>,
    edges: HashMap<(String, String), (String, String)>,
}

impl GraphBuilder {
    pub fn new(options: IngestOptions) -> Self {
        GraphBuilder {
            options,
            nodes: Vec::new(),
            ids: HashMap::new(),
            edges: HashMap::new(),
        }
    }

    /// `line` is only used in error messages.
    pub fn add_node(&mut self, node: Node, line: u64) -> Result<()> {
        if node.id.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty node id".into(),
            });
        }
        if self.ids.contains_key(&node.id) {
            return Err(Error::Parse {
                line,
                message: format!("duplicate node id {:?}", node.id),
            });
        }
        self.ids.insert(node.id.clone(), self.nodes.len());
        self.nodes.push(node);
        Ok(())
    }

    pub fn add_edge(&mut self, source: &str, target: &str, line: u64) -> Result<()> {
        let mut missing: Vec<String> = [source, target]
            .into_iter()
            .filter(|id| !self.ids.contains_key(*id))
            .map(str::to_owned)
            .collect();
        missing.dedup();
        if !missing.is_empty() {
            return Err(Error::UnknownNode { line, ids: missing });
        }
        if source == target {
            if self.options.drop_self_loops {
                return Ok(());
            }
            return Err(Error::Parse {
                line,
                message: format!("self-loop on {source:?}"),
            });
        }
        let key = if source < target {
            (source.to_owned(), target.to_owned())
        } else {
            (target.to_owned(), source.to_owned())
        };
        let as_given = (source.to_owned(), target.to_owned());
        match self.edges.get(&key) {
            Some(first) if !self.options.symmetrize_directed_input && *first != as_given => {
                Err(Error::Parse {
                    line,
                    message: format!(
                        "reverse edge ({source},{target}) in directed input; enable symmetrization"
                    ),
                })
            }
            Some(_) => Ok(()),
            None => {
                self.edges.insert(key, as_given);
                Ok(())
            }
        }
    }

    pub fn build(self) -> Result<EcosystemGraph> {
        let mut nodes = self.nodes;
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        let index: HashMap<String, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();
        let mut adj = vec![Vec::new(); nodes.len()];
        for (u, v) in self.edges.keys() {
            let (a, b) = (index[u], index[v]);
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let g = EcosystemGraph {
            nodes,
            index,
            adj,
            edge_count: self.edges.len(),
        };
        if self.options.restrict_to_largest_component && !g.is_empty() {
            largest_component(&g)
        } else {
            Ok(g)
        }
    }
}
