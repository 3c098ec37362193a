//! Seeded synthetic ecosystems.
//!
//! The physical layer grows by preferential attachment; virtual twins copy
//! part of it. A planted-partition generator is also provided for testing
//! community recovery.

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EcosystemGraph, Node, NodeKind};
use crate::rng::stage_rng;

/// Parameters of [`generate_coupled`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub n_physical: usize,
    /// Edges added by each new physical node.
    pub attach_m: usize,
    /// Probability that a physical node owns a virtual twin.
    pub p_website: f64,
    /// Probability that a physical edge is copied between the owners' twins.
    pub p_mirror: f64,
    /// Probability, per physical edge and direction, that an endpoint also
    /// links to the other endpoint's twin.
    pub p_cross: f64,
    /// Additional random virtual-virtual edges per virtual node.
    pub extra_vv: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_physical: 200,
            attach_m: 2,
            p_website: 0.7,
            p_mirror: 0.5,
            p_cross: 0.2,
            extra_vv: 0.2,
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn with_seed(seed: u64) -> Self {
        SynthParams {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.attach_m < 1 || self.attach_m >= self.n_physical {
            return Err(Error::invalid(format!(
                "need 1 <= attach_m < n_physical, got attach_m={} n_physical={}",
                self.attach_m, self.n_physical
            )));
        }
        for (name, p) in [
            ("p_website", self.p_website),
            ("p_mirror", self.p_mirror),
            ("p_cross", self.p_cross),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        if !(self.extra_vv >= 0.0 && self.extra_vv.is_finite()) {
            return Err(Error::invalid(format!(
                "extra_vv must be >= 0, got {}",
                self.extra_vv
            )));
        }
        Ok(())
    }
}

fn id_width(n: usize) -> usize {
    n.saturating_sub(1).to_string().len().max(4)
}

/// Builds a coupled physical/virtual network.
///
/// Node `p{i}` is the i-th physical node and `v{i}` its twin, zero-padded
/// so id order matches creation order.
pub fn generate_coupled(params: &SynthParams) -> Result<EcosystemGraph> {
    params.validate()?;
    let n = params.n_physical;
    let m = params.attach_m;
    let mut rng = stage_rng(params.seed, "synthgen", 0);

    // each node appears once plus once per incident edge: draws are
    // proportional to degree + 1
    let mut urn: Vec<usize> = (0..m).collect();
    let mut phys_edges: Vec<(usize, usize)> = Vec::with_capacity((n - m) * m);
    let mut targets: Vec<usize> = Vec::with_capacity(m);
    for i in m..n {
        targets.clear();
        while targets.len() < m {
            let t = urn[rng.random_range(0..urn.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        targets.sort_unstable();
        urn.push(i);
        for &t in &targets {
            phys_edges.push((i, t));
            urn.extend([i, t]);
        }
    }

    let has_twin: Vec<bool> = (0..n).map(|_| rng.random_bool(params.p_website)).collect();

    let w = id_width(n);
    let pid = |i: usize| format!("p{i:0w$}");
    let vid = |i: usize| format!("v{i:0w$}");

    let mut edges: Vec<(String, String)> =
        phys_edges.iter().map(|&(a, b)| (pid(a), pid(b))).collect();
    for i in (0..n).filter(|&i| has_twin[i]) {
        edges.push((pid(i), vid(i)));
    }

    let twins: Vec<usize> = (0..n).filter(|&i| has_twin[i]).collect();
    let slot: Vec<Option<usize>> = {
        let mut s = vec![None; n];
        for (k, &i) in twins.iter().enumerate() {
            s[i] = Some(k);
        }
        s
    };
    let nv = twins.len();
    // virtual-virtual adjacency over twin slots, upper triangle
    let mut vv = vec![false; nv * nv];
    let link_vv = |a: usize, b: usize, vv: &mut [bool]| {
        let (x, y) = if a < b { (a, b) } else { (b, a) };
        vv[x * nv + y] = true;
    };

    for &(a, b) in &phys_edges {
        if let (Some(sa), Some(sb)) = (slot[a], slot[b]) {
            if rng.random_bool(params.p_mirror) {
                link_vv(sa, sb, &mut vv);
                edges.push((vid(a), vid(b)));
            }
        }
    }

    for &(a, b) in &phys_edges {
        if has_twin[b] && rng.random_bool(params.p_cross) {
            edges.push((pid(a), vid(b)));
        }
        if has_twin[a] && rng.random_bool(params.p_cross) {
            edges.push((pid(b), vid(a)));
        }
    }

    let free: Vec<(usize, usize)> = (0..nv)
        .flat_map(|x| (x + 1..nv).map(move |y| (x, y)))
        .filter(|&(x, y)| !vv[x * nv + y])
        .collect();
    let want = ((params.extra_vv * nv as f64).round() as usize).min(free.len());
    let mut picked = index::sample(&mut rng, free.len(), want).into_vec();
    picked.sort_unstable();
    for k in picked {
        let (x, y) = free[k];
        edges.push((vid(twins[x]), vid(twins[y])));
    }

    let mut nodes: Vec<Node> = (0..n)
        .map(|i| Node::new(pid(i), NodeKind::Physical))
        .collect();
    nodes.extend(twins.iter().map(|&i| Node::new(vid(i), NodeKind::Virtual)));
    EcosystemGraph::from_parts(nodes, edges)
}

/// Parameters of [`generate_planted`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedParams {
    pub n: usize,
    pub blocks: usize,
    /// Expected mean degree.
    pub mean_degree: f64,
    /// Expected fraction of edge endpoints leaving their own block.
    pub mixing: f64,
    /// Node propensities are drawn uniformly from `[1, spread]`.
    pub spread: f64,
    pub seed: u64,
}

impl Default for PlantedParams {
    fn default() -> Self {
        PlantedParams {
            n: 64,
            blocks: 2,
            mean_degree: 16.0,
            mixing: 0.05,
            spread: 4.0,
            seed: 0,
        }
    }
}

/// Degree-corrected planted partition: node `i` belongs to block
/// `i % blocks`, and pair `(i, j)` is linked with probability
/// `min(1, theta_i theta_j w_rs)`. Returns the graph and the planted labels
/// in node order.
pub fn generate_planted(params: &PlantedParams) -> Result<(EcosystemGraph, Vec<usize>)> {
    let &PlantedParams {
        n,
        blocks,
        mean_degree,
        mixing,
        spread,
        seed,
    } = params;
    if blocks < 1 || n < 2 * blocks {
        return Err(Error::invalid(format!(
            "need n >= 2 * blocks, got n={n} blocks={blocks}"
        )));
    }
    let valid = (0.0..=1.0).contains(&mixing) && mean_degree > 0.0 && spread >= 1.0;
    if !valid {
        return Err(Error::invalid(
            "mixing in [0,1], mean_degree > 0, spread >= 1 required",
        ));
    }
    let mut rng: ChaCha8Rng = stage_rng(seed, "planted", 0);
    let label: Vec<usize> = (0..n).map(|i| i % blocks).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..=spread)).collect();
    // normalize propensities to mean 1 within each block
    let mut sums = vec![0.0; blocks];
    let mut sizes = vec![0usize; blocks];
    for i in 0..n {
        sums[label[i]] += raw[i];
        sizes[label[i]] += 1;
    }
    let theta: Vec<f64> = (0..n)
        .map(|i| raw[i] * sizes[label[i]] as f64 / sums[label[i]])
        .collect();
    let inside = n as f64 / blocks as f64;
    let outside = n as f64 - inside;
    let w_in = mean_degree * (1.0 - mixing) / inside;
    let w_out = if outside > 0.0 {
        mean_degree * mixing / outside
    } else {
        0.0
    };

    let w = id_width(n);
    let id = |i: usize| format!("n{i:0w$}");
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let rate = if label[i] == label[j] { w_in } else { w_out };
            if rng.random_bool((theta[i] * theta[j] * rate).min(1.0)) {
                edges.push((id(i), id(j)));
            }
        }
    }
    let nodes = (0..n)
        .map(|i| Node::new(id(i), NodeKind::Physical))
        .collect();
    Ok((EcosystemGraph::from_parts(nodes, edges)?, label))
}
