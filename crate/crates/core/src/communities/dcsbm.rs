//! Degree-corrected stochastic blockmodel fitted by Kernighan-Lin vertex
//! moves.
//!
//! The objective is the profile log-likelihood
//! `L = sum_rs m_rs ln(m_rs / (kappa_r kappa_s))` where `m_rs` counts edge
//! endpoints between groups (internal edges twice) and `kappa_r` is the
//! total degree of group `r`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{mixing_matrix, modularity, normalized_modularity, ModularityVariant, Partition};
use crate::error::{Error, Result};
use crate::graph::EcosystemGraph;
use crate::rng::stage_rng;

pub const DEFAULT_RESTARTS: usize = 20;

/// Sub-stream name for the search RNG.
const STAGE: &str = "dcsbm";

const MAX_PASSES: usize = 10_000;

#[inline]
fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Evaluates the degree-corrected log-likelihood of `p` on `g`.
pub fn dcsbm_objective(g: &EcosystemGraph, p: &Partition) -> Result<f64> {
    p.check_covers(g)?;
    if g.edge_count() == 0 {
        return Err(Error::degenerate(
            "objective undefined on an edgeless graph",
        ));
    }
    let k = p.group_count();
    let mut m = vec![0.0f64; k * k];
    let mut kappa = vec![0.0f64; k];
    for (u, v) in g.edges() {
        let (r, s) = (p.group_of(u), p.group_of(v));
        m[r * k + s] += 1.0;
        m[s * k + r] += 1.0;
        kappa[r] += 1.0;
        kappa[s] += 1.0;
    }
    let mut total = 0.0;
    for r in 0..k {
        for s in 0..k {
            let mrs = m[r * k + s];
            if mrs > 0.0 {
                total += mrs * (mrs / (kappa[r] * kappa[s])).ln();
            }
        }
    }
    Ok(total)
}

/// Mutable search state with the counts needed for O(groups) move deltas.
struct BlockState<'g> {
    g: &'g EcosystemGraph,
    k: usize,
    assign: Vec<usize>,
    sizes: Vec<usize>,
    kappa: Vec<f64>,
    /// k x k endpoint counts.
    m: Vec<f64>,
    /// n x k: number of neighbours of node i in group t.
    links: Vec<f64>,
    /// `xlogx` of every entry of `m` and `kappa`, kept in sync by `apply`.
    xm: Vec<f64>,
    xk: Vec<f64>,
}

impl<'g> BlockState<'g> {
    fn new(g: &'g EcosystemGraph, k: usize, assign: Vec<usize>) -> Self {
        let n = g.node_count();
        let mut st = BlockState {
            g,
            k,
            sizes: vec![0; k],
            kappa: vec![0.0; k],
            m: vec![0.0; k * k],
            links: vec![0.0; n * k],
            xm: vec![0.0; k * k],
            xk: vec![0.0; k],
            assign,
        };
        for i in 0..n {
            let r = st.assign[i];
            st.sizes[r] += 1;
            st.kappa[r] += g.degree(i) as f64;
            for &j in g.neighbors(i) {
                st.links[i * k + st.assign[j]] += 1.0;
                st.m[r * k + st.assign[j]] += 1.0;
            }
        }
        st.xm = st.m.iter().map(|&x| xlogx(x)).collect();
        st.xk = st.kappa.iter().map(|&x| xlogx(x)).collect();
        st
    }

    #[cfg(test)]
    fn objective(&self) -> f64 {
        self.m.iter().map(|&x| xlogx(x)).sum::<f64>()
            - 2.0 * self.kappa.iter().map(|&x| xlogx(x)).sum::<f64>()
    }

    /// Change in the objective if node `i` moves to group `s`.
    fn delta(&self, i: usize, s: usize) -> f64 {
        let k = self.k;
        let r = self.assign[i];
        debug_assert_ne!(r, s);
        let l = &self.links[i * k..(i + 1) * k];
        let m = &self.m;
        let xm = &self.xm;
        let ki = self.g.degree(i) as f64;
        let mut d = 0.0;
        for t in 0..k {
            let lt = l[t];
            if lt == 0.0 || t == r || t == s {
                continue;
            }
            let (mrt, mst) = (m[r * k + t], m[s * k + t]);
            d += 2.0 * (xlogx(mrt - lt) - xm[r * k + t] + xlogx(mst + lt) - xm[s * k + t]);
        }
        let (lr, ls) = (l[r], l[s]);
        if lr != 0.0 {
            d += xlogx(m[r * k + r] - 2.0 * lr) - xm[r * k + r];
        }
        if ls != 0.0 {
            d += xlogx(m[s * k + s] + 2.0 * ls) - xm[s * k + s];
        }
        if lr != ls {
            d += 2.0 * (xlogx(m[r * k + s] + lr - ls) - xm[r * k + s]);
        }
        let (kr, ks) = (self.kappa[r], self.kappa[s]);
        d - 2.0 * (xlogx(kr - ki) - self.xk[r] + xlogx(ks + ki) - self.xk[s])
    }

    /// Best target group for node `i` as `(delta, group)`, first group on
    /// ties. Equivalent to maximizing [`Self::delta`] but shares the
    /// removal terms across targets and visits only linked groups.
    fn best_move(&self, i: usize, linked: &mut Vec<usize>) -> Option<(f64, usize)> {
        let k = self.k;
        let r = self.assign[i];
        let l = &self.links[i * k..(i + 1) * k];
        let (m, xm) = (&self.m, &self.xm);
        let ki = self.g.degree(i) as f64;
        linked.clear();
        linked.extend((0..k).filter(|&t| t != r && l[t] != 0.0));
        let lr = l[r];
        let mut removal = -2.0 * (xlogx(self.kappa[r] - ki) - self.xk[r]);
        if lr != 0.0 {
            removal += xlogx(m[r * k + r] - 2.0 * lr) - xm[r * k + r];
        }
        for &t in linked.iter() {
            removal += 2.0 * (xlogx(m[r * k + t] - l[t]) - xm[r * k + t]);
        }
        let mut best: Option<(f64, usize)> = None;
        for s in (0..k).filter(|&s| s != r) {
            let ls = l[s];
            let mut d = removal - 2.0 * (xlogx(self.kappa[s] + ki) - self.xk[s]);
            for &t in linked.iter() {
                if t != s {
                    d += 2.0 * (xlogx(m[s * k + t] + l[t]) - xm[s * k + t]);
                }
            }
            if ls != 0.0 {
                d -= 2.0 * (xlogx(m[r * k + s] - ls) - xm[r * k + s]);
                d += xlogx(m[s * k + s] + 2.0 * ls) - xm[s * k + s];
            }
            if lr != ls {
                d += 2.0 * (xlogx(m[r * k + s] + lr - ls) - xm[r * k + s]);
            }
            if best.is_none_or(|(bd, _)| d > bd) {
                best = Some((d, s));
            }
        }
        best
    }

    fn apply(&mut self, i: usize, s: usize) {
        let k = self.k;
        let r = self.assign[i];
        if r == s {
            return;
        }
        for t in 0..k {
            let lt = self.links[i * k + t];
            if lt == 0.0 {
                continue;
            }
            // edges i-t move from block (r,t) to block (s,t)
            self.m[r * k + t] -= lt;
            self.m[t * k + r] -= lt;
            self.m[s * k + t] += lt;
            self.m[t * k + s] += lt;
        }
        let ki = self.g.degree(i) as f64;
        self.kappa[r] -= ki;
        self.kappa[s] += ki;
        self.sizes[r] -= 1;
        self.sizes[s] += 1;
        self.assign[i] = s;
        for t in 0..k {
            for (a, b) in [(r, t), (t, r), (s, t), (t, s)] {
                self.xm[a * k + b] = xlogx(self.m[a * k + b]);
            }
        }
        self.xk[r] = xlogx(self.kappa[r]);
        self.xk[s] = xlogx(self.kappa[s]);
        for &j in self.g.neighbors(i) {
            self.links[j * k + r] -= 1.0;
            self.links[j * k + s] += 1.0;
        }
    }

    /// Fills empty groups, each with the node whose move there costs least.
    fn repair_empty(&mut self) {
        for target in 0..self.k {
            if self.sizes[target] > 0 {
                continue;
            }
            let mut best: Option<(f64, usize)> = None;
            for i in 0..self.assign.len() {
                if self.sizes[self.assign[i]] < 2 {
                    continue;
                }
                let d = self.delta(i, target);
                if best.is_none_or(|(bd, _)| d > bd) {
                    best = Some((d, i));
                }
            }
            if let Some((_, i)) = best {
                self.apply(i, target);
            }
        }
    }

    /// One Kernighan-Lin pass; returns the objective gain that was kept.
    fn pass(&mut self, tol: f64) -> f64 {
        let n = self.assign.len();
        let mut moved = vec![false; n];
        let mut history: Vec<(usize, usize)> = Vec::with_capacity(n);
        let mut linked = Vec::with_capacity(self.k);
        let (mut cum, mut best, mut best_len) = (0.0f64, 0.0f64, 0usize);
        loop {
            let mut cand: Option<(f64, usize, usize)> = None;
            for (i, &done) in moved.iter().enumerate() {
                if done || self.sizes[self.assign[i]] < 2 {
                    continue;
                }
                if let Some((d, s)) = self.best_move(i, &mut linked) {
                    if cand.is_none_or(|(bd, _, _)| d > bd) {
                        cand = Some((d, i, s));
                    }
                }
            }
            let Some((d, i, s)) = cand else { break };
            history.push((i, self.assign[i]));
            self.apply(i, s);
            moved[i] = true;
            cum += d;
            if cum > best + tol {
                best = cum;
                best_len = history.len();
            }
        }
        for &(i, old) in history[best_len..].iter().rev() {
            self.apply(i, old);
        }
        best
    }
}

fn search_once(g: &EcosystemGraph, k: usize, seed: u64, restart: usize) -> Partition {
    let mut rng = stage_rng(seed, STAGE, restart as u64);
    let n = g.node_count();
    let assign: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    let mut st = BlockState::new(g, k, assign);
    st.repair_empty();
    let tol = 1e-10 * (1.0 + 2.0 * g.edge_count() as f64);
    for _ in 0..MAX_PASSES {
        if st.pass(tol) <= tol {
            break;
        }
    }
    Partition::new(st.assign).expect("search keeps every group nonempty")
}

/// Fits a `groups`-block degree-corrected blockmodel.
///
/// Each restart starts from a uniformly random assignment and runs
/// Kernighan-Lin passes (every node moved once to its best group, even
/// downhill; the best state of the pass is kept) until a pass no longer
/// improves. The best restart wins, lowest restart index on ties.
/// Deterministic for fixed `(seed, restarts)` regardless of thread count.
pub fn fit_dcsbm(
    g: &EcosystemGraph,
    groups: usize,
    seed: u64,
    restarts: usize,
) -> Result<Partition> {
    if groups < 2 {
        return Err(Error::invalid("group count must be at least 2"));
    }
    if groups > g.node_count() {
        return Err(Error::invalid(format!(
            "group count {groups} exceeds node count {}",
            g.node_count()
        )));
    }
    if g.edge_count() == 0 {
        return Err(Error::degenerate(
            "cannot fit communities on an edgeless graph",
        ));
    }
    if restarts == 0 {
        return Err(Error::invalid("restarts must be positive"));
    }
    let results: Vec<(f64, Partition)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let p = search_once(g, groups, seed, r);
            let obj = dcsbm_objective(g, &p).expect("validated above");
            (obj, p)
        })
        .collect();
    let mut best = 0;
    for (i, (obj, _)) in results.iter().enumerate() {
        if *obj > results[best].0 {
            best = i;
        }
    }
    Ok(results
        .into_iter()
        .nth(best)
        .map(|(_, p)| p)
        .expect("restarts > 0"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub groups: usize,
    pub objective: f64,
    pub q: f64,
    pub q_norm: f64,
}

/// Fits every group count in `lo..=hi` and reports objective and
/// standard modularity, raw and normalized, for each.
pub fn sweep_group_count(
    g: &EcosystemGraph,
    lo: usize,
    hi: usize,
    seed: u64,
    restarts: usize,
) -> Result<Vec<(SweepRow, Partition)>> {
    if lo < 2 || hi < lo || hi > g.node_count() {
        return Err(Error::invalid(format!(
            "group range {lo}..={hi} must lie within 2..={}",
            g.node_count()
        )));
    }
    (lo..=hi)
        .map(|m| {
            let p = fit_dcsbm(g, m, seed, restarts)?;
            let objective = dcsbm_objective(g, &p)?;
            let q = modularity(&mixing_matrix(g, &p)?, ModularityVariant::Standard);
            let q_norm = normalized_modularity(q, p.group_count())?;
            Ok((
                SweepRow {
                    groups: m,
                    objective,
                    q,
                    q_norm,
                },
                p,
            ))
        })
        .collect()
}
