//! Search Path Node Pair centrality on time-truncated citation snapshots.
//!
//! Arcs point citing -> cited. For a node v, `n_plus` counts the nodes
//! reachable from v along arcs (v included) and `n_minus` counts the nodes
//! that reach v (v included). The SPNP value is their product: the number of
//! ordered node pairs (u, w) with a path u -> ... -> v -> ... -> w.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusStore;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpnpError {
    #[error("citation graph contains a cycle through {0} nodes")]
    Cycle(usize),
    #[error("arc ({0}, {1}) references a node outside the graph")]
    NodeOutOfRange(u32, u32),
    #[error("SPNP product {0} x {1} overflows u64")]
    Overflow(u64, u64),
    #[error("brute-force oracle limited to {max} nodes, got {n}")]
    TooLarge { n: usize, max: usize },
}

/// Every patent and repaired citation, nodes ordered by (grant year, id).
///
/// Because nodes are sorted by grant year first, the snapshot for any cutoff
/// is a prefix of the node order, and because surviving arcs always point to
/// an earlier position, a snapshot's arcs are a prefix of the arc list.
#[derive(Debug, Clone, PartialEq)]
pub struct CitationNetwork {
    /// Position -> patent index in the store.
    order: Vec<u32>,
    years: Vec<i32>,
    /// (citing position, cited position), citing > cited, sorted.
    arcs: Vec<(u32, u32)>,
    /// Citing positions of arcs removed by the acyclicity repair, sorted.
    dropped: Vec<u32>,
}

impl CitationNetwork {
    pub fn new(store: &CorpusStore) -> Self {
        let mut order: Vec<u32> = (0..store.len() as u32).collect();
        // Store indices follow id order, so this is (grant year, id).
        order.sort_by_key(|&p| (store.patent(p).grant_year(), p));
        let mut position = vec![0u32; order.len()];
        for (pos, &p) in order.iter().enumerate() {
            position[p as usize] = pos as u32;
        }
        let years = order.iter().map(|&p| store.patent(p).grant_year()).collect();
        let mut arcs = Vec::with_capacity(store.citations().len());
        let mut dropped = Vec::new();
        for c in store.citations() {
            let (u, v) = (position[c.citing as usize], position[c.cited as usize]);
            if u > v {
                arcs.push((u, v));
            } else {
                // The citing patent precedes the cited one; an anomaly.
                dropped.push(v.max(u));
            }
        }
        arcs.sort_unstable();
        dropped.sort_unstable();
        CitationNetwork {
            order,
            years,
            arcs,
            dropped,
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn max_year(&self) -> Option<i32> {
        self.years.last().copied()
    }

    pub fn min_year(&self) -> Option<i32> {
        self.years.first().copied()
    }

    pub fn arcs(&self) -> &[(u32, u32)] {
        &self.arcs
    }

    pub fn dropped_arcs(&self) -> usize {
        self.dropped.len()
    }

    /// Snapshot holding patents granted up to and including `cutoff_year`.
    pub fn snapshot(&self, cutoff_year: i32) -> CitationDag {
        let n = self.years.partition_point(|&y| y <= cutoff_year);
        let m = self.arcs.partition_point(|&(u, _)| (u as usize) < n);
        let dropped = self.dropped.partition_point(|&u| (u as usize) < n);
        CitationDag {
            cutoff_year,
            patents: self.order[..n].to_vec(),
            years: self.years[..n].to_vec(),
            arcs: self.arcs[..m].to_vec(),
            dropped_arcs: dropped,
        }
    }
}

/// A citation snapshot. Node `i` is `patents[i]`; every arc `(u, v)` has
/// `u > v`, so ascending node order is a topological order from cited to
/// citing.
#[derive(Debug, Clone, PartialEq)]
pub struct CitationDag {
    pub cutoff_year: i32,
    pub patents: Vec<u32>,
    pub years: Vec<i32>,
    /// (citing, cited) local node pairs.
    pub arcs: Vec<(u32, u32)>,
    /// Arcs within the snapshot removed by the acyclicity repair.
    pub dropped_arcs: usize,
}

impl CitationDag {
    pub fn build(store: &CorpusStore, cutoff_year: i32) -> Self {
        CitationNetwork::new(store).snapshot(cutoff_year)
    }

    pub fn len(&self) -> usize {
        self.patents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patents.is_empty()
    }

    /// Cited nodes come before the nodes citing them.
    pub fn topo_order(&self) -> impl Iterator<Item = u32> {
        0..self.patents.len() as u32
    }

    /// Local node range of patents granted in `year`.
    pub fn cohort(&self, year: i32) -> std::ops::Range<usize> {
        self.years.partition_point(|&y| y < year)..self.years.partition_point(|&y| y <= year)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReachCounts {
    pub n_minus: Vec<u64>,
    pub n_plus: Vec<u64>,
}

impl ReachCounts {
    pub fn spnp(&self) -> Result<Vec<u64>, SpnpError> {
        self.n_minus
            .iter()
            .zip(&self.n_plus)
            .map(|(&a, &b)| a.checked_mul(b).ok_or(SpnpError::Overflow(a, b)))
            .collect()
    }
}

/// Lower-triangular bit matrix: row r keeps columns `0..=r`.
#[derive(Debug, Default)]
struct LowerRows {
    offsets: Vec<usize>,
    words: Vec<u64>,
}

impl LowerRows {
    fn reset(&mut self, n: usize) {
        self.offsets.clear();
        let mut at = 0;
        for r in 0..n {
            self.offsets.push(at);
            at += r / 64 + 1;
        }
        self.offsets.push(at);
        self.words.clear();
        self.words.resize(at, 0);
    }
}

/// Upper-triangular bit matrix: row r keeps words `r/64..W`.
#[derive(Debug, Default)]
struct UpperRows {
    offsets: Vec<usize>,
    words: Vec<u64>,
}

impl UpperRows {
    fn reset(&mut self, n: usize) {
        let w = n.div_ceil(64);
        self.offsets.clear();
        let mut at = 0;
        for r in 0..n {
            self.offsets.push(at);
            at += w - r / 64;
        }
        self.offsets.push(at);
        self.words.clear();
        self.words.resize(at, 0);
    }
}

/// Reusable buffers for repeated reach-count computation.
#[derive(Debug, Default)]
pub struct ReachWorkspace {
    down: LowerRows,
    up: UpperRows,
    out_start: Vec<usize>,
    out_adj: Vec<u32>,
    in_start: Vec<usize>,
    in_adj: Vec<u32>,
}

fn csr(n: usize, arcs: &[(u32, u32)], key: impl Fn(&(u32, u32)) -> (u32, u32), start: &mut Vec<usize>, adj: &mut Vec<u32>) {
    start.clear();
    start.resize(n + 1, 0);
    for a in arcs {
        start[key(a).0 as usize + 1] += 1;
    }
    for i in 0..n {
        start[i + 1] += start[i];
    }
    adj.clear();
    adj.resize(arcs.len(), 0);
    let mut fill = start.clone();
    for a in arcs {
        let (from, to) = key(a);
        adj[fill[from as usize]] = to;
        fill[from as usize] += 1;
    }
}

impl ReachWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Exact reach counts for `n` nodes whose arcs all satisfy
    /// `citing > cited`. Results are written into `out`.
    pub fn compute_ordered(&mut self, n: usize, arcs: &[(u32, u32)], out: &mut ReachCounts) {
        debug_assert!(arcs.iter().all(|&(u, v)| u > v && (u as usize) < n));
        csr(n, arcs, |&(u, v)| (u, v), &mut self.out_start, &mut self.out_adj);
        csr(n, arcs, |&(u, v)| (v, u), &mut self.in_start, &mut self.in_adj);

        // Descendants: row v = {v} | rows of the nodes v cites (all below v).
        self.down.reset(n);
        let (offs, words) = (&self.down.offsets, &mut self.down.words);
        out.n_plus.clear();
        for v in 0..n {
            let base = offs[v];
            words[base + v / 64] |= 1u64 << (v % 64);
            for &w in &self.out_adj[self.out_start[v]..self.out_start[v + 1]] {
                let w = w as usize;
                let (head, tail) = words.split_at_mut(base);
                let src = &head[offs[w]..offs[w] + w / 64 + 1];
                for (d, s) in tail.iter_mut().zip(src) {
                    *d |= s;
                }
            }
            let count: u32 = words[base..offs[v + 1]].iter().map(|x| x.count_ones()).sum();
            out.n_plus.push(count as u64);
        }

        // Ancestors: row v = {v} | rows of the nodes citing v (all above v).
        self.up.reset(n);
        let (offs, words) = (&self.up.offsets, &mut self.up.words);
        out.n_minus.clear();
        out.n_minus.resize(n, 0);
        for v in (0..n).rev() {
            let base = offs[v];
            let first = v / 64;
            words[base] |= 1u64 << (v % 64);
            for &u in &self.in_adj[self.in_start[v]..self.in_start[v + 1]] {
                let u = u as usize;
                let skip = u / 64 - first;
                let (head, tail) = words.split_at_mut(offs[u]);
                let src = &tail[..offs[u + 1] - offs[u]];
                for (d, s) in head[base + skip..offs[v + 1]].iter_mut().zip(src) {
                    *d |= s;
                }
            }
            let count: u32 = words[base..offs[v + 1]].iter().map(|x| x.count_ones()).sum();
            out.n_minus[v] = count as u64;
        }
    }
}

/// Reach counts for a snapshot.
pub fn compute_reach_counts(dag: &CitationDag) -> ReachCounts {
    let mut out = ReachCounts::default();
    ReachWorkspace::new().compute_ordered(dag.len(), &dag.arcs, &mut out);
    out
}

/// Reach counts for an arbitrary arc list; node labels need not be ordered.
/// Duplicate arcs are harmless. Fails on cycles.
pub fn reach_counts_general(n: usize, arcs: &[(u32, u32)]) -> Result<ReachCounts, SpnpError> {
    if let Some(&(u, v)) = arcs.iter().find(|&&(u, v)| u as usize >= n || v as usize >= n) {
        return Err(SpnpError::NodeOutOfRange(u, v));
    }
    // Kahn's algorithm on cited-before-citing: a node is ready once every
    // node it cites has been placed.
    let mut pending = vec![0usize; n];
    let mut citers: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &(u, v) in arcs {
        if u == v {
            return Err(SpnpError::Cycle(1));
        }
        pending[u as usize] += 1;
        citers[v as usize].push(u);
    }
    let mut rank = vec![u32::MAX; n];
    let mut ready: Vec<u32> = (0..n as u32).filter(|&v| pending[v as usize] == 0).collect();
    let mut next = 0u32;
    while let Some(v) = ready.pop() {
        rank[v as usize] = next;
        next += 1;
        for &u in &citers[v as usize] {
            pending[u as usize] -= 1;
            if pending[u as usize] == 0 {
                ready.push(u);
            }
        }
    }
    if (next as usize) < n {
        return Err(SpnpError::Cycle(n - next as usize));
    }
    let mut relabeled: Vec<(u32, u32)> = arcs.iter().map(|&(u, v)| (rank[u as usize], rank[v as usize])).collect();
    relabeled.sort_unstable();
    relabeled.dedup();
    let mut ranked = ReachCounts::default();
    ReachWorkspace::new().compute_ordered(n, &relabeled, &mut ranked);
    Ok(ReachCounts {
        n_minus: (0..n).map(|v| ranked.n_minus[rank[v] as usize]).collect(),
        n_plus: (0..n).map(|v| ranked.n_plus[rank[v] as usize]).collect(),
    })
}

/// SPNP per node of an arbitrary DAG.
pub fn spnp(n: usize, arcs: &[(u32, u32)]) -> Result<Vec<u64>, SpnpError> {
    reach_counts_general(n, arcs)?.spnp()
}

pub const BRUTE_FORCE_MAX_NODES: usize = 20;

/// Counts, for every v, the ordered pairs (u, w) with u reaching v and v
/// reaching w, by explicit enumeration. Reachability is reflexive.
pub fn brute_force_spnp(n: usize, arcs: &[(u32, u32)]) -> Result<Vec<u64>, SpnpError> {
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(SpnpError::TooLarge {
            n,
            max: BRUTE_FORCE_MAX_NODES,
        });
    }
    let mut reach = vec![vec![false; n]; n];
    for (s, row) in reach.iter_mut().enumerate() {
        let mut stack = vec![s];
        while let Some(x) = stack.pop() {
            if row[x] {
                continue;
            }
            row[x] = true;
            for &(u, v) in arcs {
                if u as usize == x {
                    stack.push(v as usize);
                }
            }
        }
    }
    for u in 0..n {
        for v in 0..n {
            if u != v && reach[u][v] && reach[v][u] {
                return Err(SpnpError::Cycle(2));
            }
        }
    }
    Ok((0..n)
        .map(|v| {
            let mut pairs = 0u64;
            for u in 0..n {
                for w in 0..n {
                    if reach[u][v] && reach[v][w] {
                        pairs += 1;
                    }
                }
            }
            pairs
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpnpScore {
    /// Patent index in the store.
    pub patent: u32,
    pub cutoff_year: i32,
    pub n_minus: u64,
    pub n_plus: u64,
    pub value: u64,
}

/// Grant-year cohorts that can be scored: `y + horizon` must not exceed the
/// last grant year in the data.
pub fn scorable_cohorts(network: &CitationNetwork, horizon: i32) -> Vec<i32> {
    match (network.min_year(), network.max_year()) {
        (Some(lo), Some(hi)) => (lo..=hi - horizon)
            .filter(|y| network.years.binary_search(y).is_ok())
            .collect(),
        _ => Vec::new(),
    }
}

/// SPNP of the cohort-`year` patents on the snapshot cut at `year + horizon`.
pub fn cohort_scores(network: &CitationNetwork, year: i32, horizon: i32) -> Result<(CitationDag, Vec<SpnpScore>), SpnpError> {
    let dag = network.snapshot(year + horizon);
    let reach = compute_reach_counts(&dag);
    let values = reach.spnp()?;
    let scores = dag
        .cohort(year)
        .map(|v| SpnpScore {
            patent: dag.patents[v],
            cutoff_year: dag.cutoff_year,
            n_minus: reach.n_minus[v],
            n_plus: reach.n_plus[v],
            value: values[v],
        })
        .collect();
    Ok((dag, scores))
}
