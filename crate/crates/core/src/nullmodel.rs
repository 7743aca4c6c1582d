//! Null-model normalization of SPNP.
//!
//! Citations are grouped into swap buckets keyed by (citing year, cited
//! year, citing main class, within-class flag). Swapping the cited endpoints
//! of two citations from one bucket keeps every patent's in- and out-degree,
//! the year-pair citation profile, and each patent's count of within-class
//! citations made. Observed SPNP is compared against the SPNP distribution
//! over rewired replicates, and the resulting z-scores are turned into
//! per-cohort rank percentiles.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusStore;
use crate::spnp::{CitationDag, ReachCounts, ReachWorkspace, SpnpError};

#[derive(Debug, Error, PartialEq)]
pub enum NullModelError {
    #[error("null distribution needs at least 2 replicates, got {0}")]
    TooFewReplicates(usize),
    #[error("swap factor must be finite and non-negative, got {0}")]
    BadSwapFactor(f64),
    #[error(transparent)]
    Spnp(#[from] SpnpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BucketKey {
    pub citing_year: i32,
    pub cited_year: i32,
    pub citing_main_class: Option<u32>,
    pub within_class: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SwapBucket {
    pub key: BucketKey,
    /// Indices into the snapshot's arc list.
    pub arcs: Vec<u32>,
}

/// Main class of each snapshot node.
pub fn node_classes(dag: &CitationDag, store: &CorpusStore) -> Vec<Option<u32>> {
    dag.patents.iter().map(|&p| store.patent(p).main_class).collect()
}

pub fn bucket_key(dag: &CitationDag, classes: &[Option<u32>], citing: u32, cited: u32) -> BucketKey {
    let citing_class = classes[citing as usize];
    BucketKey {
        citing_year: dag.years[citing as usize],
        cited_year: dag.years[cited as usize],
        citing_main_class: citing_class,
        within_class: citing_class.is_some() && citing_class == classes[cited as usize],
    }
}

/// Partitions the snapshot's arcs into swap buckets, sorted by key.
pub fn build_buckets(dag: &CitationDag, store: &CorpusStore) -> Vec<SwapBucket> {
    build_buckets_with(dag, &node_classes(dag, store))
}

/// As [`build_buckets`], with main classes given per snapshot node.
pub fn build_buckets_with(dag: &CitationDag, classes: &[Option<u32>]) -> Vec<SwapBucket> {
    let mut map: BTreeMap<BucketKey, Vec<u32>> = BTreeMap::new();
    for (i, &(u, v)) in dag.arcs.iter().enumerate() {
        map.entry(bucket_key(dag, classes, u, v)).or_default().push(i as u32);
    }
    map.into_iter().map(|(key, arcs)| SwapBucket { key, arcs }).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapStats {
    pub attempts: u64,
    /// Attempts whose swap would leave the arc set unchanged.
    pub noops: u64,
    pub rejected_self: u64,
    pub rejected_duplicate: u64,
    /// Same-year swaps that would point a citation at a later patent.
    pub rejected_order: u64,
    pub accepted: u64,
}

impl SwapStats {
    fn add(&mut self, o: &SwapStats) {
        self.attempts += o.attempts;
        self.noops += o.noops;
        self.rejected_self += o.rejected_self;
        self.rejected_duplicate += o.rejected_duplicate;
        self.rejected_order += o.rejected_order;
        self.accepted += o.accepted;
    }

    pub fn rejected(&self) -> u64 {
        self.rejected_self + self.rejected_duplicate + self.rejected_order
    }
}

/// Generator for replicate `r` of the snapshot identified by `stream`.
///
/// The master seed keys ChaCha8 and `(stream << 32) | r` selects the
/// ChaCha stream, so every (seed, snapshot, replicate) triple gets its own
/// sequence. XOR-ing the replicate into the seed would make the replicate
/// sets of seeds that differ only in low bits coincide.
pub fn replicate_rng(seed: u64, replicate: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((stream << 32) | (replicate & 0xffff_ffff));
    rng
}

fn arc_key(u: u32, v: u32) -> u64 {
    (u64::from(u) << 32) | u64::from(v)
}

/// Rewires `arcs` in place bucket by bucket, attempting
/// `ceil(swap_factor * size)` swaps per bucket. `present` must hold the key
/// of every arc and is kept in sync. Returns per-bucket statistics.
pub fn rewire_in_place(
    arcs: &mut [(u32, u32)],
    present: &mut FxHashSet<u64>,
    buckets: &[SwapBucket],
    swap_factor: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<SwapStats> {
    buckets
        .iter()
        .map(|b| {
            let mut stats = SwapStats::default();
            let size = b.arcs.len();
            let attempts = (swap_factor * size as f64).ceil() as u64;
            let same_year = b.key.citing_year == b.key.cited_year;
            stats.attempts = attempts;
            for _ in 0..attempts {
                let i = b.arcs[rng.random_range(0..size)] as usize;
                let j = b.arcs[rng.random_range(0..size)] as usize;
                let (a, bb) = arcs[i];
                let (c, d) = arcs[j];
                // Same citation, same citing patent or same cited patent:
                // the swap would reproduce the current arc set.
                if i == j || a == c || bb == d {
                    stats.noops += 1;
                    continue;
                }
                // a -> d and c -> b after the swap.
                if a == d || c == bb {
                    stats.rejected_self += 1;
                } else if same_year && (a < d || c < bb) {
                    stats.rejected_order += 1;
                } else if present.contains(&arc_key(a, d)) || present.contains(&arc_key(c, bb)) {
                    stats.rejected_duplicate += 1;
                } else {
                    present.remove(&arc_key(a, bb));
                    present.remove(&arc_key(c, d));
                    present.insert(arc_key(a, d));
                    present.insert(arc_key(c, bb));
                    arcs[i] = (a, d);
                    arcs[j] = (c, bb);
                    stats.accepted += 1;
                }
            }
            stats
        })
        .collect()
}

/// One rewired copy of the snapshot's arcs.
pub fn rewire(dag: &CitationDag, buckets: &[SwapBucket], swap_factor: f64, rng: &mut ChaCha8Rng) -> (Vec<(u32, u32)>, Vec<SwapStats>) {
    let mut arcs = dag.arcs.clone();
    let mut present: FxHashSet<u64> = arcs.iter().map(|&(u, v)| arc_key(u, v)).collect();
    let stats = rewire_in_place(&mut arcs, &mut present, buckets, swap_factor, rng);
    (arcs, stats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullConfig {
    pub replicates: usize,
    pub swap_factor: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for NullConfig {
    fn default() -> Self {
        NullConfig {
            replicates: 1000,
            swap_factor: 10.0,
            epsilon: 1e-9,
            seed: 0,
        }
    }
}

impl NullConfig {
    pub fn validate(&self) -> Result<(), NullModelError> {
        if self.replicates < 2 {
            return Err(NullModelError::TooFewReplicates(self.replicates));
        }
        if !self.swap_factor.is_finite() || self.swap_factor < 0.0 {
            return Err(NullModelError::BadSwapFactor(self.swap_factor));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullDistribution {
    pub mean: f64,
    /// Sample standard deviation over replicates.
    pub std: f64,
    pub replicates: usize,
}

/// Mean and sample std from exact integer sums.
fn moments(sum: u128, sum_sq: u128, r: usize) -> NullDistribution {
    let rr = r as u128;
    let mean = sum as f64 / r as f64;
    // r * sum_sq - sum^2 is exact and non-negative by Cauchy-Schwarz.
    let num = rr * sum_sq - sum * sum;
    let var = num as f64 / (r as f64 * (r as f64 - 1.0));
    NullDistribution {
        mean,
        std: var.sqrt(),
        replicates: r,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullOutcome {
    /// One entry per node of `nodes`.
    pub distributions: Vec<NullDistribution>,
    /// Swap statistics per bucket, summed over replicates.
    pub bucket_stats: Vec<SwapStats>,
}

struct Accum {
    sum: Vec<u128>,
    sum_sq: Vec<u128>,
    stats: Vec<SwapStats>,
}

impl Accum {
    fn new(nodes: usize, buckets: usize) -> Self {
        Accum {
            sum: vec![0; nodes],
            sum_sq: vec![0; nodes],
            stats: vec![SwapStats::default(); buckets],
        }
    }

    fn merge(mut self, o: Accum) -> Accum {
        for (a, b) in self.sum.iter_mut().zip(&o.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&o.sum_sq) {
            *a += b;
        }
        for (a, b) in self.stats.iter_mut().zip(&o.stats) {
            a.add(b);
        }
        self
    }
}

struct ReplicateScratch {
    arcs: Vec<(u32, u32)>,
    present: FxHashSet<u64>,
    workspace: ReachWorkspace,
    reach: ReachCounts,
}

/// SPNP null distribution for the nodes in `nodes`, over `config.replicates`
/// rewired copies of the snapshot. `stream` separates snapshots that share
/// a seed. Replicates run in parallel; sums are exact integers, so results
/// do not depend on scheduling.
pub fn null_distribution(
    dag: &CitationDag,
    buckets: &[SwapBucket],
    nodes: std::ops::Range<usize>,
    config: &NullConfig,
    stream: u64,
) -> Result<NullOutcome, NullModelError> {
    config.validate()?;
    let n = dag.len();
    let template: FxHashSet<u64> = dag.arcs.iter().map(|&(u, v)| arc_key(u, v)).collect();
    let total = (0..config.replicates as u64)
        .into_par_iter()
        .map_init(
            || ReplicateScratch {
                arcs: Vec::new(),
                present: FxHashSet::default(),
                workspace: ReachWorkspace::new(),
                reach: ReachCounts::default(),
            },
            |s, r| -> Result<Accum, NullModelError> {
                let mut rng = replicate_rng(config.seed, r, stream);
                s.arcs.clear();
                s.arcs.extend_from_slice(&dag.arcs);
                s.present.clone_from(&template);
                let stats = rewire_in_place(&mut s.arcs, &mut s.present, buckets, config.swap_factor, &mut rng);
                s.workspace.compute_ordered(n, &s.arcs, &mut s.reach);
                let mut acc = Accum::new(nodes.len(), buckets.len());
                for (k, v) in nodes.clone().enumerate() {
                    let (a, b) = (s.reach.n_minus[v], s.reach.n_plus[v]);
                    let x = a.checked_mul(b).ok_or(SpnpError::Overflow(a, b))? as u128;
                    acc.sum[k] = x;
                    acc.sum_sq[k] = x * x;
                }
                acc.stats = stats;
                Ok(acc)
            },
        )
        .try_reduce(|| Accum::new(nodes.len(), buckets.len()), |a, b| Ok(a.merge(b)))?;
    Ok(NullOutcome {
        distributions: total
            .sum
            .iter()
            .zip(&total.sum_sq)
            .map(|(&s, &q)| moments(s, q, config.replicates))
            .collect(),
        bucket_stats: total.stats,
    })
}

/// `(observed - mean) / max(std, epsilon)`; a frozen patent (std = 0) gets 0.
pub fn zscore(observed: f64, null: &NullDistribution, epsilon: f64) -> f64 {
    if null.std == 0.0 {
        return 0.0;
    }
    (observed - null.mean) / null.std.max(epsilon)
}

/// Average-rank percentiles of `values`: rank / m with tied values sharing
/// the mean of their ranks.
pub fn rank_percentile(values: &[f64]) -> Vec<f64> {
    let m = values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; m];
    let mut i = 0;
    while i < m {
        let mut j = i + 1;
        while j < m && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j share their mean.
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            out[k] = avg / m as f64;
        }
        i = j;
    }
    out
}

/// Percentiles computed independently within each cohort.
pub fn rank_percentile_by_cohort(cohorts: &[i32], z: &[f64]) -> Vec<f64> {
    let mut groups: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, &c) in cohorts.iter().enumerate() {
        groups.entry(c).or_default().push(i);
    }
    let mut out = vec![0.0; z.len()];
    for idx in groups.values() {
        let vals: Vec<f64> = idx.iter().map(|&i| z[i]).collect();
        for (&i, p) in idx.iter().zip(rank_percentile(&vals)) {
            out[i] = p;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityRow {
    pub patent: u32,
    pub cohort_year: i32,
    pub spnp_observed: u64,
    pub null_mean: f64,
    pub null_std: f64,
    pub z: f64,
    pub percentile: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecileStats {
    pub decile: usize,
    pub buckets: usize,
    pub min_size: usize,
    pub max_size: usize,
    pub attempts: u64,
    pub noops: u64,
    pub rejected: u64,
    pub rejection_rate: f64,
}

/// Rejection rates grouped into ten bucket-size deciles (by size rank).
pub fn decile_stats(sizes: &[usize], stats: &[SwapStats]) -> Vec<DecileStats> {
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by_key(|&i| (sizes[i], i));
    let nb = sizes.len();
    let mut out: Vec<DecileStats> = (0..10)
        .map(|d| DecileStats {
            decile: d + 1,
            buckets: 0,
            min_size: 0,
            max_size: 0,
            attempts: 0,
            noops: 0,
            rejected: 0,
            rejection_rate: 0.0,
        })
        .collect();
    for (rank, &i) in order.iter().enumerate() {
        let d = &mut out[rank * 10 / nb];
        if d.buckets == 0 {
            d.min_size = sizes[i];
        }
        d.buckets += 1;
        d.max_size = sizes[i];
        d.attempts += stats[i].attempts;
        d.noops += stats[i].noops;
        d.rejected += stats[i].rejected();
    }
    for d in &mut out {
        let real = d.attempts - d.noops;
        d.rejection_rate = if real == 0 { 0.0 } else { d.rejected as f64 / real as f64 };
    }
    out.retain(|d| d.buckets > 0);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortDiagnostics {
    pub cohort_year: i32,
    pub cutoff_year: i32,
    pub nodes: usize,
    pub arcs: usize,
    pub dropped_arcs: usize,
    pub buckets: usize,
    pub cohort_patents: usize,
    pub frozen_patents: usize,
    pub totals: SwapStats,
    pub deciles: Vec<DecileStats>,
}

/// Observed SPNP, null moments, z and percentile for cohort `year`.
pub fn cohort_centrality(
    store: &CorpusStore,
    dag: &CitationDag,
    year: i32,
    config: &NullConfig,
) -> Result<(Vec<CentralityRow>, CohortDiagnostics), NullModelError> {
    let buckets = build_buckets(dag, store);
    let nodes = dag.cohort(year);
    let mut ws = ReachWorkspace::new();
    let mut reach = ReachCounts::default();
    ws.compute_ordered(dag.len(), &dag.arcs, &mut reach);
    let outcome = null_distribution(dag, &buckets, nodes.clone(), config, year as u64)?;

    let mut rows = Vec::with_capacity(nodes.len());
    for (k, v) in nodes.clone().enumerate() {
        let (a, b) = (reach.n_minus[v], reach.n_plus[v]);
        let observed = a.checked_mul(b).ok_or(SpnpError::Overflow(a, b))?;
        let null = outcome.distributions[k];
        rows.push(CentralityRow {
            patent: dag.patents[v],
            cohort_year: year,
            spnp_observed: observed,
            null_mean: null.mean,
            null_std: null.std,
            z: zscore(observed as f64, &null, config.epsilon),
            percentile: 0.0,
        });
    }
    let z: Vec<f64> = rows.iter().map(|r| r.z).collect();
    for (row, p) in rows.iter_mut().zip(rank_percentile(&z)) {
        row.percentile = p;
    }

    let sizes: Vec<usize> = buckets.iter().map(|b| b.arcs.len()).collect();
    let mut totals = SwapStats::default();
    for s in &outcome.bucket_stats {
        totals.add(s);
    }
    let diagnostics = CohortDiagnostics {
        cohort_year: year,
        cutoff_year: dag.cutoff_year,
        nodes: dag.len(),
        arcs: dag.arcs.len(),
        dropped_arcs: dag.dropped_arcs,
        buckets: buckets.len(),
        cohort_patents: rows.len(),
        frozen_patents: rows.iter().filter(|r| r.null_std == 0.0).count(),
        totals,
        deciles: decile_stats(&sizes, &outcome.bucket_stats),
    };
    Ok((rows, diagnostics))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainCentrality {
    pub code: String,
    /// Mean percentile over scored patents; `None` when none are scored.
    pub x: Option<f64>,
    pub scored: usize,
    pub unscored: usize,
}

/// Mean percentile of each domain's scored patents. `percentile` is
/// indexed by patent; unscored patents are excluded and counted.
pub fn domain_mean_centrality<'a>(
    domains: impl IntoIterator<Item = (&'a str, &'a [u32])>,
    percentile: &[Option<f64>],
) -> Vec<DomainCentrality> {
    domains
        .into_iter()
        .map(|(code, patents)| {
            let scored: Vec<f64> = patents.iter().filter_map(|&p| percentile[p as usize]).collect();
            DomainCentrality {
                code: code.to_string(),
                x: (!scored.is_empty()).then(|| scored.iter().sum::<f64>() / scored.len() as f64),
                scored: scored.len(),
                unscored: patents.len() - scored.len(),
            }
        })
        .collect()
}
