//! Keyword search over titles and abstracts, and MPR domain ranking.
//!
//! Patents are addressed by store index throughout; indices follow id order,
//! so sorted index lists are also sorted by id.

pub mod engine;
pub mod text;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusStore;

pub use engine::{SearchEngine, SCHEMA_VERSION};
pub use text::{stem, tokenize};

pub const DEFAULT_TOP_N: usize = 5;
pub const SAMPLE_SIZE: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum SearchError {
    #[error("query has no searchable tokens")]
    EmptyQuery,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InvertedIndex {
    postings: BTreeMap<String, Vec<u32>>,
    indexed: usize,
    omitted: usize,
}

impl InvertedIndex {
    /// Indexes title and abstract of every patent with text; patents with
    /// neither are omitted and counted.
    pub fn build(store: &CorpusStore) -> Self {
        let mut postings: BTreeMap<String, Vec<u32>> = BTreeMap::new();
        let mut indexed = 0;
        for (i, p) in store.patents().iter().enumerate() {
            if !p.has_text() {
                continue;
            }
            indexed += 1;
            for tok in tokenize(&p.title).into_iter().chain(tokenize(&p.abstract_text)) {
                let list = postings.entry(tok).or_default();
                // Patents are visited in index order, so a repeat is always last.
                if list.last() != Some(&(i as u32)) {
                    list.push(i as u32);
                }
            }
        }
        InvertedIndex {
            postings,
            indexed,
            omitted: store.len() - indexed,
        }
    }

    /// Rebuilds from stored postings; lists are sorted and deduplicated.
    pub fn from_postings(postings: BTreeMap<String, Vec<u32>>, indexed: usize, omitted: usize) -> Self {
        let postings = postings
            .into_iter()
            .map(|(t, mut v)| {
                v.sort_unstable();
                v.dedup();
                (t, v)
            })
            .collect();
        InvertedIndex { postings, indexed, omitted }
    }

    pub fn postings(&self) -> &BTreeMap<String, Vec<u32>> {
        &self.postings
    }

    pub fn get(&self, token: &str) -> &[u32] {
        self.postings.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn indexed(&self) -> usize {
        self.indexed
    }

    pub fn omitted(&self) -> usize {
        self.omitted
    }

    pub fn token_count(&self) -> usize {
        self.postings.len()
    }

    /// Patents containing every query token (AND semantics).
    pub fn search(&self, query: &str) -> Result<Vec<u32>, SearchError> {
        let mut tokens = tokenize(query);
        if tokens.is_empty() {
            return Err(SearchError::EmptyQuery);
        }
        tokens.sort();
        tokens.dedup();
        let mut lists: Vec<&[u32]> = tokens.iter().map(|t| self.get(t)).collect();
        lists.sort_by_key(|l| l.len());
        let mut acc = lists[0].to_vec();
        for l in &lists[1..] {
            acc = intersect(&acc, l);
            if acc.is_empty() {
                break;
            }
        }
        Ok(acc)
    }
}

/// Intersection of two sorted, deduplicated lists.
pub fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

pub fn intersection_size(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MprScore {
    pub domain_code: String,
    pub matched_count: usize,
    pub domain_size: usize,
    pub query_size: usize,
    /// |Q∩D| / |D|
    pub precision: f64,
    /// |Q∩D| / |Q|
    pub recall: f64,
    pub mpr: f64,
}

/// MPR = (m/d + m/q) / 2, evaluated as m(q + d) / (2qd) so the result is the
/// correctly rounded mean and symmetric in q and d.
pub fn mpr(matched: usize, query_size: usize, domain_size: usize) -> f64 {
    if matched == 0 {
        return 0.0;
    }
    let (m, q, d) = (matched as u128, query_size as u128, domain_size as u128);
    (m * (q + d)) as f64 / (2 * q * d) as f64
}

fn score(code: &str, matched: usize, q: usize, d: usize) -> MprScore {
    MprScore {
        domain_code: code.to_string(),
        matched_count: matched,
        domain_size: d,
        query_size: q,
        precision: matched as f64 / d as f64,
        recall: matched as f64 / q as f64,
        mpr: mpr(matched, q, d),
    }
}

/// Exact MPR order for a shared query: higher m(q + d) / d first.
fn cmp_mpr(a: &MprScore, b: &MprScore) -> Ordering {
    let q = a.query_size as u128;
    let lhs = a.matched_count as u128 * (q + a.domain_size as u128) * b.domain_size as u128;
    let rhs = b.matched_count as u128 * (q + b.domain_size as u128) * a.domain_size as u128;
    rhs.cmp(&lhs)
}

/// Ranks domains overlapping the query by MPR (descending), then larger
/// overlap, then code. Domains without overlap are skipped.
pub fn rank_domains<'a>(
    query: &[u32],
    domains: impl IntoIterator<Item = (&'a str, &'a [u32])>,
    top_n: usize,
) -> Vec<MprScore> {
    if query.is_empty() {
        return Vec::new();
    }
    let mut scores: Vec<MprScore> = domains
        .into_iter()
        .filter_map(|(code, patents)| {
            let m = intersection_size(query, patents);
            (m > 0).then(|| score(code, m, query.len(), patents.len()))
        })
        .collect();
    scores.sort_by(|a, b| {
        cmp_mpr(a, b)
            .then(b.matched_count.cmp(&a.matched_count))
            .then_with(|| a.domain_code.cmp(&b.domain_code))
    });
    scores.truncate(top_n);
    scores
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatentSample {
    pub top_central: Vec<u32>,
    pub random: Vec<u32>,
    pub seed: u64,
}

/// Top patents by percentile (unscored last, ties by index) and a uniform
/// draw without replacement, each of size min(`size`, |domain|).
pub fn sample_patents(patents: &[u32], percentile: &[Option<f64>], seed: u64, size: usize) -> PatentSample {
    PatentSample {
        top_central: top_central(patents, percentile, size),
        random: random_sample(patents, seed, size),
        seed,
    }
}

pub fn top_central(patents: &[u32], percentile: &[Option<f64>], size: usize) -> Vec<u32> {
    let mut v = patents.to_vec();
    v.sort_by(|&a, &b| {
        let (pa, pb) = (percentile[a as usize], percentile[b as usize]);
        match (pa, pb) {
            (Some(x), Some(y)) => y.total_cmp(&x),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        }
        .then(a.cmp(&b))
    });
    v.truncate(size);
    v
}

pub fn random_sample(patents: &[u32], seed: u64, size: usize) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample(&mut rng, patents.len(), size.min(patents.len()))
        .into_iter()
        .map(|i| patents[i])
        .collect()
}
