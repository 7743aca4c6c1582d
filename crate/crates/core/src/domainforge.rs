//! Inverted classification-overlap decomposition.
//!
//! Every (UPC, IPC) class pair is a candidate domain holding the patents
//! listed in both classes. Candidates whose overlap does not exceed the
//! overlap expected under independent classification are discarded as noise;
//! the survivors are deduplicated so each patent lands in the largest
//! overlap containing it; finally domains below `min_size` are set aside.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ClassSystem, CorpusStore};

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("expected overlap needs a positive patent total")]
    ZeroTotal,
    #[error("class size {size} exceeds the patent total {total}")]
    SizeExceedsTotal { size: usize, total: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassPairKey {
    pub upc_label: String,
    pub ipc_label: String,
}

impl ClassPairKey {
    pub fn new(upc_label: impl Into<String>, ipc_label: impl Into<String>) -> Self {
        ClassPairKey {
            upc_label: upc_label.into(),
            ipc_label: ipc_label.into(),
        }
    }

    /// UPC label followed by IPC label, e.g. `123F02B`.
    pub fn code(&self) -> String {
        format!("{}{}", self.upc_label, self.ipc_label)
    }
}

/// Probabilities behind an expected overlap under independence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedOverlap {
    pub p_upc: f64,
    pub p_ipc: f64,
    pub p_joint: f64,
    pub expected: f64,
}

/// `upc_size * ipc_size / total`, with the intermediate probabilities.
pub fn expected_overlap(upc_size: usize, ipc_size: usize, total: usize) -> Result<ExpectedOverlap, DomainError> {
    if total == 0 {
        return Err(DomainError::ZeroTotal);
    }
    for size in [upc_size, ipc_size] {
        if size > total {
            return Err(DomainError::SizeExceedsTotal { size, total });
        }
    }
    let t = total as f64;
    let p_upc = upc_size as f64 / t;
    let p_ipc = ipc_size as f64 / t;
    let p_joint = p_upc * p_ipc;
    Ok(ExpectedOverlap {
        p_upc,
        p_ipc,
        p_joint,
        expected: p_joint * t,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapSet {
    pub key: ClassPairKey,
    pub code: String,
    /// Sorted patent indices.
    pub patents: Vec<u32>,
    pub actual_overlap: usize,
    pub upc_size: usize,
    pub ipc_size: usize,
    pub p_upc: f64,
    pub p_ipc: f64,
    pub p_joint: f64,
    pub expected_overlap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapTable {
    /// Non-empty overlaps sorted by code.
    pub overlaps: Vec<OverlapSet>,
    pub total_patents: usize,
    pub possible_pairs: usize,
    pub zero_pairs: usize,
}

/// One overlap per class pair with at least one shared patent.
pub fn compute_overlaps(store: &CorpusStore) -> OverlapTable {
    let lists = store.class_lists();
    let total = store.len();
    let mut upc_size = vec![0usize; lists.upc.len()];
    let mut ipc_size = vec![0usize; lists.ipc.len()];
    let mut pairs: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    let mut upc = Vec::new();
    let mut ipc = Vec::new();
    for p in 0..total as u32 {
        upc.clear();
        ipc.clear();
        upc.extend(store.classes_of(p, ClassSystem::Upc));
        ipc.extend(store.classes_of(p, ClassSystem::Ipc));
        for &u in &upc {
            upc_size[u as usize] += 1;
        }
        for &i in &ipc {
            ipc_size[i as usize] += 1;
        }
        for &u in &upc {
            for &i in &ipc {
                pairs.entry((u, i)).or_default().push(p);
            }
        }
    }

    let mut overlaps: Vec<OverlapSet> = pairs
        .into_iter()
        .map(|((u, i), patents)| {
            let key = ClassPairKey::new(lists.upc.label(u), lists.ipc.label(i));
            let (us, is) = (upc_size[u as usize], ipc_size[i as usize]);
            let e = expected_overlap(us, is, total).expect("class sizes bounded by total");
            OverlapSet {
                code: key.code(),
                key,
                actual_overlap: patents.len(),
                patents,
                upc_size: us,
                ipc_size: is,
                p_upc: e.p_upc,
                p_ipc: e.p_ipc,
                p_joint: e.p_joint,
                expected_overlap: e.expected,
            }
        })
        .collect();
    overlaps.sort_by(|a, b| a.code.cmp(&b.code).then_with(|| a.key.cmp(&b.key)));
    let possible_pairs = lists.upc.len() * lists.ipc.len();
    OverlapTable {
        zero_pairs: possible_pairs - overlaps.len(),
        overlaps,
        total_patents: total,
        possible_pairs,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseFiltered {
    pub survivors: Vec<OverlapSet>,
    pub discarded: Vec<OverlapSet>,
    /// Patents that appear in some overlap but in no surviving one.
    pub patents_lost: usize,
}

/// Keeps overlaps strictly larger than expected under independence.
pub fn noise_filter(overlaps: Vec<OverlapSet>) -> NoiseFiltered {
    let (survivors, discarded): (Vec<_>, Vec<_>) = overlaps
        .into_iter()
        .partition(|o| o.actual_overlap as f64 > o.expected_overlap);
    let members = |sets: &[OverlapSet]| {
        let mut v: Vec<u32> = sets.iter().flat_map(|o| o.patents.iter().copied()).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let kept = members(&survivors);
    let patents_lost = members(&discarded)
        .into_iter()
        .filter(|p| kept.binary_search(p).is_err())
        .count();
    NoiseFiltered {
        survivors,
        discarded,
        patents_lost,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainStatus {
    Valid,
    DiscardedNoise,
    DiscardedSmall,
    Emptied,
}

impl DomainStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            DomainStatus::Valid => "valid",
            DomainStatus::DiscardedNoise => "discarded_noise",
            DomainStatus::DiscardedSmall => "discarded_small",
            DomainStatus::Emptied => "emptied",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "valid" => DomainStatus::Valid,
            "discarded_noise" => DomainStatus::DiscardedNoise,
            "discarded_small" => DomainStatus::DiscardedSmall,
            "emptied" => DomainStatus::Emptied,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub key: ClassPairKey,
    pub code: String,
    /// Sorted patent indices after deduplication.
    pub patents: Vec<u32>,
    pub size: usize,
    pub pre_dedup_size: usize,
    pub expected_overlap: f64,
    pub status: DomainStatus,
}

/// Ranking used by deduplication: larger pre-dedup overlap first, then the
/// lexicographically smaller code.
fn dedup_order(a: &OverlapSet, b: &OverlapSet) -> Ordering {
    b.actual_overlap
        .cmp(&a.actual_overlap)
        .then_with(|| a.code.cmp(&b.code))
}

/// Assigns every patent to the largest surviving overlap containing it.
///
/// Ranks are fixed by pre-dedup sizes, so the result does not depend on the
/// order overlaps are presented in. Returned domains keep `survivors`' order;
/// domains left without patents are marked `Emptied`, the rest `Valid`
/// pending [`size_filter`].
pub fn deduplicate(survivors: &[OverlapSet], total_patents: usize) -> Vec<Domain> {
    let mut ranked: Vec<usize> = (0..survivors.len()).collect();
    ranked.sort_by(|&a, &b| dedup_order(&survivors[a], &survivors[b]));
    let mut owner: Vec<Option<usize>> = vec![None; total_patents];
    for &o in &ranked {
        for &p in &survivors[o].patents {
            owner[p as usize].get_or_insert(o);
        }
    }
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); survivors.len()];
    for (p, o) in owner.iter().enumerate() {
        if let Some(o) = o {
            members[*o].push(p as u32);
        }
    }
    survivors
        .iter()
        .zip(members)
        .map(|(o, patents)| Domain {
            key: o.key.clone(),
            code: o.code.clone(),
            size: patents.len(),
            status: if patents.is_empty() { DomainStatus::Emptied } else { DomainStatus::Valid },
            patents,
            pre_dedup_size: o.actual_overlap,
            expected_overlap: o.expected_overlap,
        })
        .collect()
}

/// Marks non-empty domains below `min_size` as `DiscardedSmall`.
pub fn size_filter(mut domains: Vec<Domain>, min_size: usize) -> Vec<Domain> {
    for d in &mut domains {
        if d.status == DomainStatus::Emptied || d.status == DomainStatus::DiscardedNoise {
            continue;
        }
        d.status = if d.size >= min_size {
            DomainStatus::Valid
        } else {
            DomainStatus::DiscardedSmall
        };
    }
    domains
}

/// Full decomposition output: every non-empty class pair with its status,
/// plus the per-patent assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// Sorted by code.
    pub domains: Vec<Domain>,
    pub total_patents: usize,
    pub possible_pairs: usize,
    pub zero_pairs: usize,
    pub noise_lost_patents: usize,
    pub min_size: usize,
}

impl Decomposition {
    pub fn valid(&self) -> impl Iterator<Item = &Domain> {
        self.domains.iter().filter(|d| d.status == DomainStatus::Valid)
    }

    /// Domain index owning each patent after deduplication, if any.
    pub fn assignment(&self) -> Vec<Option<usize>> {
        let mut owner = vec![None; self.total_patents];
        for (i, d) in self.domains.iter().enumerate() {
            for &p in &d.patents {
                owner[p as usize] = Some(i);
            }
        }
        owner
    }
}

/// noise filter -> dedup -> size filter over a filtered corpus.
pub fn decompose(store: &CorpusStore, min_size: usize) -> Decomposition {
    let table = compute_overlaps(store);
    decompose_overlaps(table, min_size)
}

pub fn decompose_overlaps(table: OverlapTable, min_size: usize) -> Decomposition {
    let total = table.total_patents;
    let filtered = noise_filter(table.overlaps);
    let kept = size_filter(deduplicate(&filtered.survivors, total), min_size);
    let mut domains: Vec<Domain> = kept;
    domains.extend(filtered.discarded.into_iter().map(|o| Domain {
        code: o.code,
        key: o.key,
        patents: Vec::new(),
        size: 0,
        pre_dedup_size: o.actual_overlap,
        expected_overlap: o.expected_overlap,
        status: DomainStatus::DiscardedNoise,
    }));
    domains.sort_by(|a, b| a.code.cmp(&b.code).then_with(|| a.key.cmp(&b.key)));
    Decomposition {
        domains,
        total_patents: total,
        possible_pairs: table.possible_pairs,
        zero_pairs: table.zero_pairs,
        noise_lost_patents: filtered.patents_lost,
        min_size,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeBand {
    pub label: String,
    pub min: usize,
    pub max: Option<usize>,
    pub domains: usize,
    pub domain_fraction_of_possible: f64,
    pub patents: usize,
    pub patent_fraction: f64,
}

pub const SIZE_BANDS: [(&str, usize, Option<usize>); 5] = [
    ("1-9", 1, Some(9)),
    ("10-99", 10, Some(99)),
    ("100-999", 100, Some(999)),
    ("1000-9999", 1000, Some(9999)),
    (">=10000", 10000, None),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub total_patents: usize,
    pub possible_pairs: usize,
    pub nonzero_pairs: usize,
    pub zero_pairs: usize,
    pub noise_discarded_pairs: usize,
    pub emptied_pairs: usize,
    pub noise_lost_patents: usize,
    pub noise_lost_fraction: f64,
    /// Patents lacking a UPC or an IPC membership, hence in no overlap.
    pub patents_without_overlap: usize,
    pub assigned_patents: usize,
    pub min_size: usize,
    pub valid_domains: usize,
    pub valid_patents: usize,
    pub coverage_fraction: f64,
    /// Post-dedup size bands over every non-empty deduplicated domain.
    pub bands: Vec<SizeBand>,
}

pub fn coverage_report(decomposition: &Decomposition, store: &CorpusStore) -> CoverageReport {
    let total = decomposition.total_patents;
    let frac = |x: usize, of: usize| if of == 0 { 0.0 } else { x as f64 / of as f64 };
    let mut bands: Vec<SizeBand> = SIZE_BANDS
        .iter()
        .map(|&(label, min, max)| SizeBand {
            label: label.to_string(),
            min,
            max,
            domains: 0,
            domain_fraction_of_possible: 0.0,
            patents: 0,
            patent_fraction: 0.0,
        })
        .collect();
    let mut assigned = 0;
    for d in &decomposition.domains {
        if d.size == 0 {
            continue;
        }
        assigned += d.size;
        if let Some(b) = bands
            .iter_mut()
            .find(|b| d.size >= b.min && b.max.is_none_or(|m| d.size <= m))
        {
            b.domains += 1;
            b.patents += d.size;
        }
    }
    for b in &mut bands {
        b.domain_fraction_of_possible = frac(b.domains, decomposition.possible_pairs);
        b.patent_fraction = frac(b.patents, total);
    }
    let valid: Vec<&Domain> = decomposition.valid().collect();
    let valid_patents = valid.iter().map(|d| d.size).sum();
    let patents_without_overlap = (0..store.len() as u32)
        .filter(|&p| {
            store.classes_of(p, ClassSystem::Upc).next().is_none()
                || store.classes_of(p, ClassSystem::Ipc).next().is_none()
        })
        .count();
    let count = |s: DomainStatus| decomposition.domains.iter().filter(|d| d.status == s).count();
    CoverageReport {
        total_patents: total,
        possible_pairs: decomposition.possible_pairs,
        nonzero_pairs: decomposition.domains.len(),
        zero_pairs: decomposition.zero_pairs,
        noise_discarded_pairs: count(DomainStatus::DiscardedNoise),
        emptied_pairs: count(DomainStatus::Emptied),
        noise_lost_patents: decomposition.noise_lost_patents,
        noise_lost_fraction: frac(decomposition.noise_lost_patents, total),
        patents_without_overlap,
        assigned_patents: assigned,
        min_size: decomposition.min_size,
        valid_domains: valid.len(),
        valid_patents,
        coverage_fraction: frac(valid_patents, total),
        bands,
    }
}
