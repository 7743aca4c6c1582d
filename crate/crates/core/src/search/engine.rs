//! Read-only view over a finished artifact directory, answering the queries
//! behind both the HTTP API and the offline `search` subcommand.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use super::{rank_domains, random_sample, tokenize, top_central, InvertedIndex, DEFAULT_TOP_N, SAMPLE_SIZE};
use crate::artifacts::{ArtifactError, Manifest, ManifestEntry};
use crate::corpus::CorpusStore;
use crate::pipeline::{read_assignments, read_corpus, read_domains, read_index, read_percentiles, read_rates, DomainRow};
use crate::rates::RateEstimate;

pub use crate::artifacts::SCHEMA_VERSION;

pub const MAX_RESULTS: usize = 100;
pub const MAX_LIST: usize = 100_000;

#[derive(Debug, Error, PartialEq)]
pub enum QueryError {
    #[error("query has no searchable tokens")]
    EmptyQuery,
    #[error("parameter {name}: {reason}")]
    BadParameter { name: String, reason: String },
    #[error("unknown domain {0}")]
    UnknownDomain(String),
}

impl QueryError {
    /// Machine-readable reason.
    pub fn code(&self) -> &'static str {
        match self {
            QueryError::EmptyQuery => "empty_query",
            QueryError::BadParameter { .. } => "bad_parameter",
            QueryError::UnknownDomain(_) => "unknown_domain",
        }
    }

    pub fn bad(name: &str, reason: impl Into<String>) -> Self {
        QueryError::BadParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateView {
    pub x: f64,
    pub k: f64,
    pub k_percent_per_year: f64,
    pub scored_patent_count: usize,
    pub x_out_of_range: bool,
}

impl From<&RateEstimate> for RateView {
    fn from(e: &RateEstimate) -> Self {
        RateView {
            x: e.x,
            k: e.k,
            k_percent_per_year: e.k * 100.0,
            scored_patent_count: e.scored_patent_count,
            x_out_of_range: e.x_out_of_range,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatentView {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub grant_date: String,
    pub percentile: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleView {
    pub seed: u64,
    pub top_central: Vec<PatentView>,
    pub random: Vec<PatentView>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainMatchView {
    pub rank: usize,
    pub domain_code: String,
    pub upc_class: String,
    pub ipc_class: String,
    pub domain_size: usize,
    pub matched_count: usize,
    pub precision: f64,
    pub recall: f64,
    pub mpr: f64,
    pub rate: Option<RateView>,
    pub sample: SampleView,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResponse {
    pub schema_version: u32,
    pub query: String,
    pub tokens: Vec<String>,
    pub semantics: &'static str,
    pub matched_patents: usize,
    pub results: Vec<DomainMatchView>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainSummary {
    pub domain_code: String,
    pub upc_class: String,
    pub ipc_class: String,
    pub size: usize,
    pub pre_dedup_size: usize,
    pub expected_overlap: f64,
    pub rate: Option<RateView>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainListResponse {
    pub schema_version: u32,
    pub sort: &'static str,
    pub total: usize,
    pub domains: Vec<DomainSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainResponse {
    pub schema_version: u32,
    pub domain: DomainSummary,
    pub sample: SampleView,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatentsResponse {
    pub schema_version: u32,
    pub domain_code: String,
    pub kind: &'static str,
    pub seed: Option<u64>,
    pub patents: Vec<PatentView>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HealthResponse {
    pub schema_version: u32,
    pub status: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub domains: usize,
    pub indexed_patents: usize,
    pub artifacts: BTreeMap<String, ManifestEntry>,
}

struct DomainData {
    row: DomainRow,
    patents: Vec<u32>,
    rate: Option<RateEstimate>,
}

pub struct SearchEngine {
    store: CorpusStore,
    index: InvertedIndex,
    percentile: Vec<Option<f64>>,
    /// Valid domains by code.
    domains: BTreeMap<String, DomainData>,
    manifest: Manifest,
    sample_seed: u64,
}

impl SearchEngine {
    /// Loads a complete artifact directory after verifying the manifest
    /// checksums. `sample_seed` seeds the random samples unless a request
    /// supplies its own.
    pub fn load(dir: &Path, sample_seed: u64) -> Result<Self, ArtifactError> {
        let manifest = Manifest::read(dir)?;
        manifest.verify(dir)?;
        let store = read_corpus(dir)?;
        let index = read_index(dir, &store)?;
        let percentile = read_percentiles(dir, &store)?;
        let mut members = read_assignments(dir, &store)?;
        let mut rates: BTreeMap<String, RateEstimate> =
            read_rates(dir)?.into_iter().map(|e| (e.domain_code.clone(), e)).collect();
        let domains = read_domains(dir)?
            .into_iter()
            .filter_map(|row| {
                let patents = members.remove(&row.domain_code)?;
                let rate = rates.remove(&row.domain_code);
                Some((row.domain_code.clone(), DomainData { row, patents, rate }))
            })
            .collect();
        Ok(SearchEngine {
            store,
            index,
            percentile,
            domains,
            manifest,
            sample_seed,
        })
    }

    pub fn domain_count(&self) -> usize {
        self.domains.len()
    }

    fn patent_view(&self, p: u32) -> PatentView {
        let r = self.store.patent(p);
        PatentView {
            id: r.id.clone(),
            title: r.title.clone(),
            abstract_text: r.abstract_text.clone(),
            grant_date: r.grant_date.to_string(),
            percentile: self.percentile[p as usize],
        }
    }

    fn sample(&self, d: &DomainData, seed: u64) -> SampleView {
        SampleView {
            seed,
            top_central: top_central(&d.patents, &self.percentile, SAMPLE_SIZE)
                .into_iter()
                .map(|p| self.patent_view(p))
                .collect(),
            random: random_sample(&d.patents, seed, SAMPLE_SIZE)
                .into_iter()
                .map(|p| self.patent_view(p))
                .collect(),
        }
    }

    fn summary(d: &DomainData) -> DomainSummary {
        DomainSummary {
            domain_code: d.row.domain_code.clone(),
            upc_class: d.row.upc_class.clone(),
            ipc_class: d.row.ipc_class.clone(),
            size: d.patents.len(),
            pre_dedup_size: d.row.pre_dedup_size,
            expected_overlap: d.row.expected_overlap,
            rate: d.rate.as_ref().map(RateView::from),
        }
    }

    fn get(&self, code: &str) -> Result<&DomainData, QueryError> {
        self.domains.get(code).ok_or_else(|| QueryError::UnknownDomain(code.to_string()))
    }

    /// AND search over titles and abstracts, then the top `n` domains by MPR.
    pub fn search(&self, query: &str, n: Option<usize>) -> Result<SearchResponse, QueryError> {
        let n = n.unwrap_or(DEFAULT_TOP_N);
        if n == 0 || n > MAX_RESULTS {
            return Err(QueryError::bad("n", format!("must be between 1 and {MAX_RESULTS}")));
        }
        let mut tokens = tokenize(query);
        tokens.sort();
        tokens.dedup();
        let q = self.index.search(query).map_err(|_| QueryError::EmptyQuery)?;
        let scores = rank_domains(&q, self.domains.iter().map(|(c, d)| (c.as_str(), d.patents.as_slice())), n);
        let results = scores
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                let d = &self.domains[&s.domain_code];
                DomainMatchView {
                    rank: i + 1,
                    upc_class: d.row.upc_class.clone(),
                    ipc_class: d.row.ipc_class.clone(),
                    domain_size: s.domain_size,
                    matched_count: s.matched_count,
                    precision: s.precision,
                    recall: s.recall,
                    mpr: s.mpr,
                    rate: d.rate.as_ref().map(RateView::from),
                    sample: self.sample(d, self.sample_seed),
                    domain_code: s.domain_code,
                }
            })
            .collect();
        Ok(SearchResponse {
            schema_version: SCHEMA_VERSION,
            query: query.to_string(),
            tokens,
            semantics: "and",
            matched_patents: q.len(),
            results,
        })
    }

    /// Valid domains sorted by K (descending, unrated last) or size
    /// (descending), ties by code.
    pub fn domains(&self, sort: Option<&str>, limit: Option<usize>) -> Result<DomainListResponse, QueryError> {
        let sort = match sort.unwrap_or("k") {
            "k" => "k",
            "size" => "size",
            other => return Err(QueryError::bad("sort", format!("expected k or size, got {other:?}"))),
        };
        let limit = limit.unwrap_or(MAX_LIST);
        if limit == 0 || limit > MAX_LIST {
            return Err(QueryError::bad("limit", format!("must be between 1 and {MAX_LIST}")));
        }
        let mut list: Vec<&DomainData> = self.domains.values().collect();
        if sort == "k" {
            list.sort_by(|a, b| {
                let (ka, kb) = (a.rate.as_ref().map(|r| r.k), b.rate.as_ref().map(|r| r.k));
                kb.partial_cmp(&ka).unwrap_or(std::cmp::Ordering::Equal)
            });
        } else {
            list.sort_by(|a, b| b.patents.len().cmp(&a.patents.len()));
        }
        Ok(DomainListResponse {
            schema_version: SCHEMA_VERSION,
            sort,
            total: list.len(),
            domains: list.into_iter().take(limit).map(Self::summary).collect(),
        })
    }

    pub fn domain(&self, code: &str) -> Result<DomainResponse, QueryError> {
        let d = self.get(code)?;
        Ok(DomainResponse {
            schema_version: SCHEMA_VERSION,
            domain: Self::summary(d),
            sample: self.sample(d, self.sample_seed),
        })
    }

    /// `kind` is `top` (default) or `random`; `seed` only applies to `random`.
    pub fn patents(&self, code: &str, kind: Option<&str>, seed: Option<u64>) -> Result<PatentsResponse, QueryError> {
        let d = self.get(code)?;
        let (kind, seed, ids) = match kind.unwrap_or("top") {
            "top" => ("top", None, top_central(&d.patents, &self.percentile, SAMPLE_SIZE)),
            "random" => {
                let s = seed.unwrap_or(self.sample_seed);
                ("random", Some(s), random_sample(&d.patents, s, SAMPLE_SIZE))
            }
            other => return Err(QueryError::bad("kind", format!("expected top or random, got {other:?}"))),
        };
        Ok(PatentsResponse {
            schema_version: SCHEMA_VERSION,
            domain_code: code.to_string(),
            kind,
            seed,
            patents: ids.into_iter().map(|p| self.patent_view(p)).collect(),
        })
    }

    pub fn health(&self) -> HealthResponse {
        HealthResponse {
            schema_version: SCHEMA_VERSION,
            status: "ok",
            config_hash: self.manifest.config_hash.clone(),
            seed: self.manifest.seed,
            domains: self.domains.len(),
            indexed_patents: self.index.indexed(),
            artifacts: self.manifest.artifacts.clone(),
        }
    }
}
