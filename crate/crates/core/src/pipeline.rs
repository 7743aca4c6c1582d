//! Pipeline stages. Each stage reads its inputs from the artifact directory
//! and writes its outputs back, then refreshes the manifest; `run` is the
//! stages in order, so a staged run and a monolithic run write the same bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use log::{debug, info};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifacts::{self as art, parse_field, read_tsv, require, write_json, write_tsv, ArtifactError, Manifest};
use crate::config::PipelineConfig;
use crate::corpus::{filter_corpus, load_corpus, write_corpus, CorpusPaths, CorpusStore, LoadOptions};
use crate::domainforge::{compute_overlaps, coverage_report, decompose, DomainStatus};
use crate::nullmodel::{cohort_centrality, domain_mean_centrality, CohortDiagnostics};
use crate::rates::{
    dedup_sensitivity, estimate_rate, fit_distribution, normality_tests, size_regression, Family, FitResult,
    NormalityReport, OlsFit, RateEstimate, RegressionModel,
};
use crate::search::InvertedIndex;
use crate::spnp::{cohort_scores, scorable_cohorts, CitationNetwork};

pub const STAGES: [&str; 6] = ["ingest", "decompose", "centrality", "estimate", "stats", "index"];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error("stage {stage} failed: {message}")]
    Stage { stage: &'static str, message: String },
}

fn stage_err(stage: &'static str) -> impl Fn(&dyn std::fmt::Display) -> PipelineError {
    move |e| PipelineError::Stage {
        stage,
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: String,
    pub summary: Vec<String>,
    pub warnings: Vec<String>,
}

impl StageReport {
    fn new(stage: &str) -> Self {
        StageReport {
            stage: stage.to_string(),
            ..Default::default()
        }
    }

    fn note(&mut self, s: String) {
        debug!("{}: {s}", self.stage);
        self.summary.push(s);
    }

    fn warn(&mut self, s: String) {
        debug!("{}: warning: {s}", self.stage);
        self.warnings.push(s);
    }
}

fn finish(config: &PipelineConfig, report: StageReport) -> Result<StageReport, PipelineError> {
    Manifest::scan(&config.output_dir, &config.hash(), config.seed)?.write(&config.output_dir)?;
    Ok(report)
}

pub fn run_stage(name: &str, config: &PipelineConfig) -> Result<StageReport, PipelineError> {
    match name {
        "ingest" => ingest(config),
        "decompose" => decompose_stage(config),
        "centrality" => centrality(config),
        "estimate" => estimate(config),
        "stats" => stats(config),
        "index" => index(config),
        other => Err(PipelineError::Stage {
            stage: "run",
            message: format!("unknown stage {other:?}"),
        }),
    }
}

/// All stages in order. On failure the artifacts of completed stages remain
/// and the failing stage can be rerun on its own.
pub fn run(config: &PipelineConfig) -> Result<Vec<StageReport>, PipelineError> {
    STAGES.iter().map(|s| run_stage(s, config)).collect()
}

// ---- readers shared with the search service ----

/// Loads the filtered corpus written by `ingest`.
pub fn read_corpus(dir: &Path) -> Result<CorpusStore, ArtifactError> {
    let cdir = require(dir, art::CORPUS_DIR)?;
    for f in art::CORPUS_FILES {
        require(&cdir, f).map_err(|_| ArtifactError::Missing {
            path: cdir.join(f).display().to_string(),
            producer: "ingest".into(),
        })?;
    }
    let options = LoadOptions {
        error_budget: 0.0,
        flag_labels: Vec::new(),
    };
    load_corpus(&CorpusPaths::in_dir(&cdir), &options)
        .map(|(store, _)| store)
        .map_err(|e| ArtifactError::Parse {
            path: cdir.display().to_string(),
            reason: e.to_string(),
        })
}

pub const DOMAINS_HEADER: [&str; 7] = [
    "domain_code",
    "upc_class",
    "ipc_class",
    "status",
    "size",
    "pre_dedup_size",
    "expected_overlap",
];
pub const ASSIGNMENTS_HEADER: [&str; 2] = ["patent_id", "domain_code"];
pub const SPNP_HEADER: [&str; 6] = ["patent_id", "cohort_year", "cutoff_year", "n_minus", "n_plus", "spnp"];
pub const CENTRALITY_HEADER: [&str; 7] = [
    "patent_id",
    "cohort_year",
    "spnp_observed",
    "null_mean",
    "null_std",
    "z",
    "percentile",
];
pub const RATES_HEADER: [&str; 4] = ["domain_code", "X", "K", "scored_patent_count"];
pub const INDEX_HEADER: [&str; 3] = ["token", "document_count", "patent_ids"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainRow {
    pub domain_code: String,
    pub upc_class: String,
    pub ipc_class: String,
    pub status: DomainStatus,
    pub size: usize,
    pub pre_dedup_size: usize,
    pub expected_overlap: f64,
}

pub fn read_domains(dir: &Path) -> Result<Vec<DomainRow>, ArtifactError> {
    let path = require(dir, art::DOMAINS)?;
    read_tsv(&path, &DOMAINS_HEADER)?
        .into_iter()
        .map(|r| {
            Ok(DomainRow {
                status: DomainStatus::parse(&r[3]).ok_or_else(|| ArtifactError::Parse {
                    path: path.display().to_string(),
                    reason: format!("bad status {:?}", r[3]),
                })?,
                size: parse_field(&path, &r[4], "size")?,
                pre_dedup_size: parse_field(&path, &r[5], "pre_dedup_size")?,
                expected_overlap: parse_field(&path, &r[6], "expected_overlap")?,
                domain_code: r[0].clone(),
                upc_class: r[1].clone(),
                ipc_class: r[2].clone(),
            })
        })
        .collect()
}

fn patent_index(store: &CorpusStore, path: &Path, id: &str) -> Result<u32, ArtifactError> {
    store.index_of(id).ok_or_else(|| ArtifactError::Parse {
        path: path.display().to_string(),
        reason: format!("unknown patent id {id:?}"),
    })
}

/// Valid domains and their sorted patent indices, keyed by code.
pub fn read_assignments(dir: &Path, store: &CorpusStore) -> Result<BTreeMap<String, Vec<u32>>, ArtifactError> {
    let path = require(dir, art::ASSIGNMENTS)?;
    let mut out: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    for r in read_tsv(&path, &ASSIGNMENTS_HEADER)? {
        let p = patent_index(store, &path, &r[0])?;
        out.entry(r[1].clone()).or_default().push(p);
    }
    for v in out.values_mut() {
        v.sort_unstable();
    }
    Ok(out)
}

/// Normalized percentile per patent; `None` for patents in no scored cohort.
pub fn read_percentiles(dir: &Path, store: &CorpusStore) -> Result<Vec<Option<f64>>, ArtifactError> {
    let path = require(dir, art::CENTRALITY)?;
    let mut out = vec![None; store.len()];
    for r in read_tsv(&path, &CENTRALITY_HEADER)? {
        let p = patent_index(store, &path, &r[0])?;
        out[p as usize] = Some(parse_field(&path, &r[6], "percentile")?);
    }
    Ok(out)
}

pub fn read_rates(dir: &Path) -> Result<Vec<RateEstimate>, ArtifactError> {
    let path = require(dir, art::RATES)?;
    read_tsv(&path, &RATES_HEADER)?
        .into_iter()
        .map(|r| {
            let x: f64 = parse_field(&path, &r[1], "X")?;
            Ok(RateEstimate {
                domain_code: r[0].clone(),
                x,
                k: parse_field(&path, &r[2], "K")?,
                scored_patent_count: parse_field(&path, &r[3], "scored_patent_count")?,
                x_out_of_range: !(0.0..=1.0).contains(&x),
            })
        })
        .collect()
}

pub fn read_index(dir: &Path, store: &CorpusStore) -> Result<InvertedIndex, ArtifactError> {
    let path = require(dir, art::INDEX)?;
    let mut postings = BTreeMap::new();
    for r in read_tsv(&path, &INDEX_HEADER)? {
        let ids: Vec<u32> = if r[2].is_empty() {
            Vec::new()
        } else {
            r[2].split(',').map(|id| patent_index(store, &path, id)).collect::<Result<_, _>>()?
        };
        postings.insert(r[0].clone(), ids);
    }
    let indexed = store.patents().iter().filter(|p| p.has_text()).count();
    Ok(InvertedIndex::from_postings(postings, indexed, store.len() - indexed))
}

// ---- stages ----

pub fn ingest(config: &PipelineConfig) -> Result<StageReport, PipelineError> {
    let err = stage_err("ingest");
    let mut report = StageReport::new("ingest");
    let out = &config.output_dir;
    let (raw, load_report) = load_corpus(&CorpusPaths::in_dir(&config.input_dir), &config.load_options()).map_err(|e| err(&e))?;
    let (store, filter_report) = filter_corpus(&raw, &config.filter()).map_err(|e| err(&e))?;
    fs::create_dir_all(out).map_err(|e| err(&format!("cannot create {}: {e}", out.display())))?;
    write_corpus(&store, &out.join(art::CORPUS_DIR)).map_err(|e| err(&e))?;
    write_json(&out.join(art::LOAD_REPORT), &load_report)?;
    write_json(&out.join(art::FILTER_REPORT), &filter_report)?;
    report.note(format!(
        "loaded {} patents and {} citations; {} retained after filtering",
        load_report.patents, load_report.citations, filter_report.retained_patents
    ));
    if load_report.malformed_rows > 0 {
        report.warn(format!("{} malformed rows skipped", load_report.malformed_rows));
    }
    if load_report.dangling_citations > 0 {
        report.warn(format!("{} citations to patents outside the corpus dropped", load_report.dangling_citations));
    }
    finish(config, report)
}

pub fn decompose_stage(config: &PipelineConfig) -> Result<StageReport, PipelineError> {
    let mut report = StageReport::new("decompose");
    let out = &config.output_dir;
    let store = read_corpus(out)?;
    let decomp = decompose(&store, config.min_size);
    write_tsv(
        &out.join(art::DOMAINS),
        &DOMAINS_HEADER,
        decomp.domains.iter().map(|d| {
            vec![
                d.code.clone(),
                d.key.upc_label.clone(),
                d.key.ipc_label.clone(),
                d.status.as_str().to_string(),
                d.size.to_string(),
                d.pre_dedup_size.to_string(),
                d.expected_overlap.to_string(),
            ]
        }),
    )?;
    let owner = decomp.assignment();
    write_tsv(
        &out.join(art::ASSIGNMENTS),
        &ASSIGNMENTS_HEADER,
        owner.iter().enumerate().filter_map(|(p, o)| {
            let d = &decomp.domains[(*o)?];
            (d.status == DomainStatus::Valid).then(|| vec![store.patent(p as u32).id.clone(), d.code.clone()])
        }),
    )?;
    let coverage = coverage_report(&decomp, &store);
    write_json(&out.join(art::COVERAGE), &coverage)?;
    report.note(format!(
        "{} valid domains covering {} of {} patents",
        coverage.valid_domains, coverage.valid_patents, coverage.total_patents
    ));
    if coverage.valid_domains == 0 {
        report.warn(format!("no domain reaches min_size {}; rates will be empty", config.min_size));
    }
    finish(config, report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullModelDiagnostics {
    pub horizon_years: i32,
    pub replicates: usize,
    pub swap_factor: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub scored_cohorts: Vec<i32>,
    pub scored_patents: usize,
    pub unscored_patents: usize,
    pub cohorts: Vec<CohortDiagnostics>,
}

pub fn centrality(config: &PipelineConfig) -> Result<StageReport, PipelineError> {
    let err = stage_err("centrality");
    let mut report = StageReport::new("centrality");
    let out = &config.output_dir;
    let store = read_corpus(out)?;
    let network = CitationNetwork::new(&store);
    let cohorts = scorable_cohorts(&network, config.horizon_years);
    let null = config.null();
    let mut spnp_rows = Vec::new();
    let mut rows = Vec::new();
    let mut diags = Vec::new();
    for &year in &cohorts {
        let (dag, scores) = cohort_scores(&network, year, config.horizon_years).map_err(|e| err(&e))?;
        for s in &scores {
            spnp_rows.push(vec![
                store.patent(s.patent).id.clone(),
                year.to_string(),
                s.cutoff_year.to_string(),
                s.n_minus.to_string(),
                s.n_plus.to_string(),
                s.value.to_string(),
            ]);
        }
        let (r, d) = cohort_centrality(&store, &dag, year, &null).map_err(|e| err(&e))?;
        info!("cohort {year}: {} patents, {} arcs in snapshot", r.len(), d.arcs);
        rows.extend(r);
        diags.push(d);
    }
    write_tsv(&out.join(art::SPNP), &SPNP_HEADER, spnp_rows)?;
    write_tsv(
        &out.join(art::CENTRALITY),
        &CENTRALITY_HEADER,
        rows.iter().map(|r| {
            vec![
                store.patent(r.patent).id.clone(),
                r.cohort_year.to_string(),
                r.spnp_observed.to_string(),
                r.null_mean.to_string(),
                r.null_std.to_string(),
                r.z.to_string(),
                r.percentile.to_string(),
            ]
        }),
    )?;
    let diagnostics = NullModelDiagnostics {
        horizon_years: config.horizon_years,
        replicates: config.replicates,
        swap_factor: config.swap_factor,
        epsilon: config.epsilon,
        seed: config.seed,
        scored_cohorts: cohorts.clone(),
        scored_patents: rows.len(),
        unscored_patents: store.len() - rows.len(),
        cohorts: diags,
    };
    write_json(&out.join(art::NULL_DIAGNOSTICS), &diagnostics)?;
    report.note(format!(
        "{} patents scored across {} cohorts with R = {}",
        rows.len(),
        cohorts.len(),
        config.replicates
    ));
    if cohorts.is_empty() {
        report.warn(format!(
            "no cohort has {} years of citations after it; nothing scored",
            config.horizon_years
        ));
    }
    finish(config, report)
}

pub fn estimate(config: &PipelineConfig) -> Result<StageReport, PipelineError> {
    let err = stage_err("estimate");
    let mut report = StageReport::new("estimate");
    let out = &config.output_dir;
    let store = read_corpus(out)?;
    let domains = read_assignments(out, &store)?;
    let percentile = read_percentiles(out, &store)?;
    let model = config.model();
    write_json(&out.join(art::MODEL), &model)?;
    let means = domain_mean_centrality(domains.iter().map(|(c, p)| (c.as_str(), p.as_slice())), &percentile);
    let mut estimates = Vec::new();
    for m in &means {
        match m.x {
            Some(x) => estimates.push(estimate_rate(&model, &m.code, x, m.scored).map_err(|e| err(&e))?),
            None => report.warn(format!("domain {} has no scored patents; no rate estimated", m.code)),
        }
    }
    write_rates(&out.join(art::RATES), &estimates)?;
    report.note(format!(
        "{} rates estimated with slope {}, intercept {}, sigma2 {}",
        estimates.len(),
        model.slope,
        model.intercept,
        model.sigma2
    ));
    if domains.is_empty() {
        report.warn("no valid domains; rates table is empty".to_string());
    }
    finish(config, report)
}

fn write_rates(path: &Path, estimates: &[RateEstimate]) -> Result<(), ArtifactError> {
    write_tsv(
        path,
        &RATES_HEADER,
        estimates.iter().map(|e| {
            vec![
                e.domain_code.clone(),
                e.x.to_string(),
                e.k.to_string(),
                e.scored_patent_count.to_string(),
            ]
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub family: Family,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<FitResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableFits {
    pub n: usize,
    pub fits: Vec<FitEntry>,
    pub best_by_sse: Option<Family>,
    pub best_by_aic: Option<Family>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitsReport {
    /// Fits of the estimated rates K.
    pub k: VariableFits,
    /// Fits of the domain mean centralities X.
    pub x: VariableFits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestEntry {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<NormalityReport>,
    /// Rejections at alpha = 0.01 by (D'Agostino, KS, Anderson-Darling).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejects_at_1pct: Option<[bool; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestsReport {
    pub k: TestEntry,
    pub x: TestEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeRegressionReport {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<OlsFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupReport {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<crate::rates::DedupSensitivity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn fit_all(samples: &[f64]) -> VariableFits {
    let fits: Vec<FitEntry> = Family::ALL
        .iter()
        .map(|&family| match fit_distribution(samples, family) {
            Ok(r) => FitEntry { family, result: Some(r), error: None },
            Err(e) => FitEntry { family, result: None, error: Some(e.to_string()) },
        })
        .collect();
    let best = |key: fn(&FitResult) -> f64| {
        fits.iter()
            .filter_map(|f| f.result.as_ref().map(|r| (f.family, key(r))))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(f, _)| f)
    };
    VariableFits {
        n: samples.len(),
        best_by_sse: best(|r| r.sse),
        best_by_aic: best(|r| r.aic),
        fits,
    }
}

fn test_all(samples: &[f64]) -> TestEntry {
    match normality_tests(samples) {
        Ok(r) => TestEntry {
            n: samples.len(),
            rejects_at_1pct: Some(r.rejects(0.01)),
            report: Some(r),
            error: None,
        },
        Err(e) => TestEntry {
            n: samples.len(),
            report: None,
            rejects_at_1pct: None,
            error: Some(e.to_string()),
        },
    }
}

pub fn stats(config: &PipelineConfig) -> Result<StageReport, PipelineError> {
    let err = stage_err("stats");
    let mut report = StageReport::new("stats");
    let out = &config.output_dir;
    let rates = read_rates(out)?;
    let store = read_corpus(out)?;
    let domains = read_assignments(out, &store)?;
    let percentile = read_percentiles(out, &store)?;
    let model: RegressionModel = art::read_json(&require(out, art::MODEL)?)?;

    let ks: Vec<f64> = rates.iter().map(|e| e.k).collect();
    let xs: Vec<f64> = rates.iter().map(|e| e.x).collect();
    let fits = FitsReport { k: fit_all(&ks), x: fit_all(&xs) };
    for (name, v) in [("K", &fits.k), ("X", &fits.x)] {
        for f in &v.fits {
            if let Some(e) = &f.error {
                report.warn(format!("{} fit of {name} not available: {e}", f.family.as_str()));
            }
        }
    }
    write_json(&out.join(art::FITS), &fits)?;
    write_json(&out.join(art::TESTS), &TestsReport { k: test_all(&ks), x: test_all(&xs) })?;

    let sizes: Vec<usize> = rates.iter().map(|e| domains.get(&e.domain_code).map_or(0, Vec::len)).collect();
    let size_reg = match size_regression(&rates, &sizes) {
        Ok(fit) => SizeRegressionReport { n: rates.len(), fit: Some(fit), error: None },
        Err(e) => SizeRegressionReport { n: rates.len(), fit: None, error: Some(e.to_string()) },
    };
    write_json(&out.join(art::SIZE_REGRESSION), &size_reg)?;

    // Rates on the full pre-dedup overlaps of the same domains.
    let table = compute_overlaps(&store);
    let overlaps: BTreeMap<&str, &[u32]> = table.overlaps.iter().map(|o| (o.code.as_str(), o.patents.as_slice())).collect();
    let mut original = Vec::new();
    let mut dedup = Vec::new();
    for e in &rates {
        let patents = overlaps
            .get(e.domain_code.as_str())
            .ok_or_else(|| err(&format!("domain {} has no overlap in the corpus", e.domain_code)))?;
        let m = &domain_mean_centrality([(e.domain_code.as_str(), *patents)], &percentile)[0];
        if let Some(x) = m.x {
            original.push(estimate_rate(&model, &e.domain_code, x, m.scored).map_err(|e| err(&e))?);
            dedup.push(e.clone());
        }
    }
    let dedup_report = match dedup_sensitivity(&original, &dedup) {
        Ok(c) => DedupReport { n: c.rows.len(), comparison: Some(c), error: None },
        Err(e) => DedupReport { n: 0, comparison: None, error: Some(e.to_string()) },
    };
    write_json(&out.join(art::DEDUP_SENSITIVITY), &dedup_report)?;
    report.note(format!("statistics over {} domain rates", rates.len()));
    finish(config, report)
}

pub fn index(config: &PipelineConfig) -> Result<StageReport, PipelineError> {
    let mut report = StageReport::new("index");
    let out = &config.output_dir;
    let store = read_corpus(out)?;
    let idx = InvertedIndex::build(&store);
    write_tsv(
        &out.join(art::INDEX),
        &INDEX_HEADER,
        idx.postings().iter().map(|(t, ids)| {
            let list: Vec<&str> = ids.iter().map(|&p| store.patent(p).id.as_str()).collect();
            vec![t.clone(), ids.len().to_string(), list.join(",")]
        }),
    )?;
    report.note(format!("{} tokens over {} patents", idx.token_count(), idx.indexed()));
    if idx.omitted() > 0 {
        report.warn(format!("{} patents without title or abstract not indexed", idx.omitted()));
    }
    finish(config, report)
}
