//! TSV ingestion with a malformed-row budget and a load report.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    parse_date, CitationRecord, ClassList, ClassLists, ClassMembership, ClassSystem, CorpusError,
    CorpusStore, KindPrefix, PatentRecord, RowError,
};

pub const PATENT_HEADER: [&str; 5] = ["id", "grant_date", "kind_prefix", "title", "abstract"];
pub const UPC_HEADER: [&str; 3] = ["patent_id", "class_label", "is_primary"];
pub const IPC_HEADER: [&str; 2] = ["patent_id", "class_label"];
pub const CITATION_HEADER: [&str; 2] = ["citing_id", "cited_id"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusPaths {
    pub patents: PathBuf,
    pub upc: PathBuf,
    pub ipc: PathBuf,
    pub citations: PathBuf,
    pub upc_classes: PathBuf,
    pub ipc_classes: PathBuf,
}

impl CorpusPaths {
    /// The standard file names inside one directory.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        CorpusPaths {
            patents: dir.join("patents.tsv"),
            upc: dir.join("upc.tsv"),
            ipc: dir.join("ipc.tsv"),
            citations: dir.join("citations.tsv"),
            upc_classes: dir.join("upc_classes.txt"),
            ipc_classes: dir.join("ipc_classes.txt"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadOptions {
    /// Fraction of data rows allowed to be malformed before loading aborts.
    pub error_budget: f64,
    /// Labels whose presence is tallied in the report (they are still loaded).
    pub flag_labels: Vec<String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            error_budget: 0.001,
            flag_labels: vec!["G9B".to_string()],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub patent_rows: usize,
    pub upc_rows: usize,
    pub ipc_rows: usize,
    pub citation_rows: usize,
    pub malformed_rows: usize,
    pub malformed_budget: usize,
    pub malformed_samples: Vec<RowError>,
    pub unknown_patent_memberships: usize,
    pub unknown_class_memberships: usize,
    pub dangling_citations: usize,
    pub self_citations: usize,
    pub duplicate_citations: usize,
    pub promoted_primary: usize,
    pub demoted_primary: usize,
    pub flagged_label_rows: BTreeMap<String, usize>,
    pub patents: usize,
    pub citations: usize,
    pub patents_without_upc: usize,
    pub patents_without_ipc: usize,
}

impl LoadReport {
    pub fn dropped_rows(&self) -> usize {
        self.malformed_rows
            + self.unknown_patent_memberships
            + self.unknown_class_memberships
            + self.dangling_citations
            + self.self_citations
            + self.duplicate_citations
    }
}

struct RowSink {
    errors: Vec<RowError>,
    count: usize,
}

impl RowSink {
    fn push(&mut self, file: &Path, line: u64, reason: impl Into<String>) {
        self.count += 1;
        if self.errors.len() < 100 {
            self.errors.push(RowError {
                file: file.display().to_string(),
                line,
                reason: reason.into(),
            });
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read_class_list(path: &Path) -> Result<ClassList, CorpusError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut labels = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| io_err(path, e))?;
        let label = line.trim();
        if !label.is_empty() {
            labels.push(label.to_string());
        }
    }
    Ok(ClassList::new(labels))
}

/// Iterates data rows of a headed TSV file, validating the header and the
/// column count. Rows the callback rejects go to `sink`.
fn read_tsv(
    path: &Path,
    header: &[&str],
    sink: &mut RowSink,
    mut row: impl FnMut(&csv::StringRecord) -> Result<(), String>,
) -> Result<usize, CorpusError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .quoting(false)
        .flexible(true)
        .has_headers(true)
        .from_reader(BufReader::new(file));
    let found = rdr.headers().map_err(|e| csv_io(path, e))?.clone();
    if found.iter().map(str::trim).ne(header.iter().copied()) {
        return Err(CorpusError::Header {
            path: path.display().to_string(),
            expected: header.join(", "),
            found: found.iter().collect::<Vec<_>>().join(", "),
        });
    }
    let mut rows = 0;
    let mut record = csv::StringRecord::new();
    loop {
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                rows += 1;
                let line = record.position().map_or(0, |p| p.line());
                if record.len() != header.len() {
                    sink.push(
                        path,
                        line,
                        format!("expected {} columns, found {}", header.len(), record.len()),
                    );
                    continue;
                }
                if let Err(reason) = row(&record) {
                    sink.push(path, line, reason);
                }
            }
            Err(e) => {
                if let csv::ErrorKind::Io(_) = e.kind() {
                    return Err(csv_io(path, e));
                }
                rows += 1;
                let line = e.position().map_or(0, |p| p.line());
                sink.push(path, line, e.to_string());
            }
        }
    }
    Ok(rows)
}

fn csv_io(path: &Path, e: csv::Error) -> CorpusError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io_err(path, io),
        other => io_err(
            path,
            std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{other:?}")),
        ),
    }
}

/// Loads and cross-references the four corpus files plus the class lists.
///
/// Rows pointing at unknown patents or unknown class labels are dropped and
/// tallied; rows that do not parse count against the malformed-row budget.
pub fn load_corpus(
    paths: &CorpusPaths,
    options: &LoadOptions,
) -> Result<(CorpusStore, LoadReport), CorpusError> {
    let class_lists = ClassLists {
        upc: read_class_list(&paths.upc_classes)?,
        ipc: read_class_list(&paths.ipc_classes)?,
    };
    let mut report = LoadReport::default();
    let mut sink = RowSink { errors: Vec::new(), count: 0 };
    let flagged: HashSet<&str> = options.flag_labels.iter().map(String::as_str).collect();

    let mut patents = Vec::new();
    let mut lookup: HashMap<String, u32> = HashMap::new();
    report.patent_rows = read_tsv(&paths.patents, &PATENT_HEADER, &mut sink, |r| {
        let id = r[0].trim();
        let parsed = (|| -> Result<PatentRecord, String> {
            if id.is_empty() {
                return Err("empty patent id".into());
            }
            let grant_date = parse_date(r[1].trim())
                .ok_or_else(|| format!("grant_date {:?} is not YYYY-MM-DD", &r[1]))?;
            let kind = r[2].trim().parse::<KindPrefix>()?;
            Ok(PatentRecord {
                id: id.to_string(),
                grant_date,
                kind,
                main_class: None,
                title: r[3].to_string(),
                abstract_text: r[4].to_string(),
            })
        })();
        let p = parsed?;
        if lookup.contains_key(&p.id) {
            return Err(format!("duplicate patent id {}", p.id));
        }
        lookup.insert(p.id.clone(), patents.len() as u32);
        patents.push(p);
        Ok(())
    })?;

    // First-listed UPC membership per patent, for primary promotion.
    let mut memberships: Vec<ClassMembership> = Vec::new();
    let mut upc_listing: HashMap<u32, Vec<usize>> = HashMap::new();
    report.upc_rows = read_tsv(&paths.upc, &UPC_HEADER, &mut sink, |r| {
        let label = r[1].trim();
        if flagged.contains(label) {
            *report.flagged_label_rows.entry(label.to_string()).or_default() += 1;
        }
        let is_primary = match r[2].trim() {
            "1" => true,
            "0" => false,
            other => return Err(format!("is_primary must be 0 or 1, found {other:?}")),
        };
        let Some(&patent) = lookup.get(r[0].trim()) else {
            report.unknown_patent_memberships += 1;
            return Ok(());
        };
        let Some(class) = class_lists.upc.get(label) else {
            report.unknown_class_memberships += 1;
            return Ok(());
        };
        upc_listing.entry(patent).or_default().push(memberships.len());
        memberships.push(ClassMembership { patent, system: ClassSystem::Upc, class, is_primary });
        Ok(())
    })?;

    for slots in upc_listing.values() {
        let primaries: Vec<usize> = slots.iter().copied().filter(|&s| memberships[s].is_primary).collect();
        match primaries.as_slice() {
            [] => {
                memberships[slots[0]].is_primary = true;
                report.promoted_primary += 1;
            }
            [_] => {}
            [_, rest @ ..] => {
                for &s in rest {
                    memberships[s].is_primary = false;
                    report.demoted_primary += 1;
                }
            }
        }
    }

    report.ipc_rows = read_tsv(&paths.ipc, &IPC_HEADER, &mut sink, |r| {
        let label = r[1].trim();
        if flagged.contains(label) {
            *report.flagged_label_rows.entry(label.to_string()).or_default() += 1;
        }
        let Some(&patent) = lookup.get(r[0].trim()) else {
            report.unknown_patent_memberships += 1;
            return Ok(());
        };
        let Some(class) = class_lists.ipc.get(label) else {
            report.unknown_class_memberships += 1;
            return Ok(());
        };
        memberships.push(ClassMembership { patent, system: ClassSystem::Ipc, class, is_primary: false });
        Ok(())
    })?;

    let mut citations = Vec::new();
    let mut seen: HashSet<(u32, u32)> = HashSet::new();
    report.citation_rows = read_tsv(&paths.citations, &CITATION_HEADER, &mut sink, |r| {
        let (Some(&citing), Some(&cited)) = (lookup.get(r[0].trim()), lookup.get(r[1].trim())) else {
            report.dangling_citations += 1;
            return Ok(());
        };
        if citing == cited {
            report.self_citations += 1;
        } else if !seen.insert((citing, cited)) {
            report.duplicate_citations += 1;
        } else {
            citations.push(CitationRecord { citing, cited });
        }
        Ok(())
    })?;

    let total_rows = report.patent_rows + report.upc_rows + report.ipc_rows + report.citation_rows;
    report.malformed_rows = sink.count;
    report.malformed_budget = (options.error_budget.max(0.0) * total_rows as f64).floor() as usize;
    if sink.count > report.malformed_budget {
        return Err(CorpusError::Malformed {
            count: sink.count,
            budget: report.malformed_budget,
            rows: sink.errors,
        });
    }
    report.malformed_samples = sink.errors;

    let store = CorpusStore::assemble(patents, memberships, citations, class_lists)?;
    let summary = store.summary();
    report.patents = summary.patents;
    report.citations = summary.citations;
    report.patents_without_upc = summary.patents_without_upc;
    report.patents_without_ipc = summary.patents_without_ipc;
    Ok((store, report))
}
