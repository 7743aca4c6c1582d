//! Artifact files shared by the pipeline stages and the search service.
//!
//! Every writer is deterministic: fixed row order, shortest round-trip float
//! formatting and no timestamps, so identical inputs give identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

pub const CORPUS_DIR: &str = "corpus";
pub const LOAD_REPORT: &str = "load_report.json";
pub const FILTER_REPORT: &str = "filter_report.json";
pub const DOMAINS: &str = "domains.tsv";
pub const ASSIGNMENTS: &str = "assignments.tsv";
pub const COVERAGE: &str = "coverage.json";
pub const SPNP: &str = "spnp.tsv";
pub const CENTRALITY: &str = "centrality.tsv";
pub const NULL_DIAGNOSTICS: &str = "nullmodel_diagnostics.json";
pub const MODEL: &str = "model.json";
pub const RATES: &str = "rates.tsv";
pub const FITS: &str = "fits.json";
pub const TESTS: &str = "tests.json";
pub const SIZE_REGRESSION: &str = "size_regression.json";
pub const DEDUP_SENSITIVITY: &str = "dedup_sensitivity.json";
pub const INDEX: &str = "index.tsv";
pub const MANIFEST: &str = "manifest.json";

pub const CORPUS_FILES: [&str; 6] = [
    "patents.tsv",
    "upc.tsv",
    "ipc.tsv",
    "citations.tsv",
    "upc_classes.txt",
    "ipc_classes.txt",
];

/// Artifact files in manifest order, each with the subcommand producing it.
pub fn artifact_files() -> Vec<(String, &'static str)> {
    let mut v: Vec<(String, &'static str)> = CORPUS_FILES
        .iter()
        .map(|f| (format!("{CORPUS_DIR}/{f}"), "ingest"))
        .collect();
    for (f, stage) in [
        (LOAD_REPORT, "ingest"),
        (FILTER_REPORT, "ingest"),
        (DOMAINS, "decompose"),
        (ASSIGNMENTS, "decompose"),
        (COVERAGE, "decompose"),
        (SPNP, "centrality"),
        (CENTRALITY, "centrality"),
        (NULL_DIAGNOSTICS, "centrality"),
        (MODEL, "estimate"),
        (RATES, "estimate"),
        (FITS, "stats"),
        (TESTS, "stats"),
        (SIZE_REGRESSION, "stats"),
        (DEDUP_SENSITIVITY, "stats"),
        (INDEX, "index"),
    ] {
        v.push((f.to_string(), stage));
    }
    v
}

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("missing artifact {path}; run `techrates {producer}` first")]
    Missing { path: String, producer: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Parse { path: String, reason: String },
    #[error("{path}: checksum mismatch with manifest")]
    Checksum { path: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ArtifactError + '_ {
    move |source| ArtifactError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, reason: impl std::fmt::Display) -> ArtifactError {
    ArtifactError::Parse {
        path: path.display().to_string(),
        reason: reason.to_string(),
    }
}

/// Fails with the producing subcommand when `name` is absent from `dir`.
pub fn require(dir: &Path, name: &str) -> Result<PathBuf, ArtifactError> {
    let path = dir.join(name);
    if path.exists() {
        return Ok(path);
    }
    let producer = artifact_files()
        .into_iter()
        .find(|(f, _)| f == name || f.starts_with(&format!("{name}/")))
        .map(|(_, s)| s)
        .unwrap_or("run");
    Err(ArtifactError::Missing {
        path: path.display().to_string(),
        producer: producer.to_string(),
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ArtifactError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| parse_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, ArtifactError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e))
}

/// Writes a tab-separated table. Fields must not contain tabs or newlines.
pub fn write_tsv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), ArtifactError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mut write_row = |fields: &[String]| -> Result<(), ArtifactError> {
        if let Some(bad) = fields.iter().find(|f| f.contains(['\t', '\n', '\r'])) {
            return Err(parse_err(path, format!("field contains a separator: {bad:?}")));
        }
        writeln!(w, "{}", fields.join("\t")).map_err(io_err(path))
    };
    write_row(&header.iter().map(|s| s.to_string()).collect::<Vec<_>>())?;
    for row in rows {
        write_row(&row)?;
    }
    w.flush().map_err(io_err(path))
}

/// Reads a TSV written by [`write_tsv`], checking the header.
pub fn read_tsv(path: &Path, header: &[&str]) -> Result<Vec<Vec<String>>, ArtifactError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines();
    let found = lines.next().unwrap_or_default();
    if found != header.join("\t") {
        return Err(parse_err(path, format!("expected header {:?}, found {found:?}", header.join("\t"))));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let fields: Vec<String> = line.split('\t').map(str::to_string).collect();
            if fields.len() != header.len() {
                return Err(parse_err(path, format!("line {}: expected {} fields, found {}", i + 2, header.len(), fields.len())));
            }
            Ok(fields)
        })
        .collect()
}

pub fn parse_field<T: std::str::FromStr>(path: &Path, field: &str, what: &str) -> Result<T, ArtifactError>
where
    T::Err: std::fmt::Display,
{
    field
        .parse()
        .map_err(|e| parse_err(path, format!("bad {what} {field:?}: {e}")))
}

pub fn sha256_file(path: &Path) -> Result<String, ArtifactError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub sha256: String,
    pub bytes: u64,
    pub producer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub artifacts: BTreeMap<String, ManifestEntry>,
}

impl Manifest {
    /// Checksums every known artifact present in `dir`.
    pub fn scan(dir: &Path, config_hash: &str, seed: u64) -> Result<Self, ArtifactError> {
        let mut artifacts = BTreeMap::new();
        for (name, producer) in artifact_files() {
            let path = dir.join(&name);
            if !path.exists() {
                continue;
            }
            let bytes = fs::metadata(&path).map_err(io_err(&path))?.len();
            artifacts.insert(
                name,
                ManifestEntry {
                    sha256: sha256_file(&path)?,
                    bytes,
                    producer: producer.to_string(),
                },
            );
        }
        Ok(Manifest {
            schema_version: SCHEMA_VERSION,
            config_hash: config_hash.to_string(),
            seed,
            artifacts,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<(), ArtifactError> {
        write_json(&dir.join(MANIFEST), self)
    }

    pub fn read(dir: &Path) -> Result<Self, ArtifactError> {
        read_json(&require(dir, MANIFEST)?)
    }

    /// Recomputes each listed checksum.
    pub fn verify(&self, dir: &Path) -> Result<(), ArtifactError> {
        for (name, entry) in &self.artifacts {
            let path = dir.join(name);
            if sha256_file(&path)? != entry.sha256 {
                return Err(ArtifactError::Checksum { path: path.display().to_string() });
            }
        }
        Ok(())
    }
}
