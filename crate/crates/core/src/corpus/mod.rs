//! Patent corpus: records, class memberships, citations and the class-label
//! universes they are drawn from.
//!
//! Patents are kept sorted by identifier and addressed internally by their
//! position (`u32`), which is what every downstream stage uses. A
//! [`CorpusStore`] is immutable once assembled.

mod filter;
mod load;
mod synth;
mod write;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use filter::{filter_corpus, FilterConfig, FilterReport};
pub use load::{load_corpus, CorpusPaths, LoadOptions, LoadReport};
pub use synth::{generate_synthetic_corpus, SynthConfig};
pub use write::write_corpus;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: expected header [{expected}], found [{found}]")]
    Header {
        path: String,
        expected: String,
        found: String,
    },
    #[error("{count} malformed rows exceed the error budget of {budget}; first offending rows: {}", format_rows(.rows))]
    Malformed {
        count: usize,
        budget: usize,
        rows: Vec<RowError>,
    },
    #[error("no patents left after filtering (window {start}..={end}); check the configured date window")]
    EmptyAfterFilter { start: NaiveDate, end: NaiveDate },
    #[error("infeasible synthetic corpus config: {0}")]
    InfeasibleConfig(String),
    #[error("inconsistent corpus: {0}")]
    Inconsistent(String),
}

fn format_rows(rows: &[RowError]) -> String {
    rows.iter()
        .take(20)
        .map(|r| r.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// One rejected input row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    pub file: String,
    pub line: u64,
    pub reason: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.file, self.line, self.reason)
    }
}

/// Patent document kind. Only utility patents survive filtering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KindPrefix {
    #[serde(rename = "utility")]
    Utility,
    D,
    PP,
    H,
    RE,
    T,
}

impl KindPrefix {
    pub const SPECIAL: [KindPrefix; 5] = [
        KindPrefix::D,
        KindPrefix::PP,
        KindPrefix::H,
        KindPrefix::RE,
        KindPrefix::T,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            KindPrefix::Utility => "utility",
            KindPrefix::D => "D",
            KindPrefix::PP => "PP",
            KindPrefix::H => "H",
            KindPrefix::RE => "RE",
            KindPrefix::T => "T",
        }
    }
}

impl fmt::Display for KindPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KindPrefix {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "utility" => Ok(KindPrefix::Utility),
            "D" => Ok(KindPrefix::D),
            "PP" => Ok(KindPrefix::PP),
            "H" => Ok(KindPrefix::H),
            "RE" => Ok(KindPrefix::RE),
            "T" => Ok(KindPrefix::T),
            other => Err(format!("unknown kind prefix {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassSystem {
    #[serde(rename = "UPC")]
    Upc,
    #[serde(rename = "IPC")]
    Ipc,
}

/// An ordered, duplicate-free universe of class labels.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassList {
    labels: Vec<String>,
    lookup: HashMap<String, u32>,
}

impl ClassList {
    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut list = ClassList::default();
        for label in labels {
            let label = label.into();
            if !list.lookup.contains_key(&label) {
                list.lookup.insert(label.clone(), list.labels.len() as u32);
                list.labels.push(label);
            }
        }
        list
    }

    pub fn get(&self, label: &str) -> Option<u32> {
        self.lookup.get(label).copied()
    }

    pub fn label(&self, class: u32) -> &str {
        &self.labels[class as usize]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassLists {
    pub upc: ClassList,
    pub ipc: ClassList,
}

impl ClassLists {
    pub fn system(&self, system: ClassSystem) -> &ClassList {
        match system {
            ClassSystem::Upc => &self.upc,
            ClassSystem::Ipc => &self.ipc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatentRecord {
    pub id: String,
    pub grant_date: NaiveDate,
    pub kind: KindPrefix,
    /// UPC class index of the primary classification.
    pub main_class: Option<u32>,
    pub title: String,
    pub abstract_text: String,
}

impl PatentRecord {
    pub fn grant_year(&self) -> i32 {
        self.grant_date.year()
    }

    pub fn has_text(&self) -> bool {
        !(self.title.trim().is_empty() && self.abstract_text.trim().is_empty())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassMembership {
    pub patent: u32,
    pub system: ClassSystem,
    pub class: u32,
    /// Meaningful only for UPC memberships.
    pub is_primary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CitationRecord {
    pub citing: u32,
    pub cited: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub patents: usize,
    pub upc_memberships: usize,
    pub ipc_memberships: usize,
    pub citations: usize,
    pub upc_classes: usize,
    pub ipc_classes: usize,
    pub patents_without_upc: usize,
    pub patents_without_ipc: usize,
}

/// Immutable, cross-referenced patent corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusStore {
    patents: Vec<PatentRecord>,
    lookup: HashMap<String, u32>,
    /// Sorted by (patent, system, class); `offsets[p]..offsets[p + 1]`
    /// addresses patent `p`'s memberships.
    memberships: Vec<ClassMembership>,
    offsets: Vec<usize>,
    citations: Vec<CitationRecord>,
    class_lists: ClassLists,
}

impl CorpusStore {
    /// Builds a store from parts whose indices refer to `patents` as given.
    ///
    /// Patents are re-sorted by id (indices are remapped), memberships and
    /// citations are sorted and deduplicated, self-citations are removed and
    /// `main_class` is derived from the primary UPC membership. A patent with
    /// UPC memberships but no primary gets its first (smallest-label-index)
    /// membership promoted; surplus primaries are demoted.
    pub fn assemble(
        mut patents: Vec<PatentRecord>,
        mut memberships: Vec<ClassMembership>,
        mut citations: Vec<CitationRecord>,
        class_lists: ClassLists,
    ) -> Result<Self, CorpusError> {
        let n = patents.len();
        if n > u32::MAX as usize {
            return Err(CorpusError::Inconsistent("too many patents".into()));
        }
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by(|&a, &b| patents[a as usize].id.cmp(&patents[b as usize].id));
        let mut remap = vec![0u32; n];
        for (new, &old) in order.iter().enumerate() {
            remap[old as usize] = new as u32;
        }
        let mut slots: Vec<Option<PatentRecord>> = patents.drain(..).map(Some).collect();
        let mut sorted = Vec::with_capacity(n);
        for &old in &order {
            sorted.push(slots[old as usize].take().expect("permutation"));
        }
        let patents = sorted;

        let mut lookup = HashMap::with_capacity(n);
        for (i, p) in patents.iter().enumerate() {
            if lookup.insert(p.id.clone(), i as u32).is_some() {
                return Err(CorpusError::Inconsistent(format!("duplicate patent id {}", p.id)));
            }
        }

        for m in &mut memberships {
            if m.patent as usize >= n {
                return Err(CorpusError::Inconsistent("membership references unknown patent".into()));
            }
            if m.class as usize >= class_lists.system(m.system).len() {
                return Err(CorpusError::Inconsistent("membership references unknown class".into()));
            }
            m.patent = remap[m.patent as usize];
            if m.system == ClassSystem::Ipc {
                m.is_primary = false;
            }
        }
        // Primary flag participates in ordering only as a tiebreak; collapse
        // duplicate (patent, system, class) keeping a primary flag if any.
        memberships.sort_by_key(|m| (m.patent, m.system, m.class, !m.is_primary));
        memberships.dedup_by_key(|m| (m.patent, m.system, m.class));

        for c in &mut citations {
            if c.citing as usize >= n || c.cited as usize >= n {
                return Err(CorpusError::Inconsistent("citation references unknown patent".into()));
            }
            c.citing = remap[c.citing as usize];
            c.cited = remap[c.cited as usize];
        }
        citations.retain(|c| c.citing != c.cited);
        citations.sort_unstable();
        citations.dedup();

        let mut offsets = vec![0usize; n + 1];
        for m in &memberships {
            offsets[m.patent as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }

        let mut store = CorpusStore {
            patents,
            lookup,
            memberships,
            offsets,
            citations,
            class_lists,
        };
        store.normalize_primaries();
        Ok(store)
    }

    fn normalize_primaries(&mut self) {
        for p in 0..self.patents.len() {
            let range = self.offsets[p]..self.offsets[p + 1];
            let mut main = None;
            for m in &mut self.memberships[range.clone()] {
                if m.system != ClassSystem::Upc {
                    continue;
                }
                if m.is_primary {
                    if main.is_some() {
                        m.is_primary = false;
                    } else {
                        main = Some(m.class);
                    }
                }
            }
            if main.is_none() {
                if let Some(m) = self.memberships[range]
                    .iter_mut()
                    .find(|m| m.system == ClassSystem::Upc)
                {
                    m.is_primary = true;
                    main = Some(m.class);
                }
            }
            self.patents[p].main_class = main;
        }
    }

    pub fn len(&self) -> usize {
        self.patents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patents.is_empty()
    }

    pub fn patents(&self) -> &[PatentRecord] {
        &self.patents
    }

    pub fn patent(&self, idx: u32) -> &PatentRecord {
        &self.patents[idx as usize]
    }

    pub fn index_of(&self, id: &str) -> Option<u32> {
        self.lookup.get(id).copied()
    }

    pub fn memberships(&self) -> &[ClassMembership] {
        &self.memberships
    }

    pub fn memberships_of(&self, idx: u32) -> &[ClassMembership] {
        let i = idx as usize;
        &self.memberships[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn classes_of(&self, idx: u32, system: ClassSystem) -> impl Iterator<Item = u32> + '_ {
        self.memberships_of(idx)
            .iter()
            .filter(move |m| m.system == system)
            .map(|m| m.class)
    }

    pub fn citations(&self) -> &[CitationRecord] {
        &self.citations
    }

    pub fn class_lists(&self) -> &ClassLists {
        &self.class_lists
    }

    pub fn main_class_label(&self, idx: u32) -> Option<&str> {
        self.patent(idx).main_class.map(|c| self.class_lists.upc.label(c))
    }

    pub fn summary(&self) -> CorpusSummary {
        let mut s = CorpusSummary {
            patents: self.patents.len(),
            citations: self.citations.len(),
            upc_classes: self.class_lists.upc.len(),
            ipc_classes: self.class_lists.ipc.len(),
            ..Default::default()
        };
        for p in 0..self.patents.len() as u32 {
            let (mut upc, mut ipc) = (0, 0);
            for m in self.memberships_of(p) {
                match m.system {
                    ClassSystem::Upc => upc += 1,
                    ClassSystem::Ipc => ipc += 1,
                }
            }
            s.upc_memberships += upc;
            s.ipc_memberships += ipc;
            s.patents_without_upc += usize::from(upc == 0);
            s.patents_without_ipc += usize::from(ipc == 0);
        }
        s
    }

    /// Full scan of the structural invariants. Returns the first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (i, p) in self.patents.iter().enumerate() {
            if i > 0 && self.patents[i - 1].id >= p.id {
                return Err(format!("patents not strictly sorted at {}", p.id));
            }
            let primaries: Vec<u32> = self
                .memberships_of(i as u32)
                .iter()
                .filter(|m| m.system == ClassSystem::Upc && m.is_primary)
                .map(|m| m.class)
                .collect();
            let has_upc = self.classes_of(i as u32, ClassSystem::Upc).next().is_some();
            match (has_upc, primaries.as_slice()) {
                (true, [c]) if p.main_class == Some(*c) => {}
                (false, []) if p.main_class.is_none() => {}
                _ => return Err(format!("patent {} has inconsistent primary class", p.id)),
            }
        }
        for w in self.memberships.windows(2) {
            if (w[0].patent, w[0].system, w[0].class) >= (w[1].patent, w[1].system, w[1].class) {
                return Err("memberships not sorted/unique".into());
            }
        }
        for c in &self.citations {
            if c.citing == c.cited {
                return Err(format!("self citation at {}", self.patent(c.citing).id));
            }
            if c.citing as usize >= self.len() || c.cited as usize >= self.len() {
                return Err("dangling citation".into());
            }
        }
        for w in self.citations.windows(2) {
            if w[0] >= w[1] {
                return Err("citations not sorted/unique".into());
            }
        }
        Ok(())
    }
}

pub(crate) fn parse_date(s: &str) -> Option<NaiveDate> {
    // ISO-8601 calendar dates only: exactly YYYY-MM-DD.
    let b = s.as_bytes();
    if b.len() != 10 || b[4] != b'-' || b[7] != b'-' {
        return None;
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
}
