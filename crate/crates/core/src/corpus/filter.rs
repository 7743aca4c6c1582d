use std::collections::{BTreeMap, HashSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{ClassMembership, CorpusError, CorpusStore, KindPrefix};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterConfig {
    /// Inclusive grant-date window.
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    /// Class labels removed from both classification systems.
    pub excluded_classes: Vec<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            window_start: NaiveDate::from_ymd_opt(1976, 1, 1).expect("valid date"),
            window_end: NaiveDate::from_ymd_opt(2015, 6, 1).expect("valid date"),
            excluded_classes: vec!["G9B".to_string()],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input_patents: usize,
    pub retained_patents: usize,
    /// Patents removed for a non-utility kind prefix, keyed by prefix.
    pub removed_by_prefix: BTreeMap<String, usize>,
    /// Utility patents removed for a grant date outside the window.
    pub removed_outside_window: usize,
    pub removed_memberships_by_class: BTreeMap<String, usize>,
    pub dropped_memberships_of_removed_patents: usize,
    pub dropped_citations: usize,
    pub promoted_primary: usize,
}

impl FilterReport {
    pub fn removed_patents(&self) -> usize {
        self.input_patents - self.retained_patents
    }
}

/// Keeps utility patents granted inside the window and strips memberships
/// in excluded classes. A patent whose primary UPC membership was excluded
/// gets its next UPC membership promoted.
pub fn filter_corpus(
    store: &CorpusStore,
    config: &FilterConfig,
) -> Result<(CorpusStore, FilterReport), CorpusError> {
    let mut report = FilterReport {
        input_patents: store.len(),
        ..Default::default()
    };
    for k in KindPrefix::SPECIAL {
        report.removed_by_prefix.insert(k.as_str().to_string(), 0);
    }

    let mut keep = vec![false; store.len()];
    let mut patents = Vec::new();
    for (i, p) in store.patents().iter().enumerate() {
        if p.kind != KindPrefix::Utility {
            *report.removed_by_prefix.entry(p.kind.as_str().to_string()).or_default() += 1;
        } else if p.grant_date < config.window_start || p.grant_date > config.window_end {
            report.removed_outside_window += 1;
        } else {
            keep[i] = true;
            patents.push(p.clone());
        }
    }
    if patents.is_empty() {
        return Err(CorpusError::EmptyAfterFilter {
            start: config.window_start,
            end: config.window_end,
        });
    }
    report.retained_patents = patents.len();

    // Old index -> new index; kept patents stay in id order.
    let mut remap = vec![u32::MAX; store.len()];
    let mut next = 0u32;
    for (i, &k) in keep.iter().enumerate() {
        if k {
            remap[i] = next;
            next += 1;
        }
    }

    let excluded: HashSet<&str> = config.excluded_classes.iter().map(String::as_str).collect();
    let lists = store.class_lists();
    let mut memberships = Vec::new();
    let mut lost_primary = HashSet::new();
    for m in store.memberships() {
        if !keep[m.patent as usize] {
            report.dropped_memberships_of_removed_patents += 1;
            continue;
        }
        let label = lists.system(m.system).label(m.class);
        if excluded.contains(label) {
            *report.removed_memberships_by_class.entry(label.to_string()).or_default() += 1;
            if m.is_primary {
                lost_primary.insert(m.patent);
            }
            continue;
        }
        memberships.push(ClassMembership {
            patent: remap[m.patent as usize],
            ..*m
        });
    }
    report.promoted_primary = lost_primary
        .iter()
        .filter(|&&p| store.classes_of(p, super::ClassSystem::Upc).any(|c| !excluded.contains(lists.upc.label(c))))
        .count();

    let mut citations = Vec::new();
    for c in store.citations() {
        if keep[c.citing as usize] && keep[c.cited as usize] {
            citations.push(super::CitationRecord {
                citing: remap[c.citing as usize],
                cited: remap[c.cited as usize],
            });
        } else {
            report.dropped_citations += 1;
        }
    }

    let filtered = CorpusStore::assemble(patents, memberships, citations, lists.clone())?;
    Ok((filtered, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_date, CitationRecord, ClassList, ClassLists, ClassSystem, PatentRecord};

    fn patent(id: &str, date: &str, kind: KindPrefix) -> PatentRecord {
        PatentRecord {
            id: id.into(),
            grant_date: parse_date(date).unwrap(),
            kind,
            main_class: None,
            title: format!("title {id}"),
            abstract_text: String::new(),
        }
    }

    /// Ten patents: two design patents and one granted after the window.
    fn fixture() -> CorpusStore {
        let kinds = [
            ("P01", "1980-01-01", KindPrefix::Utility),
            ("P02", "1981-01-01", KindPrefix::D),
            ("P03", "1982-01-01", KindPrefix::Utility),
            ("P04", "1983-01-01", KindPrefix::D),
            ("P05", "1984-01-01", KindPrefix::Utility),
            ("P06", "1985-01-01", KindPrefix::Utility),
            ("P07", "2016-01-01", KindPrefix::Utility),
            ("P08", "1986-01-01", KindPrefix::Utility),
            ("P09", "1987-01-01", KindPrefix::Utility),
            ("P10", "1988-01-01", KindPrefix::Utility),
        ];
        let patents = kinds.iter().map(|(id, d, k)| patent(id, d, *k)).collect();
        let lists = ClassLists {
            upc: ClassList::new(["123", "G9B"]),
            ipc: ClassList::new(["F02B"]),
        };
        let mut memberships = Vec::new();
        for p in 0..10 {
            memberships.push(ClassMembership { patent: p, system: ClassSystem::Upc, class: 0, is_primary: p != 0 });
            memberships.push(ClassMembership { patent: p, system: ClassSystem::Ipc, class: 0, is_primary: false });
        }
        memberships.push(ClassMembership { patent: 0, system: ClassSystem::Upc, class: 1, is_primary: true });
        let citations = vec![
            CitationRecord { citing: 2, cited: 0 },
            CitationRecord { citing: 3, cited: 2 },
            CitationRecord { citing: 6, cited: 4 },
            CitationRecord { citing: 9, cited: 8 },
        ];
        CorpusStore::assemble(patents, memberships, citations, lists).unwrap()
    }

    #[test]
    fn hand_counted_fixture() {
        let (out, report) = filter_corpus(&fixture(), &FilterConfig::default()).unwrap();
        assert_eq!(out.len(), 7);
        assert_eq!(report.removed_by_prefix["D"], 2);
        assert_eq!(report.removed_by_prefix["PP"], 0);
        assert_eq!(report.removed_outside_window, 1);
        assert_eq!(report.removed_memberships_by_class["G9B"], 1);
        // P04 (D) and P07 (out of window) take two citations with them.
        assert_eq!(report.dropped_citations, 2);
        assert_eq!(out.citations().len(), 2);
        // P01 lost its G9B primary; 123 was promoted.
        assert_eq!(report.promoted_primary, 1);
        assert_eq!(out.main_class_label(0), Some("123"));
        out.check_invariants().unwrap();
        for p in out.patents() {
            assert_eq!(p.kind, KindPrefix::Utility);
        }
    }

    #[test]
    fn filtering_is_idempotent() {
        let config = FilterConfig::default();
        let (once, _) = filter_corpus(&fixture(), &config).unwrap();
        let (twice, report) = filter_corpus(&once, &config).unwrap();
        assert_eq!(once, twice);
        assert_eq!(report.removed_patents(), 0);
    }

    #[test]
    fn empty_window_is_an_error() {
        let config = FilterConfig {
            window_start: parse_date("2030-01-01").unwrap(),
            window_end: parse_date("2031-01-01").unwrap(),
            ..Default::default()
        };
        assert!(matches!(
            filter_corpus(&fixture(), &config),
            Err(CorpusError::EmptyAfterFilter { .. })
        ));
    }
}
