use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};

use chrono::NaiveDate;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use techrates::corpus::{generate_synthetic_corpus, ClassList, ClassLists, CorpusStore, KindPrefix, PatentRecord, SynthConfig};
use techrates::search::{mpr, rank_domains, sample_patents, tokenize, top_central, InvertedIndex, SearchError};

fn store_of(texts: &[(&str, &str)]) -> CorpusStore {
    let patents = texts
        .iter()
        .enumerate()
        .map(|(i, (t, a))| PatentRecord {
            id: format!("P{i}"),
            grant_date: NaiveDate::from_ymd_opt(1990, 1, 1).unwrap(),
            kind: KindPrefix::Utility,
            main_class: None,
            title: t.to_string(),
            abstract_text: a.to_string(),
        })
        .collect();
    let empty = || ClassList::new(Vec::<String>::new());
    CorpusStore::assemble(patents, Vec::new(), Vec::new(), ClassLists { upc: empty(), ipc: empty() }).unwrap()
}

fn five() -> CorpusStore {
    store_of(&[
        ("Solar cell module", "A module of cells."),
        ("Battery electrode", "Solar charging of cells."),
        ("Internal combustion engine", "Engine block."),
        ("", ""),
        ("Cell culture", "Growing cells in solar light."),
    ])
}

/// Patents whose tokens include every query token, by direct scan.
fn scan(store: &CorpusStore, query: &str) -> Vec<u32> {
    let want: HashSet<String> = tokenize(query).into_iter().collect();
    (0..store.len() as u32)
        .filter(|&i| {
            let p = store.patent(i);
            let have: HashSet<String> = tokenize(&format!("{} {}", p.title, p.abstract_text)).into_iter().collect();
            want.iter().all(|t| have.contains(t))
        })
        .collect()
}

#[test]
fn title_tokens_post_their_patent() {
    let store = five();
    let idx = InvertedIndex::build(&store);
    for t in ["solar", "cell", "modul"] {
        assert!(idx.get(t).contains(&0), "{t}");
    }
    // "cells" appears twice in P4 but is posted once; P3 has no text.
    assert_eq!(idx.get("cell"), &[0, 1, 4]);
    assert_eq!((idx.indexed(), idx.omitted()), (4, 1));
    assert_eq!(idx, InvertedIndex::build(&store));
}

#[test]
fn and_search_matches_scan() {
    let store = five();
    let idx = InvertedIndex::build(&store);
    assert_eq!(idx.search("solar cells").unwrap(), vec![0, 1, 4]);
    for q in ["solar cells", "solar", "cell module", "engine", "solar engine", "nothing here", "SOLAR, Cell"] {
        assert_eq!(idx.search(q).unwrap(), scan(&store, q), "{q}");
    }
    assert_eq!(idx.search("solar").unwrap(), idx.get("solar"));
    assert_eq!(idx.search(" -- ").unwrap_err(), SearchError::EmptyQuery);
}

#[test]
fn synthetic_index_matches_scan() {
    let store = generate_synthetic_corpus(&SynthConfig { patents: 600, ..Default::default() }, 3).unwrap();
    let idx = InvertedIndex::build(&store);
    let with_text: BTreeSet<u32> = (0..store.len() as u32).filter(|&i| store.patent(i).has_text()).collect();
    for q in ["solar cell", "internal combustion engine", "memory", "optical fiber", "battery solar"] {
        let got = idx.search(q).unwrap();
        assert_eq!(got, scan(&store, q), "{q}");
        assert!(got.iter().all(|p| with_text.contains(p)));
    }
    for (t, list) in idx.postings() {
        assert!(list.windows(2).all(|w| w[0] < w[1]), "{t}");
    }
}

/// Exhaustive ranking: MPR order decided by comparing p + r through the
/// identity q d1 d2 (p1 + r1 - p2 - r2) = q (m1 d2 - m2 d1) + d1 d2 (m1 - m2).
fn oracle(query: &[u32], domains: &[(String, Vec<u32>)], top_n: usize) -> Vec<(String, usize)> {
    let q: HashSet<u32> = query.iter().copied().collect();
    let mut rows: Vec<(String, i128, i128)> = domains
        .iter()
        .map(|(c, d)| (c.clone(), d.iter().filter(|p| q.contains(p)).count() as i128, d.len() as i128))
        .filter(|r| r.1 > 0)
        .collect();
    let qn = q.len() as i128;
    let better = |a: &(String, i128, i128), b: &(String, i128, i128)| -> bool {
        let diff = qn * (a.1 * b.2 - b.1 * a.2) + a.2 * b.2 * (a.1 - b.1);
        match diff.cmp(&0) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => a.1 > b.1 || (a.1 == b.1 && a.0 < b.0),
        }
    };
    let mut out = Vec::new();
    while !rows.is_empty() && out.len() < top_n {
        let mut best = 0;
        for i in 1..rows.len() {
            if better(&rows[i], &rows[best]) {
                best = i;
            }
        }
        let r = rows.remove(best);
        out.push((r.0, r.1 as usize));
    }
    out
}

fn random_fixture(seed: u64, n_domains: usize, universe: u32) -> (Vec<u32>, Vec<(String, Vec<u32>)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<u32> = (0..universe).collect();
    // Disjoint domains, as after deduplication.
    for i in (1..pool.len()).rev() {
        pool.swap(i, rng.random_range(0..=i));
    }
    let mut domains = Vec::new();
    let mut at = 0;
    for k in 0..n_domains {
        let size = rng.random_range(1..=(universe as usize / n_domains).max(1));
        if at + size > pool.len() {
            break;
        }
        let mut d = pool[at..at + size].to_vec();
        d.sort_unstable();
        at += size;
        // Shared sizes and codes out of order provoke every tie-break.
        domains.push((format!("{}X{:02}", (k * 7) % 5, k), d));
    }
    let mut q: Vec<u32> = (0..universe).filter(|_| rng.random_bool(0.3)).collect();
    if q.is_empty() {
        q.push(0);
    }
    (q, domains)
}

#[test]
fn ranking_matches_oracle_on_twenty_domains() {
    for seed in 0..50 {
        let (q, domains) = random_fixture(seed, 20, 400);
        let got: Vec<(String, usize)> = rank_domains(&q, domains.iter().map(|(c, d)| (c.as_str(), d.as_slice())), 5)
            .into_iter()
            .map(|s| (s.domain_code, s.matched_count))
            .collect();
        assert_eq!(got, oracle(&q, &domains, 5), "seed {seed}");
        let all = rank_domains(&q, domains.iter().map(|(c, d)| (c.as_str(), d.as_slice())), usize::MAX);
        assert_eq!(all.len(), oracle(&q, &domains, usize::MAX).len());
    }
}

#[test]
fn ranking_ties_are_deterministic() {
    // Equal-size domains with equal overlap: MPR and overlap tie, code decides.
    let q: Vec<u32> = vec![0, 10, 20, 30];
    let domains: Vec<(String, Vec<u32>)> = vec![
        ("9Z".into(), vec![0, 1]),
        ("1A".into(), vec![10, 11]),
        ("5M".into(), vec![20, 21]),
        ("0B".into(), vec![30, 31, 32, 33]),
    ];
    let got: Vec<String> = rank_domains(&q, domains.iter().map(|(c, d)| (c.as_str(), d.as_slice())), 5)
        .into_iter()
        .map(|s| s.domain_code)
        .collect();
    assert_eq!(got, ["1A", "5M", "9Z", "0B"]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ranking_oracle_property(seed in any::<u64>(), n in 1usize..30, universe in 20u32..1000, top in 1usize..8) {
        let (q, domains) = random_fixture(seed, n, universe);
        let got: Vec<(String, usize)> = rank_domains(&q, domains.iter().map(|(c, d)| (c.as_str(), d.as_slice())), top)
            .into_iter()
            .map(|s| (s.domain_code, s.matched_count))
            .collect();
        prop_assert_eq!(got, oracle(&q, &domains, top));
    }

    #[test]
    fn mpr_is_symmetric_and_bounded(q in 1usize..5000, d in 1usize..5000, frac in 0.0f64..=1.0) {
        let m = ((q.min(d) as f64) * frac).floor() as usize;
        let v = mpr(m, q, d);
        prop_assert_eq!(v, mpr(m, d, q));
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(v == 1.0, m == q && m == d);
    }
}

#[test]
fn top_central_equals_full_sort() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let patents: Vec<u32> = (0..300).filter(|_| rng.random_bool(0.5)).collect();
    let mut pct: Vec<Option<f64>> = vec![None; 300];
    for (i, &p) in patents.iter().enumerate() {
        pct[p as usize] = Some((i * 7919 % 1000) as f64 / 1000.0);
    }
    let mut sorted = patents.clone();
    sorted.sort_by(|a, b| pct[*b as usize].unwrap().partial_cmp(&pct[*a as usize].unwrap()).unwrap());
    assert_eq!(top_central(&patents, &pct, 20), sorted[..20]);

    let s = sample_patents(&patents, &pct, 11, 20);
    assert_eq!(s.random.len(), 20);
    let members: HashSet<u32> = patents.iter().copied().collect();
    assert!(s.random.iter().all(|p| members.contains(p)));
    assert_eq!(s.random.iter().collect::<HashSet<_>>().len(), 20);
    assert_eq!(s, sample_patents(&patents, &pct, 11, 20));
    assert_ne!(s.random, sample_patents(&patents, &pct, 12, 20).random);
}
