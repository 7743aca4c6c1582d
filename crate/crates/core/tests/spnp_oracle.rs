use proptest::prelude::*;

use techrates::corpus::{generate_synthetic_corpus, SynthConfig};
use techrates::spnp::{brute_force_spnp, compute_reach_counts, reach_counts_general, spnp, CitationNetwork};

/// Random DAG on up to `max_n` nodes: arcs only from a higher to a lower
/// position of a random permutation, so labels are not topologically sorted.
fn dag(max_n: usize) -> impl Strategy<Value = (usize, Vec<(u32, u32)>)> {
    (0..=max_n).prop_flat_map(|n| {
        let pairs = n * n.saturating_sub(1) / 2;
        (
            Just(n),
            Just((0..n as u32).collect::<Vec<_>>()).prop_shuffle(),
            proptest::collection::vec(any::<bool>(), pairs),
        )
            .prop_map(|(n, perm, keep)| {
                let mut arcs = Vec::new();
                let mut k = 0;
                for hi in 0..n {
                    for lo in 0..hi {
                        if keep[k] {
                            arcs.push((perm[hi], perm[lo]));
                        }
                        k += 1;
                    }
                }
                (n, arcs)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn matches_brute_force((n, arcs) in dag(12)) {
        prop_assert_eq!(spnp(n, &arcs).unwrap(), brute_force_spnp(n, &arcs).unwrap());
    }

    #[test]
    fn bounds_hold((n, arcs) in dag(12)) {
        let r = reach_counts_general(n, &arcs).unwrap();
        let values = r.spnp().unwrap();
        for v in 0..n {
            prop_assert!(values[v] >= 1 && values[v] <= (n * n) as u64);
            let is_source = !arcs.iter().any(|&(_, c)| c as usize == v);
            let is_sink = !arcs.iter().any(|&(u, _)| u as usize == v);
            if is_source || is_sink {
                prop_assert_eq!(r.n_minus[v].min(r.n_plus[v]), 1);
            }
        }
    }

    #[test]
    fn adding_an_arc_never_decreases_spnp((n, arcs) in dag(10), pick in any::<prop::sample::Index>()) {
        prop_assume!(!arcs.is_empty());
        let drop_at = pick.index(arcs.len());
        let mut fewer = arcs.clone();
        fewer.remove(drop_at);
        let before = spnp(n, &fewer).unwrap();
        let after = spnp(n, &arcs).unwrap();
        for v in 0..n {
            prop_assert!(after[v] >= before[v]);
        }
    }
}

#[test]
fn snapshot_arcs_match_an_independent_scan() {
    let store = generate_synthetic_corpus(&SynthConfig::default(), 4).unwrap();
    let network = CitationNetwork::new(&store);
    let max_year = network.max_year().unwrap();
    for cutoff in [1979, 1985, 1990, max_year] {
        let dag = network.snapshot(cutoff);
        let key = |p: u32| (store.patent(p).grant_year(), p);
        let scanned = store
            .citations()
            .iter()
            .filter(|c| store.patent(c.citing).grant_year() <= cutoff && store.patent(c.cited).grant_year() <= cutoff)
            .filter(|c| key(c.citing) > key(c.cited))
            .count();
        assert_eq!(dag.arcs.len(), scanned, "cutoff {cutoff}");
        let nodes = store.patents().iter().filter(|p| p.grant_year() <= cutoff).count();
        assert_eq!(dag.len(), nodes);
        for (i, &(u, v)) in dag.arcs.iter().enumerate() {
            assert!(u > v);
            assert!(i == 0 || dag.arcs[i - 1] < (u, v));
        }
    }
    assert!(network.snapshot(1979).is_empty());
    // Synthetic citations never point forward in time or id order.
    assert_eq!(network.dropped_arcs(), 0);
}

#[test]
fn snapshot_reach_counts_match_general_path_and_nest() {
    let config = SynthConfig {
        patents: 800,
        ..Default::default()
    };
    let store = generate_synthetic_corpus(&config, 9).unwrap();
    let network = CitationNetwork::new(&store);
    let early = network.snapshot(1990);
    let late = network.snapshot(1995);
    let fast = compute_reach_counts(&late);
    let general = reach_counts_general(late.len(), &late.arcs).unwrap();
    assert_eq!(fast, general);

    let early_values = compute_reach_counts(&early).spnp().unwrap();
    let late_values = fast.spnp().unwrap();
    for v in 0..early.len() {
        assert_eq!(early.patents[v], late.patents[v]);
        assert!(early_values[v] <= late_values[v]);
    }
}

#[test]
fn chain_snapshot() {
    use techrates::corpus::{CitationRecord, ClassList, ClassLists, CorpusStore, KindPrefix, PatentRecord};
    let patent = |id: &str, y: i32| PatentRecord {
        id: id.into(),
        grant_date: chrono::NaiveDate::from_ymd_opt(y, 6, 1).unwrap(),
        kind: KindPrefix::Utility,
        main_class: None,
        title: String::new(),
        abstract_text: String::new(),
    };
    let store = CorpusStore::assemble(
        vec![patent("A", 1990), patent("B", 1985), patent("C", 1980)],
        Vec::new(),
        vec![CitationRecord { citing: 0, cited: 1 }, CitationRecord { citing: 1, cited: 2 }],
        ClassLists { upc: ClassList::new(Vec::<String>::new()), ipc: ClassList::new(Vec::<String>::new()) },
    )
    .unwrap();
    let dag = CitationNetwork::new(&store).snapshot(1990);
    assert_eq!((dag.len(), dag.arcs.len()), (3, 2));
    let values = compute_reach_counts(&dag).spnp().unwrap();
    // Node order is by grant year: C, B, A.
    assert_eq!(values, vec![3, 4, 3]);
}
