use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet};
use std::convert::Infallible;
use std::hash::{Hash, Hasher};

use depctx_core::search::{
    best_configuration_search, build_pool, count_space, exhaustive_search, greedy_search,
    Configuration, ConfigurationSpace, SearchError, SearchOptions, SearchOutcome, TraceStatus,
};
use proptest::prelude::*;

fn bag_names(m: usize) -> Vec<String> {
    (0..m).map(|i| format!("b{:02}", i)).collect()
}

fn space(singles: &[(String, f64)]) -> ConfigurationSpace {
    let table: BTreeMap<String, f64> = singles.iter().cloned().collect();
    build_pool(&table, 0.2).unwrap()
}

fn landscape(seed: u64) -> impl Fn(&Configuration) -> f64 {
    move |c| {
        let mut h = DefaultHasher::new();
        (seed, c.canonical()).hash(&mut h);
        (h.finish() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Runs a search while checking that no configuration is requested twice.
fn counted<S>(search: S, f: impl Fn(&Configuration) -> f64) -> (SearchOutcome, usize)
where
    S: FnOnce(&mut dyn FnMut(&Configuration) -> Result<f64, Infallible>) -> SearchOutcome,
{
    let mut seen = BTreeSet::new();
    let mut calls = 0;
    let outcome = search(&mut |c: &Configuration| {
        assert!(seen.insert(c.canonical()), "{} evaluated twice", c);
        calls += 1;
        Ok(f(c))
    });
    (outcome, calls)
}

fn singles_strategy() -> impl Strategy<Value = Vec<(String, f64)>> {
    (1usize..9).prop_flat_map(|m| {
        proptest::collection::vec(0.0f64..0.6, m).prop_map(move |fs| {
            let mut fs = fs;
            // At least one bag passes the threshold.
            fs[0] = fs[0].max(0.2);
            bag_names(m).into_iter().zip(fs).collect()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn search_invariants(singles in singles_strategy(), seed in any::<u64>()) {
        let space = space(&singles);
        let f = landscape(seed);
        let m = singles.len();
        let k = space.pool.len();
        let (beam, calls) = counted(
            |fit| best_configuration_search(&space, fit, SearchOptions::default()).unwrap(),
            &f,
        );
        let trace = &beam.trace;
        prop_assert_eq!(trace.len(), m + calls);
        prop_assert!(trace.len() as u64 <= count_space(m, k));
        prop_assert!(beam.best.is_subset(&space.root()));

        let root = trace.get(&space.root()).unwrap().fitness;
        prop_assert!(beam.best_fitness >= root);
        for bag in &space.pool {
            prop_assert!(beam.best_fitness >= space.bag_fitness[bag]);
        }
        for e in trace.with_status(TraceStatus::Kept) {
            let origin = trace.get(e.origin.as_ref().unwrap()).unwrap();
            prop_assert!(e.fitness >= origin.fitness);
            prop_assert_eq!(e.configuration.len() + 1, origin.configuration.len());
        }
        for e in trace.with_status(TraceStatus::Pruned) {
            let origin = trace.get(e.origin.as_ref().unwrap()).unwrap();
            prop_assert!(e.fitness < origin.fitness);
        }

        let (greedy, _) = counted(|fit| greedy_search(&space, fit, SearchOptions::default()).unwrap(), &f);
        prop_assert!(greedy.best_fitness <= beam.best_fitness);

        let (exhaustive, calls) = counted(|fit| exhaustive_search(&space, fit, 12).unwrap(), &f);
        prop_assert!(exhaustive.best_fitness >= beam.best_fitness);
        prop_assert_eq!(exhaustive.trace.len() as u64, count_space(m, k));
        prop_assert_eq!(calls as u64, (1u64 << k) - 1 - k as u64);
    }

    #[test]
    fn pruned_everywhere_visits_root_and_children_only(m in 3usize..10, extra in 0usize..4) {
        // Every child scores below its origin.
        let pool = m.min(3 + extra);
        let singles: Vec<(String, f64)> = bag_names(m)
            .into_iter()
            .enumerate()
            .map(|(i, b)| (b, if i < pool { 0.3 } else { 0.1 }))
            .collect();
        let space = space(&singles);
        let f = |c: &Configuration| if c.len() == pool { 1.0 } else { 0.1 * c.len() as f64 };
        let (outcome, calls) = counted(
            |fit| best_configuration_search(&space, fit, SearchOptions::default()).unwrap(),
            f,
        );
        prop_assert_eq!(outcome.trace.len(), m + 1 + pool);
        prop_assert_eq!(calls, 1 + pool);
        prop_assert_eq!(outcome.best, space.root());
    }
}

#[test]
fn greedy_misses_what_the_beam_finds() {
    let singles: Vec<(String, f64)> = ["a", "b", "c", "d"].iter().map(|b| (b.to_string(), 0.3)).collect();
    let space = space(&singles);
    let table: BTreeMap<&str, f64> = [
        ("a+b+c+d", 0.5),
        ("a+b+c", 0.6),
        ("a+b+d", 0.55),
        ("a+c+d", 0.52),
        ("b+c+d", 0.4),
        ("a+b", 0.5),
        ("a+c", 0.5),
        ("b+c", 0.5),
        ("a+d", 0.9),
        ("b+d", 0.1),
        ("c+d", 0.1),
    ]
    .into_iter()
    .collect();
    let f = |c: &Configuration| table[c.canonical().as_str()];
    let (beam, _) = counted(|fit| best_configuration_search(&space, fit, SearchOptions::default()).unwrap(), f);
    let (greedy, _) = counted(|fit| greedy_search(&space, fit, SearchOptions::default()).unwrap(), f);
    assert_eq!(beam.best.canonical(), "a+d");
    assert_eq!(beam.best_fitness, 0.9);
    assert_eq!(greedy.best.canonical(), "a+b+c");
    assert!(greedy.best_fitness < beam.best_fitness);
}

#[test]
fn exhaustive_covers_every_subset_of_a_ten_bag_pool() {
    let singles: Vec<(String, f64)> = bag_names(13)
        .into_iter()
        .enumerate()
        .map(|(i, b)| (b, if i < 10 { 0.3 } else { 0.0 }))
        .collect();
    let space = space(&singles);
    let (outcome, _) = counted(|fit| exhaustive_search(&space, fit, 12).unwrap(), landscape(4));
    let inside = outcome
        .trace
        .entries
        .iter()
        .filter(|e| e.configuration.is_subset(&space.root()))
        .count();
    assert_eq!(inside, 1023);
    assert_eq!(count_space(13, 10), 1026);
}

#[test]
fn exhaustive_refuses_large_pools() {
    let singles: Vec<(String, f64)> = bag_names(13).into_iter().map(|b| (b, 0.5)).collect();
    let err = exhaustive_search(&space(&singles), |_: &Configuration| Ok::<_, Infallible>(0.0), 12);
    assert!(matches!(err, Err(SearchError::PoolTooLarge { size: 13, limit: 12 })));
}

#[test]
fn empty_pool_lists_the_scores() {
    let table: BTreeMap<String, f64> = [("amod".to_owned(), 0.1), ("subj".to_owned(), f64::NAN)].into_iter().collect();
    let err = build_pool(&table, 0.2).unwrap_err();
    assert!(err.to_string().contains("amod=0.100"), "{}", err);
}

#[test]
fn nan_children_are_never_selected() {
    let singles: Vec<(String, f64)> = ["a", "b", "c"].iter().map(|b| (b.to_string(), 0.3)).collect();
    let space = space(&singles);
    let f = |c: &Configuration| if c.len() == 3 { 0.1 } else { f64::NAN };
    let (outcome, _) = counted(|fit| best_configuration_search(&space, fit, SearchOptions::default()).unwrap(), f);
    assert!(outcome.best_fitness.is_finite());
    assert_eq!(outcome.best.len(), 1);
    assert_eq!(outcome.trace.with_status(TraceStatus::Kept).count(), 0);
}

#[test]
fn single_bag_pool_is_its_own_answer() {
    let singles = vec![("amod".to_owned(), 0.4), ("subj".to_owned(), 0.1)];
    let space = space(&singles);
    let (outcome, calls) = counted(
        |fit| best_configuration_search(&space, fit, SearchOptions::default()).unwrap(),
        |_| panic!("no evaluation expected"),
    );
    assert_eq!(calls, 0);
    assert_eq!(outcome.best.canonical(), "amod");
    assert_eq!(outcome.best_fitness, 0.4);
}
