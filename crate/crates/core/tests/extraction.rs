mod common;

use std::collections::BTreeMap;
use std::fs;

use depctx_core::conllu::Sentence;
use depctx_core::extract::{
    extract_bow_pairs, extract_posit_pairs, extract_sentence, write_bag_files, BagMappingTable,
    BagStore, DepGraph, Direction, ExtractionConfig, CONJLL, DEFAULT_BAGS,
};
use proptest::prelude::*;

fn multiset<T: Ord>(items: impl IntoIterator<Item = T>) -> BTreeMap<T, usize> {
    let mut m = BTreeMap::new();
    for item in items {
        *m.entry(item).or_insert(0) += 1;
    }
    m
}

fn baseline_config() -> ExtractionConfig {
    ExtractionConfig {
        baselines: true,
        ..ExtractionConfig::default()
    }
}

fn write(sentences: &[Sentence], config: &ExtractionConfig) -> (tempfile::TempDir, BagStore) {
    let dir = tempfile::tempdir().unwrap();
    let table = BagMappingTable::default();
    write_bag_files(sentences.iter().cloned().map(Ok), &table, config, dir.path(), "src").unwrap();
    let store = BagStore::open(dir.path()).unwrap();
    (dir, store)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn every_arc_yields_a_symmetric_pair(sentence in common::sentence(14)) {
        let table = BagMappingTable::default();
        let pairs = extract_sentence(&sentence, &table, &ExtractionConfig::default());
        let key = |w: &str, c: &str, rel: &str, bag: &str, d: Direction| {
            (w.to_owned(), c.to_owned(), rel.to_owned(), bag.to_owned(), d == Direction::Normal)
        };
        let all = multiset(pairs.iter().map(|p| key(&p.word, &p.context_token, &p.relation, &p.bag, p.direction)));
        for p in &pairs {
            let back = if p.bag == CONJLL { p.direction } else {
                match p.direction {
                    Direction::Normal => Direction::Inverse,
                    Direction::Inverse => Direction::Normal,
                }
            };
            let mirrored = key(&p.context_token, &p.word, &p.relation, &p.bag, back);
            let own = key(&p.word, &p.context_token, &p.relation, &p.bag, p.direction);
            prop_assert_eq!(all.get(&mirrored), all.get(&own));
        }
        let normal = pairs.iter().filter(|p| p.direction == Direction::Normal && p.bag != CONJLL).count();
        let inverse = pairs.iter().filter(|p| p.direction == Direction::Inverse).count();
        prop_assert_eq!(normal, inverse);
    }

    #[test]
    fn collapsing_keeps_unrelated_arcs(sentence in common::sentence(14)) {
        let graph = DepGraph::from_sentence(&sentence);
        let relations = vec!["nmod".to_owned()];
        let collapsed = graph.collapse_prepositions(&relations);
        let unrelated = |g: &DepGraph| {
            multiset(g.arcs().iter()
                .filter(|a| a.relation != "case" && a.relation != "nmod" && !a.relation.starts_with("prep:"))
                .map(|a| (a.head, a.dependent, a.relation.clone())))
        };
        prop_assert_eq!(unrelated(&graph), unrelated(&collapsed));
        let nmod_before = graph.arcs().iter().filter(|a| a.relation == "nmod").count();
        let nmod_after = collapsed.arcs().iter()
            .filter(|a| a.relation == "nmod" || a.relation.starts_with("prep:"))
            .count();
        prop_assert_eq!(nmod_before, nmod_after);
        prop_assert!(collapsed.arcs().len() <= graph.arcs().len());
    }

    #[test]
    fn bow_is_posit_without_offsets(sentence in common::sentence(14), window in 1usize..5) {
        let bow = multiset(extract_bow_pairs(&sentence, window).into_iter().map(|p| (p.word, p.context)));
        let posit = multiset(extract_posit_pairs(&sentence, window).into_iter().map(|p| {
            let (form, offset) = p.context.rsplit_once('_').unwrap();
            let offset: isize = offset.parse().unwrap();
            assert!(offset != 0 && offset.unsigned_abs() <= window);
            (p.word, form.to_owned())
        }));
        prop_assert_eq!(bow, posit);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn union_of_bags_matches_direct_extraction(sentences in common::corpus(8)) {
        let config = baseline_config();
        let (_dir, store) = write(&sentences, &config);
        let composed = multiset(store.compose_bags(&DEFAULT_BAGS).unwrap().map(|p| {
            let p = p.unwrap();
            (p.word, p.context)
        }));
        let table = BagMappingTable::default();
        let direct = multiset(sentences.iter().flat_map(|s| {
            extract_sentence(s, &table, &config)
                .into_iter()
                .filter(|p| DEFAULT_BAGS.contains(&p.bag.as_str()))
                .map(|p| (p.word.clone(), p.bag_context()))
                .collect::<Vec<_>>()
        }));
        prop_assert_eq!(&composed, &direct);
        let total: u64 = DEFAULT_BAGS.iter().map(|b| store.manifest().count(b).unwrap()).sum();
        prop_assert_eq!(total as usize, direct.values().sum::<usize>());
    }

    #[test]
    fn bag_files_are_byte_identical(sentences in common::corpus(8)) {
        let config = baseline_config();
        let (a, _) = write(&sentences, &config);
        let (b, _) = write(&sentences, &config);
        let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for name in names {
            let left = fs::read(a.path().join(&name)).unwrap();
            let right = fs::read(b.path().join(&name)).unwrap();
            prop_assert!(left == right, "{:?} differs", name);
        }
    }
}

#[test]
fn discarded_relations_produce_no_pairs() {
    let text = "1\tthe\tthe\tDET\t_\t_\t2\tdet\t_\t_\n\
                2\tdog\tdog\tNOUN\t_\t_\t0\troot\t_\t_\n\
                3\t.\t.\tPUNCT\t_\t_\t2\tpunct\t_\t_\n\n";
    let s = &depctx_core::conllu::parse_str(text, depctx_core::conllu::ErrorMode::Abort).unwrap()[0];
    let pairs = extract_sentence(s, &BagMappingTable::default(), &ExtractionConfig::default());
    assert!(pairs.is_empty());
}

#[test]
fn first_case_marker_names_the_collapsed_arc() {
    let text = "1\tfell\tfall\tVERB\t_\t_\t0\troot\t_\t_\n\
                2\tout\tout\tADP\t_\t_\t4\tcase\t_\t_\n\
                3\tof\tof\tADP\t_\t_\t4\tcase\t_\t_\n\
                4\tbed\tbed\tNOUN\t_\t_\t1\tnmod\t_\t_\n\n";
    let s = &depctx_core::conllu::parse_str(text, depctx_core::conllu::ErrorMode::Abort).unwrap()[0];
    let graph = DepGraph::from_sentence(s).collapse_prepositions(&["nmod".to_owned()]);
    assert_eq!(graph.arcs().len(), 1);
    assert_eq!(graph.arcs()[0].relation, "prep:out");
    let pairs = extract_sentence(s, &BagMappingTable::default(), &ExtractionConfig::default());
    let contexts: Vec<String> = pairs.iter().map(|p| p.bag_context()).collect();
    assert_eq!(contexts, ["bed_prep", "fell_prep-1"]);
    assert_eq!(pairs[0].context(), "bed_prep:out");
}
