use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use depctx_core::eval::{ClassFilter, Fold, WordClass};
use depctx_core::pipeline::{
    build_report, report_tsv, run_protocol, Evaluation, ExperimentConfig, Fitness, FitnessCache,
    FitnessRecord, FoldMode, FoldResult, PipelineError, SearchSettings, Slice, SliceScore,
    CACHE_ENV,
};
use depctx_core::search::{Configuration, SearchOptions, SearchStrategy};

const ADJ: ClassFilter = ClassFilter::Only(WordClass::Adjective);
const BAGS: [&str; 13] = [
    "acl", "adv", "amod", "appos", "comp", "compound", "conjll", "conjlr", "nmod", "nummod", "obj",
    "prep", "subj",
];

/// Adjective single-bag and lattice scores; bags without a score sit
/// below the threshold.
fn adjective_table() -> BTreeMap<&'static str, f64> {
    [
        ("amod", 0.479),
        ("conjlr", 0.415),
        ("conjll", 0.400),
        ("adv", 0.197),
        ("prep", 0.188),
        ("amod+conj", 0.546),
        ("amod+conjlr", 0.527),
        ("amod+conjll", 0.531),
        ("conj", 0.470),
    ]
    .into_iter()
    .collect()
}

/// Adjective slices read the table; the ALL slices favour `obj`.
struct Oracle {
    calls: BTreeMap<String, usize>,
}

impl Fitness for Oracle {
    fn evaluate(&mut self, c: &Configuration) -> Result<Evaluation, PipelineError> {
        let name = c.canonical();
        *self.calls.entry(name.clone()).or_default() += 1;
        let adj = adjective_table().get(name.as_str()).copied().unwrap_or(0.05);
        let all = if c.contains("obj") { 0.3 + 0.01 * c.len() as f64 } else { 0.1 };
        let mut scores = BTreeMap::new();
        for fold in [Fold::A, Fold::B] {
            for (class, rho) in [(ADJ, adj), (ClassFilter::All, all)] {
                let s = SliceScore { rho, n_scored: 10, n_total: 10 };
                scores.insert(Slice { class, fold }, s);
            }
        }
        Ok(Evaluation { scores, pairs: 100 })
    }
}

fn settings(classes: Vec<ClassFilter>, strategy: SearchStrategy, fold_mode: FoldMode) -> SearchSettings {
    SearchSettings {
        classes,
        strategy,
        threshold: 0.2,
        fold_mode,
        options: SearchOptions::default(),
        exhaustive_limit: 12,
    }
}

fn bags() -> Vec<String> {
    BAGS.iter().map(|b| b.to_string()).collect()
}

fn selected(run: &depctx_core::pipeline::ProtocolRun, class: ClassFilter, dev: Fold) -> String {
    let r = run.runs.iter().find(|r| r.class == class && r.dev == dev).unwrap();
    match &r.result {
        FoldResult::Selected(o) => o.best.canonical(),
        FoldResult::Infeasible(m) => panic!("infeasible: {}", m),
    }
}

#[test]
fn injected_scores_select_amod_plus_conj() {
    for strategy in [SearchStrategy::Beam, SearchStrategy::Greedy, SearchStrategy::Exhaustive] {
        let mut oracle = Oracle { calls: BTreeMap::new() };
        let run = run_protocol(&mut oracle, &bags(), &[], &settings(vec![ADJ], strategy, FoldMode::PerFold)).unwrap();
        assert_eq!(selected(&run, ADJ, Fold::A), "amod+conj", "{}", strategy);
        assert_eq!(selected(&run, ADJ, Fold::B), "amod+conj", "{}", strategy);
        let summary = run.summary();
        assert_eq!(summary.len(), 1);
        assert_eq!(summary[0].configuration, "amod+conj");
        assert_eq!(summary[0].score, 0.546);
    }
}

#[test]
fn all_class_is_searched_separately() {
    let mut oracle = Oracle { calls: BTreeMap::new() };
    let baselines = vec![("COORD".to_owned(), Configuration::singleton("conjlr"))];
    let classes = vec![ADJ, ClassFilter::All];
    let run = run_protocol(&mut oracle, &bags(), &baselines, &settings(classes, SearchStrategy::Beam, FoldMode::FixedDev)).unwrap();
    assert_eq!(run.runs.len(), 2);
    assert_eq!(selected(&run, ADJ, Fold::A), "amod+conj");
    assert_eq!(selected(&run, ClassFilter::All, Fold::A), "obj");
    let summary = run.summary();
    let systems: Vec<(String, String)> = summary.iter().map(|r| (r.class.to_string(), r.system.clone())).collect();
    assert_eq!(
        systems,
        [("A", "COORD"), ("A", "BEST"), ("ALL", "COORD"), ("ALL", "BEST")]
            .map(|(c, s)| (c.to_owned(), s.to_owned()))
    );
    assert_eq!(summary[0].rho_b, 0.415);
    assert_eq!(summary[3].score, 0.31);
}

fn record(config: &str, slice: &str, rho: f64) -> FitnessRecord {
    FitnessRecord {
        context: "ctx".into(),
        configuration: config.into(),
        slice: slice.into(),
        rho,
        n_scored: 5,
        n_total: 6,
        pairs: 42,
        wall_ms: 7,
    }
}

#[test]
fn report_lists_cached_configurations_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let mut cache = FitnessCache::open(&dir.path().join("fitness.tsv")).unwrap();
    let rows = build_report(cache.records(), "ctx", &[ADJ], None);
    assert!(rows.is_empty());
    assert_eq!(report_tsv(&rows).lines().count(), 1);

    let mut records = Vec::new();
    for (config, a, b) in [("amod", 0.4, 0.5), ("amod+conj", 0.5, 0.6), ("conj", f64::NAN, 0.3)] {
        records.push(record(config, "A:a", a));
        records.push(record(config, "A:b", b));
    }
    records.push(record("obj", "A:a", 0.9));
    cache.insert(records).unwrap();

    let reopened = FitnessCache::open(&dir.path().join("fitness.tsv")).unwrap();
    let rows = build_report(reopened.records(), "ctx", &[ADJ], None);
    let order: Vec<String> = rows.iter().map(|r| r.configuration.canonical()).collect();
    assert_eq!(order, ["amod+conj", "amod", "conj"]);
    assert_eq!(rows[0].n_total, 12);
    let text = report_tsv(&rows);
    assert_eq!(text.lines().count(), 4);
    assert!(text.contains("conj\tNaN\t0.3000\tNaN"), "{}", text);
    assert!(build_report(reopened.records(), "other", &[ADJ], None).is_empty());
}

#[test]
fn cache_keeps_the_first_write() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fitness.tsv");
    let mut cache = FitnessCache::open(&path).unwrap();
    cache.insert(vec![record("amod", "A:a", 0.4)]).unwrap();
    cache.insert(vec![record("amod", "A:a", 0.9)]).unwrap();
    let reopened = FitnessCache::open(&path).unwrap();
    assert_eq!(reopened.records().len(), 1);
    assert_eq!(reopened.get("ctx", "amod", "A:a").unwrap().rho, 0.4);
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn depctx(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_depctx"))
        .args(args)
        .env(CACHE_ENV, cache)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "corpus = missing.conllu\ndataset = missing.tsv\n").unwrap();
    let o = depctx(dir.path(), &["extract", "-c", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.conllu"));

    fs::write(&conf, "corpus = x\nwindoww = 3\n").unwrap();
    let o = depctx(dir.path(), &["search", "-c", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = depctx(dir.path(), &["report", "-c", dir.path().join("none.conf").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = depctx(dir.path(), &["search", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cli_extract_train_eval_toefl() {
    let dir = tempfile::tempdir().unwrap();
    let conf = fixtures().join("toy.conf");
    let conf = conf.to_str().unwrap();

    let first = depctx(dir.path(), &["extract", "-c", conf]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(!stdout(&first).lines().next().unwrap().ends_with("(cached)"));
    let second = depctx(dir.path(), &["extract", "-c", conf]);
    assert!(stdout(&second).lines().next().unwrap().ends_with("(cached)"));
    assert_eq!(stdout(&first).lines().skip(1).collect::<Vec<_>>(), stdout(&second).lines().skip(1).collect::<Vec<_>>());

    let vectors = dir.path().join("amod.vec");
    let vectors = vectors.to_str().unwrap();
    let o = depctx(dir.path(), &["train", "-c", conf, "--bags", "amod+conj", "--out", vectors]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let dataset = fixtures().join("toy_simlex.tsv");
    let o = depctx(dir.path(), &["eval", "--vectors", vectors, "--dataset", dataset.to_str().unwrap(), "--class", "A"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.starts_with("rho\t"), "{}", out);
    assert!(out.contains("scored\t"));

    let questions = fixtures().join("toy_toefl.txt");
    let o = depctx(dir.path(), &["toefl", "--vectors", vectors, "--questions", questions.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().last().unwrap().ends_with("\t5"));

    let o = depctx(dir.path(), &["report", "-c", conf]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("class\tconfiguration"));
}

#[test]
fn cli_imports_simlex() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("SimLex-999.txt");
    fs::write(
        &input,
        "word1\tword2\tPOS\tSimLex999\tconc(w1)\nOld\tnew\tA\t1.58\t2.72\nsmart\tintelligent\tA\t9.2\t1.75\n",
    )
    .unwrap();
    let output = dir.path().join("simlex.tsv");
    let o = depctx(dir.path(), &["import-simlex", input.to_str().unwrap(), output.to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(&output).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "old\tnew\t1.58\tA");
}

#[test]
fn resolved_config_round_trips() {
    let config = ExperimentConfig::load(&fixtures().join("toy.conf")).unwrap();
    config.validate().unwrap();
    let again = ExperimentConfig::parse(&config.to_text(), Path::new("/")).unwrap();
    assert_eq!(again.to_text(), config.to_text());
    assert_eq!(again.hash(), config.hash());
    assert_eq!(config.trainer.dim, 16);
    assert_eq!(config.fold_mode, FoldMode::PerFold);
}
