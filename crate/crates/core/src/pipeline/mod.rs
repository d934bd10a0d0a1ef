//! Cached experiment orchestration: extraction, per-configuration training
//! and scoring, the class-specific search protocol and its reports.
//!
//! Everything expensive is keyed by content hashes. Bag files live under
//! `<cache>/bags/<hash>/`; fitness values are appended to
//! `<cache>/fitness.tsv`. Deleting the cache and rerunning with one worker
//! reproduces every number.

pub mod cache;
mod config;
pub mod report;

pub use cache::{FitnessCache, FitnessRecord};
pub use config::{ExperimentConfig, FoldMode, CACHE_ENV};
pub use report::{build_report, report_tsv, trace_tsv, ReportRow};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::{self, Write as _};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::conllu::{open_corpus, ConlluReader};
use crate::eval::{self, ClassFilter, EvalError, Fold, WordPairDataset};
use crate::extract::{
    extraction_hash, write_bag_files, BagError, BagMappingTable, BagStore, BOW_BAG, CONJLR,
    POSIT_BAG,
};
use crate::hash::{hash_fields, hash_file, short};
use crate::search::{
    best_configuration_search, evaluate_pool, exhaustive_search, greedy_search, Configuration,
    SearchError, SearchOptions, SearchOutcome, SearchStrategy,
};
use crate::sgns::{self, EmbeddingIoError, Embeddings, TrainError};

use report::fmt_rho;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Config(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Extract(#[from] BagError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Embeddings(#[from] EmbeddingIoError),
}

impl PipelineError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        PipelineError::Io {
            path: path.to_owned(),
            source,
        }
    }

    /// Errors caused by the invocation rather than by a failing run.
    pub fn is_usage(&self) -> bool {
        matches!(self, PipelineError::Config(_))
    }
}

/// One class/fold combination of the similarity dataset, written `V:a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slice {
    pub class: ClassFilter,
    pub fold: Fold,
}

impl fmt::Display for Slice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.class, self.fold)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SliceScore {
    /// NaN when fewer than two pairs could be scored.
    pub rho: f64,
    pub n_scored: usize,
    pub n_total: usize,
}

/// Scores of one trained configuration on every slice.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub scores: BTreeMap<Slice, SliceScore>,
    pub pairs: u64,
}

impl Evaluation {
    pub fn rho(&self, slice: Slice) -> f64 {
        self.scores.get(&slice).map_or(f64::NAN, |s| s.rho)
    }
}

/// Source of configuration scores: normally train-then-evaluate, but any
/// oracle can stand in.
pub trait Fitness {
    fn evaluate(&mut self, config: &Configuration) -> Result<Evaluation, PipelineError>;
}

pub fn load_table(path: Option<&Path>) -> Result<BagMappingTable, PipelineError> {
    match path {
        None => Ok(BagMappingTable::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| PipelineError::io(p, e))?;
            text.parse()
                .map_err(|e| PipelineError::Config(format!("{}: {}", p.display(), e)))
        }
    }
}

fn corpus_hash(paths: &[PathBuf]) -> Result<String, PipelineError> {
    let mut fields = Vec::new();
    for p in paths {
        let h = hash_file(p).map_err(|e| PipelineError::io(p, e))?;
        fields.push(("corpus".to_owned(), h));
    }
    Ok(hash_fields(&fields))
}

/// Extracts the corpus into bag files unless an identical extraction is
/// already cached. Returns the store and whether it was a cache hit.
pub fn prepare_bags(config: &ExperimentConfig) -> Result<(BagStore, bool), PipelineError> {
    for p in &config.corpora {
        if !p.is_file() {
            return Err(PipelineError::Config(format!(
                "corpus not found: {}",
                p.display()
            )));
        }
    }
    let table = load_table(config.table.as_deref())?;
    let source = corpus_hash(&config.corpora)?;
    let hash = extraction_hash(&table, &config.extraction, &source);
    let dir = config.cache_dir.join("bags").join(short(&hash));
    if BagStore::is_complete(&dir, &hash) {
        log::info!("bag cache hit: {}", dir.display());
        return Ok((BagStore::open(&dir)?, true));
    }

    let start = Instant::now();
    let mut readers = Vec::new();
    for p in &config.corpora {
        let input = open_corpus(p).map_err(|e| PipelineError::io(p, e))?;
        readers.push(ConlluReader::with_mode(input, config.parse_errors));
    }
    let sentences = readers.into_iter().flatten();
    let manifest = write_bag_files(sentences, &table, &config.extraction, &dir, &source)?;
    log::info!(
        "extracted {} sentences into {} in {:.2?}",
        manifest.sentences,
        dir.display(),
        start.elapsed()
    );
    Ok((BagStore::open(&dir)?, false))
}

/// Spearman scores of `embeddings` on each slice.
pub fn score_embeddings(
    embeddings: &Embeddings,
    dataset: &WordPairDataset,
    slices: &BTreeMap<Slice, Vec<usize>>,
) -> Result<BTreeMap<Slice, SliceScore>, PipelineError> {
    let mut out = BTreeMap::new();
    for (&slice, idx) in slices {
        let score = match eval::evaluate(embeddings, dataset, slice.class, Some(idx)) {
            Ok(r) => SliceScore {
                rho: r.rho,
                n_scored: r.n_scored,
                n_total: r.n_total,
            },
            Err(EvalError::UndefinedCorrelation(_)) => SliceScore {
                rho: f64::NAN,
                n_scored: idx
                    .iter()
                    .filter(|&&i| {
                        let e = &dataset.entries[i];
                        embeddings.get(&e.word1).is_some() && embeddings.get(&e.word2).is_some()
                    })
                    .count(),
                n_total: idx.len(),
            },
            Err(e) => return Err(e.into()),
        };
        out.insert(slice, score);
    }
    Ok(out)
}

/// A loaded experiment: bags, dataset folds and the fitness cache.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub bags: BagStore,
    pub dataset: WordPairDataset,
    pub slices: BTreeMap<Slice, Vec<usize>>,
    /// Hash of every input that affects a fitness value.
    pub context: String,
    pub cache: FitnessCache,
    memo: HashMap<Configuration, Evaluation>,
}

impl Experiment {
    pub fn open(config: ExperimentConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let (bags, _) = prepare_bags(&config)?;
        let dataset = WordPairDataset::load(&config.dataset).map_err(|e| {
            PipelineError::Config(format!("{}: {}", config.dataset.display(), e))
        })?;
        let mut slices = BTreeMap::new();
        for &class in &config.classes {
            let split = eval::split_folds(&dataset, class, config.fold_seed).map_err(|_| {
                PipelineError::Config(format!(
                    "dataset has fewer than 2 pairs for class {}",
                    class
                ))
            })?;
            for fold in [Fold::A, Fold::B] {
                slices.insert(Slice { class, fold }, split.fold(fold).to_vec());
            }
        }
        let dataset_hash =
            hash_file(&config.dataset).map_err(|e| PipelineError::io(&config.dataset, e))?;
        let mut fields = vec![
            ("bags".to_owned(), bags.manifest().config_hash.clone()),
            ("dataset".to_owned(), dataset_hash),
            ("fold_seed".to_owned(), config.fold_seed.to_string()),
        ];
        fields.extend(config.trainer.describe());
        let context = short(&hash_fields(&fields)).to_owned();
        let cache = FitnessCache::open(&config.cache_dir.join("fitness.tsv"))?;
        Ok(Experiment {
            config,
            bags,
            dataset,
            slices,
            context,
            cache,
            memo: HashMap::new(),
        })
    }

    /// Dependency bags available for search (baseline bags excluded).
    pub fn search_bags(&self) -> Vec<String> {
        self.bags
            .manifest()
            .counts
            .keys()
            .filter(|b| *b != BOW_BAG && *b != POSIT_BAG)
            .cloned()
            .collect()
    }

    /// Named baseline configurations present in the bag store.
    pub fn baselines(&self) -> Vec<(String, Configuration)> {
        let counts = &self.bags.manifest().counts;
        let mut out = Vec::new();
        for (name, bag) in [("BOW", BOW_BAG), ("POSIT", POSIT_BAG), ("COORD", CONJLR)] {
            if counts.contains_key(bag) {
                out.push((name.to_owned(), Configuration::singleton(bag)));
            }
        }
        if let Ok(all) = Configuration::new(self.search_bags()) {
            out.push(("DEPS-All".to_owned(), all));
        }
        out
    }

    fn cached(&self, name: &str) -> Option<Evaluation> {
        let mut scores = BTreeMap::new();
        let mut pairs = 0;
        for &slice in self.slices.keys() {
            let r = self.cache.get(&self.context, name, &slice.to_string())?;
            pairs = r.pairs;
            scores.insert(
                slice,
                SliceScore {
                    rho: r.rho,
                    n_scored: r.n_scored,
                    n_total: r.n_total,
                },
            );
        }
        Some(Evaluation { scores, pairs })
    }

    /// Trains embeddings for a configuration.
    pub fn train(&self, config: &Configuration) -> Result<sgns::TrainOutput, PipelineError> {
        self.bags.compose(config)?;
        let source = || self.bags.compose(config).expect("bags checked above");
        Ok(sgns::train(source, &self.config.trainer)?)
    }
}

impl Fitness for Experiment {
    fn evaluate(&mut self, config: &Configuration) -> Result<Evaluation, PipelineError> {
        if let Some(e) = self.memo.get(config) {
            return Ok(e.clone());
        }
        let name = config.canonical();
        if let Some(e) = self.cached(&name) {
            log::debug!("fitness cache hit: {}", name);
            self.memo.insert(config.clone(), e.clone());
            return Ok(e);
        }

        let pairs = self.bags.manifest().pair_count(config)?;
        let start = Instant::now();
        let scores = match self.train(config) {
            Ok(out) => score_embeddings(&out.store.words, &self.dataset, &self.slices)?,
            Err(PipelineError::Train(TrainError::EmptyVocabulary { min_count })) => {
                log::warn!("{}: no word survives min_count {}; scoring as undefined", name, min_count);
                self.slices
                    .iter()
                    .map(|(&s, idx)| {
                        let score = SliceScore {
                            rho: f64::NAN,
                            n_scored: 0,
                            n_total: idx.len(),
                        };
                        (s, score)
                    })
                    .collect()
            }
            Err(e) => return Err(e),
        };
        let wall_ms = start.elapsed().as_millis() as u64;
        log::info!("trained {} ({} pairs) in {} ms", name, pairs, wall_ms);

        let records = scores
            .iter()
            .map(|(slice, s)| FitnessRecord {
                context: self.context.clone(),
                configuration: name.clone(),
                slice: slice.to_string(),
                rho: s.rho,
                n_scored: s.n_scored,
                n_total: s.n_total,
                pairs,
                wall_ms,
            })
            .collect();
        self.cache.insert(records)?;
        let e = Evaluation { scores, pairs };
        self.memo.insert(config.clone(), e.clone());
        Ok(e)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchSettings {
    pub classes: Vec<ClassFilter>,
    pub strategy: SearchStrategy,
    pub threshold: f64,
    pub fold_mode: FoldMode,
    pub options: SearchOptions,
    pub exhaustive_limit: usize,
}

impl From<&ExperimentConfig> for SearchSettings {
    fn from(c: &ExperimentConfig) -> Self {
        SearchSettings {
            classes: c.classes.clone(),
            strategy: c.strategy,
            threshold: c.threshold,
            fold_mode: c.fold_mode,
            options: SearchOptions {
                follow_best_child: c.follow_best_child,
            },
            exhaustive_limit: c.exhaustive_limit,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FoldResult {
    Selected(SearchOutcome),
    /// No bag reached the threshold; holds the explanation.
    Infeasible(String),
}

/// One search with `dev` as the development fold of `class`.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldRun {
    pub class: ClassFilter,
    pub dev: Fold,
    pub result: FoldResult,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolRun {
    pub settings: SearchSettings,
    pub runs: Vec<FoldRun>,
    pub baselines: Vec<(String, Configuration)>,
    /// Every configuration scored during the run.
    pub evaluated: BTreeMap<Configuration, Evaluation>,
}

/// Runs the class-specific selection protocol: for each class and each
/// development fold, build the pool from single-bag scores and search the
/// lattice; then score the baselines.
pub fn run_protocol(
    fitness: &mut dyn Fitness,
    all_bags: &[String],
    baselines: &[(String, Configuration)],
    settings: &SearchSettings,
) -> Result<ProtocolRun, PipelineError> {
    let mut evaluated: BTreeMap<Configuration, Evaluation> = BTreeMap::new();
    let mut runs = Vec::new();
    let dev_folds: &[Fold] = match settings.fold_mode {
        FoldMode::PerFold => &[Fold::A, Fold::B],
        FoldMode::FixedDev => &[Fold::A],
    };
    log::info!("fold mode: {}", settings.fold_mode);

    for &class in &settings.classes {
        for &dev in dev_folds {
            let slice = Slice { class, fold: dev };
            let mut score = |c: &Configuration| -> Result<f64, PipelineError> {
                let e = fitness.evaluate(c)?;
                let rho = e.rho(slice);
                evaluated.insert(c.clone(), e);
                Ok(rho)
            };
            let space = match evaluate_pool(all_bags, settings.threshold, &mut score) {
                Ok(space) => space,
                Err(SearchError::EmptyPool { threshold, table }) => {
                    let msg = format!(
                        "no bag reaches {} on {}; per-bag fitness: {}",
                        threshold, slice, table
                    );
                    log::warn!("{}", msg);
                    runs.push(FoldRun {
                        class,
                        dev,
                        result: FoldResult::Infeasible(msg),
                    });
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            log::info!("{}: pool {:?} (K={}, M={})", slice, space.pool, space.pool.len(), all_bags.len());
            let outcome = match settings.strategy {
                SearchStrategy::Beam => best_configuration_search(&space, &mut score, settings.options),
                SearchStrategy::Greedy => greedy_search(&space, &mut score, settings.options),
                SearchStrategy::Exhaustive => {
                    exhaustive_search(&space, &mut score, settings.exhaustive_limit)
                }
            }?;
            log::info!(
                "{}: best {} ({}) after {} configurations",
                slice,
                outcome.best,
                fmt_rho(outcome.best_fitness),
                outcome.trace.len()
            );
            runs.push(FoldRun {
                class,
                dev,
                result: FoldResult::Selected(outcome),
            });
        }
    }
    for (_, c) in baselines {
        let e = fitness.evaluate(c)?;
        evaluated.insert(c.clone(), e);
    }
    Ok(ProtocolRun {
        settings: settings.clone(),
        runs,
        baselines: baselines.to_vec(),
        evaluated,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub class: ClassFilter,
    pub system: String,
    pub configuration: String,
    pub rho_a: f64,
    pub rho_b: f64,
    /// Fold average (per-fold mode) or the test-fold score (fixed-dev).
    pub score: f64,
}

pub const SUMMARY_HEADER: &str = "class\tsystem\tconfiguration\trho_a\trho_b\tscore";

impl ProtocolRun {
    fn run(&self, class: ClassFilter, dev: Fold) -> Option<&FoldRun> {
        self.runs.iter().find(|r| r.class == class && r.dev == dev)
    }

    fn selected(&self, class: ClassFilter, dev: Fold) -> Option<&Configuration> {
        match &self.run(class, dev)?.result {
            FoldResult::Selected(o) => Some(&o.best),
            FoldResult::Infeasible(_) => None,
        }
    }

    fn rho(&self, config: Option<&Configuration>, slice: Slice) -> f64 {
        config
            .and_then(|c| self.evaluated.get(c))
            .map_or(f64::NAN, |e| e.rho(slice))
    }

    /// Baseline rows followed by the selected configuration per class.
    /// Per-fold mode scores each fold with the configuration selected on
    /// the other fold.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let fixed = self.settings.fold_mode == FoldMode::FixedDev;
        let mut rows = Vec::new();
        for &class in &self.settings.classes {
            let a = Slice { class, fold: Fold::A };
            let b = Slice { class, fold: Fold::B };
            for (name, config) in &self.baselines {
                let (rho_a, rho_b) = (self.rho(Some(config), a), self.rho(Some(config), b));
                rows.push(SummaryRow {
                    class,
                    system: name.clone(),
                    configuration: config.canonical(),
                    rho_a,
                    rho_b,
                    score: if fixed { rho_b } else { (rho_a + rho_b) / 2.0 },
                });
            }
            let name = |c: Option<&Configuration>| c.map_or("-".to_owned(), |c| c.canonical());
            let row = if fixed {
                let chosen = self.selected(class, Fold::A);
                SummaryRow {
                    class,
                    system: "BEST".into(),
                    configuration: name(chosen),
                    rho_a: self.rho(chosen, a),
                    rho_b: self.rho(chosen, b),
                    score: self.rho(chosen, b),
                }
            } else {
                let on_a = self.selected(class, Fold::A);
                let on_b = self.selected(class, Fold::B);
                let configuration = if on_a == on_b {
                    name(on_a)
                } else {
                    format!("{}/{}", name(on_a), name(on_b))
                };
                let (rho_a, rho_b) = (self.rho(on_b, a), self.rho(on_a, b));
                SummaryRow {
                    class,
                    system: "BEST".into(),
                    configuration,
                    rho_a,
                    rho_b,
                    score: (rho_a + rho_b) / 2.0,
                }
            };
            rows.push(row);
        }
        rows
    }
}

pub fn summary_tsv(rows: &[SummaryRow]) -> String {
    let mut s = format!("{}\n", SUMMARY_HEADER);
    for r in rows {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.class,
            r.system,
            r.configuration,
            fmt_rho(r.rho_a),
            fmt_rho(r.rho_b),
            fmt_rho(r.score)
        );
    }
    s
}

fn write(path: &Path, text: &str) -> Result<(), PipelineError> {
    fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

/// Files produced by [`search`].
#[derive(Clone, Debug)]
pub struct SearchOutputs {
    pub run: ProtocolRun,
    pub summary: Vec<SummaryRow>,
    pub report: Vec<ReportRow>,
    pub output_dir: PathBuf,
}

/// The full search command: extraction (cached), protocol, and the report
/// files under the output directory.
pub fn search(config: ExperimentConfig) -> Result<SearchOutputs, PipelineError> {
    let mut exp = Experiment::open(config)?;
    let out = exp.config.output_dir.clone();
    fs::create_dir_all(&out).map_err(|e| PipelineError::io(&out, e))?;
    write(&out.join("experiment.conf"), &exp.config.to_text())?;

    let all_bags = exp.search_bags();
    let baselines = exp.baselines();
    let settings = SearchSettings::from(&exp.config);
    let run = run_protocol(&mut exp, &all_bags, &baselines, &settings)?;

    let names: BTreeSet<String> = run.evaluated.keys().map(Configuration::canonical).collect();
    let report = build_report(exp.cache.records(), &exp.context, &settings.classes, Some(&names));
    let summary = run.summary();
    write(&out.join("report.tsv"), &report_tsv(&report))?;
    write(&out.join("summary.tsv"), &summary_tsv(&summary))?;
    for r in &run.runs {
        let path = out.join(format!("trace_{}_{}.tsv", r.class, r.dev));
        let text = match &r.result {
            FoldResult::Selected(o) => trace_tsv(&o.trace),
            FoldResult::Infeasible(msg) => format!("# infeasible: {}\n", msg),
        };
        write(&path, &text)?;
    }
    let mut timings = String::from("configuration\tpairs\twall_ms\n");
    for name in &names {
        let first = exp
            .cache
            .records()
            .iter()
            .find(|r| r.context == exp.context && &r.configuration == name);
        if let Some(r) = first {
            let _ = writeln!(timings, "{}\t{}\t{}", name, r.pairs, r.wall_ms);
        }
    }
    write(&out.join("timings.tsv"), &timings)?;

    Ok(SearchOutputs {
        run,
        summary,
        report,
        output_dir: out,
    })
}

/// Report over everything cached for the experiment's inputs.
pub fn report(config: ExperimentConfig) -> Result<Vec<ReportRow>, PipelineError> {
    let exp = Experiment::open(config)?;
    Ok(build_report(
        exp.cache.records(),
        &exp.context,
        &exp.config.classes,
        None,
    ))
}

/// Trains one configuration and saves its word (and context) vectors.
pub fn train_configuration(
    config: ExperimentConfig,
    configuration: &Configuration,
    out: &Path,
    with_contexts: bool,
) -> Result<sgns::TrainReport, PipelineError> {
    config.validate()?;
    let (bags, _) = prepare_bags(&config)?;
    bags.compose(configuration)?;
    let source = || bags.compose(configuration).expect("bags checked above");
    let output = sgns::train(source, &config.trainer)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    sgns::save_store(&output.store, out, with_contexts).map_err(|e| PipelineError::io(out, e))?;
    Ok(output.report)
}
