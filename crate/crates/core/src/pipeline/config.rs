//! Experiment definition: a flat `key = value` text file with `#` comments.
//! Relative paths are resolved against the file's directory.

use std::collections::BTreeSet;
use std::env;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::conllu::ErrorMode;
use crate::eval::ClassFilter;
use crate::extract::{ConjVariant, ExtractionConfig};
use crate::hash::hash_fields;
use crate::search::{SearchStrategy, DEFAULT_EXHAUSTIVE_LIMIT, DEFAULT_THRESHOLD};
use crate::sgns::TrainerConfig;

use super::PipelineError;

/// Overrides `cache_dir` when set.
pub const CACHE_ENV: &str = "DEPCTX_CACHE_DIR";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FoldMode {
    /// Search on each fold as development set, score on the other, average.
    #[default]
    PerFold,
    /// Search once on fold a, score on fold b.
    FixedDev,
}

impl FromStr for FoldMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-fold" => Ok(FoldMode::PerFold),
            "fixed-dev" => Ok(FoldMode::FixedDev),
            other => Err(format!("unknown fold mode '{}'", other)),
        }
    }
}

impl std::fmt::Display for FoldMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FoldMode::PerFold => "per-fold",
            FoldMode::FixedDev => "fixed-dev",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub corpora: Vec<PathBuf>,
    /// Bag mapping table; the built-in table when absent.
    pub table: Option<PathBuf>,
    pub dataset: PathBuf,
    pub toefl: Option<PathBuf>,
    pub classes: Vec<ClassFilter>,
    pub strategy: SearchStrategy,
    pub threshold: f64,
    pub fold_mode: FoldMode,
    pub fold_seed: u64,
    pub follow_best_child: bool,
    pub exhaustive_limit: usize,
    pub cache_dir: PathBuf,
    pub output_dir: PathBuf,
    pub parse_errors: ErrorMode,
    pub extraction: ExtractionConfig,
    pub trainer: TrainerConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            corpora: Vec::new(),
            table: None,
            dataset: PathBuf::new(),
            toefl: None,
            classes: vec![
                ClassFilter::Only(crate::eval::WordClass::Adjective),
                ClassFilter::Only(crate::eval::WordClass::Verb),
                ClassFilter::Only(crate::eval::WordClass::Noun),
            ],
            strategy: SearchStrategy::Beam,
            threshold: DEFAULT_THRESHOLD,
            fold_mode: FoldMode::PerFold,
            fold_seed: 1,
            follow_best_child: false,
            exhaustive_limit: DEFAULT_EXHAUSTIVE_LIMIT,
            cache_dir: PathBuf::from("cache"),
            output_dir: PathBuf::from("out"),
            parse_errors: ErrorMode::SkipSentence,
            extraction: ExtractionConfig::default(),
            trainer: TrainerConfig::default(),
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T, PipelineError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| PipelineError::Config(format!("line {}: bad value for {}: {}", line, key, e)))
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl ExperimentConfig {
    /// Parses config text; relative paths are joined onto `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut c = ExperimentConfig::default();
        let mut cache_dir = None;
        let mut output_dir = None;
        let path = |v: &str| base.join(v);
        let mut seen = BTreeSet::new();

        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                PipelineError::Config(format!("line {}: expected 'key = value'", n))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_owned()) {
                return Err(PipelineError::Config(format!("line {}: duplicate key '{}'", n, key)));
            }
            let t = &mut c.trainer;
            let x = &mut c.extraction;
            match key {
                "corpus" => c.corpora = list(value).map(path).collect(),
                "table" => c.table = Some(path(value)),
                "dataset" => c.dataset = path(value),
                "toefl" => c.toefl = Some(path(value)),
                "classes" => {
                    c.classes = list(value)
                        .map(|v| parse_value(key, v, n))
                        .collect::<Result<_, _>>()?
                }
                "strategy" => c.strategy = parse_value(key, value, n)?,
                "threshold" => c.threshold = parse_value(key, value, n)?,
                "fold_mode" => c.fold_mode = parse_value(key, value, n)?,
                "fold_seed" => c.fold_seed = parse_value(key, value, n)?,
                "follow_best_child" => c.follow_best_child = parse_value(key, value, n)?,
                "exhaustive_limit" => c.exhaustive_limit = parse_value(key, value, n)?,
                "cache_dir" => cache_dir = Some(path(value)),
                "output_dir" => output_dir = Some(path(value)),
                "parse_errors" => {
                    c.parse_errors = match value {
                        "skip" => ErrorMode::SkipSentence,
                        "abort" => ErrorMode::Abort,
                        other => {
                            return Err(PipelineError::Config(format!(
                                "line {}: parse_errors must be skip or abort, not '{}'",
                                n, other
                            )))
                        }
                    }
                }
                "window" => x.window = parse_value(key, value, n)?,
                "conj_variant" => x.conj_variant = parse_value::<ConjVariant>(key, value, n)?,
                "collapse_prepositions" => x.collapse_prepositions = parse_value(key, value, n)?,
                "collapse_relations" => {
                    x.collapse_relations = list(value).map(str::to_owned).collect()
                }
                "baselines" => x.baselines = parse_value(key, value, n)?,
                "dim" => t.dim = parse_value(key, value, n)?,
                "negatives" => t.negatives = parse_value(key, value, n)?,
                "initial_lr" => t.initial_lr = parse_value(key, value, n)?,
                "subsample" => t.subsample = parse_value(key, value, n)?,
                "subsample_contexts" => t.subsample_contexts = parse_value(key, value, n)?,
                "epochs" => t.epochs = parse_value(key, value, n)?,
                "min_count" => t.min_count = parse_value(key, value, n)?,
                "unigram_power" => t.unigram_power = parse_value(key, value, n)?,
                "seed" => t.seed = parse_value(key, value, n)?,
                "workers" => t.workers = parse_value(key, value, n)?,
                other => {
                    return Err(PipelineError::Config(format!(
                        "line {}: unknown key '{}'",
                        n, other
                    )))
                }
            }
        }
        c.cache_dir = cache_dir.unwrap_or_else(|| base.join("cache"));
        c.output_dir = output_dir.unwrap_or_else(|| base.join("out"));
        Ok(c)
    }

    /// Reads a config file and applies the cache-directory override.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {}", path.display(), e)))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut config = ExperimentConfig::parse(&text, base)?;
        if let Some(dir) = env::var_os(CACHE_ENV) {
            config.cache_dir = PathBuf::from(dir);
        }
        Ok(config)
    }

    /// Checks that referenced inputs exist and parameters are usable.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.corpora.is_empty() {
            return bad("no corpus given".into());
        }
        let mut inputs: Vec<&PathBuf> = self.corpora.iter().collect();
        inputs.push(&self.dataset);
        inputs.extend(self.table.iter());
        inputs.extend(self.toefl.iter());
        for p in inputs {
            if !p.is_file() {
                return bad(format!("input file not found: {}", p.display()));
            }
        }
        if self.classes.is_empty() {
            return bad("no word classes selected".into());
        }
        if !self.threshold.is_finite() {
            return bad("threshold must be finite".into());
        }
        self.extraction.validate().map_err(PipelineError::Config)?;
        self.trainer
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }

    /// Fully resolved config text, written next to every run's outputs.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let join = |ps: &[PathBuf]| {
            ps.iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{} = {}", k, v);
        };
        kv("corpus", join(&self.corpora));
        if let Some(t) = &self.table {
            kv("table", t.display().to_string());
        }
        kv("dataset", self.dataset.display().to_string());
        if let Some(t) = &self.toefl {
            kv("toefl", t.display().to_string());
        }
        kv(
            "classes",
            self.classes
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        kv("strategy", self.strategy.to_string());
        kv("threshold", self.threshold.to_string());
        kv("fold_mode", self.fold_mode.to_string());
        kv("fold_seed", self.fold_seed.to_string());
        kv("follow_best_child", self.follow_best_child.to_string());
        kv("exhaustive_limit", self.exhaustive_limit.to_string());
        kv("cache_dir", self.cache_dir.display().to_string());
        kv("output_dir", self.output_dir.display().to_string());
        kv(
            "parse_errors",
            match self.parse_errors {
                ErrorMode::SkipSentence => "skip".into(),
                ErrorMode::Abort => "abort".into(),
            },
        );
        for (k, v) in self.extraction.describe() {
            kv(&k, v);
        }
        for (k, v) in self.trainer.describe() {
            kv(&k, v);
        }
        kv("workers", self.trainer.workers.to_string());
        s
    }

    /// Hash of everything that affects results (not paths of outputs,
    /// caches or the worker count).
    pub fn hash(&self) -> String {
        let mut fields = vec![
            ("strategy".to_owned(), self.strategy.to_string()),
            ("threshold".to_owned(), self.threshold.to_string()),
            ("fold_mode".to_owned(), self.fold_mode.to_string()),
            ("fold_seed".to_owned(), self.fold_seed.to_string()),
            ("follow".to_owned(), self.follow_best_child.to_string()),
        ];
        fields.extend(self.extraction.describe());
        fields.extend(self.trainer.describe());
        hash_fields(&fields)
    }
}
