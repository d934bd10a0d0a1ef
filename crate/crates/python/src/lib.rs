//! Python bindings for dependency-context extraction, SGNS training,
//! evaluation and context configuration search.

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use depctx_core::conllu::{self, ErrorMode};
use depctx_core::eval::{self, ClassFilter, WordPairDataset};
use depctx_core::extract::{self, BagMappingTable, ConjVariant, ContextPair, ExtractionConfig};
use depctx_core::search::{self, ConfigurationSpace, SearchOptions, SearchStrategy};
use depctx_core::sgns::{self, TrainerConfig};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_error(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// One parsed CoNLL-U sentence.
#[pyclass(frozen, skip_from_py_object, module = "depctx")]
#[derive(Clone)]
struct Sentence {
    inner: conllu::Sentence,
}

#[pymethods]
impl Sentence {
    /// Lowercased surface forms.
    #[getter]
    fn forms(&self) -> Vec<String> {
        self.inner.tokens.iter().map(|t| t.form.clone()).collect()
    }

    /// `(index, form, lemma, upos, head, deprel)` per token.
    #[getter]
    fn tokens(&self) -> Vec<(usize, String, String, String, usize, String)> {
        self.inner
            .tokens
            .iter()
            .map(|t| (t.index, t.form.clone(), t.lemma.clone(), t.upos.clone(), t.head, t.deprel.clone()))
            .collect()
    }

    fn to_conllu(&self) -> String {
        self.inner.to_conllu()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Sentence({:?})", self.forms().join(" "))
    }
}

/// Parses CoNLL-U text. With `skip_errors` malformed sentences are dropped
/// instead of raising.
#[pyfunction]
#[pyo3(signature = (text, skip_errors = false))]
fn parse_conllu(text: &str, skip_errors: bool) -> PyResult<Vec<Sentence>> {
    let mode = if skip_errors { ErrorMode::SkipSentence } else { ErrorMode::Abort };
    let sentences = conllu::parse_str(text, mode).map_err(value_error)?;
    Ok(sentences.into_iter().map(|inner| Sentence { inner }).collect())
}

/// Typed dependency pairs `(word, context, bag)` under the default mapping
/// table.
#[pyfunction]
#[pyo3(signature = (sentence, collapse_prepositions = true, conj_variant = "both"))]
fn extract_pairs(
    sentence: &Sentence,
    collapse_prepositions: bool,
    conj_variant: &str,
) -> PyResult<Vec<(String, String, String)>> {
    let config = ExtractionConfig {
        collapse_prepositions,
        conj_variant: conj_variant.parse::<ConjVariant>().map_err(value_error)?,
        ..ExtractionConfig::default()
    };
    let pairs = extract::extract_sentence(&sentence.inner, &BagMappingTable::default(), &config);
    Ok(pairs
        .into_iter()
        .map(|p| {
            let context = p.bag_context();
            (p.word, context, p.bag)
        })
        .collect())
}

/// Window contexts `(word, context)`; `positional` adds signed offsets.
#[pyfunction]
#[pyo3(signature = (sentence, window = 2, positional = false))]
fn window_pairs(sentence: &Sentence, window: usize, positional: bool) -> Vec<(String, String)> {
    let pairs = if positional {
        extract::extract_posit_pairs(&sentence.inner, window)
    } else {
        extract::extract_bow_pairs(&sentence.inner, window)
    };
    pairs.into_iter().map(|p| (p.word, p.context)).collect()
}

/// A set of context bags, e.g. `Configuration("amod+conj")`.
#[pyclass(frozen, eq, hash, skip_from_py_object, module = "depctx")]
#[derive(Clone, PartialEq, Eq, Hash)]
struct Configuration {
    inner: search::Configuration,
}

#[pymethods]
impl Configuration {
    #[new]
    fn new(spec: &Bound<'_, PyAny>) -> PyResult<Self> {
        let inner = if let Ok(s) = spec.extract::<String>() {
            s.parse().map_err(value_error)?
        } else {
            let bags: Vec<String> = spec.extract()?;
            search::Configuration::new(bags).map_err(value_error)?
        };
        Ok(Configuration { inner })
    }

    #[getter]
    fn bags(&self) -> Vec<String> {
        self.inner.bags().map(str::to_owned).collect()
    }

    fn canonical(&self) -> String {
        self.inner.canonical()
    }

    fn __contains__(&self, bag: &str) -> bool {
        self.inner.contains(bag)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __str__(&self) -> String {
        self.inner.canonical()
    }

    fn __repr__(&self) -> String {
        format!("Configuration({:?})", self.inner.canonical())
    }
}

/// Number of configurations over `all_bags` bags with a pool of `pool`.
#[pyfunction]
fn count_space(all_bags: usize, pool: usize) -> u64 {
    search::count_space(all_bags, pool)
}

/// Result of a configuration search.
#[pyclass(frozen, get_all, module = "depctx")]
struct SearchResult {
    best: Configuration,
    best_fitness: f64,
    pool: Vec<String>,
    /// `(configuration, level, fitness, status, origin)` in evaluation order.
    trace: Vec<(String, usize, f64, String, Option<String>)>,
}

#[pymethods]
impl SearchResult {
    fn __repr__(&self) -> String {
        format!(
            "SearchResult(best={:?}, best_fitness={}, evaluated={})",
            self.best.inner.canonical(),
            self.best_fitness,
            self.trace.len()
        )
    }
}

/// Searches the configuration lattice. `singles` maps every bag to its
/// single-bag fitness; `fitness` is called with a `Configuration` for every
/// multi-bag candidate and must return a float.
#[pyfunction]
#[pyo3(signature = (singles, fitness, strategy = "alg1", threshold = 0.2, follow_best_child = false))]
fn search_configurations(
    singles: BTreeMap<String, f64>,
    fitness: &Bound<'_, PyAny>,
    strategy: &str,
    threshold: f64,
    follow_best_child: bool,
) -> PyResult<SearchResult> {
    let strategy: SearchStrategy = strategy.parse().map_err(value_error)?;
    let space: ConfigurationSpace = search::build_pool(&singles, threshold).map_err(value_error)?;
    let mut failure: Option<PyErr> = None;
    let score = |c: &search::Configuration| -> Result<f64, String> {
        let arg = Configuration { inner: c.clone() };
        match fitness.call1((arg,)).and_then(|v| v.extract::<f64>()) {
            Ok(v) => Ok(v),
            Err(e) => {
                let msg = e.to_string();
                failure.get_or_insert(e);
                Err(msg)
            }
        }
    };
    let options = SearchOptions { follow_best_child };
    let outcome = search::run_search(strategy, &space, score, options);
    if let Some(e) = failure {
        return Err(e);
    }
    let outcome = outcome.map_err(runtime_error)?;
    let trace = outcome
        .trace
        .entries
        .iter()
        .map(|e| {
            (
                e.configuration.canonical(),
                e.level,
                e.fitness,
                e.status.to_string(),
                e.origin.as_ref().map(|o| o.canonical()),
            )
        })
        .collect();
    Ok(SearchResult {
        best: Configuration { inner: outcome.best },
        best_fitness: outcome.best_fitness,
        pool: space.pool,
        trace,
    })
}

/// Spearman correlation with average ranks for ties.
#[pyfunction]
fn spearman(xs: Vec<f64>, ys: Vec<f64>) -> PyResult<f64> {
    eval::spearman(&xs, &ys).map_err(value_error)
}

/// Cosine similarity; 0 when either vector is all zeros.
#[pyfunction]
fn cosine(u: Vec<f32>, v: Vec<f32>) -> PyResult<f64> {
    eval::cosine(&u, &v).map(|c| c.value).map_err(value_error)
}

/// Word vectors.
#[pyclass(frozen, module = "depctx")]
struct Embeddings {
    inner: sgns::Embeddings,
}

#[pymethods]
impl Embeddings {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let inner = sgns::load_embeddings(&path).map_err(runtime_error)?;
        Ok(Embeddings { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        sgns::save_embeddings(&self.inner, &path).map_err(runtime_error)
    }

    #[getter]
    fn words(&self) -> Vec<String> {
        self.inner.words().to_vec()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn vector(&self, word: &str) -> Option<Vec<f32>> {
        self.inner.get(word).map(<[f32]>::to_vec)
    }

    /// Cosine similarity of two words, `None` if either is unknown.
    fn similarity(&self, a: &str, b: &str) -> PyResult<Option<f64>> {
        match (self.inner.get(a), self.inner.get(b)) {
            (Some(u), Some(v)) => eval::cosine(u, v).map(|c| Some(c.value)).map_err(value_error),
            _ => Ok(None),
        }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, word: &str) -> bool {
        self.inner.get(word).is_some()
    }

    fn __repr__(&self) -> String {
        format!("Embeddings(words={}, dim={})", self.inner.len(), self.inner.dim())
    }
}

/// Trained model: word and context vectors plus the per-epoch loss.
#[pyclass(frozen, get_all, module = "depctx")]
struct TrainResult {
    words: Py<Embeddings>,
    contexts: Py<Embeddings>,
    epoch_losses: Vec<f64>,
    input_pairs: u64,
}

/// Trains SGNS on `(word, context)` pairs.
#[pyfunction]
#[pyo3(signature = (
    pairs, dim = 100, negatives = 15, epochs = 5, min_count = 1, initial_lr = 0.025,
    subsample = 0.0, seed = 1, workers = 1,
))]
#[allow(clippy::too_many_arguments)]
fn train(
    py: Python<'_>,
    pairs: Vec<(String, String)>,
    dim: usize,
    negatives: usize,
    epochs: usize,
    min_count: u64,
    initial_lr: f64,
    subsample: f64,
    seed: u64,
    workers: usize,
) -> PyResult<TrainResult> {
    let config = TrainerConfig {
        dim,
        negatives,
        epochs,
        min_count,
        initial_lr,
        subsample,
        seed,
        workers,
        ..TrainerConfig::default()
    };
    let pairs: Vec<ContextPair> = pairs.into_iter().map(|(w, c)| ContextPair::new(w, c)).collect();
    let output = py
        .detach(|| sgns::train(|| pairs.iter().cloned().map(Ok::<_, Infallible>), &config))
        .map_err(runtime_error)?;
    Ok(TrainResult {
        words: Py::new(py, Embeddings { inner: output.store.words })?,
        contexts: Py::new(py, Embeddings { inner: output.store.contexts })?,
        epoch_losses: output.report.epoch_losses,
        input_pairs: output.report.input_pairs,
    })
}

/// Spearman correlation on a word-pair dataset given as
/// `(word1, word2, score, class)` rows. Returns `(rho, n_scored, n_total)`.
#[pyfunction]
#[pyo3(signature = (embeddings, rows, word_class = "ALL"))]
fn evaluate(
    embeddings: &Embeddings,
    rows: Vec<(String, String, f64, String)>,
    word_class: &str,
) -> PyResult<(f64, usize, usize)> {
    let filter: ClassFilter = word_class.parse().map_err(value_error)?;
    let entries = rows
        .into_iter()
        .map(|(word1, word2, gold, class)| {
            Ok(eval::WordPair {
                word1: word1.to_lowercase(),
                word2: word2.to_lowercase(),
                gold,
                class: class.parse().map_err(value_error)?,
            })
        })
        .collect::<PyResult<Vec<_>>>()?;
    let dataset = WordPairDataset { entries };
    let r = eval::evaluate(&embeddings.inner, &dataset, filter, None).map_err(value_error)?;
    Ok((r.rho, r.n_scored, r.n_total))
}

#[pymodule]
fn depctx(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Sentence>()?;
    m.add_class::<Configuration>()?;
    m.add_class::<SearchResult>()?;
    m.add_class::<Embeddings>()?;
    m.add_class::<TrainResult>()?;
    m.add_function(wrap_pyfunction!(parse_conllu, m)?)?;
    m.add_function(wrap_pyfunction!(extract_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(window_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(count_space, m)?)?;
    m.add_function(wrap_pyfunction!(search_configurations, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(cosine, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
