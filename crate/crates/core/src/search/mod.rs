//! Search over the lattice of context configurations.
//!
//! The lattice is rooted at the configuration holding every pool bag; each
//! configuration's children remove exactly one bag. The beam-style search
//! keeps every child that scores at least as well as its origin and stops
//! when no child qualifies or the single-bag level is reached.

mod configuration;

pub use configuration::{Configuration, ConfigurationError, CONJ_UNION};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Default fitness cutoff for pool membership.
pub const DEFAULT_THRESHOLD: f64 = 0.2;
/// Largest pool the exhaustive search accepts without an override.
pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 12;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("no context bag reaches the threshold {threshold}; per-bag fitness: {table}")]
    EmptyPool { threshold: f64, table: String },
    #[error("missing single-bag fitness for '{0}'")]
    MissingBag(String),
    #[error("pool of {size} bags exceeds the exhaustive-search limit of {limit}")]
    PoolTooLarge { size: usize, limit: usize },
    #[error("fitness evaluation failed for {configuration}: {message}")]
    Fitness {
        configuration: Configuration,
        message: String,
    },
}

/// Total configurations the full protocol may consider: every nonempty
/// subset of the pool plus the single-bag configurations outside it.
pub fn count_space(all_bags: usize, pool: usize) -> u64 {
    assert!(pool <= all_bags, "pool larger than the bag inventory");
    assert!(pool < 64, "pool too large to count");
    ((1u64 << pool) - 1) + (all_bags - pool) as u64
}

/// NaN fitness (an undefined correlation) ranks below everything.
fn rank_value(f: f64) -> f64 {
    if f.is_nan() {
        f64::NEG_INFINITY
    } else {
        f
    }
}

/// True when `a` is strictly preferable to `b`.
fn better(a: (&Configuration, f64), b: (&Configuration, f64)) -> bool {
    let (fa, fb) = (rank_value(a.1), rank_value(b.1));
    fa > fb || (fa == fb && a.0.tie_order(b.0).is_lt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigurationSpace {
    /// Every individual bag, with its single-bag fitness.
    pub bag_fitness: BTreeMap<String, f64>,
    /// Bags whose fitness reaches the threshold.
    pub pool: Vec<String>,
    pub threshold: f64,
}

impl ConfigurationSpace {
    pub fn all_bags(&self) -> impl Iterator<Item = &str> {
        self.bag_fitness.keys().map(String::as_str)
    }

    pub fn root(&self) -> Configuration {
        Configuration::new(self.pool.iter().cloned()).expect("nonempty pool")
    }

    pub fn count(&self) -> u64 {
        count_space(self.bag_fitness.len(), self.pool.len())
    }
}

/// Keeps the bags whose single-bag fitness is at least `threshold`.
pub fn build_pool(
    bag_fitness: &BTreeMap<String, f64>,
    threshold: f64,
) -> Result<ConfigurationSpace, SearchError> {
    let pool: Vec<String> = bag_fitness
        .iter()
        .filter(|(_, &f)| f >= threshold)
        .map(|(b, _)| b.clone())
        .collect();
    if pool.is_empty() {
        let table = bag_fitness
            .iter()
            .map(|(b, f)| format!("{}={:.3}", b, f))
            .collect::<Vec<_>>()
            .join(", ");
        return Err(SearchError::EmptyPool { threshold, table });
    }
    Ok(ConfigurationSpace {
        bag_fitness: bag_fitness.clone(),
        pool,
        threshold,
    })
}

/// Evaluates every single-bag configuration, then builds the pool.
pub fn evaluate_pool<F, E>(
    all_bags: &[String],
    threshold: f64,
    mut fitness: F,
) -> Result<ConfigurationSpace, SearchError>
where
    F: FnMut(&Configuration) -> Result<f64, E>,
    E: fmt::Display,
{
    let mut table = BTreeMap::new();
    for bag in all_bags {
        let config = Configuration::singleton(bag.clone());
        let f = fitness(&config).map_err(|e| SearchError::Fitness {
            configuration: config.clone(),
            message: e.to_string(),
        })?;
        table.insert(bag.clone(), f);
    }
    build_pool(&table, threshold)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TraceStatus {
    /// Single-bag configuration admitted to the pool.
    Pool,
    /// Single-bag configuration below the threshold.
    Excluded,
    /// The configuration of all pool bags.
    Root,
    /// Child that scored at least as well as its origin.
    Kept,
    /// Child that scored below its origin.
    Pruned,
    /// Evaluated by the exhaustive search.
    Visited,
}

impl fmt::Display for TraceStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceStatus::Pool => "pool",
            TraceStatus::Excluded => "excluded",
            TraceStatus::Root => "root",
            TraceStatus::Kept => "kept",
            TraceStatus::Pruned => "pruned",
            TraceStatus::Visited => "visited",
        })
    }
}

impl FromStr for TraceStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "pool" => TraceStatus::Pool,
            "excluded" => TraceStatus::Excluded,
            "root" => TraceStatus::Root,
            "kept" => TraceStatus::Kept,
            "pruned" => TraceStatus::Pruned,
            "visited" => TraceStatus::Visited,
            other => return Err(format!("unknown trace status '{}'", other)),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceEntry {
    pub configuration: Configuration,
    pub level: usize,
    pub fitness: f64,
    pub status: TraceStatus,
    /// Origin that produced (or kept) this configuration as a child.
    pub origin: Option<Configuration>,
}

/// Every configuration a search evaluated, in evaluation order. Each
/// configuration appears once.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchTrace {
    pub entries: Vec<TraceEntry>,
}

impl SearchTrace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, config: &Configuration) -> Option<&TraceEntry> {
        self.entries.iter().find(|e| &e.configuration == config)
    }

    pub fn with_status(&self, status: TraceStatus) -> impl Iterator<Item = &TraceEntry> {
        self.entries.iter().filter(move |e| e.status == status)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    pub best: Configuration,
    pub best_fitness: f64,
    pub trace: SearchTrace,
}

/// Memoizing wrapper around the fitness function that records the trace.
struct Evaluator<'s, F> {
    fitness: F,
    space: &'s ConfigurationSpace,
    trace: SearchTrace,
    position: HashMap<Configuration, usize>,
}

impl<'s, F, E> Evaluator<'s, F>
where
    F: FnMut(&Configuration) -> Result<f64, E>,
    E: fmt::Display,
{
    fn new(space: &'s ConfigurationSpace, fitness: F) -> Self {
        let mut ev = Evaluator {
            fitness,
            space,
            trace: SearchTrace::default(),
            position: HashMap::new(),
        };
        for (bag, &f) in &space.bag_fitness {
            let status = if space.pool.contains(bag) {
                TraceStatus::Pool
            } else {
                TraceStatus::Excluded
            };
            ev.record(Configuration::singleton(bag.clone()), 1, f, status, None);
        }
        ev
    }

    fn record(
        &mut self,
        configuration: Configuration,
        level: usize,
        fitness: f64,
        status: TraceStatus,
        origin: Option<Configuration>,
    ) {
        self.position
            .insert(configuration.clone(), self.trace.entries.len());
        self.trace.entries.push(TraceEntry {
            configuration,
            level,
            fitness,
            status,
            origin,
        });
    }

    fn known(&self, config: &Configuration) -> Option<f64> {
        self.position
            .get(config)
            .map(|&i| self.trace.entries[i].fitness)
    }

    fn eval(
        &mut self,
        config: &Configuration,
        status: TraceStatus,
        origin: Option<&Configuration>,
    ) -> Result<f64, SearchError> {
        if let Some(f) = self.known(config) {
            return Ok(f);
        }
        let f = (self.fitness)(config).map_err(|e| SearchError::Fitness {
            configuration: config.clone(),
            message: e.to_string(),
        })?;
        self.record(config.clone(), config.len(), f, status, origin.cloned());
        Ok(f)
    }

    fn mark_kept(&mut self, config: &Configuration, origin: &Configuration) {
        if let Some(&i) = self.position.get(config) {
            let entry = &mut self.trace.entries[i];
            if entry.status != TraceStatus::Root {
                entry.status = TraceStatus::Kept;
                entry.origin = Some(origin.clone());
            }
        }
    }

    /// Best evaluated configuration made only of pool bags.
    fn finish(self) -> SearchOutcome {
        let root = self.space.root();
        let mut best: Option<(&Configuration, f64)> = None;
        for e in &self.trace.entries {
            if !e.configuration.is_subset(&root) {
                continue;
            }
            let cand = (&e.configuration, e.fitness);
            if best.is_none_or(|b| better(cand, b)) {
                best = Some(cand);
            }
        }
        let (best, best_fitness) = best.expect("root is always evaluated");
        SearchOutcome {
            best: best.clone(),
            best_fitness,
            trace: self.trace,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchOptions {
    /// When no child improves on its origin, continue from the best child
    /// anyway instead of stopping.
    pub follow_best_child: bool,
}

/// The beam-style best configuration search.
pub fn best_configuration_search<F, E>(
    space: &ConfigurationSpace,
    fitness: F,
    options: SearchOptions,
) -> Result<SearchOutcome, SearchError>
where
    F: FnMut(&Configuration) -> Result<f64, E>,
    E: fmt::Display,
{
    descend(space, fitness, options, false)
}

/// Greedy variant: at most one configuration survives per level.
pub fn greedy_search<F, E>(
    space: &ConfigurationSpace,
    fitness: F,
    options: SearchOptions,
) -> Result<SearchOutcome, SearchError>
where
    F: FnMut(&Configuration) -> Result<f64, E>,
    E: fmt::Display,
{
    descend(space, fitness, options, true)
}

fn descend<F, E>(
    space: &ConfigurationSpace,
    fitness: F,
    options: SearchOptions,
    greedy: bool,
) -> Result<SearchOutcome, SearchError>
where
    F: FnMut(&Configuration) -> Result<f64, E>,
    E: fmt::Display,
{
    let mut ev = Evaluator::new(space, fitness);
    let root = space.root();
    ev.eval(&root, TraceStatus::Root, None)?;

    let mut frontier = vec![root];
    let mut level = space.pool.len();
    while level > 1 && !frontier.is_empty() {
        let mut next: Vec<Configuration> = Vec::new();
        let mut seen: HashSet<Configuration> = HashSet::new();
        let mut best_child: Option<(Configuration, f64)> = None;

        for origin in &frontier {
            let origin_fitness = ev.known(origin).expect("frontier is evaluated");
            let bags: Vec<String> = origin.bags().map(str::to_owned).collect();
            for bag in bags {
                let child = origin.without(&bag).expect("level > 1");
                let f = ev.eval(&child, TraceStatus::Pruned, Some(origin))?;
                if best_child
                    .as_ref()
                    .is_none_or(|(c, bf)| better((&child, f), (c, *bf)))
                {
                    best_child = Some((child.clone(), f));
                }
                if f >= origin_fitness && !greedy && seen.insert(child.clone()) {
                    ev.mark_kept(&child, origin);
                    next.push(child);
                }
            }
            if greedy {
                if let Some((child, f)) = &best_child {
                    if *f >= origin_fitness {
                        ev.mark_kept(child, origin);
                        next.push(child.clone());
                    }
                }
            }
        }

        if next.is_empty() && options.follow_best_child {
            if let Some((child, _)) = best_child {
                next.push(child);
            }
        }
        frontier = next;
        level -= 1;
    }
    Ok(ev.finish())
}

/// Evaluates every nonempty subset of the pool.
pub fn exhaustive_search<F, E>(
    space: &ConfigurationSpace,
    fitness: F,
    limit: usize,
) -> Result<SearchOutcome, SearchError>
where
    F: FnMut(&Configuration) -> Result<f64, E>,
    E: fmt::Display,
{
    let k = space.pool.len();
    if k > limit {
        return Err(SearchError::PoolTooLarge { size: k, limit });
    }
    let mut ev = Evaluator::new(space, fitness);
    ev.eval(&space.root(), TraceStatus::Root, None)?;
    for mask in 1u64..(1u64 << k) {
        let bags = space
            .pool
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, b)| b.clone());
        let config = Configuration::new(bags).expect("nonempty subset");
        ev.eval(&config, TraceStatus::Visited, None)?;
    }
    Ok(ev.finish())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SearchStrategy {
    #[default]
    Beam,
    Greedy,
    Exhaustive,
}

impl fmt::Display for SearchStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchStrategy::Beam => "alg1",
            SearchStrategy::Greedy => "greedy",
            SearchStrategy::Exhaustive => "exhaustive",
        })
    }
}

impl FromStr for SearchStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "alg1" | "beam" => Ok(SearchStrategy::Beam),
            "greedy" => Ok(SearchStrategy::Greedy),
            "exhaustive" => Ok(SearchStrategy::Exhaustive),
            other => Err(format!("unknown search strategy '{}'", other)),
        }
    }
}

pub fn run_search<F, E>(
    strategy: SearchStrategy,
    space: &ConfigurationSpace,
    fitness: F,
    options: SearchOptions,
) -> Result<SearchOutcome, SearchError>
where
    F: FnMut(&Configuration) -> Result<f64, E>,
    E: fmt::Display,
{
    match strategy {
        SearchStrategy::Beam => best_configuration_search(space, fitness, options),
        SearchStrategy::Greedy => greedy_search(space, fitness, options),
        SearchStrategy::Exhaustive => exhaustive_search(space, fitness, DEFAULT_EXHAUSTIVE_LIMIT),
    }
}
