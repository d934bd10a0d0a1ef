//! Typed dependency contexts and the baseline window contexts.
//!
//! A sentence is first turned into a [`DepGraph`] (an explicit arc list),
//! optionally collapsed so that `nmod` + `case` become a single `prep:X`
//! pseudo-arc, and then every arc yields a pair for each direction:
//! `(head, dependent_rel)` and `(dependent, head_rel-1)`.

mod bags;
mod table;

pub use bags::{extraction_hash, write_bag_files, BagError, BagStore, Manifest, PairStream, MANIFEST_FILE};
pub use table::{BagMappingTable, BagTarget, Pattern, Rule, TableError, CONJLL, CONJLR, DEFAULT_BAGS};

use std::fmt;
use std::str::FromStr;

use crate::conllu::Sentence;

/// Bag name used for plain window contexts.
pub const BOW_BAG: &str = "bow";
/// Bag name used for offset-annotated window contexts.
pub const POSIT_BAG: &str = "posit";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Normal,
    Inverse,
}

/// A `(word, context)` training pair as consumed by the trainer.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContextPair {
    pub word: String,
    pub context: String,
}

impl ContextPair {
    pub fn new(word: impl Into<String>, context: impl Into<String>) -> Self {
        ContextPair {
            word: word.into(),
            context: context.into(),
        }
    }
}

/// One typed dependency pair together with the bag it belongs to.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DependencyPair {
    pub word: String,
    pub context_token: String,
    /// Raw relation as found on the arc, e.g. `nsubj` or `prep:with`.
    pub relation: String,
    pub bag: String,
    pub direction: Direction,
}

impl DependencyPair {
    /// Context string with the raw relation, e.g. `discovers_dobj-1`.
    pub fn context(&self) -> String {
        typed_context(&self.context_token, &self.relation, self.direction)
    }

    /// Context string as written to bag files: `prep:X` relations are
    /// reduced to `prep` so context types match bag granularity.
    pub fn bag_context(&self) -> String {
        let relation = if self.relation.starts_with("prep:") {
            "prep"
        } else {
            self.relation.as_str()
        };
        typed_context(&self.context_token, relation, self.direction)
    }

    pub fn to_context_pair(&self) -> ContextPair {
        ContextPair::new(self.word.clone(), self.bag_context())
    }
}

fn typed_context(token: &str, relation: &str, direction: Direction) -> String {
    match direction {
        Direction::Normal => format!("{}_{}", token, relation),
        Direction::Inverse => format!("{}_{}-1", token, relation),
    }
}

/// How coordination arcs are turned into pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ConjVariant {
    /// Dependent sees the head through an inverse relation.
    Lr,
    /// Both directions use the plain relation.
    Ll,
    /// Emit both, into `conjlr` and `conjll` respectively.
    #[default]
    Both,
}

impl fmt::Display for ConjVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConjVariant::Lr => "conjlr",
            ConjVariant::Ll => "conjll",
            ConjVariant::Both => "both",
        })
    }
}

impl FromStr for ConjVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "conjlr" | "lr" => Ok(ConjVariant::Lr),
            "conjll" | "ll" => Ok(ConjVariant::Ll),
            "both" => Ok(ConjVariant::Both),
            other => Err(format!("unknown coordination variant '{}'", other)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractionConfig {
    /// Window size for BOW/POSIT baselines.
    pub window: usize,
    pub conj_variant: ConjVariant,
    pub collapse_prepositions: bool,
    /// Relations whose case-marked dependents get collapsed (`nmod` for UD
    /// v1, add `obl` for UD v2).
    pub collapse_relations: Vec<String>,
    /// Also write `bow` and `posit` bag files.
    pub baselines: bool,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            window: 2,
            conj_variant: ConjVariant::Both,
            collapse_prepositions: true,
            collapse_relations: vec!["nmod".to_owned()],
            baselines: true,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.window == 0 {
            return Err("window must be at least 1".to_owned());
        }
        Ok(())
    }

    /// Stable key/value description used for hashing and the manifest.
    pub fn describe(&self) -> Vec<(String, String)> {
        vec![
            ("window".into(), self.window.to_string()),
            ("conj_variant".into(), self.conj_variant.to_string()),
            (
                "collapse_prepositions".into(),
                self.collapse_prepositions.to_string(),
            ),
            (
                "collapse_relations".into(),
                self.collapse_relations.join(","),
            ),
            ("baselines".into(), self.baselines.to_string()),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arc {
    pub head: usize,
    pub dependent: usize,
    pub relation: String,
}

/// Sentence as surface forms plus an explicit list of (non-root) arcs.
/// Positions are 1-based like in the source sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepGraph {
    forms: Vec<String>,
    arcs: Vec<Arc>,
}

impl DepGraph {
    pub fn from_sentence(sentence: &Sentence) -> Self {
        let forms = sentence.tokens.iter().map(|t| t.form.clone()).collect();
        let arcs = sentence
            .tokens
            .iter()
            .filter(|t| t.head != 0)
            .map(|t| Arc {
                head: t.head,
                dependent: t.index,
                relation: t.deprel.clone(),
            })
            .collect();
        DepGraph { forms, arcs }
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn form(&self, index: usize) -> &str {
        &self.forms[index - 1]
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    /// Replaces `h -nmod-> m` plus `m -case-> c` by `h -prep:c-> m`.
    ///
    /// The linearly first case dependent supplies the preposition; all case
    /// dependents of a collapsed token are removed. Arcs that do not match
    /// the pattern are left untouched.
    pub fn collapse_prepositions(&self, relations: &[String]) -> DepGraph {
        let mut new_relation: Vec<Option<String>> = vec![None; self.arcs.len()];
        let mut removed = vec![false; self.arcs.len()];

        for (i, arc) in self.arcs.iter().enumerate() {
            if !relations.iter().any(|r| *r == arc.relation) {
                continue;
            }
            let mut case_arcs: Vec<usize> = self
                .arcs
                .iter()
                .enumerate()
                .filter(|(_, a)| a.head == arc.dependent && a.relation == "case")
                .map(|(j, _)| j)
                .collect();
            if case_arcs.is_empty() {
                continue;
            }
            case_arcs.sort_by_key(|&j| self.arcs[j].dependent);
            let marker = self.form(self.arcs[case_arcs[0]].dependent).to_lowercase();
            new_relation[i] = Some(format!("prep:{}", marker));
            for j in case_arcs {
                removed[j] = true;
            }
        }

        let arcs = self
            .arcs
            .iter()
            .zip(new_relation)
            .zip(removed)
            .filter(|(_, removed)| !removed)
            .map(|((arc, relabel), _)| Arc {
                head: arc.head,
                dependent: arc.dependent,
                relation: relabel.unwrap_or_else(|| arc.relation.clone()),
            })
            .collect();
        DepGraph {
            forms: self.forms.clone(),
            arcs,
        }
    }
}

/// Dependency pairs for every arc the table keeps. Coordination arcs are
/// handled by [`conj_pairs_for_arc`] with the given variant.
pub fn extract_deps_pairs(
    graph: &DepGraph,
    table: &BagMappingTable,
    conj_variant: ConjVariant,
) -> Vec<DependencyPair> {
    let mut pairs = Vec::new();
    for arc in graph.arcs() {
        match table.map_label(&arc.relation) {
            BagTarget::Bag(bag) => {
                let head = graph.form(arc.head);
                let dep = graph.form(arc.dependent);
                pairs.push(DependencyPair {
                    word: head.to_owned(),
                    context_token: dep.to_owned(),
                    relation: arc.relation.clone(),
                    bag: bag.clone(),
                    direction: Direction::Normal,
                });
                pairs.push(DependencyPair {
                    word: dep.to_owned(),
                    context_token: head.to_owned(),
                    relation: arc.relation.clone(),
                    bag: bag.clone(),
                    direction: Direction::Inverse,
                });
            }
            BagTarget::Coordination => conj_pairs_for_arc(graph, arc, conj_variant, &mut pairs),
            BagTarget::Discard => {}
        }
    }
    pairs
}

/// Coordination pairs for every `conj` arc (including subtypes such as
/// `conj:and`), independent of any mapping table.
pub fn extract_conj_pairs(graph: &DepGraph, variant: ConjVariant) -> Vec<DependencyPair> {
    let mut pairs = Vec::new();
    for arc in graph.arcs() {
        if arc.relation == "conj" || arc.relation.starts_with("conj:") {
            conj_pairs_for_arc(graph, arc, variant, &mut pairs);
        }
    }
    pairs
}

pub fn conj_pairs_for_arc(
    graph: &DepGraph,
    arc: &Arc,
    variant: ConjVariant,
    out: &mut Vec<DependencyPair>,
) {
    let head = graph.form(arc.head);
    let dep = graph.form(arc.dependent);
    let mut emit = |bag: &str, back: Direction| {
        out.push(DependencyPair {
            word: head.to_owned(),
            context_token: dep.to_owned(),
            relation: arc.relation.clone(),
            bag: bag.to_owned(),
            direction: Direction::Normal,
        });
        out.push(DependencyPair {
            word: dep.to_owned(),
            context_token: head.to_owned(),
            relation: arc.relation.clone(),
            bag: bag.to_owned(),
            direction: back,
        });
    };
    if matches!(variant, ConjVariant::Lr | ConjVariant::Both) {
        emit(CONJLR, Direction::Inverse);
    }
    if matches!(variant, ConjVariant::Ll | ConjVariant::Both) {
        emit(CONJLL, Direction::Normal);
    }
}

/// Full dependency extraction for one sentence under a configuration.
pub fn extract_sentence(
    sentence: &Sentence,
    table: &BagMappingTable,
    config: &ExtractionConfig,
) -> Vec<DependencyPair> {
    let graph = DepGraph::from_sentence(sentence);
    let graph = if config.collapse_prepositions {
        graph.collapse_prepositions(&config.collapse_relations)
    } else {
        graph
    };
    extract_deps_pairs(&graph, table, config.conj_variant)
}

/// Plain window contexts: each word paired with every neighbour within
/// `window` positions, not crossing the sentence boundary.
pub fn extract_bow_pairs(sentence: &Sentence, window: usize) -> Vec<ContextPair> {
    window_pairs(sentence, window, |form, _| form.to_owned())
}

/// Window contexts annotated with the signed offset of the neighbour,
/// e.g. `scientist_-1`.
pub fn extract_posit_pairs(sentence: &Sentence, window: usize) -> Vec<ContextPair> {
    window_pairs(sentence, window, |form, offset| format!("{}_{:+}", form, offset))
}

fn window_pairs(
    sentence: &Sentence,
    window: usize,
    context: impl Fn(&str, isize) -> String,
) -> Vec<ContextPair> {
    let tokens = &sentence.tokens;
    let mut pairs = Vec::new();
    for (i, target) in tokens.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(tokens.len().saturating_sub(1));
        for (j, neighbour) in tokens.iter().enumerate().take(hi + 1).skip(lo) {
            if j == i {
                continue;
            }
            let offset = j as isize - i as isize;
            pairs.push(ContextPair::new(
                target.form.clone(),
                context(&neighbour.form, offset),
            ));
        }
    }
    pairs
}
