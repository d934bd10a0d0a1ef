//! Mapping from raw dependency relations to context bag labels.
//!
//! The table is an ordered list of rules; the first matching rule wins and
//! the final rule must be the catch-all `*`. Rule files are plain text:
//!
//! ```text
//! # pattern   target
//! dobj        obj
//! prep:*      prep
//! conj        CONJ
//! *           DISCARD
//! ```
//!
//! `CONJ` routes coordination arcs to the `conjlr`/`conjll` extraction,
//! `DISCARD` drops the arc.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// The 13 individual context bags.
pub const DEFAULT_BAGS: [&str; 13] = [
    "subj", "obj", "comp", "nummod", "appos", "nmod", "acl", "amod", "prep", "adv", "compound",
    "conjlr", "conjll",
];

pub const CONJLR: &str = "conjlr";
pub const CONJLL: &str = "conjll";

const DEFAULT_TABLE: &str = include_str!("default_table.txt");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableError {
    #[error("line {line}: expected '<pattern> <target>', got '{text}'")]
    Malformed { line: usize, text: String },
    #[error("line {line}: invalid bag label '{label}'")]
    InvalidLabel { line: usize, label: String },
    #[error("mapping table must end with a catch-all '*' rule")]
    MissingCatchAll,
    #[error("line {line}: rule after the catch-all can never match")]
    UnreachableRule { line: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pattern {
    Exact(String),
    Prefix(String),
    Any,
}

impl Pattern {
    fn matches(&self, deprel: &str) -> bool {
        match self {
            Pattern::Exact(s) => s == deprel,
            Pattern::Prefix(p) => deprel.starts_with(p.as_str()),
            Pattern::Any => true,
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Exact(s) => f.write_str(s),
            Pattern::Prefix(p) => write!(f, "{}*", p),
            Pattern::Any => f.write_str("*"),
        }
    }
}

/// Result of looking up a relation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BagTarget {
    Bag(String),
    Coordination,
    Discard,
}

impl fmt::Display for BagTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BagTarget::Bag(b) => f.write_str(b),
            BagTarget::Coordination => f.write_str("CONJ"),
            BagTarget::Discard => f.write_str("DISCARD"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub pattern: Pattern,
    pub target: BagTarget,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BagMappingTable {
    rules: Vec<Rule>,
}

impl BagMappingTable {
    pub fn new(rules: Vec<Rule>) -> Result<Self, TableError> {
        match rules.last() {
            Some(Rule {
                pattern: Pattern::Any,
                ..
            }) => {}
            _ => return Err(TableError::MissingCatchAll),
        }
        if let Some(pos) = rules[..rules.len() - 1]
            .iter()
            .position(|r| r.pattern == Pattern::Any)
        {
            return Err(TableError::UnreachableRule { line: pos + 2 });
        }
        Ok(BagMappingTable { rules })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Looks up the bag for a raw relation. Deterministic, total.
    pub fn map_label(&self, deprel: &str) -> &BagTarget {
        // The constructor guarantees a trailing catch-all.
        &self
            .rules
            .iter()
            .find(|r| r.pattern.matches(deprel))
            .expect("catch-all rule")
            .target
    }

    /// All bag labels the table can produce. Coordination contributes both
    /// `conjlr` and `conjll`.
    pub fn bag_labels(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for rule in &self.rules {
            match &rule.target {
                BagTarget::Bag(b) => {
                    out.insert(b.clone());
                }
                BagTarget::Coordination => {
                    out.insert(CONJLR.to_owned());
                    out.insert(CONJLL.to_owned());
                }
                BagTarget::Discard => {}
            }
        }
        out
    }

    /// Serializes the table back to its text form.
    pub fn to_text(&self) -> String {
        self.rules
            .iter()
            .map(|r| format!("{}\t{}\n", r.pattern, r.target))
            .collect()
    }
}

impl Default for BagMappingTable {
    fn default() -> Self {
        DEFAULT_TABLE.parse().expect("built-in mapping table is valid")
    }
}

impl FromStr for BagMappingTable {
    type Err = TableError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(TableError::Malformed {
                    line: line_no,
                    text: raw.to_owned(),
                });
            }
            let pattern = match fields[0] {
                "*" => Pattern::Any,
                p if p.ends_with('*') => Pattern::Prefix(p[..p.len() - 1].to_owned()),
                p => Pattern::Exact(p.to_owned()),
            };
            let target = match fields[1] {
                "DISCARD" => BagTarget::Discard,
                "CONJ" => BagTarget::Coordination,
                label => {
                    let valid = label
                        .chars()
                        .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
                    if !valid {
                        return Err(TableError::InvalidLabel {
                            line: line_no,
                            label: label.to_owned(),
                        });
                    }
                    BagTarget::Bag(label.to_owned())
                }
            };
            rules.push(Rule { pattern, target });
        }
        BagMappingTable::new(rules)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bag(s: &str) -> BagTarget {
        BagTarget::Bag(s.to_owned())
    }

    #[test]
    fn merges_objects() {
        let table = BagMappingTable::default();
        assert_eq!(table.map_label("dobj"), &bag("obj"));
        assert_eq!(table.map_label("iobj"), &bag("obj"));
    }

    #[test]
    fn prepositions_subsumed() {
        let table = BagMappingTable::default();
        assert_eq!(table.map_label("prep:with"), &bag("prep"));
        assert_eq!(table.map_label("prep:in_front_of"), &bag("prep"));
    }

    #[test]
    fn uninformative_discarded() {
        let table = BagMappingTable::default();
        for rel in ["punct", "goeswith", "cc", "det", "case", "root", "something_new"] {
            assert_eq!(table.map_label(rel), &BagTarget::Discard, "{}", rel);
        }
    }

    #[test]
    fn default_image_is_the_thirteen_bags() {
        let table = BagMappingTable::default();
        let expected: BTreeSet<String> = DEFAULT_BAGS.iter().map(|s| s.to_string()).collect();
        assert_eq!(table.bag_labels(), expected);
        assert_eq!(table.map_label("conj"), &BagTarget::Coordination);
    }

    #[test]
    fn text_round_trip() {
        let table = BagMappingTable::default();
        let again: BagMappingTable = table.to_text().parse().unwrap();
        assert_eq!(table, again);
    }

    #[test]
    fn requires_catch_all() {
        assert_eq!(
            "dobj obj\n".parse::<BagMappingTable>(),
            Err(TableError::MissingCatchAll)
        );
        assert_eq!(
            "* DISCARD\ndobj obj\n".parse::<BagMappingTable>(),
            Err(TableError::MissingCatchAll)
        );
        assert!(matches!(
            "dobj\n* DISCARD".parse::<BagMappingTable>(),
            Err(TableError::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn first_match_wins() {
        let table: BagMappingTable = "nmod:poss DISCARD\nnmod* nmod\n* DISCARD\n".parse().unwrap();
        assert_eq!(table.map_label("nmod:poss"), &BagTarget::Discard);
        assert_eq!(table.map_label("nmod:tmod"), &bag("nmod"));
    }
}
