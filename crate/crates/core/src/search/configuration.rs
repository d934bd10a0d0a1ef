use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::extract::{CONJLL, CONJLR};

/// Label used in canonical forms for `conjlr` and `conjll` together.
pub const CONJ_UNION: &str = "conj";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigurationError {
    #[error("a configuration needs at least one context bag")]
    Empty,
    #[error("invalid bag label '{0}'")]
    InvalidLabel(String),
}

/// A nonempty set of context bag labels.
///
/// The canonical form joins the sorted labels with `+`; when both
/// coordination bags are present they are written as a single `conj`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration(BTreeSet<String>);

impl Configuration {
    pub fn new<I, S>(bags: I) -> Result<Self, ConfigurationError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = BTreeSet::new();
        for bag in bags {
            let bag = bag.into();
            if bag.is_empty() || bag.contains('+') || bag.chars().any(char::is_whitespace) {
                return Err(ConfigurationError::InvalidLabel(bag));
            }
            if bag == CONJ_UNION {
                set.insert(CONJLR.to_owned());
                set.insert(CONJLL.to_owned());
            } else {
                set.insert(bag);
            }
        }
        if set.is_empty() {
            return Err(ConfigurationError::Empty);
        }
        Ok(Configuration(set))
    }

    pub fn singleton(bag: impl Into<String>) -> Self {
        Configuration::new([bag.into()]).expect("valid singleton")
    }

    pub fn bags(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, bag: &str) -> bool {
        self.0.contains(bag)
    }

    pub fn is_subset(&self, other: &Configuration) -> bool {
        self.0.is_subset(&other.0)
    }

    /// The child configuration with `bag` removed; `None` when that would
    /// leave the configuration empty.
    pub fn without(&self, bag: &str) -> Option<Configuration> {
        let mut set = self.0.clone();
        set.remove(bag);
        if set.is_empty() {
            None
        } else {
            Some(Configuration(set))
        }
    }

    pub fn canonical(&self) -> String {
        let both = self.0.contains(CONJLR) && self.0.contains(CONJLL);
        let mut parts: Vec<&str> = Vec::with_capacity(self.0.len());
        for bag in &self.0 {
            if both && bag == CONJLR {
                continue;
            }
            if both && bag == CONJLL {
                parts.push(CONJ_UNION);
            } else {
                parts.push(bag);
            }
        }
        parts.join("+")
    }

    /// Deterministic preference order for equal fitness: fewer bags first,
    /// then the lexicographically smaller canonical form.
    pub fn tie_order(&self, other: &Configuration) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.canonical().cmp(&other.canonical()))
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl FromStr for Configuration {
    type Err = ConfigurationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ConfigurationError::Empty);
        }
        Configuration::new(s.split('+').map(str::trim))
    }
}
