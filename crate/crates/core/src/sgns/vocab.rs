use std::collections::HashMap;

use super::TrainError;
use crate::extract::ContextPair;

/// Count-filtered string inventory with dense ids.
///
/// Ids are assigned by descending count, ties broken alphabetically, so the
/// same input always yields the same ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocab {
    items: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocab {
    fn from_counts(counts: HashMap<String, u64>, min_count: u64) -> Self {
        let mut entries: Vec<(String, u64)> =
            counts.into_iter().filter(|(_, n)| *n >= min_count).collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (s, _))| (s.clone(), i as u32))
            .collect();
        let (items, counts) = entries.into_iter().unzip();
        Vocab {
            items,
            counts,
            index,
        }
    }

    pub fn id(&self, item: &str) -> Option<u32> {
        self.index.get(item).copied()
    }

    pub fn get(&self, id: u32) -> &str {
        &self.items[id as usize]
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn count_of(&self, item: &str) -> Option<u64> {
        self.id(item).map(|i| self.count(i))
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Sum of retained counts.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Separate word and context inventories, as in word2vecf.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PairVocabulary {
    pub words: Vocab,
    pub contexts: Vocab,
}

impl PairVocabulary {
    /// Maps a pair to ids; `None` if either side was filtered out.
    pub fn encode(&self, pair: &ContextPair) -> Option<(u32, u32)> {
        Some((self.words.id(&pair.word)?, self.contexts.id(&pair.context)?))
    }
}

/// Counts words and contexts over a pair stream and drops everything seen
/// fewer than `min_count` times.
pub fn build_vocab<I, E>(pairs: I, min_count: u64) -> Result<PairVocabulary, TrainError>
where
    I: IntoIterator<Item = Result<ContextPair, E>>,
    E: std::fmt::Display,
{
    let mut words: HashMap<String, u64> = HashMap::new();
    let mut contexts: HashMap<String, u64> = HashMap::new();
    for pair in pairs {
        let pair = pair.map_err(|e| TrainError::Input(e.to_string()))?;
        *words.entry(pair.word).or_default() += 1;
        *contexts.entry(pair.context).or_default() += 1;
    }
    let vocab = PairVocabulary {
        words: Vocab::from_counts(words, min_count),
        contexts: Vocab::from_counts(contexts, min_count),
    };
    if vocab.words.is_empty() || vocab.contexts.is_empty() {
        return Err(TrainError::EmptyVocabulary { min_count });
    }
    Ok(vocab)
}
