//! Skip-gram with negative sampling over arbitrary `(word, context)` pairs.
//!
//! Words and contexts live in separate vocabularies and separate matrices,
//! so a pair stream can carry any context type: typed dependency contexts,
//! window neighbours or positional tokens.

pub mod gradient;
mod sampling;
mod store;
mod train;
mod vocab;

pub use sampling::{keep_probability, subsample, NegativeSampler, Subsampler};
pub use store::{
    context_path, load_embeddings, save_embeddings, save_store, EmbeddingIoError, EmbeddingStore,
    Embeddings,
};
pub use train::{learning_rate, train, train_encoded, TrainOutput, TrainReport};
pub use vocab::{build_vocab, PairVocabulary, Vocab};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("vocabulary is empty after filtering with min_count {min_count}")]
    EmptyVocabulary { min_count: u64 },
    #[error("invalid trainer config: {0}")]
    Config(String),
    #[error("non-finite value in epoch {epoch} at pair {pair} (learning rate {lr}); lower the learning rate")]
    NonFinite { epoch: usize, pair: usize, lr: f64 },
    #[error("failed to read training pairs: {0}")]
    Input(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainerConfig {
    pub dim: usize,
    /// Negative samples per positive pair.
    pub negatives: usize,
    pub initial_lr: f64,
    /// Subsampling rate `t`; 0 disables subsampling.
    pub subsample: f64,
    /// Also subsample by context frequency.
    pub subsample_contexts: bool,
    pub epochs: usize,
    pub min_count: u64,
    /// Exponent applied to context counts for negative sampling.
    pub unigram_power: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            dim: 300,
            negatives: 15,
            initial_lr: 0.025,
            subsample: 1e-4,
            subsample_contexts: false,
            epochs: 15,
            min_count: 100,
            unigram_power: 0.75,
            seed: 1,
            workers: 1,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let err = |m: &str| Err(TrainError::Config(m.to_owned()));
        if self.dim == 0 {
            return err("dim must be at least 1");
        }
        if self.negatives == 0 {
            return err("negatives must be at least 1");
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return err("initial learning rate must be positive");
        }
        if self.epochs == 0 {
            return err("epochs must be at least 1");
        }
        if !(self.subsample >= 0.0) {
            return err("subsampling rate must be non-negative");
        }
        Ok(())
    }

    /// Stable key/value description for hashing.
    pub fn describe(&self) -> Vec<(String, String)> {
        vec![
            ("dim".into(), self.dim.to_string()),
            ("negatives".into(), self.negatives.to_string()),
            ("initial_lr".into(), self.initial_lr.to_string()),
            ("subsample".into(), self.subsample.to_string()),
            ("subsample_contexts".into(), self.subsample_contexts.to_string()),
            ("epochs".into(), self.epochs.to_string()),
            ("min_count".into(), self.min_count.to_string()),
            ("unigram_power".into(), self.unigram_power.to_string()),
            ("seed".into(), self.seed.to_string()),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = TrainerConfig::default();
        assert_eq!(
            (c.dim, c.negatives, c.initial_lr, c.subsample, c.epochs, c.min_count),
            (300, 15, 0.025, 1e-4, 15, 100)
        );
        assert!(c.validate().is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        for c in [
            TrainerConfig { dim: 0, ..Default::default() },
            TrainerConfig { negatives: 0, ..Default::default() },
            TrainerConfig { initial_lr: 0.0, ..Default::default() },
            TrainerConfig { epochs: 0, ..Default::default() },
        ] {
            assert!(matches!(c.validate(), Err(TrainError::Config(_))));
        }
    }
}
