use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use super::vocab::{PairVocabulary, Vocab};
use crate::extract::ContextPair;

/// Draws negative contexts from the unigram distribution raised to a power.
#[derive(Clone, Debug)]
pub struct NegativeSampler {
    alias: WeightedAliasIndex<f64>,
    probabilities: Vec<f64>,
}

impl NegativeSampler {
    pub fn new(counts: &[u64], power: f64) -> Self {
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(power)).collect();
        let total: f64 = weights.iter().sum();
        let probabilities = weights.iter().map(|w| w / total).collect();
        let alias = WeightedAliasIndex::new(weights).expect("nonempty positive weights");
        NegativeSampler {
            alias,
            probabilities,
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.alias.sample(rng) as u32
    }

    /// Normalized sampling probability of every id.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }
}

/// Probability of keeping an item of relative frequency `freq` under
/// subsampling rate `t`: `min(1, sqrt(t / freq))`.
pub fn keep_probability(freq: f64, t: f64) -> f64 {
    if t <= 0.0 || freq <= t {
        1.0
    } else {
        (t / freq).sqrt()
    }
}

/// Per-id keep probabilities for frequent-item subsampling.
#[derive(Clone, Debug)]
pub struct Subsampler {
    keep: Vec<f64>,
}

impl Subsampler {
    pub fn new(vocab: &Vocab, t: f64) -> Self {
        let total = vocab.total() as f64;
        let keep = vocab
            .counts()
            .iter()
            .map(|&c| keep_probability(c as f64 / total, t))
            .collect();
        Subsampler { keep }
    }

    pub fn keep_probability(&self, id: u32) -> f64 {
        self.keep[id as usize]
    }

    #[inline]
    pub fn keep<R: Rng + ?Sized>(&self, id: u32, rng: &mut R) -> bool {
        let p = self.keep[id as usize];
        p >= 1.0 || rng.random::<f64>() < p
    }
}

/// Subsamples a pair stream by word frequency. Pairs whose word or context
/// is not in the vocabulary are dropped; the result is deterministic for a
/// fixed seed.
pub fn subsample<'a, I>(
    pairs: I,
    vocab: &'a PairVocabulary,
    t: f64,
    seed: u64,
) -> impl Iterator<Item = ContextPair> + 'a
where
    I: IntoIterator<Item = ContextPair>,
    I::IntoIter: 'a,
{
    let sampler = Subsampler::new(&vocab.words, t);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pairs.into_iter().filter(move |pair| match vocab.encode(pair) {
        Some((w, _)) => sampler.keep(w, &mut rng),
        None => false,
    })
}
