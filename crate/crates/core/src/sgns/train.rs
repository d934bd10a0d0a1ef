use std::sync::atomic::{AtomicBool, AtomicU32, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gradient::{logistic_loss, output_coefficient};
use super::sampling::{NegativeSampler, Subsampler};
use super::store::{EmbeddingStore, Embeddings};
use super::vocab::{build_vocab, PairVocabulary};
use super::{TrainError, TrainerConfig};
use crate::extract::ContextPair;

const LR_FLOOR: f64 = 1e-4;
const PROGRESS_INTERVAL: u64 = 1024;

/// Parameter matrix shared between workers without locks.
///
/// Entries are `f32` bit patterns in relaxed atomics: concurrent updates may
/// overwrite each other (hogwild), but every read sees some complete value.
struct SharedMatrix {
    data: Vec<AtomicU32>,
    dim: usize,
}

impl SharedMatrix {
    fn new(values: Vec<f32>, dim: usize) -> Self {
        SharedMatrix {
            data: values.into_iter().map(|v| AtomicU32::new(v.to_bits())).collect(),
            dim,
        }
    }

    #[inline]
    fn row(&self, row: usize) -> &[AtomicU32] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    #[inline]
    fn load_into(&self, row: usize, out: &mut [f32]) {
        for (o, a) in out.iter_mut().zip(self.row(row)) {
            *o = f32::from_bits(a.load(Ordering::Relaxed));
        }
    }

    #[inline]
    fn dot(&self, row: usize, v: &[f32]) -> f32 {
        self.row(row)
            .iter()
            .zip(v)
            .map(|(a, &x)| f32::from_bits(a.load(Ordering::Relaxed)) * x)
            .sum()
    }

    /// `row += scale * v`
    #[inline]
    fn add_scaled(&self, row: usize, scale: f32, v: &[f32]) {
        for (a, &x) in self.row(row).iter().zip(v) {
            let cur = f32::from_bits(a.load(Ordering::Relaxed));
            a.store((cur + scale * x).to_bits(), Ordering::Relaxed);
        }
    }

    /// `acc += scale * row`
    #[inline]
    fn accumulate(&self, row: usize, scale: f32, acc: &mut [f32]) {
        for (o, a) in acc.iter_mut().zip(self.row(row)) {
            *o += scale * f32::from_bits(a.load(Ordering::Relaxed));
        }
    }

    fn into_vec(self) -> Vec<f32> {
        self.data
            .into_iter()
            .map(|a| f32::from_bits(a.into_inner()))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    /// Mean loss per processed positive pair, one entry per epoch.
    pub epoch_losses: Vec<f64>,
    /// Pairs in the encoded training stream (after vocabulary filtering).
    pub input_pairs: u64,
    /// Positive updates actually performed, summed over epochs.
    pub trained_pairs: u64,
    pub wall_time: Duration,
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub store: EmbeddingStore,
    pub vocab: PairVocabulary,
    pub report: TrainReport,
}

/// Learning rate after `processed` of `total` scheduled pairs: linear decay
/// from `initial` down to `initial * 1e-4`.
pub fn learning_rate(initial: f64, processed: u64, total: u64) -> f64 {
    let progress = processed as f64 / (total as f64 + 1.0);
    initial * (1.0 - progress).max(LR_FLOOR)
}

fn mix_seed(seed: u64, epoch: u64, worker: u64) -> u64 {
    // splitmix64 over the combined input
    let mut z = seed
        .wrapping_add(epoch.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(worker.wrapping_mul(0xd1b5_4a32_d192_ed03));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct Shared<'a> {
    config: &'a TrainerConfig,
    words: SharedMatrix,
    contexts: SharedMatrix,
    negatives: NegativeSampler,
    word_subsampler: Option<Subsampler>,
    context_subsampler: Option<Subsampler>,
    processed: AtomicU64,
    total: u64,
    failed: AtomicBool,
    error: Mutex<Option<TrainError>>,
}

struct WorkerStats {
    loss: f64,
    positives: u64,
}

impl Shared<'_> {
    fn fail(&self, err: TrainError) {
        self.failed.store(true, Ordering::Relaxed);
        let mut slot = self.error.lock().expect("error slot");
        if slot.is_none() {
            *slot = Some(err);
        }
    }

    fn run_worker(&self, pairs: &[(u32, u32)], epoch: usize, worker: usize) -> WorkerStats {
        let dim = self.config.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.config.seed, epoch as u64, worker as u64));
        let mut word_buf = vec![0f32; dim];
        let mut grad = vec![0f32; dim];
        let mut stats = WorkerStats {
            loss: 0.0,
            positives: 0,
        };
        let mut pending = 0u64;
        let mut lr = learning_rate(
            self.config.initial_lr,
            self.processed.load(Ordering::Relaxed),
            self.total,
        ) as f32;

        for (i, &(w, c)) in pairs.iter().enumerate() {
            pending += 1;
            if pending == PROGRESS_INTERVAL {
                let done = self.processed.fetch_add(pending, Ordering::Relaxed) + pending;
                pending = 0;
                lr = learning_rate(self.config.initial_lr, done, self.total) as f32;
                if self.failed.load(Ordering::Relaxed) {
                    break;
                }
            }
            if let Some(s) = &self.word_subsampler {
                if !s.keep(w, &mut rng) {
                    continue;
                }
            }
            if let Some(s) = &self.context_subsampler {
                if !s.keep(c, &mut rng) {
                    continue;
                }
            }

            let w = w as usize;
            self.words.load_into(w, &mut word_buf);
            grad.fill(0.0);
            for k in 0..=self.config.negatives {
                let (target, positive) = if k == 0 {
                    (c, true)
                } else {
                    let t = self.negatives.sample(&mut rng);
                    if t == c {
                        continue;
                    }
                    (t, false)
                };
                let target = target as usize;
                let f = self.contexts.dot(target, &word_buf);
                if !f.is_finite() {
                    self.fail(TrainError::NonFinite {
                        epoch,
                        pair: i,
                        lr: lr as f64,
                    });
                    return stats;
                }
                stats.loss += logistic_loss(f as f64, positive);
                let g = output_coefficient(f, positive) * lr;
                self.contexts.accumulate(target, g, &mut grad);
                self.contexts.add_scaled(target, g, &word_buf);
            }
            self.words.add_scaled(w, 1.0, &grad);
            stats.positives += 1;
        }
        self.processed.fetch_add(pending, Ordering::Relaxed);
        stats
    }
}

/// Trains SGNS embeddings on an id-encoded pair list.
pub fn train_encoded(
    vocab: &PairVocabulary,
    pairs: &[(u32, u32)],
    config: &TrainerConfig,
) -> Result<TrainOutput, TrainError> {
    config.validate()?;
    if vocab.words.is_empty() || vocab.contexts.is_empty() {
        return Err(TrainError::EmptyVocabulary {
            min_count: config.min_count,
        });
    }
    let start = Instant::now();
    let dim = config.dim;

    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let scale = 1.0 / dim as f32;
    let word_init: Vec<f32> = (0..vocab.words.len() * dim)
        .map(|_| (init_rng.random::<f32>() - 0.5) * scale)
        .collect();

    let subsampling = config.subsample > 0.0;
    let shared = Shared {
        config,
        words: SharedMatrix::new(word_init, dim),
        contexts: SharedMatrix::new(vec![0.0; vocab.contexts.len() * dim], dim),
        negatives: NegativeSampler::new(vocab.contexts.counts(), config.unigram_power),
        word_subsampler: subsampling.then(|| Subsampler::new(&vocab.words, config.subsample)),
        context_subsampler: (subsampling && config.subsample_contexts)
            .then(|| Subsampler::new(&vocab.contexts, config.subsample)),
        processed: AtomicU64::new(0),
        total: config.epochs as u64 * pairs.len() as u64,
        failed: AtomicBool::new(false),
        error: Mutex::new(None),
    };

    let workers = config.workers.max(1).min(pairs.len().max(1));
    let chunk = pairs.len().div_ceil(workers).max(1);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut trained = 0u64;

    for epoch in 0..config.epochs {
        let stats: Vec<WorkerStats> = if workers == 1 {
            vec![shared.run_worker(pairs, epoch, 0)]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = pairs
                    .chunks(chunk)
                    .enumerate()
                    .map(|(wid, part)| {
                        let shared = &shared;
                        scope.spawn(move || shared.run_worker(part, epoch, wid))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training worker panicked"))
                    .collect()
            })
        };
        if let Some(err) = shared.error.lock().expect("error slot").take() {
            return Err(err);
        }
        let loss: f64 = stats.iter().map(|s| s.loss).sum();
        let positives: u64 = stats.iter().map(|s| s.positives).sum();
        trained += positives;
        let mean = if positives > 0 {
            loss / positives as f64
        } else {
            0.0
        };
        log::debug!("epoch {}: mean loss {:.5} over {} pairs", epoch + 1, mean, positives);
        epoch_losses.push(mean);
    }

    let word_data = shared.words.into_vec();
    let context_data = shared.contexts.into_vec();
    if let Some(pos) = word_data
        .iter()
        .chain(&context_data)
        .position(|v| !v.is_finite())
    {
        return Err(TrainError::NonFinite {
            epoch: config.epochs,
            pair: pos,
            lr: config.initial_lr,
        });
    }

    Ok(TrainOutput {
        store: EmbeddingStore {
            words: Embeddings::new(vocab.words.items().to_vec(), dim, word_data),
            contexts: Embeddings::new(vocab.contexts.items().to_vec(), dim, context_data),
        },
        vocab: vocab.clone(),
        report: TrainReport {
            epoch_losses,
            input_pairs: pairs.len() as u64,
            trained_pairs: trained,
            wall_time: start.elapsed(),
        },
    })
}

/// Builds the vocabulary from one pass over `source()`, encodes the pairs
/// in a second pass and trains for `config.epochs` epochs over them.
pub fn train<F, I, E>(source: F, config: &TrainerConfig) -> Result<TrainOutput, TrainError>
where
    F: Fn() -> I,
    I: IntoIterator<Item = Result<ContextPair, E>>,
    E: std::fmt::Display,
{
    config.validate()?;
    let vocab = build_vocab(source(), config.min_count)?;
    let mut encoded = Vec::new();
    for pair in source() {
        let pair = pair.map_err(|e| TrainError::Input(e.to_string()))?;
        if let Some(ids) = vocab.encode(&pair) {
            encoded.push(ids);
        }
    }
    train_encoded(&vocab, &encoded, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn small_config() -> TrainerConfig {
        TrainerConfig {
            dim: 16,
            negatives: 5,
            epochs: 3,
            min_count: 1,
            subsample: 0.0,
            ..TrainerConfig::default()
        }
    }

    fn corpus() -> Vec<ContextPair> {
        let mut pairs = Vec::new();
        for i in 0..200 {
            pairs.push(ContextPair::new(format!("w{}", i % 7), format!("c{}", i % 5)));
            pairs.push(ContextPair::new(format!("w{}", i % 3), format!("c{}", (i + 1) % 5)));
        }
        pairs
    }

    fn run(config: &TrainerConfig) -> TrainOutput {
        let pairs = corpus();
        train(|| pairs.iter().cloned().map(Ok::<_, Infallible>), config).unwrap()
    }

    #[test]
    fn lr_schedule() {
        assert_eq!(learning_rate(0.025, 0, 100), 0.025);
        assert!((learning_rate(0.025, 100, 100) - 0.025 * (1.0 / 101.0)).abs() < 1e-12);
        assert_eq!(learning_rate(0.025, 1000, 100), 0.025 * 1e-4);
    }

    #[test]
    fn deterministic_single_worker() {
        let a = run(&small_config());
        let b = run(&small_config());
        assert_eq!(a.store, b.store);
        assert_eq!(a.report.epoch_losses, b.report.epoch_losses);
    }

    #[test]
    fn shapes_and_context_init() {
        let out = run(&TrainerConfig {
            epochs: 1,
            ..small_config()
        });
        assert_eq!(out.store.words.len(), 7);
        assert_eq!(out.store.contexts.len(), 5);
        assert_eq!(out.store.words.dim(), 16);
        assert_eq!(out.report.input_pairs, 400);
    }

    #[test]
    fn initial_word_vectors_in_range() {
        let out = run(&TrainerConfig {
            initial_lr: 1e-30,
            epochs: 1,
            ..small_config()
        });
        let bound = 0.5 / 16.0;
        assert!(out
            .store
            .words
            .as_slice()
            .iter()
            .all(|v| v.abs() <= bound + 1e-6));
    }

    #[test]
    fn multi_worker_stays_finite() {
        let out = run(&TrainerConfig {
            workers: 4,
            ..small_config()
        });
        assert!(out.store.words.as_slice().iter().all(|v| v.is_finite()));
        assert_eq!(out.report.trained_pairs, 3 * 400);
    }

    #[test]
    fn huge_learning_rate_is_caught() {
        let pairs = corpus();
        let result = train(
            || pairs.iter().cloned().map(Ok::<_, Infallible>),
            &TrainerConfig {
                initial_lr: 1e30,
                ..small_config()
            },
        );
        assert!(matches!(result, Err(TrainError::NonFinite { .. })));
    }
}
