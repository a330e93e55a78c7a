//! Negative-sampling training for every composition mode.
//!
//! Each epoch regenerates the training examples with an epoch-dependent
//! seed, shuffles them, and runs Adam over fixed-size batches. Rate-mode
//! gradients are reduced to the off-diagonal entries before each step and
//! the matrices are projected back onto the rate constraints after it.

mod adam;
mod config;
pub mod gradcheck;
mod objective;
mod params;

pub use adam::{adam_step, AdamState, BETA1, BETA2, STABILITY};
pub use config::{Composition, Mode, TrainConfig};
pub use objective::{
    batch_loss, batch_loss_and_gradients, compose_context, forward, log_sigmoid,
    loss_and_gradients, negative_sampling_loss, sigmoid, split_loss, ContextEmbedding,
};
pub use params::{
    apply_constraints, init_parameters, init_parameters_with, random_rate_matrix,
    reduce_rate_gradients, ContextTable, InitScales, ParameterBank,
};

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::corpus::{
    build_vocabulary, encode_corpus, generate_examples, EncodedSentence, NegativeTable,
    TrainingExample, Vocabulary,
};
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};

// Sub-streams of the global seed.
const STREAM_INIT: u64 = 0;
const STREAM_EXAMPLES: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    /// 1-based.
    pub epoch: usize,
    pub mean_loss: f64,
    pub examples: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossReport {
    pub epochs: Vec<EpochLoss>,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub vocab: Vocabulary,
    pub bank: ParameterBank,
    pub adam: AdamState,
    pub report: LossReport,
}

/// Examples of one epoch, in sentence order. Each sentence uses its own
/// derived seed, so the result does not depend on the thread count.
pub fn epoch_examples(
    sentences: &[EncodedSentence],
    config: &TrainConfig,
    epoch: usize,
) -> Vec<TrainingExample> {
    sentences
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let seed = derive_seed(config.seed, &[STREAM_EXAMPLES, epoch as u64, i as u64]);
            generate_examples(s, config.window, config.target_policy, &mut seeded(seed))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Builds the vocabulary from raw token sentences, then trains.
pub fn train<S: AsRef<[T]>, T: AsRef<str>>(
    sentences: &[S],
    config: &TrainConfig,
) -> Result<TrainOutput> {
    train_with_progress(sentences, config, |_| {})
}

pub fn train_with_progress<S: AsRef<[T]>, T: AsRef<str>>(
    sentences: &[S],
    config: &TrainConfig,
    progress: impl FnMut(&EpochLoss),
) -> Result<TrainOutput> {
    config.validate()?;
    let vocab = build_vocabulary(
        sentences.iter().map(|s| s.as_ref()),
        config.min_count,
        config.length_bounds,
    )?;
    let encoded = encode_corpus(&vocab, sentences, config.length_bounds);
    train_encoded(vocab, &encoded, config, progress)
}

/// Trains on already-encoded sentences.
pub fn train_encoded(
    vocab: Vocabulary,
    sentences: &[EncodedSentence],
    config: &TrainConfig,
    mut progress: impl FnMut(&EpochLoss),
) -> Result<TrainOutput> {
    config.validate()?;
    let n = vocab.len();
    if let Some(&bad) = sentences.iter().flatten().find(|&&id| id >= n) {
        return Err(Error::UnknownId(bad));
    }
    let table = NegativeTable::new(&vocab, config.neg_exponent)?;
    let mut bank = init_parameters(config, n, &mut seeded(derive_seed(config.seed, &[STREAM_INIT])));
    let mut adam = AdamState::new(&bank);
    let mut report = LossReport::default();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::invalid(format!("cannot build thread pool: {e}")))?;

    for epoch in 0..config.epochs {
        let mut examples = pool.install(|| epoch_examples(sentences, config, epoch));
        if examples.is_empty() {
            return Err(Error::invalid("corpus yields no training examples"));
        }
        let mut rng = seeded(derive_seed(config.seed, &[STREAM_SHUFFLE, epoch as u64]));
        examples.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, batch) in examples.chunks(config.batch_size).enumerate() {
            let (loss, mut grads) = pool
                .install(|| loss_and_gradients(batch, &bank, &table, config, &mut rng))
                .map_err(|e| match e {
                    Error::NonFiniteLoss { index } => Error::NonFiniteLoss {
                        index: b * config.batch_size + index,
                    },
                    other => other,
                })?;
            total += loss * batch.len() as f64;
            reduce_rate_gradients(&mut grads);
            pool.install(|| adam_step(&mut bank, &grads, &mut adam, config));
            debug_assert!(bank.rate_constraints_hold(1e-12));
        }
        let stats = EpochLoss {
            epoch: epoch + 1,
            mean_loss: total / examples.len() as f64,
            examples: examples.len(),
        };
        progress(&stats);
        report.epochs.push(stats);
    }

    Ok(TrainOutput {
        vocab,
        bank,
        adam,
        report,
    })
}
