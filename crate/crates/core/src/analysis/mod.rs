//! Desk-scale experiments: the ε-stability curve, word-order and length
//! probes, nearest neighbors and synthetic corpora.

mod embed;
mod probe;
mod stability;
mod synth;

pub use embed::{
    all_word_embeddings, cosine, nearest_in, nearest_neighbors, sentence_embedding,
    word_embedding,
};
pub use probe::{
    interior_swap, length_probe, logistic_probe, order_probe, LogisticModel, ProbeResult,
    LOGISTIC_RATE, LOGISTIC_STEPS, MIN_PROBE_SENTENCES, TRAIN_FRACTION,
};
pub use stability::{
    fluctuation, random_stability_matrix, stability_curve, MatrixDraw, StabilityRecord,
};
pub use synth::{generate_synthetic_corpus, GrammarSpec};
