//! Miniature probing tasks on sentence embeddings.
//!
//! A probe embeds labelled sentences with [`sentence_embedding`] and fits a
//! plain logistic regression (bias plus linear weights, full-batch gradient
//! descent with fixed step count and rate) on standardized features.
//! Examples are split 80/20 by group, so an original sentence and its
//! perturbed copy always land on the same side.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Serialize;

use super::embed::sentence_embedding;
use crate::rng::Rng;
use crate::trainer::{sigmoid, ParameterBank};
use crate::{Error, Result};

pub const MIN_PROBE_SENTENCES: usize = 200;
pub const TRAIN_FRACTION: f64 = 0.8;
pub const LOGISTIC_STEPS: usize = 1000;
pub const LOGISTIC_RATE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    pub probe: String,
    pub mode: String,
    pub accuracy: f64,
    /// Accuracy of always predicting the held-out majority class.
    pub baseline: f64,
    pub seeds: usize,
}

impl ProbeResult {
    /// Single-line JSON record.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("plain record serializes")
    }
}

#[derive(Debug, Clone)]
pub struct LogisticModel {
    mean: Vec<f64>,
    scale: Vec<f64>,
    weights: Vec<f64>,
    bias: f64,
}

impl LogisticModel {
    pub fn fit(features: &[&[f64]], labels: &[bool]) -> Self {
        let n = features.len();
        let dim = features.first().map_or(0, |f| f.len());
        let mut mean = vec![0.0; dim];
        for f in features {
            for (m, x) in mean.iter_mut().zip(f.iter()) {
                *m += x / n as f64;
            }
        }
        let mut scale = vec![0.0; dim];
        for f in features {
            for ((s, x), m) in scale.iter_mut().zip(f.iter()).zip(&mean) {
                *s += (x - m).powi(2) / n as f64;
            }
        }
        for s in scale.iter_mut() {
            *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
        }
        let mut model = LogisticModel {
            mean,
            scale,
            weights: vec![0.0; dim],
            bias: 0.0,
        };
        let xs: Vec<Vec<f64>> = features.iter().map(|f| model.standardize(f)).collect();
        let mut grad = vec![0.0; dim];
        for _ in 0..LOGISTIC_STEPS {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_bias = 0.0;
            for (x, &y) in xs.iter().zip(labels) {
                let err = sigmoid(model.logit_std(x)) - if y { 1.0 } else { 0.0 };
                grad_bias += err;
                for (g, xi) in grad.iter_mut().zip(x) {
                    *g += err * xi;
                }
            }
            let step = LOGISTIC_RATE / n as f64;
            model.bias -= step * grad_bias;
            for (w, g) in model.weights.iter_mut().zip(&grad) {
                *w -= step * g;
            }
        }
        model
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    fn logit_std(&self, x: &[f64]) -> f64 {
        self.bias + x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.logit_std(&self.standardize(x)) > 0.0
    }
}

/// Held-out accuracy and majority baseline of a logistic probe. `groups[i]`
/// names the group of example `i`; groups are shuffled and split 80/20.
pub fn logistic_probe(
    features: &[Vec<f64>],
    labels: &[bool],
    groups: &[usize],
    rng: &mut Rng,
) -> Result<(f64, f64)> {
    if features.len() != labels.len() || features.len() != groups.len() {
        return Err(Error::invalid("features, labels and groups differ in length"));
    }
    let mut ids: Vec<usize> = groups.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < 2 {
        return Err(Error::invalid("a probe needs at least two groups"));
    }
    ids.shuffle(rng);
    let cut = ((ids.len() as f64 * TRAIN_FRACTION).round() as usize).clamp(1, ids.len() - 1);
    let train_groups: std::collections::HashSet<usize> = ids[..cut].iter().copied().collect();

    let (mut train_x, mut train_y, mut test_x, mut test_y) = (vec![], vec![], vec![], vec![]);
    for ((x, &y), g) in features.iter().zip(labels).zip(groups) {
        if train_groups.contains(g) {
            train_x.push(x.as_slice());
            train_y.push(y);
        } else {
            test_x.push(x.as_slice());
            test_y.push(y);
        }
    }
    let model = LogisticModel::fit(&train_x, &train_y);
    let correct = test_x
        .iter()
        .zip(&test_y)
        .filter(|(x, &y)| model.predict(x) == y)
        .count();
    let positives = test_y.iter().filter(|&&y| y).count();
    let majority = positives.max(test_y.len() - positives);
    let total = test_y.len() as f64;
    Ok((correct as f64 / total, majority as f64 / total))
}

/// Swaps two adjacent interior words (neither at the sentence edges) that
/// differ. `None` when the sentence has no such pair.
pub fn interior_swap(sentence: &[usize], rng: &mut Rng) -> Option<Vec<usize>> {
    if sentence.len() < 4 {
        return None;
    }
    let candidates: Vec<usize> = (1..sentence.len() - 2)
        .filter(|&i| sentence[i] != sentence[i + 1])
        .collect();
    let &i = candidates.get(rng.random_range(0..candidates.len().max(1)))?;
    let mut swapped = sentence.to_vec();
    swapped.swap(i, i + 1);
    Some(swapped)
}

/// Word-order probe: each usable sentence contributes itself (label
/// `false`) and a copy with one interior adjacent swap (label `true`).
pub fn order_probe(
    bank: &ParameterBank,
    epsilon: f64,
    sentences: &[Vec<usize>],
    rng: &mut Rng,
) -> Result<ProbeResult> {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut groups = Vec::new();
    for s in sentences {
        let Some(swapped) = interior_swap(s, rng) else {
            continue;
        };
        let group = groups.len() / 2;
        features.push(sentence_embedding(bank, epsilon, s)?);
        features.push(sentence_embedding(bank, epsilon, &swapped)?);
        labels.extend([false, true]);
        groups.extend([group, group]);
    }
    let usable = groups.len() / 2;
    if usable < MIN_PROBE_SENTENCES {
        return Err(Error::TooFewSentences {
            found: usable,
            required: MIN_PROBE_SENTENCES,
        });
    }
    let (accuracy, baseline) = logistic_probe(&features, &labels, &groups, rng)?;
    Ok(ProbeResult {
        probe: "bshift".into(),
        mode: bank.mode.name().into(),
        accuracy,
        baseline,
        seeds: 1,
    })
}

/// Sentence-length probe: is the sentence longer than the median length?
pub fn length_probe(
    bank: &ParameterBank,
    epsilon: f64,
    sentences: &[Vec<usize>],
    rng: &mut Rng,
) -> Result<ProbeResult> {
    let usable: Vec<&Vec<usize>> = sentences.iter().filter(|s| !s.is_empty()).collect();
    if usable.len() < MIN_PROBE_SENTENCES {
        return Err(Error::TooFewSentences {
            found: usable.len(),
            required: MIN_PROBE_SENTENCES,
        });
    }
    let mut lengths: Vec<usize> = usable.iter().map(|s| s.len()).collect();
    lengths.sort_unstable();
    let median = lengths[lengths.len() / 2];
    let features = usable
        .iter()
        .map(|s| sentence_embedding(bank, epsilon, s))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<bool> = usable.iter().map(|s| s.len() > median).collect();
    let groups: Vec<usize> = (0..usable.len()).collect();
    let (accuracy, baseline) = logistic_probe(&features, &labels, &groups, rng)?;
    Ok(ProbeResult {
        probe: "length".into(),
        mode: bank.mode.name().into(),
        accuracy,
        baseline,
        seeds: 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::trainer::{init_parameters, Mode, TrainConfig};

    #[test]
    fn swap_stays_interior() {
        let mut rng = seeded(1);
        assert_eq!(interior_swap(&[1, 2, 3], &mut rng), None);
        assert_eq!(interior_swap(&[1, 2, 2, 3], &mut rng), None);
        for _ in 0..50 {
            let s = vec![0, 1, 2, 3, 4, 5];
            let w = interior_swap(&s, &mut rng).unwrap();
            assert_eq!((w[0], w[5]), (0, 5));
            assert_eq!(w.iter().zip(&s).filter(|(a, b)| a != b).count(), 2);
        }
    }

    #[test]
    fn separable_data_is_learned() {
        let mut rng = seeded(2);
        let features: Vec<Vec<f64>> = (0..400)
            .map(|i| vec![if i % 2 == 0 { -1.0 } else { 1.0 } + 0.01 * (i as f64).sin(), 3.0])
            .collect();
        let labels: Vec<bool> = (0..400).map(|i| i % 2 == 1).collect();
        let groups: Vec<usize> = (0..400).collect();
        let (acc, base) = logistic_probe(&features, &labels, &groups, &mut rng).unwrap();
        assert_eq!(acc, 1.0);
        assert!(base >= 0.5);
    }

    #[test]
    fn random_labels_are_at_chance() {
        let mut rng = seeded(3);
        let features: Vec<Vec<f64>> = (0..4000)
            .map(|_| (0..5).map(|_| rng.random::<f64>()).collect())
            .collect();
        let labels: Vec<bool> = (0..4000).map(|_| rng.random()).collect();
        let groups: Vec<usize> = (0..4000).collect();
        let (acc, _) = logistic_probe(&features, &labels, &groups, &mut rng).unwrap();
        assert!((0.45..=0.55).contains(&acc), "{acc}");
    }

    #[test]
    fn fos_cannot_see_interior_swaps() {
        let config = TrainConfig { mode: Mode::Fos, dim: 6, ..TrainConfig::default() };
        let bank = init_parameters(&config, 30, &mut seeded(4));
        let mut rng = seeded(5);
        let sentences: Vec<Vec<usize>> = (0..300)
            .map(|_| (0..10).map(|_| rng.random_range(0..30)).collect())
            .collect();
        let r = order_probe(&bank, 0.5, &sentences, &mut rng).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.baseline, 0.5);
        assert!(order_probe(&bank, 0.5, &sentences[..100], &mut rng).is_err());
    }

    #[test]
    fn json_line() {
        let r = ProbeResult {
            probe: "bshift".into(),
            mode: "fop".into(),
            accuracy: 0.625,
            baseline: 0.5,
            seeds: 3,
        };
        assert_eq!(
            r.to_json_line(),
            r#"{"probe":"bshift","mode":"fop","accuracy":0.625,"baseline":0.5,"seeds":3}"#
        );
    }
}
