//! Central finite-difference check of the analytic gradients.
//!
//! The numeric side only evaluates the loss through the forward
//! compositions ([`batch_loss`]); it never touches the backward code.

use rand::Rng as _;

use super::config::{cmow_side, Composition, Mode, TrainConfig};
use super::objective::{batch_loss, batch_loss_and_gradients};
use super::params::{init_parameters_with, InitScales};
use crate::corpus::TrainingExample;
use crate::rng::{derive_seed, seeded, Rng};
use crate::Result;

/// Gradient magnitudes below this are compared on an absolute scale
/// (`|a - n| < tolerance · FLOOR`), where finite-difference roundoff
/// dominates.
pub const RELATIVE_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckConfig {
    pub mode: Mode,
    pub lr_split: bool,
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub instances: usize,
    pub vocab_size: usize,
    pub batch_size: usize,
    pub epsilon: f64,
    pub step: f64,
    pub tolerance: f64,
    pub seed: u64,
}

impl GradCheckConfig {
    pub fn new(mode: Mode, lr_split: bool) -> Self {
        GradCheckConfig {
            mode,
            lr_split,
            dim: 5,
            window: 2,
            negatives: 3,
            instances: 20,
            vocab_size: 7,
            batch_size: 3,
            epsilon: 0.1,
            step: 1e-6,
            tolerance: 1e-4,
            seed: 0,
        }
    }

    /// `dim`, rounded up to a perfect square when the mode contains CMOW.
    pub fn effective_dim(&self) -> usize {
        let needs_square = self
            .mode
            .components(self.dim)
            .iter()
            .any(|(c, _)| *c == Composition::Cmow);
        if !needs_square {
            return self.dim;
        }
        (self.dim..).find(|&d| cmow_side(d).is_some()).expect("squares are unbounded")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub mode: Mode,
    pub lr_split: bool,
    pub dim: usize,
    pub instances: usize,
    pub coordinates: usize,
    pub max_rel_error: f64,
    pub failures: usize,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

fn random_example(vocab: usize, window: usize, rng: &mut Rng) -> TrainingExample {
    loop {
        let left_len = rng.random_range(0..=window);
        let right_len = rng.random_range(0..=window);
        if left_len + right_len == 0 {
            continue;
        }
        let mut draw = |len| (0..len).map(|_| rng.random_range(0..vocab)).collect::<Vec<_>>();
        let left = draw(left_len);
        let right = draw(right_len);
        return TrainingExample {
            left,
            right,
            target: rng.random_range(0..vocab),
        };
    }
}

pub fn gradient_check(check: &GradCheckConfig) -> Result<GradCheckReport> {
    let dim = check.effective_dim();
    let config = TrainConfig {
        mode: check.mode,
        dim,
        epsilon: check.epsilon,
        window: check.window,
        negatives: check.negatives,
        lr_split: check.lr_split,
        ..TrainConfig::default()
    };
    config.validate()?;
    let scales = InitScales {
        rate: 0.5 * dim as f64,
        vector: 0.5,
        cmow: 0.3 * dim as f64,
    };
    let n = check.vocab_size;
    let mut report = GradCheckReport {
        mode: check.mode,
        lr_split: check.lr_split,
        dim,
        instances: check.instances,
        coordinates: 0,
        max_rel_error: 0.0,
        failures: 0,
    };
    for instance in 0..check.instances {
        let mut rng = seeded(derive_seed(check.seed, &[instance as u64]));
        let mut bank = init_parameters_with(&config, n, scales, &mut rng);
        let batch: Vec<TrainingExample> = (0..check.batch_size)
            .map(|_| random_example(n, check.window, &mut rng))
            .collect();
        let negatives: Vec<Vec<usize>> = batch
            .iter()
            .map(|ex| {
                (0..check.negatives)
                    .map(|_| loop {
                        let id = rng.random_range(0..n);
                        if id != ex.target {
                            break id;
                        }
                    })
                    .collect()
            })
            .collect();

        let (_, grads) = batch_loss_and_gradients(&batch, &negatives, &bank, &config)?;
        let analytic: Vec<Vec<f64>> = grads.arrays().iter().map(|a| a.to_vec()).collect();
        for (a, grad) in analytic.iter().enumerate() {
            for (i, &g) in grad.iter().enumerate() {
                let original = bank.arrays()[a][i];
                bank.arrays_mut()[a][i] = original + check.step;
                let plus = batch_loss(&batch, &negatives, &bank, &config)?;
                bank.arrays_mut()[a][i] = original - check.step;
                let minus = batch_loss(&batch, &negatives, &bank, &config)?;
                bank.arrays_mut()[a][i] = original;
                let numeric = (plus - minus) / (2.0 * check.step);
                let err = relative_error(g, numeric);
                report.coordinates += 1;
                report.max_rel_error = report.max_rel_error.max(err);
                if err.is_nan() || err >= check.tolerance {
                    report.failures += 1;
                }
            }
        }
    }
    Ok(report)
}
