use rayon::prelude::*;

use super::config::TrainConfig;
use super::params::{apply_constraints, ParameterBank};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const STABILITY: f64 = 1e-8;

/// Moment accumulators shaped like the parameter bank.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first: ParameterBank,
    pub second: ParameterBank,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub stability: f64,
}

impl AdamState {
    pub fn new(bank: &ParameterBank) -> Self {
        AdamState {
            first: bank.zeros_like(),
            second: bank.zeros_like(),
            step: 0,
            beta1: BETA1,
            beta2: BETA2,
            stability: STABILITY,
        }
    }
}

/// One bias-corrected Adam update of every parameter, followed by the
/// rate-matrix projection.
pub fn adam_step(
    bank: &mut ParameterBank,
    grads: &ParameterBank,
    state: &mut AdamState,
    config: &TrainConfig,
) {
    state.step += 1;
    let t = state.step as f64;
    let (b1, b2, stab) = (state.beta1, state.beta2, state.stability);
    let c1 = 1.0 - b1.powf(t);
    let c2 = 1.0 - b2.powf(t);
    let lr = config.learning_rate;

    let params = bank.arrays_mut();
    let firsts = state.first.arrays_mut();
    let seconds = state.second.arrays_mut();
    for (((p, g), m), v) in params
        .into_iter()
        .zip(grads.arrays())
        .zip(firsts)
        .zip(seconds)
    {
        p.par_iter_mut()
            .zip(g.par_iter())
            .zip(m.par_iter_mut())
            .zip(v.par_iter_mut())
            .for_each(|(((p, &g), m), v)| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + stab);
            });
    }
    apply_constraints(bank);
}
