use rand_distr::{Distribution, Normal};

use super::config::{cmow_side, Composition, Mode, TrainConfig};
use crate::rate_algebra::{is_valid_rate_matrix, project_in_place};
use crate::rng::Rng;
use crate::{Error, Result};

/// Per-word context parameters of one composition, stored flat: word `w`
/// owns `data[w * param_len .. (w + 1) * param_len]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextTable {
    pub kind: Composition,
    /// Embedding size produced by this component.
    pub dim: usize,
    pub data: Vec<f64>,
}

impl ContextTable {
    pub fn zeros(kind: Composition, dim: usize, n: usize) -> Self {
        ContextTable {
            kind,
            dim,
            data: vec![0.0; n * kind.param_len(dim)],
        }
    }

    pub fn param_len(&self) -> usize {
        self.kind.param_len(self.dim)
    }

    pub fn word(&self, id: usize) -> &[f64] {
        let len = self.param_len();
        &self.data[id * len..(id + 1) * len]
    }

    pub fn word_mut(&mut self, id: usize) -> &mut [f64] {
        let len = self.param_len();
        &mut self.data[id * len..(id + 1) * len]
    }

    /// Side length of the CMOW matrices.
    pub fn side(&self) -> usize {
        cmow_side(self.dim).unwrap_or(0)
    }
}

/// Context parameters `W_c` (one table per composition component) and
/// target vectors `W_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterBank {
    pub mode: Mode,
    pub dim: usize,
    pub n: usize,
    pub contexts: Vec<ContextTable>,
    /// `n × dim`, row per word.
    pub targets: Vec<f64>,
}

impl ParameterBank {
    pub fn zeros(mode: Mode, dim: usize, n: usize) -> Self {
        ParameterBank {
            mode,
            dim,
            n,
            contexts: mode
                .components(dim)
                .into_iter()
                .map(|(kind, d)| ContextTable::zeros(kind, d, n))
                .collect(),
            targets: vec![0.0; n * dim],
        }
    }

    pub fn zeros_like(&self) -> Self {
        ParameterBank::zeros(self.mode, self.dim, self.n)
    }

    pub fn target(&self, id: usize) -> &[f64] {
        &self.targets[id * self.dim..(id + 1) * self.dim]
    }

    pub fn target_mut(&mut self, id: usize) -> &mut [f64] {
        &mut self.targets[id * self.dim..(id + 1) * self.dim]
    }

    pub fn check_id(&self, id: usize) -> Result<()> {
        if id < self.n {
            Ok(())
        } else {
            Err(Error::UnknownId(id))
        }
    }

    /// Every parameter array, context tables first, then the targets.
    pub fn arrays(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self.contexts.iter().map(|t| t.data.as_slice()).collect();
        out.push(&self.targets);
        out
    }

    pub fn arrays_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self
            .contexts
            .iter_mut()
            .map(|t| t.data.as_mut_slice())
            .collect();
        out.push(&mut self.targets);
        out
    }

    pub fn param_count(&self) -> usize {
        self.arrays().iter().map(|a| a.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.arrays().iter().all(|a| a.iter().all(|x| x.is_finite()))
    }

    /// True when every rate-mode context matrix satisfies the rate
    /// constraints with column sums below `tol`.
    pub fn rate_constraints_hold(&self, tol: f64) -> bool {
        self.contexts.iter().filter(|t| t.kind.is_rate()).all(|t| {
            (0..self.n).all(|w| is_valid_rate_matrix(t.word(w), t.dim, tol))
        })
    }
}

/// Projects every rate-mode context matrix onto the rate constraints.
/// CBOW and CMOW tables and the target vectors are left untouched.
pub fn apply_constraints(bank: &mut ParameterBank) {
    for table in bank.contexts.iter_mut().filter(|t| t.kind.is_rate()) {
        let dim = table.dim;
        for q in table.data.chunks_exact_mut(dim * dim) {
            project_in_place(q, dim);
        }
    }
}

/// Turns rate-mode gradients with respect to every matrix entry into
/// gradients with respect to the off-diagonals alone. The diagonal is
/// `Q[j][j] = -Σ_{i≠j} Q[i][j]`, so an off-diagonal entry reaches the loss
/// through itself and through its column's diagonal: `G[i][j] - G[j][j]`.
/// Diagonal gradients become zero.
pub fn reduce_rate_gradients(grads: &mut ParameterBank) {
    for table in grads.contexts.iter_mut().filter(|t| t.kind.is_rate()) {
        let dim = table.dim;
        for g in table.data.chunks_exact_mut(dim * dim) {
            for j in 0..dim {
                let diag = g[j * dim + j];
                for i in 0..dim {
                    g[i * dim + j] -= diag;
                }
            }
        }
    }
}

/// Standard deviations used by [`init_parameters_with`]. Rate off-diagonals
/// and CMOW noise use `scale / dim` of their component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitScales {
    pub rate: f64,
    pub vector: f64,
    pub cmow: f64,
}

impl Default for InitScales {
    fn default() -> Self {
        InitScales {
            rate: 0.1,
            vector: 0.01,
            cmow: 0.1,
        }
    }
}

/// Draws one valid rate matrix: off-diagonals `|N(0, scale/dim)|`, then
/// projected.
pub fn random_rate_matrix(dim: usize, scale: f64, rng: &mut Rng) -> Vec<f64> {
    let mut q = vec![0.0; dim * dim];
    fill_normal(&mut q, scale / dim as f64, rng);
    for x in q.iter_mut() {
        *x = x.abs();
    }
    project_in_place(&mut q, dim);
    q
}

fn fill_normal(out: &mut [f64], std: f64, rng: &mut Rng) {
    if std == 0.0 {
        out.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let normal = Normal::new(0.0, std).expect("finite positive std");
    for x in out.iter_mut() {
        *x = normal.sample(rng);
    }
}

pub fn init_parameters(config: &TrainConfig, n: usize, rng: &mut Rng) -> ParameterBank {
    init_parameters_with(config, n, InitScales::default(), rng)
}

pub fn init_parameters_with(
    config: &TrainConfig,
    n: usize,
    scales: InitScales,
    rng: &mut Rng,
) -> ParameterBank {
    let mut bank = ParameterBank::zeros(config.mode, config.dim, n);
    for table in bank.contexts.iter_mut() {
        let dim = table.dim;
        match table.kind {
            Composition::Fos | Composition::Fop | Composition::Sos => {
                for w in 0..n {
                    let q = random_rate_matrix(dim, scales.rate, rng);
                    table.word_mut(w).copy_from_slice(&q);
                }
            }
            Composition::Cbow => fill_normal(&mut table.data, scales.vector, rng),
            Composition::Cmow => {
                let side = table.side();
                fill_normal(&mut table.data, scales.cmow / dim as f64, rng);
                for w in 0..n {
                    let m = table.word_mut(w);
                    for i in 0..side {
                        m[i * side + i] += 1.0;
                    }
                }
            }
        }
    }
    fill_normal(&mut bank.targets, scales.vector, rng);
    bank
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn config(mode: Mode, dim: usize) -> TrainConfig {
        TrainConfig {
            mode,
            dim,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn reduced_gradient_follows_the_constraint_surface() {
        use crate::corpus::TrainingExample;
        use crate::trainer::objective::{batch_loss, batch_loss_and_gradients};

        let config = TrainConfig { epsilon: 0.2, ..config(Mode::Fop, 4) };
        let scales = InitScales { rate: 2.0, vector: 0.5, cmow: 0.0 };
        let mut bank = init_parameters_with(&config, 5, scales, &mut seeded(9));
        let batch = vec![
            TrainingExample { left: vec![0, 1], right: vec![2], target: 3 },
            TrainingExample { left: vec![], right: vec![4, 0], target: 1 },
        ];
        let negatives = vec![vec![4, 2], vec![3, 0]];
        let (_, mut grads) = batch_loss_and_gradients(&batch, &negatives, &bank, &config).unwrap();
        reduce_rate_gradients(&mut grads);
        let h = 1e-6;
        for w in 0..5 {
            for i in 0..4 {
                for j in 0..4 {
                    let reduced = grads.contexts[0].word(w)[i * 4 + j];
                    if i == j {
                        assert_eq!(reduced, 0.0);
                        continue;
                    }
                    let mut shifted = |delta: f64| {
                        let q = bank.contexts[0].word_mut(w);
                        q[i * 4 + j] += delta;
                        q[j * 4 + j] -= delta;
                        let loss = batch_loss(&batch, &negatives, &bank, &config).unwrap();
                        let q = bank.contexts[0].word_mut(w);
                        q[i * 4 + j] -= delta;
                        q[j * 4 + j] += delta;
                        loss
                    };
                    let numeric = (shifted(h) - shifted(-h)) / (2.0 * h);
                    assert!((numeric - reduced).abs() < 1e-6 * numeric.abs().max(1.0), "{numeric} vs {reduced}");
                }
            }
        }
        assert_eq!(grads.targets, batch_loss_and_gradients(&batch, &negatives, &bank, &config).unwrap().1.targets);
    }

    #[test]
    fn rate_init_is_valid() {
        for mode in [Mode::Fos, Mode::Fop, Mode::Sos, Mode::HybridFosSos] {
            let bank = init_parameters(&config(mode, 6), 30, &mut seeded(1));
            assert!(bank.rate_constraints_hold(1e-12));
            assert!(bank.contexts.iter().all(|t| t.data.iter().any(|&x| x != 0.0)));
        }
    }

    #[test]
    fn cmow_zero_noise_is_identity() {
        let scales = InitScales {
            cmow: 0.0,
            ..InitScales::default()
        };
        let bank = init_parameters_with(&config(Mode::Cmow, 9), 4, scales, &mut seeded(2));
        for w in 0..4 {
            assert_eq!(
                bank.contexts[0].word(w),
                &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]
            );
        }
    }

    #[test]
    fn init_is_seeded() {
        for mode in Mode::ALL {
            let dim = if mode == Mode::Cmow { 16 } else { 8 };
            let a = init_parameters(&config(mode, dim), 10, &mut seeded(5));
            let b = init_parameters(&config(mode, dim), 10, &mut seeded(5));
            assert_eq!(a, b);
            let c = init_parameters(&config(mode, dim), 10, &mut seeded(6));
            assert_ne!(a, c);
        }
    }

    #[test]
    fn constraints_fix_one_entry() {
        let mut bank = init_parameters(&config(Mode::Fos, 3), 2, &mut seeded(9));
        let before = bank.clone();
        apply_constraints(&mut bank);
        assert_eq!(bank, before);

        let q = bank.contexts[0].word_mut(1);
        q[3] = -0.5; // entry (1, 0)
        let expected_diag = -(q[6]);
        apply_constraints(&mut bank);
        let q = bank.contexts[0].word(1);
        assert_eq!(q[3], 0.0);
        assert_eq!(q[0], expected_diag);
        assert_eq!(bank.contexts[0].word(0), before.contexts[0].word(0));
        assert!(bank.rate_constraints_hold(1e-12));
    }

    #[test]
    fn constraints_leave_cbow_and_cmow_alone() {
        for mode in [Mode::Cbow, Mode::Cmow] {
            let mut bank = init_parameters(&config(mode, 4), 5, &mut seeded(3));
            bank.contexts[0].data[1] = -3.0;
            let before = bank.clone();
            apply_constraints(&mut bank);
            assert_eq!(bank, before);
        }
    }
}
