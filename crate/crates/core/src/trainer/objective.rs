//! Negative-sampling objective, forward composition and analytic gradients.
//!
//! The trainer minimizes `-F`, where
//! `F = log σ(v_t·v_c) + Σ_i log σ(-v_ns_i·v_c)`. With the left-right split
//! the objective is the sum of that loss over the left and the right context
//! embedding, sharing one draw of negatives.

use rayon::prelude::*;

use super::config::{Composition, TrainConfig};
use super::params::{ContextTable, ParameterBank};
use crate::corpus::{NegativeTable, TrainingExample};
use crate::rate_algebra::{
    add_outer, cmow_product, dot, fop_states, fos_apply, matmul, matvec, matvec_t, sos_apply,
    Embedding,
};
use crate::rng::Rng;
use crate::{Error, Result};

/// `log σ(x)`, stable for large `|x|`.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-F` for one context embedding.
pub fn negative_sampling_loss<N: AsRef<[f64]>>(v_c: &[f64], v_t: &[f64], negs: &[N]) -> f64 {
    -log_sigmoid(dot(v_t, v_c))
        - negs
            .iter()
            .map(|n| log_sigmoid(-dot(n.as_ref(), v_c)))
            .sum::<f64>()
}

/// Left-right split loss. `None` marks a side without context words; it
/// contributes nothing.
pub fn split_loss<N: AsRef<[f64]>>(
    v_cl: Option<&[f64]>,
    v_cr: Option<&[f64]>,
    v_t: &[f64],
    negs: &[N],
) -> Result<f64> {
    if v_cl.is_none() && v_cr.is_none() {
        return Err(Error::EmptyContext);
    }
    Ok([v_cl, v_cr]
        .into_iter()
        .flatten()
        .map(|v| negative_sampling_loss(v, v_t, negs))
        .sum())
}

struct LossGrad {
    loss: f64,
    d_context: Vec<f64>,
    d_target: Vec<f64>,
    d_negs: Vec<Vec<f64>>,
}

fn loss_grad(v_c: &[f64], v_t: &[f64], negs: &[&[f64]]) -> LossGrad {
    let s = dot(v_t, v_c);
    let mut loss = -log_sigmoid(s);
    // d(-log σ(s))/ds = σ(s) - 1 = -σ(-s)
    let pos = -sigmoid(-s);
    let mut d_context: Vec<f64> = v_t.iter().map(|t| pos * t).collect();
    let d_target = v_c.iter().map(|c| pos * c).collect();
    let mut d_negs = Vec::with_capacity(negs.len());
    for n in negs {
        let sn = dot(n, v_c);
        loss -= log_sigmoid(-sn);
        let w = sigmoid(sn);
        for (g, x) in d_context.iter_mut().zip(n.iter()) {
            *g += w * x;
        }
        d_negs.push(v_c.iter().map(|c| w * c).collect());
    }
    LossGrad {
        loss,
        d_context,
        d_target,
        d_negs,
    }
}

fn word_params<'a>(table: &'a ContextTable, ids: &[usize]) -> Vec<&'a [f64]> {
    ids.iter().map(|&id| table.word(id)).collect()
}

/// Composes one component over `ids`, in sentence order.
pub(crate) fn compose_component(table: &ContextTable, ids: &[usize], eps: f64) -> Vec<f64> {
    let mats = word_params(table, ids);
    let dim = table.dim;
    let p = vec![1.0 / dim as f64; dim];
    match table.kind {
        Composition::Cbow => crate::rate_algebra::order_free_sum(
            &mats.iter().map(|m| m.to_vec()).collect::<Vec<_>>(),
            dim,
        ),
        Composition::Cmow => cmow_product(&mats, table.side()),
        Composition::Fos => fos_apply(&mats, dim, eps, &p),
        Composition::Fop => fop_states(&mats, dim, eps, &p).pop().expect("non-empty"),
        Composition::Sos => sos_apply(&mats, dim, eps, &p),
    }
}

/// The context embedding of `ids` under the bank's mode: one composition,
/// or the concatenation of the hybrid's components.
pub fn compose_context(bank: &ParameterBank, ids: &[usize], eps: f64) -> Result<Embedding> {
    for &id in ids {
        bank.check_id(id)?;
    }
    let mut out = Vec::with_capacity(bank.dim);
    for table in &bank.contexts {
        out.extend(compose_component(table, ids, eps));
    }
    Ok(out)
}

/// Context embedding(s) of an example: one vector for `left ‖ right`, or a
/// `(left, right)` pair with the split objective (`None` for an empty side).
#[derive(Debug, Clone, PartialEq)]
pub enum ContextEmbedding {
    Joint(Embedding),
    Split(Option<Embedding>, Option<Embedding>),
}

pub fn forward(
    example: &TrainingExample,
    bank: &ParameterBank,
    config: &TrainConfig,
) -> Result<ContextEmbedding> {
    bank.check_id(example.target)?;
    let eps = config.epsilon;
    if config.lr_split {
        let side = |ids: &[usize]| -> Result<Option<Embedding>> {
            if ids.is_empty() {
                Ok(None)
            } else {
                compose_context(bank, ids, eps).map(Some)
            }
        };
        Ok(ContextEmbedding::Split(
            side(&example.left)?,
            side(&example.right)?,
        ))
    } else {
        Ok(ContextEmbedding::Joint(compose_context(
            bank,
            &example.context(),
            eps,
        )?))
    }
}

/// Gradient of one component's composition with respect to each word's
/// parameters, given the upstream gradient `g` of the composed vector.
/// Returned in the order of `ids` (repeated ids appear repeatedly).
fn backprop_component(table: &ContextTable, ids: &[usize], eps: f64, g: &[f64]) -> Vec<Vec<f64>> {
    let mats = word_params(table, ids);
    let dim = table.dim;
    let k = mats.len();
    let p = vec![1.0 / dim as f64; dim];
    match table.kind {
        Composition::Cbow => vec![g.to_vec(); k],
        Composition::Fos => {
            let mut grad = vec![0.0; dim * dim];
            add_outer(&mut grad, dim, eps, g, &p);
            vec![grad; k]
        }
        Composition::Fop => {
            let states = fop_states(&mats, dim, eps, &p);
            let mut grads = vec![Vec::new(); k];
            let mut h = g.to_vec();
            let mut tmp = vec![0.0; dim];
            for i in (0..k).rev() {
                let mut grad = vec![0.0; dim * dim];
                add_outer(&mut grad, dim, eps, &h, &states[i]);
                grads[i] = grad;
                matvec_t(mats[i], dim, &h, &mut tmp);
                for (hv, t) in h.iter_mut().zip(&tmp) {
                    *hv += eps * t;
                }
            }
            grads
        }
        Composition::Sos => {
            let eps2 = eps * eps;
            let a: Vec<Vec<f64>> = mats
                .iter()
                .map(|q| {
                    let mut out = vec![0.0; dim];
                    matvec(q, dim, &p, &mut out);
                    out
                })
                .collect();
            let qtg: Vec<Vec<f64>> = mats
                .iter()
                .map(|q| {
                    let mut out = vec![0.0; dim];
                    matvec_t(q, dim, g, &mut out);
                    out
                })
                .collect();
            let mut grads = vec![Vec::new(); k];
            let mut prefix = vec![0.0; dim];
            let mut suffix = vec![0.0; dim];
            let mut suffixes = vec![Vec::new(); k];
            for j in (0..k).rev() {
                suffixes[j] = suffix.clone();
                for (s, x) in suffix.iter_mut().zip(&qtg[j]) {
                    *s += x;
                }
            }
            for j in 0..k {
                let mut grad = vec![0.0; dim * dim];
                add_outer(&mut grad, dim, eps, g, &p);
                let arg: Vec<f64> = prefix.iter().zip(&a[j]).map(|(c, x)| c + 0.5 * x).collect();
                add_outer(&mut grad, dim, eps2, g, &arg);
                let h: Vec<f64> = suffixes[j]
                    .iter()
                    .zip(&qtg[j])
                    .map(|(s, x)| s + 0.5 * x)
                    .collect();
                add_outer(&mut grad, dim, eps2, &h, &p);
                grads[j] = grad;
                for (c, x) in prefix.iter_mut().zip(&a[j]) {
                    *c += x;
                }
            }
            grads
        }
        Composition::Cmow => {
            let side = table.side();
            let sq = side * side;
            // before[i] = M_{i-1} ⋯ M_1, after[i] = M_k ⋯ M_{i+1}
            let mut before = Vec::with_capacity(k);
            let mut acc = identity(side);
            let mut tmp = vec![0.0; sq];
            for m in &mats {
                before.push(acc.clone());
                matmul(m, &acc, side, &mut tmp);
                std::mem::swap(&mut acc, &mut tmp);
            }
            let mut after = vec![Vec::new(); k];
            let mut acc = identity(side);
            for i in (0..k).rev() {
                after[i] = acc.clone();
                matmul(&acc, mats[i], side, &mut tmp);
                std::mem::swap(&mut acc, &mut tmp);
            }
            (0..k)
                .map(|i| {
                    // grad M_i = Aᵀ G Bᵀ
                    let mut ag = vec![0.0; sq];
                    matmul(&transpose(&after[i], side), g, side, &mut ag);
                    let mut out = vec![0.0; sq];
                    matmul(&ag, &transpose(&before[i], side), side, &mut out);
                    out
                })
                .collect()
        }
    }
}

fn identity(side: usize) -> Vec<f64> {
    let mut m = vec![0.0; side * side];
    for i in 0..side {
        m[i * side + i] = 1.0;
    }
    m
}

fn transpose(m: &[f64], side: usize) -> Vec<f64> {
    let mut t = vec![0.0; side * side];
    for i in 0..side {
        for j in 0..side {
            t[j * side + i] = m[i * side + j];
        }
    }
    t
}

/// Gradient contributions of a single example, unscaled.
#[derive(Debug, Default)]
struct ExampleGrad {
    loss: f64,
    /// (component, word, gradient)
    context: Vec<(usize, usize, Vec<f64>)>,
    /// (word, gradient)
    target: Vec<(usize, Vec<f64>)>,
}

fn example_grad(
    example: &TrainingExample,
    negs: &[usize],
    bank: &ParameterBank,
    config: &TrainConfig,
) -> Result<ExampleGrad> {
    bank.check_id(example.target)?;
    for &id in negs {
        bank.check_id(id)?;
    }
    let eps = config.epsilon;
    let sides: Vec<Vec<usize>> = if config.lr_split {
        [&example.left, &example.right]
            .into_iter()
            .filter(|s| !s.is_empty())
            .cloned()
            .collect()
    } else {
        let ctx = example.context();
        if ctx.is_empty() {
            Vec::new()
        } else {
            vec![ctx]
        }
    };
    if sides.is_empty() {
        return Err(Error::EmptyContext);
    }
    let v_t = bank.target(example.target);
    let neg_vecs: Vec<&[f64]> = negs.iter().map(|&id| bank.target(id)).collect();
    let mut out = ExampleGrad::default();
    for ids in &sides {
        let v_c = compose_context(bank, ids, eps)?;
        let lg = loss_grad(&v_c, v_t, &neg_vecs);
        out.loss += lg.loss;
        out.target.push((example.target, lg.d_target));
        out.target.extend(negs.iter().copied().zip(lg.d_negs));
        let mut offset = 0;
        for (c, table) in bank.contexts.iter().enumerate() {
            let g = &lg.d_context[offset..offset + table.dim];
            offset += table.dim;
            let grads = backprop_component(table, ids, eps, g);
            out.context
                .extend(ids.iter().zip(grads).map(|(&id, grad)| (c, id, grad)));
        }
    }
    Ok(out)
}

/// Mean loss and gradients of a batch with explicit negatives (one list per
/// example). Per-example work runs on the current rayon pool; gradients are
/// reduced in example order, so results do not depend on the thread count.
pub fn batch_loss_and_gradients(
    batch: &[TrainingExample],
    negatives: &[Vec<usize>],
    bank: &ParameterBank,
    config: &TrainConfig,
) -> Result<(f64, ParameterBank)> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    if negatives.len() != batch.len() {
        return Err(Error::DimensionMismatch {
            expected: batch.len(),
            found: negatives.len(),
        });
    }
    let per_example: Vec<Result<ExampleGrad>> = batch
        .par_iter()
        .zip(negatives.par_iter())
        .map(|(ex, negs)| example_grad(ex, negs, bank, config))
        .collect();
    let scale = 1.0 / batch.len() as f64;
    let mut grads = bank.zeros_like();
    let mut total = 0.0;
    for (index, eg) in per_example.into_iter().enumerate() {
        let eg = eg?;
        if !eg.loss.is_finite() {
            return Err(Error::NonFiniteLoss { index });
        }
        total += eg.loss;
        for (c, id, g) in eg.context {
            for (dst, x) in grads.contexts[c].word_mut(id).iter_mut().zip(g) {
                *dst += scale * x;
            }
        }
        for (id, g) in eg.target {
            for (dst, x) in grads.target_mut(id).iter_mut().zip(g) {
                *dst += scale * x;
            }
        }
    }
    Ok((total * scale, grads))
}

/// Mean batch loss only, with explicit negatives.
pub fn batch_loss(
    batch: &[TrainingExample],
    negatives: &[Vec<usize>],
    bank: &ParameterBank,
    config: &TrainConfig,
) -> Result<f64> {
    let mut total = 0.0;
    for (ex, negs) in batch.iter().zip(negatives) {
        let neg_vecs: Vec<&[f64]> = negs.iter().map(|&id| bank.target(id)).collect();
        let v_t = bank.target(example_target(ex, bank)?);
        total += match forward(ex, bank, config)? {
            ContextEmbedding::Joint(v) => negative_sampling_loss(&v, v_t, &neg_vecs),
            ContextEmbedding::Split(l, r) => {
                split_loss(l.as_deref(), r.as_deref(), v_t, &neg_vecs)?
            }
        };
    }
    Ok(total / batch.len() as f64)
}

fn example_target(ex: &TrainingExample, bank: &ParameterBank) -> Result<usize> {
    bank.check_id(ex.target)?;
    Ok(ex.target)
}

/// Draws `k` negatives per example from `table`, then evaluates the batch.
pub fn loss_and_gradients(
    batch: &[TrainingExample],
    bank: &ParameterBank,
    table: &NegativeTable,
    config: &TrainConfig,
    rng: &mut Rng,
) -> Result<(f64, ParameterBank)> {
    let negatives = batch
        .iter()
        .map(|ex| table.sample_negatives(config.negatives, ex.target, rng))
        .collect::<Result<Vec<_>>>()?;
    batch_loss_and_gradients(batch, &negatives, bank, config)
}
