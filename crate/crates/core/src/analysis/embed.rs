use crate::rate_algebra::{dot, Embedding};
use crate::trainer::{compose_context, ParameterBank};
use crate::{Error, Result};

/// The embedding of a single word: its composition as a one-word sequence.
/// For FOS and FOP this is `(I + εQ) p_u`; CBOW returns the stored vector,
/// CMOW the unrolled matrix, hybrids the concatenation.
pub fn word_embedding(bank: &ParameterBank, epsilon: f64, id: usize) -> Result<Embedding> {
    compose_context(bank, &[id], epsilon)
}

/// Composes a whole sentence exactly as a training context is composed.
pub fn sentence_embedding(bank: &ParameterBank, epsilon: f64, ids: &[usize]) -> Result<Embedding> {
    if ids.is_empty() {
        return Err(Error::invalid("cannot embed an empty sentence"));
    }
    compose_context(bank, ids, epsilon)
}

pub fn all_word_embeddings(bank: &ParameterBank, epsilon: f64) -> Result<Vec<Embedding>> {
    (0..bank.n).map(|id| word_embedding(bank, epsilon, id)).collect()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

/// The `top_k` most cosine-similar rows to `query`, excluding the query
/// itself, by descending similarity with ties broken by id.
pub fn nearest_in(vectors: &[Embedding], query: usize, top_k: usize) -> Result<Vec<(usize, f64)>> {
    if query >= vectors.len() {
        return Err(Error::UnknownId(query));
    }
    if top_k >= vectors.len() {
        return Err(Error::invalid(format!(
            "top_k = {top_k} must be below the vocabulary size {}",
            vectors.len()
        )));
    }
    let q = &vectors[query];
    let mut scored: Vec<(usize, f64)> = vectors
        .iter()
        .enumerate()
        .filter(|&(id, _)| id != query)
        .map(|(id, v)| (id, cosine(q, v)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(top_k);
    Ok(scored)
}

pub fn nearest_neighbors(
    bank: &ParameterBank,
    epsilon: f64,
    id: usize,
    top_k: usize,
) -> Result<Vec<(usize, f64)>> {
    bank.check_id(id)?;
    nearest_in(&all_word_embeddings(bank, epsilon)?, id, top_k)
}
