//! Rate matrices, the stochasticity constraints, and the composition
//! functions mapping an ordered word sequence to a context embedding.
//!
//! Convention: matrices act from the left on column probability vectors.
//! A rate matrix has non-negative off-diagonals and columns summing to
//! zero, so `I + εQ` has unit column sums and the all-ones row vector
//! annihilates `Q` and every product containing it. Every composition of
//! rate matrices applied to `p_u` therefore sums to one.
//!
//! Sequences are given in sentence order; the first word's factor is
//! applied first, i.e. it is the rightmost factor of a product.

mod matrix;

pub use matrix::{add_outer, dot, matmul, matvec, matvec_t, Matrix};

use crate::{Error, Result};

/// A context or word embedding.
pub type Embedding = Vec<f64>;

/// Square matrix for CMOW words; unrolled row-major to a `side²` vector.
pub type SquareWordMatrix = Matrix;

/// Longest sequence accepted by [`expand_fop_bruteforce`].
pub const BRUTEFORCE_MAX_LEN: usize = 12;

/// The uniform distribution `p_u` over `dim` states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformDistribution {
    dim: usize,
}

impl UniformDistribution {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![1.0 / self.dim as f64; self.dim]
    }
}

pub fn uniform_distribution(dim: usize) -> Result<UniformDistribution> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    Ok(UniformDistribution { dim })
}

/// A matrix satisfying the rate constraints: `Q[i][j] ≥ 0` off the diagonal
/// and zero column sums. Only constructed through [`project_rate_matrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix(Matrix);

impl RateMatrix {
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// Largest `ε` for which `I + εQ` is entrywise non-negative.
    pub fn max_stochastic_epsilon(&self) -> f64 {
        let d = self.dim();
        let worst = (0..d).map(|j| self.0.get(j, j).abs()).fold(0.0, f64::max);
        if worst == 0.0 {
            f64::INFINITY
        } else {
            1.0 / worst
        }
    }
}

/// Clamps negative off-diagonals to zero, then sets each diagonal entry to
/// minus the sum of its column's off-diagonals.
pub fn project_in_place(q: &mut [f64], dim: usize) {
    for j in 0..dim {
        let mut off = 0.0;
        for i in 0..dim {
            if i != j {
                let e = &mut q[i * dim + j];
                if *e < 0.0 {
                    *e = 0.0;
                }
                off += *e;
            }
        }
        q[j * dim + j] = -off;
    }
}

pub fn project_rate_matrix(q: &Matrix) -> Result<RateMatrix> {
    if !q.is_finite() {
        return Err(Error::NonFinite("rate matrix"));
    }
    let mut out = q.clone();
    let dim = out.dim();
    project_in_place(out.as_mut_slice(), dim);
    Ok(RateMatrix(out))
}

/// Checks the rate constraints with a tolerance on the column sums.
pub fn is_valid_rate_matrix(q: &[f64], dim: usize, tol: f64) -> bool {
    (0..dim).all(|j| {
        let mut sum = 0.0;
        for i in 0..dim {
            let e = q[i * dim + j];
            if !e.is_finite() || (i != j && e < 0.0) {
                return false;
            }
            sum += e;
        }
        sum.abs() < tol
    })
}

fn check_dims(qs: &[RateMatrix], dim: usize) -> Result<Vec<&[f64]>> {
    qs.iter()
        .map(|q| {
            if q.dim() == dim {
                Ok(q.as_slice())
            } else {
                Err(Error::DimensionMismatch {
                    expected: dim,
                    found: q.dim(),
                })
            }
        })
        .collect()
}

/// Sums the rows of `terms` coordinate-wise, each coordinate in sorted order,
/// so the result is bitwise independent of the order of `terms`.
pub(crate) fn order_free_sum(terms: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut column = Vec::with_capacity(terms.len());
    (0..dim)
        .map(|r| {
            column.clear();
            column.extend(terms.iter().map(|t| t[r]));
            column.sort_by(f64::total_cmp);
            column.iter().sum()
        })
        .collect()
}

/// FOS kernel on raw row-major slices: `p + ε Σ Q_i p`.
pub fn fos_apply(mats: &[&[f64]], dim: usize, eps: f64, p: &[f64]) -> Vec<f64> {
    let terms: Vec<Vec<f64>> = mats
        .iter()
        .map(|q| {
            let mut a = vec![0.0; dim];
            matvec(q, dim, p, &mut a);
            a
        })
        .collect();
    let sum = order_free_sum(&terms, dim);
    p.iter().zip(sum).map(|(pi, s)| pi + eps * s).collect()
}

/// FOP kernel: the intermediate states `s_0 = p`, `s_i = (I + εQ_i) s_{i-1}`.
/// The last state is the embedding.
pub fn fop_states(mats: &[&[f64]], dim: usize, eps: f64, p: &[f64]) -> Vec<Vec<f64>> {
    let mut states = Vec::with_capacity(mats.len() + 1);
    states.push(p.to_vec());
    let mut tmp = vec![0.0; dim];
    for q in mats {
        let prev = states.last().expect("non-empty");
        matvec(q, dim, prev, &mut tmp);
        let next: Vec<f64> = prev.iter().zip(&tmp).map(|(s, t)| s + eps * t).collect();
        states.push(next);
    }
    states
}

pub fn fop_apply(mats: &[&[f64]], dim: usize, eps: f64, p: &[f64]) -> Vec<f64> {
    fop_states(mats, dim, eps, p).pop().expect("non-empty")
}

/// SOS kernel: `p + ε Σ a_j + ε² Σ_j Q_j (c_j + a_j / 2)` with `a_j = Q_j p`
/// and `c_j = Σ_{i<j} a_i`. This is `I + εΣQ_i + ε²Σ_{i<j} Q_j Q_i +
/// (ε²/2) ΣQ_i²` applied to `p`.
pub fn sos_apply(mats: &[&[f64]], dim: usize, eps: f64, p: &[f64]) -> Vec<f64> {
    let mut out = p.to_vec();
    let mut prefix = vec![0.0; dim];
    let mut a = vec![0.0; dim];
    let mut arg = vec![0.0; dim];
    let mut b = vec![0.0; dim];
    for q in mats {
        matvec(q, dim, p, &mut a);
        for r in 0..dim {
            arg[r] = prefix[r] + 0.5 * a[r];
        }
        matvec(q, dim, &arg, &mut b);
        for r in 0..dim {
            out[r] += eps * a[r] + eps * eps * b[r];
            prefix[r] += a[r];
        }
    }
    out
}

/// CMOW kernel: `M_k ⋯ M_1`, row-major. The empty product is the identity.
pub fn cmow_product(mats: &[&[f64]], side: usize) -> Vec<f64> {
    let mut acc = Matrix::identity(side).into_vec();
    let mut tmp = vec![0.0; side * side];
    for m in mats {
        matmul(m, &acc, side, &mut tmp);
        std::mem::swap(&mut acc, &mut tmp);
    }
    acc
}

/// First-order series: `(I + ε Σ Q_i) p`. Bitwise invariant under any
/// permutation of `qs`.
pub fn compose_fos(qs: &[RateMatrix], eps: f64, p: &UniformDistribution) -> Result<Embedding> {
    let mats = check_dims(qs, p.dim())?;
    Ok(fos_apply(&mats, p.dim(), eps, &p.to_vec()))
}

/// First-order product: `(I + εQ_k) ⋯ (I + εQ_1) p`, first word applied first.
pub fn compose_fop(qs: &[RateMatrix], eps: f64, p: &UniformDistribution) -> Result<Embedding> {
    let mats = check_dims(qs, p.dim())?;
    Ok(fop_apply(&mats, p.dim(), eps, &p.to_vec()))
}

/// Second-order series, all terms through `ε²`, later words multiplying on
/// the left in the cross terms.
pub fn compose_sos(qs: &[RateMatrix], eps: f64, p: &UniformDistribution) -> Result<Embedding> {
    let mats = check_dims(qs, p.dim())?;
    Ok(sos_apply(&mats, p.dim(), eps, &p.to_vec()))
}

/// Elementwise sum; the empty sum is the zero vector of length `dim`.
/// Bitwise invariant under permutation of `vs`.
pub fn compose_cbow(vs: &[Embedding], dim: usize) -> Result<Embedding> {
    if let Some(v) = vs.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: v.len(),
        });
    }
    Ok(order_free_sum(vs, dim))
}

/// Ordered matrix product `M_k ⋯ M_1`, unrolled row-major. The empty product
/// unrolls the `side × side` identity.
pub fn compose_cmow(ms: &[SquareWordMatrix], side: usize) -> Result<Embedding> {
    let mats = ms
        .iter()
        .map(|m| {
            if m.dim() == side {
                Ok(m.as_slice())
            } else {
                Err(Error::DimensionMismatch {
                    expected: side,
                    found: m.dim(),
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(cmow_product(&mats, side))
}

/// Concatenation `[a; b]`.
pub fn compose_hybrid(a: &[f64], b: &[f64]) -> Embedding {
    let mut out = Vec::with_capacity(a.len() + b.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out
}

/// Expands the FOP product into its `2^len` terms and sums them: for every
/// subset `T` of positions, `ε^|T|` times the product of `Q_t` over `T`
/// (earliest position rightmost) applied to `p`.
pub fn expand_fop_bruteforce(
    qs: &[RateMatrix],
    eps: f64,
    p: &UniformDistribution,
) -> Result<Embedding> {
    if qs.len() > BRUTEFORCE_MAX_LEN {
        return Err(Error::SequenceTooLong {
            len: qs.len(),
            max: BRUTEFORCE_MAX_LEN,
        });
    }
    let mats = check_dims(qs, p.dim())?;
    let dim = p.dim();
    let p = p.to_vec();
    let mut total = vec![0.0; dim];
    let mut term = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    for mask in 0u32..(1 << mats.len()) {
        term.copy_from_slice(&p);
        let mut coeff = 1.0;
        for (t, q) in mats.iter().enumerate() {
            if mask & (1 << t) != 0 {
                matvec(q, dim, &term, &mut tmp);
                std::mem::swap(&mut term, &mut tmp);
                coeff *= eps;
            }
        }
        for (acc, x) in total.iter_mut().zip(&term) {
            *acc += coeff * x;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn rate(rows: &[&[f64]]) -> RateMatrix {
        let r = project_rate_matrix(&m(rows)).unwrap();
        assert_eq!(r.matrix(), &m(rows), "fixture must already be a rate matrix");
        r
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn uniform() {
        assert_eq!(uniform_distribution(2).unwrap().to_vec(), vec![0.5, 0.5]);
        assert_eq!(uniform_distribution(1).unwrap().to_vec(), vec![1.0]);
        let p = uniform_distribution(25).unwrap().to_vec();
        assert!(p.iter().all(|&x| x == 0.04));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(uniform_distribution(0).is_err());
    }

    #[test]
    fn projection_by_hand() {
        let q = project_rate_matrix(&m(&[&[0.5, -0.3], &[0.2, 0.4]])).unwrap();
        assert_eq!(q.matrix(), &m(&[&[-0.2, 0.0], &[0.2, 0.0]]));
        let again = project_rate_matrix(q.matrix()).unwrap();
        assert_eq!(again, q);
        let zero = project_rate_matrix(&Matrix::zeros(3)).unwrap();
        assert_eq!(zero.matrix(), &Matrix::zeros(3));
        assert!(project_rate_matrix(&m(&[&[f64::NAN, 0.0], &[0.0, 0.0]])).is_err());
    }

    #[test]
    fn fos_examples() {
        let p = uniform_distribution(2).unwrap();
        assert_eq!(compose_fos(&[], 0.01, &p).unwrap(), vec![0.5, 0.5]);
        let q = rate(&[&[-1.0, 0.0], &[1.0, 0.0]]);
        let v = compose_fos(&[q], 0.01, &p).unwrap();
        assert!(close(&v, &[0.495, 0.505], 1e-15));
        let sym = rate(&[&[-0.3, 0.3], &[0.3, -0.3]]);
        assert_eq!(compose_fos(&[sym], 0.7, &p).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn fop_is_order_sensitive() {
        let p = uniform_distribution(2).unwrap();
        let q1 = rate(&[&[-1.0, 0.0], &[1.0, 0.0]]);
        let q2 = rate(&[&[0.0, 1.0], &[0.0, -1.0]]);
        let fwd = compose_fop(&[q1.clone(), q2.clone()], 0.1, &p).unwrap();
        let rev = compose_fop(&[q2, q1.clone()], 0.1, &p).unwrap();
        assert!(close(&fwd, &[0.505, 0.495], 1e-15));
        assert!(close(&rev, &[0.495, 0.505], 1e-15));
        let one = compose_fop(std::slice::from_ref(&q1), 0.1, &p).unwrap();
        assert!(close(&one, &compose_fos(&[q1], 0.1, &p).unwrap(), 1e-15));
    }

    #[test]
    fn sos_two_words_explicit() {
        let p = uniform_distribution(2).unwrap();
        let we = rate(&[&[-1.0, 0.5], &[1.0, -0.5]]);
        let love = rate(&[&[-0.2, 2.0], &[0.2, -2.0]]);
        let eps = 0.3;
        let pv = p.to_vec();
        let (qw, ql) = (we.matrix(), love.matrix());
        let mut expected = pv.clone();
        let terms = [
            (eps, ql.matvec(&pv)),
            (eps, qw.matvec(&pv)),
            (eps * eps, ql.matmul(qw).matvec(&pv)),
            (eps * eps / 2.0, ql.matmul(ql).matvec(&pv)),
            (eps * eps / 2.0, qw.matmul(qw).matvec(&pv)),
        ];
        for (c, t) in terms {
            for (e, x) in expected.iter_mut().zip(t) {
                *e += c * x;
            }
        }
        let got = compose_sos(&[we, love], eps, &p).unwrap();
        assert!(close(&got, &expected, 1e-15));
        assert_eq!(compose_sos(&[], eps, &p).unwrap(), pv);
    }

    #[test]
    fn cbow_and_cmow_and_hybrid() {
        assert_eq!(
            compose_cbow(&[vec![1.0, 2.0], vec![3.0, 4.0]], 2).unwrap(),
            vec![4.0, 6.0]
        );
        assert_eq!(compose_cbow(&[], 3).unwrap(), vec![0.0; 3]);
        assert!(compose_cbow(&[vec![1.0]], 2).is_err());

        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(compose_cmow(std::slice::from_ref(&a), 2).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(
            compose_cmow(&[Matrix::identity(2), Matrix::identity(2)], 2).unwrap(),
            vec![1.0, 0.0, 0.0, 1.0]
        );
        // first word rightmost: [a, b] -> b·a, [b, a] -> a·b
        assert_eq!(
            compose_cmow(&[a.clone(), b.clone()], 2).unwrap(),
            vec![3.0, 4.0, 1.0, 2.0]
        );
        assert_eq!(compose_cmow(&[b, a], 2).unwrap(), vec![2.0, 1.0, 4.0, 3.0]);

        assert_eq!(compose_hybrid(&[1.0, 2.0], &[3.0]), vec![1.0, 2.0, 3.0]);
        assert_eq!(compose_hybrid(&[1.0, 2.0], &[]), vec![1.0, 2.0]);
        assert_eq!(compose_hybrid(&[0.5; 25], &[0.5; 25]).len(), 50);
    }

    #[test]
    fn bruteforce_small_cases() {
        let p = uniform_distribution(2).unwrap();
        let q1 = rate(&[&[-1.0, 0.0], &[1.0, 0.0]]);
        let q2 = rate(&[&[0.0, 1.0], &[0.0, -1.0]]);
        let one = expand_fop_bruteforce(std::slice::from_ref(&q1), 0.1, &p).unwrap();
        assert!(close(&one, &[0.45, 0.55], 1e-15));
        let two = expand_fop_bruteforce(&[q1, q2], 0.1, &p).unwrap();
        assert!(close(&two, &[0.505, 0.495], 1e-15));
        let long = vec![rate(&[&[0.0, 0.0], &[0.0, 0.0]]); 13];
        assert!(matches!(
            expand_fop_bruteforce(&long, 0.1, &p),
            Err(Error::SequenceTooLong { len: 13, .. })
        ));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = uniform_distribution(3).unwrap();
        let q = rate(&[&[0.0, 0.0], &[0.0, 0.0]]);
        assert!(compose_fos(std::slice::from_ref(&q), 0.1, &p).is_err());
        assert!(compose_fop(std::slice::from_ref(&q), 0.1, &p).is_err());
        assert!(compose_sos(std::slice::from_ref(&q), 0.1, &p).is_err());
        assert!(expand_fop_bruteforce(&[q], 0.1, &p).is_err());
        assert!(compose_cmow(&[Matrix::identity(3)], 2).is_err());
    }

    #[test]
    fn stochastic_bound() {
        let q = rate(&[&[-4.0, 1.0], &[4.0, -1.0]]);
        assert_eq!(q.max_stochastic_epsilon(), 0.25);
        let z = rate(&[&[0.0, 0.0], &[0.0, 0.0]]);
        assert!(z.max_stochastic_epsilon().is_infinite());
    }
}
