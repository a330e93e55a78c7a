//! Magnitude of long first-order products `∏ (I + εQ_i)` as the sequence
//! grows.
//!
//! With valid rate matrices and small ε every factor is column stochastic
//! and entrywise non-negative, so the product's mean absolute entry is
//! exactly `1/d` at every length ([`MatrixDraw::Projected`] shows this up to
//! rounding). [`MatrixDraw::Signed`] keeps the zero column sums but lets
//! off-diagonals take either sign, which is what makes the magnitude wander
//! with the length, by an amount proportional to ε.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::rate_algebra::matmul;
use crate::rng::{derive_seed, seeded, Rng};
use crate::trainer::{random_rate_matrix, InitScales};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatrixDraw {
    /// Off-diagonals `|N(0, 0.1/d)|`, then projected: the parameter
    /// initialization.
    Projected,
    /// Off-diagonals `N(0, 0.1/d)`, diagonal set to give zero column sums.
    #[default]
    Signed,
}

impl std::str::FromStr for MatrixDraw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "projected" => Ok(MatrixDraw::Projected),
            "signed" => Ok(MatrixDraw::Signed),
            _ => Err(Error::invalid(format!("unknown matrix draw {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityRecord {
    pub epsilon: f64,
    pub length: usize,
    pub seed: u64,
    /// Mean absolute entry of the accumulated product.
    pub mean_abs: f64,
}

pub fn random_stability_matrix(dim: usize, draw: MatrixDraw, rng: &mut Rng) -> Vec<f64> {
    let scale = InitScales::default().rate;
    match draw {
        MatrixDraw::Projected => random_rate_matrix(dim, scale, rng),
        MatrixDraw::Signed => {
            let normal = Normal::new(0.0, scale / dim as f64).expect("positive std");
            let mut q: Vec<f64> = (0..dim * dim).map(|_| normal.sample(rng)).collect();
            for j in 0..dim {
                let off: f64 = (0..dim).filter(|&i| i != j).map(|i| q[i * dim + j]).sum();
                q[j * dim + j] = -off;
            }
            q
        }
    }
}

/// One record per `(ε, length, seed)`, ordered by ε, then seed, then length.
/// The matrices depend only on the seed, so every ε sees the same draws.
pub fn stability_curve(
    dim: usize,
    epsilons: &[f64],
    max_len: usize,
    seeds: &[u64],
    draw: MatrixDraw,
) -> Result<Vec<StabilityRecord>> {
    if dim < 2 {
        return Err(Error::invalid("stability curve needs dim >= 2"));
    }
    if max_len == 0 {
        return Err(Error::invalid("max_len must be at least 1"));
    }
    if let Some(e) = epsilons.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
        return Err(Error::invalid(format!("bad epsilon {e}")));
    }
    let cells: Vec<(f64, u64)> = epsilons
        .iter()
        .flat_map(|&e| seeds.iter().map(move |&s| (e, s)))
        .collect();
    let records = cells
        .par_iter()
        .map(|&(eps, seed)| {
            let mut rng = seeded(derive_seed(seed, &[0x57AB]));
            let mut product = identity(dim);
            let mut factor = vec![0.0; dim * dim];
            let mut next = vec![0.0; dim * dim];
            (1..=max_len)
                .map(|length| {
                    let q = random_stability_matrix(dim, draw, &mut rng);
                    for (f, x) in factor.iter_mut().zip(&q) {
                        *f = eps * x;
                    }
                    for i in 0..dim {
                        factor[i * dim + i] += 1.0;
                    }
                    matmul(&factor, &product, dim, &mut next);
                    std::mem::swap(&mut product, &mut next);
                    let mean_abs =
                        product.iter().map(|x| x.abs()).sum::<f64>() / (dim * dim) as f64;
                    StabilityRecord {
                        epsilon: eps,
                        length,
                        seed,
                        mean_abs,
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>();
    Ok(records.into_iter().flatten().collect())
}

fn identity(dim: usize) -> Vec<f64> {
    let mut m = vec![0.0; dim * dim];
    for i in 0..dim {
        m[i * dim + i] = 1.0;
    }
    m
}

/// Population standard deviation of `mean_abs` across lengths, for the
/// records of one `(ε, seed)` cell.
pub fn fluctuation(records: &[StabilityRecord], epsilon: f64, seed: u64) -> f64 {
    let values: Vec<f64> = records
        .iter()
        .filter(|r| r.epsilon == epsilon && r.seed == seed)
        .map(|r| r.mean_abs)
        .collect();
    std_dev(&values)
}

pub(crate) fn std_dev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_epsilon_stays_identity() {
        for draw in [MatrixDraw::Projected, MatrixDraw::Signed] {
            let recs = stability_curve(8, &[0.0], 12, &[1, 2], draw).unwrap();
            assert_eq!(recs.len(), 24);
            assert!(recs.iter().all(|r| r.mean_abs == 1.0 / 8.0));
        }
    }

    #[test]
    fn projected_draw_conserves_mean_abs() {
        let recs = stability_curve(25, &[0.01, 0.001], 20, &[3], MatrixDraw::Projected).unwrap();
        assert!(recs.iter().all(|r| (r.mean_abs - 0.04).abs() < 1e-14));
    }

    #[test]
    fn signed_draw_has_zero_column_sums() {
        let q = random_stability_matrix(6, MatrixDraw::Signed, &mut seeded(4));
        for j in 0..6 {
            let s: f64 = (0..6).map(|i| q[i * 6 + j]).sum();
            assert!(s.abs() < 1e-15);
        }
        assert!(q.iter().enumerate().any(|(k, &x)| k % 7 != 0 && x < 0.0));
    }

    #[test]
    fn record_layout() {
        let recs = stability_curve(4, &[0.1, 0.01], 3, &[7, 9], MatrixDraw::Signed).unwrap();
        let keys: Vec<(f64, u64, usize)> =
            recs.iter().map(|r| (r.epsilon, r.seed, r.length)).collect();
        assert_eq!(keys[0], (0.1, 7, 1));
        assert_eq!(keys[3], (0.1, 9, 1));
        assert_eq!(keys[6], (0.01, 7, 1));
        assert_eq!(keys[11], (0.01, 9, 3));
        assert!(stability_curve(1, &[0.1], 3, &[1], MatrixDraw::Signed).is_err());
        assert!(stability_curve(4, &[0.1], 0, &[1], MatrixDraw::Signed).is_err());
    }

    #[test]
    fn smaller_epsilon_fluctuates_less() {
        let eps = [0.01, 0.001];
        let recs = stability_curve(10, &eps, 20, &[0, 1, 2], MatrixDraw::Signed).unwrap();
        for seed in 0..3 {
            assert!(fluctuation(&recs, 0.01, seed) > fluctuation(&recs, 0.001, seed));
        }
    }
}
