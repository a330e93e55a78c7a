//! Dense square matrices and the slice kernels shared by every composition.
//!
//! Storage is row-major: entry `(i, j)` lives at `data[i * dim + j]`.
//! Matrices act on column vectors from the left.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Matrix { dim, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        matvec(&self.data, self.dim, x, &mut out);
        out
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        let mut out = vec![0.0; self.dim * self.dim];
        matmul(&self.data, &rhs.data, self.dim, &mut out);
        Matrix {
            dim: self.dim,
            data: out,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// `out = Q x`.
#[inline]
pub fn matvec(q: &[f64], dim: usize, x: &[f64], out: &mut [f64]) {
    for (row, o) in q.chunks_exact(dim).zip(out.iter_mut()) {
        *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

/// `out = Qᵀ x`.
#[inline]
pub fn matvec_t(q: &[f64], dim: usize, x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (row, &xi) in q.chunks_exact(dim).zip(x) {
        for (o, &a) in out.iter_mut().zip(row) {
            *o += a * xi;
        }
    }
}

/// `out = A B` for row-major square matrices.
pub fn matmul(a: &[f64], b: &[f64], dim: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i * dim + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b[k * dim..(k + 1) * dim];
            let orow = &mut out[i * dim..(i + 1) * dim];
            for (o, &bkj) in orow.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
}

/// `grad += scale · x yᵀ`.
#[inline]
pub fn add_outer(grad: &mut [f64], dim: usize, scale: f64, x: &[f64], y: &[f64]) {
    for (row, &xi) in grad.chunks_exact_mut(dim).zip(x) {
        let s = scale * xi;
        for (g, &yj) in row.iter_mut().zip(y) {
            *g += s * yj;
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
