//! Dense tensors of rank 0..=4 with index-variance bookkeeping.

use super::scalar::Scalar;
use crate::{Error, Result};

/// Position of a tensor slot: upper (contravariant) or lower (covariant).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variance {
    Upper,
    Lower,
}

/// Dense tensor over a single dimension, row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<S = f64> {
    dim: usize,
    variance: Vec<Variance>,
    data: Vec<S>,
}

const MAX_RANK: usize = 4;

fn count(dim: usize, rank: usize) -> usize {
    dim.pow(rank as u32)
}

impl<S: Scalar> Tensor<S> {
    /// All-zero tensor with the given slot variances.
    pub fn zeros(dim: usize, variance: &[Variance]) -> Self {
        assert!(dim > 0, "tensor dimension must be positive");
        assert!(variance.len() <= MAX_RANK, "tensor rank is capped at {MAX_RANK}");
        Tensor {
            dim,
            variance: variance.to_vec(),
            data: vec![S::zero(); count(dim, variance.len())],
        }
    }

    /// Rank-0 tensor holding one scalar.
    pub fn scalar(dim: usize, v: S) -> Self {
        let mut t = Tensor::zeros(dim, &[]);
        t.data[0] = v;
        t
    }

    /// Wraps row-major data; the length must match `dim^rank`.
    pub fn from_vec(dim: usize, variance: &[Variance], data: Vec<S>) -> Self {
        assert!(variance.len() <= MAX_RANK, "tensor rank is capped at {MAX_RANK}");
        assert_eq!(data.len(), count(dim, variance.len()), "tensor data length mismatch");
        Tensor { dim, variance: variance.to_vec(), data }
    }

    /// Builds entry-by-entry from `f(index)`.
    pub fn from_fn(dim: usize, variance: &[Variance], mut f: impl FnMut(&[usize]) -> S) -> Self {
        let mut t = Tensor::zeros(dim, variance);
        let rank = variance.len();
        let mut idx = vec![0usize; rank];
        for off in 0..t.data.len() {
            t.data[off] = f(&idx);
            for slot in (0..rank).rev() {
                idx[slot] += 1;
                if idx[slot] < dim {
                    break;
                }
                idx[slot] = 0;
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn variance(&self) -> &[Variance] {
        &self.variance
    }

    fn offset(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.rank(), "tensor index rank mismatch");
        idx.iter().fold(0, |acc, &i| {
            assert!(i < self.dim, "tensor index out of range");
            acc * self.dim + i
        })
    }

    pub fn at(&self, idx: &[usize]) -> &S {
        &self.data[self.offset(idx)]
    }

    /// Cloned entry.
    pub fn get(&self, idx: &[usize]) -> S {
        self.at(idx).clone()
    }

    pub fn set(&mut self, idx: &[usize], v: S) {
        let off = self.offset(idx);
        self.data[off] = v;
    }

    /// Flat view of the entries, row-major.
    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    /// Entry-wise map onto a tensor of the same layout.
    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Tensor<T> {
        Tensor {
            dim: self.dim,
            variance: self.variance.clone(),
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Entry-wise difference; layouts must match.
    pub fn sub(&self, rhs: &Tensor<S>) -> Tensor<S> {
        assert_eq!(self.dim, rhs.dim, "tensor dimension mismatch");
        assert_eq!(self.variance, rhs.variance, "tensor variance mismatch");
        Tensor {
            dim: self.dim,
            variance: self.variance.clone(),
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        }
    }

    /// Contracts slot `up` (upper) against slot `lo` (lower).
    pub fn contract(&self, up: usize, lo: usize) -> Result<Tensor<S>> {
        let rank = self.rank();
        if up >= rank || lo >= rank || up == lo {
            return Err(Error::contract("contraction slots out of range"));
        }
        if self.variance[up] != Variance::Upper || self.variance[lo] != Variance::Lower {
            return Err(Error::contract("contraction needs one upper and one lower slot"));
        }
        let keep: Vec<usize> = (0..rank).filter(|&s| s != up && s != lo).collect();
        let variance: Vec<Variance> = keep.iter().map(|&s| self.variance[s]).collect();
        let dim = self.dim;
        let out = Tensor::from_fn(dim, &variance, |idx| {
            let mut full = vec![0usize; rank];
            for (slot, &src) in keep.iter().enumerate() {
                full[src] = idx[slot];
            }
            let mut acc = S::zero();
            for m in 0..dim {
                full[up] = m;
                full[lo] = m;
                acc += self.get(&full);
            }
            acc
        });
        Ok(out)
    }

    /// Raises lower slot `slot` with the inverse metric `g^{ij}`.
    pub fn raise_index(&self, slot: usize, inv_metric: &Tensor<S>) -> Result<Tensor<S>> {
        if slot >= self.rank() || self.variance[slot] != Variance::Lower {
            return Err(Error::contract("raise_index needs an existing lower slot"));
        }
        self.convert_slot(slot, inv_metric, Variance::Upper)
    }

    /// Lowers upper slot `slot` with the metric `g_{ij}`.
    pub fn lower_index(&self, slot: usize, metric: &Tensor<S>) -> Result<Tensor<S>> {
        if slot >= self.rank() || self.variance[slot] != Variance::Upper {
            return Err(Error::contract("lower_index needs an existing upper slot"));
        }
        self.convert_slot(slot, metric, Variance::Lower)
    }

    fn convert_slot(&self, slot: usize, g: &Tensor<S>, to: Variance) -> Result<Tensor<S>> {
        if g.rank() != 2 || g.dim != self.dim {
            return Err(Error::contract("metric must be rank 2 over the same dimension"));
        }
        let mut variance = self.variance.clone();
        variance[slot] = to;
        let dim = self.dim;
        Ok(Tensor::from_fn(dim, &variance, |idx| {
            let mut src = idx.to_vec();
            let mut acc = S::zero();
            for m in 0..dim {
                src[slot] = m;
                acc += g.get(&[idx[slot], m]).mul_ref(self.at(&src));
            }
            acc
        }))
    }
}

impl Tensor<f64> {
    /// Square root of the sum of squared entries.
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Symmetric part of a rank-2 tensor.
pub fn symmetrize<S: Scalar>(t: &Tensor<S>) -> Result<Tensor<S>> {
    if t.rank() != 2 {
        return Err(Error::contract("symmetrize takes a rank-2 tensor"));
    }
    Ok(Tensor::from_fn(t.dim(), t.variance(), |idx| {
        (t.get(&[idx[0], idx[1]]) + t.get(&[idx[1], idx[0]])).scale(0.5)
    }))
}

/// Antisymmetric part of a rank-2 tensor.
pub fn antisymmetrize<S: Scalar>(t: &Tensor<S>) -> Result<Tensor<S>> {
    if t.rank() != 2 {
        return Err(Error::contract("antisymmetrize takes a rank-2 tensor"));
    }
    Ok(Tensor::from_fn(t.dim(), t.variance(), |idx| {
        (t.get(&[idx[0], idx[1]]) - t.get(&[idx[1], idx[0]])).scale(0.5)
    }))
}
