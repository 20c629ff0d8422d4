//! Network snapshot and graphon matrix types.

use crate::matrix::Matrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("entry ({0},{1}) breaks symmetry")]
    NotSymmetric(usize, usize),
    #[error("entry ({0},{1}) = {2} is not binary")]
    NotBinary(usize, usize, f64),
    #[error("diagonal entry ({0},{0}) must be zero")]
    NonzeroDiagonal(usize),
    #[error("entry ({0},{1}) = {2} outside [0,1]")]
    OutOfRange(usize, usize, f64),
    #[error("time index must be positive")]
    BadTimeIndex,
}

/// One observed network: a symmetric binary adjacency matrix with zero
/// diagonal, tagged with its position in the stream (1-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjacencySnapshot {
    n: usize,
    time_index: u32,
    entries: Vec<u8>,
}

impl AdjacencySnapshot {
    pub fn new(n: usize, time_index: u32, entries: Vec<u8>) -> Result<Self, GraphError> {
        if time_index == 0 {
            return Err(GraphError::BadTimeIndex);
        }
        assert_eq!(entries.len(), n * n, "entry buffer has wrong length");
        for i in 0..n {
            if entries[i * n + i] != 0 {
                return Err(GraphError::NonzeroDiagonal(i));
            }
            for j in 0..n {
                let v = entries[i * n + j];
                if v > 1 {
                    return Err(GraphError::NotBinary(i, j, v as f64));
                }
                if entries[i * n + j] != entries[j * n + i] {
                    return Err(GraphError::NotSymmetric(i, j));
                }
            }
        }
        Ok(AdjacencySnapshot {
            n,
            time_index,
            entries,
        })
    }

    /// Build from the upper triangle only; the rest is mirrored and the
    /// diagonal forced to zero.
    pub fn from_upper(n: usize, time_index: u32, mut edge: impl FnMut(usize, usize) -> bool) -> Self {
        let mut entries = vec![0u8; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                if edge(i, j) {
                    entries[i * n + j] = 1;
                    entries[j * n + i] = 1;
                }
            }
        }
        AdjacencySnapshot {
            n,
            time_index,
            entries,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn time_index(&self) -> u32 {
        self.time_index
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> u8 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    pub fn with_time_index(&self, time_index: u32) -> Self {
        AdjacencySnapshot {
            n: self.n,
            time_index,
            entries: self.entries.clone(),
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        let n = self.n;
        Matrix::from_fn(n, |i, j| self.entries[i * n + j] as f64)
    }
}

/// Entrywise Bernoulli mean matrix of an inhomogeneous Bernoulli network.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphonMatrix {
    inner: Matrix,
}

impl GraphonMatrix {
    pub fn new(inner: Matrix) -> Result<Self, GraphError> {
        let n = inner.n();
        for i in 0..n {
            for j in 0..n {
                let v = inner[(i, j)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(GraphError::OutOfRange(i, j, v));
                }
            }
        }
        if !inner.is_symmetric(1e-12) {
            // report the first offending pair
            for i in 0..n {
                for j in (i + 1)..n {
                    if (inner[(i, j)] - inner[(j, i)]).abs() > 1e-12 {
                        return Err(GraphError::NotSymmetric(i, j));
                    }
                }
            }
        }
        Ok(GraphonMatrix { inner })
    }

    pub fn n(&self) -> usize {
        self.inner.n()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.inner
    }

    pub fn max_entry(&self) -> f64 {
        self.inner.max_abs()
    }
}
