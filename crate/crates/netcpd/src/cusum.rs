//! Streaming prefix-sum store and CUSUM statistics.
//!
//! For a stream `A(1), A(2), ...` the CUSUM matrix at a split `s < t` is
//!
//! ```text
//! sqrt((t-s)/(s t)) * sum_{l<=s} A(l)  -  sqrt(s/((t-s) t)) * sum_{s<l<=t} A(l)
//! ```
//!
//! Keeping cumulative sums `S(u) = sum_{l<=u} A(l)` makes any `(s, t)`
//! evaluation an O(n^2) combination of two stored matrices.

use crate::graph::AdjacencySnapshot;
use crate::matrix::Matrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CusumError {
    #[error("snapshot has {got} nodes, state expects {want}")]
    DimensionMismatch { want: usize, got: usize },
    #[error("snapshot time index {got} out of order, expected {want}")]
    OutOfOrder { want: u32, got: u32 },
    #[error("invalid split indices: need 1 <= s < t <= {len}, got s={s}, t={t}")]
    BadSplit { s: usize, t: usize, len: usize },
    #[error("geometric grid needs t >= 2, got {0}")]
    GridTooEarly(usize),
    #[error("prefix {0} was pruned from the ring buffer")]
    Pruned(usize),
}

/// Rolling prefix sums of a snapshot stream.
///
/// By default every cumulative matrix is retained.  The opt-in ring-buffer
/// mode drops prefixes the geometric grid can no longer reach (indices
/// below `floor(t/2)`), capping memory at O(t/2) matrices at any time; all
/// grid points of every future `t` stay available.
#[derive(Clone, Debug)]
pub struct CusumState {
    n: usize,
    t: usize,
    prefixes: Vec<Matrix>,
    base: usize,
    ring: bool,
}

impl CusumState {
    pub fn new(n: usize) -> Self {
        CusumState {
            n,
            t: 0,
            prefixes: vec![Matrix::zeros(n)],
            base: 0,
            ring: false,
        }
    }

    pub fn with_ring_buffer(n: usize) -> Self {
        CusumState {
            ring: true,
            ..CusumState::new(n)
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Current stream length.
    #[inline]
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn prefix(&self, u: usize) -> Result<&Matrix, CusumError> {
        if u < self.base {
            return Err(CusumError::Pruned(u));
        }
        Ok(&self.prefixes[u - self.base])
    }

    pub fn append(&mut self, a: &AdjacencySnapshot) -> Result<(), CusumError> {
        if a.n() != self.n {
            return Err(CusumError::DimensionMismatch {
                want: self.n,
                got: a.n(),
            });
        }
        let expected = self.t as u32 + 1;
        if a.time_index() != expected {
            return Err(CusumError::OutOfOrder {
                want: expected,
                got: a.time_index(),
            });
        }
        let mut next = self.prefixes.last().expect("nonempty").clone();
        {
            let data = next.data_mut();
            for (d, &e) in data.iter_mut().zip(a.entries()) {
                *d += e as f64;
            }
        }
        self.prefixes.push(next);
        self.t += 1;
        if self.ring {
            let keep_from = self.t / 2;
            while self.base < keep_from {
                self.prefixes.remove(0);
                self.base += 1;
            }
        }
        Ok(())
    }

    /// CUSUM matrix at split `s`, endpoint `t`.
    pub fn cusum(&self, s: usize, t: usize) -> Result<CusumMatrix, CusumError> {
        if s < 1 || s >= t || t > self.t {
            return Err(CusumError::BadSplit { s, t, len: self.t });
        }
        let (st, tt) = (s as f64, t as f64);
        let c_pre = ((tt - st) / (st * tt)).sqrt();
        let c_post = (st / ((tt - st) * tt)).sqrt();
        let ps = self.prefix(s)?;
        let pt = self.prefix(t)?;
        let n = self.n;
        let mut entries = Matrix::zeros(n);
        {
            let out = entries.data_mut();
            let psd = ps.data();
            let ptd = pt.data();
            for k in 0..n * n {
                // c_pre*S(s) - c_post*(S(t) - S(s))
                out[k] = (c_pre + c_post) * psd[k] - c_post * ptd[k];
            }
        }
        Ok(CusumMatrix { s, t, entries })
    }
}

/// A CUSUM statistic matrix together with the `(s, t)` pair it came from.
#[derive(Clone, Debug)]
pub struct CusumMatrix {
    pub s: usize,
    pub t: usize,
    pub entries: Matrix,
}

/// Geometric candidate grid `{t - 2^j : j = 0, ..., floor(log2 t) - 1}`,
/// strictly decreasing.
pub fn geometric_grid(t: usize) -> Result<Vec<usize>, CusumError> {
    if t < 2 {
        return Err(CusumError::GridTooEarly(t));
    }
    let j_max = (usize::BITS - 1 - t.leading_zeros()) as usize; // floor(log2 t)
    Ok((0..j_max).map(|j| t - (1usize << j)).collect())
}
