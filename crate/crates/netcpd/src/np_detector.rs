//! Least-squares block-model graphon estimator and the detector built on it.
//!
//! The estimator minimizes
//!
//! ```text
//! L(Q, z) = sum_{a,b} sum_{(i,j) in z^-1(a) x z^-1(b), i != j} (m_ij - Q_ab)^2
//! ```
//!
//! over block matrices `Q` and label maps `z`.  Globally optimal fitting is
//! NP-hard, so the exhaustive strategy is capped at desk scale and an
//! alternating local search covers the rest.

use crate::detector::{self, DetectionOutcome, DetectorConfig, DetectorError, DirectionEstimator, SplitStreams, Thresholds};
use crate::eigen::{eigh, EigenError};
use crate::graph::AdjacencySnapshot;
use crate::matrix::Matrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Exhaustive search refuses to enumerate more than this many assignments.
pub const EXHAUSTIVE_CAP: f64 = 2e6;

#[derive(Debug, Error)]
pub enum NpError {
    #[error("block count r0 must be at least 1")]
    BadBlockCount,
    #[error("node {node} has label {label}, but r0 = {r0}")]
    LabelOutOfRange { node: usize, label: usize, r0: usize },
    #[error("matrix is {got}x{got}, assignment covers {want} nodes")]
    DimensionMismatch { want: usize, got: usize },
    #[error("exhaustive search needs r0^n <= {cap:.0}, got {states:.3e}")]
    SizeCapExceeded { states: f64, cap: f64 },
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// Map from nodes to block labels `0..r0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockAssignment {
    labels: Vec<usize>,
    r0: usize,
}

impl BlockAssignment {
    pub fn new(labels: Vec<usize>, r0: usize) -> Result<Self, NpError> {
        if r0 == 0 {
            return Err(NpError::BadBlockCount);
        }
        for (node, &label) in labels.iter().enumerate() {
            if label >= r0 {
                return Err(NpError::LabelOutOfRange { node, label, r0 });
            }
        }
        Ok(BlockAssignment { labels, r0 })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn r0(&self) -> usize {
        self.r0
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// A fitted block model: `q` is `r0 x r0` symmetric, `loss` is the value of
/// the objective at `(q, z)`.
#[derive(Clone, Debug)]
pub struct BlockFit {
    pub q: Matrix,
    pub z: BlockAssignment,
    pub loss: f64,
}

impl BlockFit {
    /// The fitted graphon-scale matrix: `theta_ij = q[z_i][z_j]` off the
    /// diagonal, zero on it.
    pub fn theta(&self) -> Matrix {
        let z = self.z.labels();
        Matrix::from_fn(z.len(), |i, j| {
            if i == j {
                0.0
            } else {
                self.q[(z[i], z[j])]
            }
        })
    }
}

/// Objective value `L(q, z)` over ordered off-diagonal pairs.
pub fn block_loss(m: &Matrix, q: &Matrix, z: &BlockAssignment) -> Result<f64, NpError> {
    let n = m.n();
    if z.len() != n {
        return Err(NpError::DimensionMismatch { want: z.len(), got: n });
    }
    if q.n() != z.r0() {
        return Err(NpError::DimensionMismatch {
            want: z.r0(),
            got: q.n(),
        });
    }
    let labels = z.labels();
    let mut loss = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = m[(i, j)] - q[(labels[i], labels[j])];
            loss += d * d;
        }
    }
    Ok(loss)
}

/// For fixed labels the optimal `Q_ab` is the mean of `m` over the block
/// pair's off-diagonal cells (0 for empty cells); returns `(q, loss)`.
fn optimal_q(m: &Matrix, labels: &[usize], r0: usize) -> (Matrix, f64) {
    let n = m.n();
    let mut sums = vec![0.0f64; r0 * r0];
    let mut counts = vec![0usize; r0 * r0];
    let mut sq = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let v = m[(i, j)];
            let cell = labels[i] * r0 + labels[j];
            sums[cell] += v;
            counts[cell] += 1;
            sq += v * v;
        }
    }
    let mut q = Matrix::zeros(r0);
    let mut explained = 0.0;
    for a in 0..r0 {
        for b in 0..r0 {
            let c = counts[a * r0 + b];
            if c > 0 {
                let mean = sums[a * r0 + b] / c as f64;
                q[(a, b)] = mean;
                explained += mean * sums[a * r0 + b];
            }
        }
    }
    (q, sq - explained)
}

/// Search strategy for [`np_fit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NpStrategy {
    Exhaustive,
    Alternating { restarts: usize, max_iters: usize },
}

impl Default for NpStrategy {
    fn default() -> Self {
        NpStrategy::Alternating {
            restarts: 10,
            max_iters: 100,
        }
    }
}

/// Least-squares block-model fit of a symmetric real matrix.
pub fn np_fit(m: &Matrix, r0: usize, strategy: NpStrategy) -> Result<BlockFit, NpError> {
    if r0 == 0 {
        return Err(NpError::BadBlockCount);
    }
    match strategy {
        NpStrategy::Exhaustive => fit_exhaustive(m, r0),
        NpStrategy::Alternating {
            restarts,
            max_iters,
        } => fit_alternating(m, r0, restarts.max(1), max_iters.max(1)),
    }
}

fn fit_exhaustive(m: &Matrix, r0: usize) -> Result<BlockFit, NpError> {
    let n = m.n();
    let states = (r0 as f64).powi(n as i32);
    if states > EXHAUSTIVE_CAP {
        return Err(NpError::SizeCapExceeded {
            states,
            cap: EXHAUSTIVE_CAP,
        });
    }
    let mut labels = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>, Matrix)> = None;
    loop {
        let (q, loss) = optimal_q(m, &labels, r0);
        if best.as_ref().map_or(true, |(bl, _, _)| loss < *bl) {
            best = Some((loss, labels.clone(), q));
        }
        // mixed-radix increment over labels
        let mut pos = 0;
        loop {
            if pos == n {
                let (loss, labels, q) = best.expect("at least one assignment");
                let z = BlockAssignment::new(labels, r0)?;
                return Ok(BlockFit { q, z, loss });
            }
            labels[pos] += 1;
            if labels[pos] < r0 {
                break;
            }
            labels[pos] = 0;
            pos += 1;
        }
    }
}

/// Seed labels from the sign pattern of the top eigenvectors.
fn spectral_seed(m: &Matrix, r0: usize) -> Result<Vec<usize>, NpError> {
    let n = m.n();
    if r0 == 1 {
        return Ok(vec![0; n]);
    }
    let bits = (usize::BITS - (r0 - 1).leading_zeros()) as usize; // ceil(log2 r0)
    let ed = eigh(m)?;
    let mut labels = vec![0usize; n];
    for (i, label) in labels.iter_mut().enumerate() {
        let mut code = 0usize;
        for (b, vec) in ed.vectors.iter().take(bits.min(n)).enumerate() {
            if vec[i] > 0.0 {
                code |= 1 << b;
            }
        }
        *label = code % r0;
    }
    Ok(labels)
}

fn local_search(m: &Matrix, labels: &mut Vec<usize>, r0: usize, max_iters: usize) -> (Matrix, f64) {
    let n = m.n();
    let mut loss = optimal_q(m, labels, r0).1;
    for _ in 0..max_iters {
        let mut improved = false;
        for node in 0..n {
            let original = labels[node];
            let mut best_label = original;
            let mut best_loss = loss;
            for cand in 0..r0 {
                if cand == original {
                    continue;
                }
                labels[node] = cand;
                let (_, cand_loss) = optimal_q(m, labels, r0);
                if cand_loss < best_loss - 1e-12 {
                    best_loss = cand_loss;
                    best_label = cand;
                }
            }
            labels[node] = best_label;
            if best_label != original {
                loss = best_loss;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    optimal_q(m, labels, r0)
}

fn fit_alternating(
    m: &Matrix,
    r0: usize,
    restarts: usize,
    max_iters: usize,
) -> Result<BlockFit, NpError> {
    let n = m.n();
    let mut best: Option<(f64, Vec<usize>, Matrix)> = None;
    for restart in 0..restarts {
        let mut labels = if restart == 0 {
            spectral_seed(m, r0)?
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(restart as u64);
            (0..n).map(|_| rng.gen_range(0..r0)).collect()
        };
        let (q, loss) = local_search(m, &mut labels, r0, max_iters);
        // strict `<` keeps the lowest restart index on ties
        if best.as_ref().map_or(true, |(bl, _, _)| loss < *bl) {
            best = Some((loss, labels, q));
        }
    }
    let (loss, labels, q) = best.expect("restarts >= 1");
    let z = BlockAssignment::new(labels, r0)?;
    Ok(BlockFit { q, z, loss })
}

/// Block-model direction estimator for the grid scan: the
/// CUSUM matrix is fitted directly, real entries and all.
#[derive(Clone, Copy, Debug)]
pub struct NpEstimator {
    pub r0: usize,
    pub strategy: NpStrategy,
}

impl DirectionEstimator for NpEstimator {
    fn estimate(&self, b_hat: &Matrix, _thr: &Thresholds) -> Result<Matrix, DetectorError> {
        Ok(np_fit(b_hat, self.r0, self.strategy)?.theta())
    }
}

/// [`detector::step`] with the block-model estimator.
pub fn np_step(
    streams: &mut SplitStreams,
    cfg: &DetectorConfig,
    estimator: &NpEstimator,
    a_new: &AdjacencySnapshot,
    b_new: Option<&AdjacencySnapshot>,
) -> Result<DetectionOutcome, DetectorError> {
    detector::step_with(streams, cfg, estimator, a_new, b_new)
}

/// [`detector::run`] with the block-model estimator.
pub fn np_run<I>(
    source: I,
    cfg: &DetectorConfig,
    estimator: &NpEstimator,
) -> Result<DetectionOutcome, DetectorError>
where
    I: IntoIterator<Item = AdjacencySnapshot>,
{
    detector::run_with(source, cfg, estimator)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_symmetric(n: usize, rng: &mut impl Rng) -> Matrix {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..i {
                let v: f64 = rng.gen_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    fn two_block(n: usize, within: f64, between: f64) -> Matrix {
        Matrix::from_fn(n, |i, j| {
            if i == j {
                0.0
            } else if (i < n / 2) == (j < n / 2) {
                within
            } else {
                between
            }
        })
    }

    #[test]
    fn loss_zero_on_exact_blocks() {
        let m = two_block(6, 0.8, 0.1);
        let z = BlockAssignment::new(vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        let q = Matrix::from_rows(&[vec![0.8, 0.1], vec![0.1, 0.8]]);
        assert!(block_loss(&m, &q, &z).unwrap() < 1e-24);
    }

    #[test]
    fn loss_with_zero_q_is_sum_of_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_symmetric(5, &mut rng);
        let z = BlockAssignment::new(vec![0, 1, 0, 1, 1], 2).unwrap();
        let q = Matrix::zeros(2);
        let mut want = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    want += m[(i, j)] * m[(i, j)];
                }
            }
        }
        assert!((block_loss(&m, &q, &z).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn assignment_rejects_bad_label() {
        assert!(matches!(
            BlockAssignment::new(vec![0, 2], 2),
            Err(NpError::LabelOutOfRange { node: 1, label: 2, r0: 2 })
        ));
    }

    #[test]
    fn single_block_fit_is_offdiagonal_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = random_symmetric(6, &mut rng);
        let fit = np_fit(&m, 1, NpStrategy::Exhaustive).unwrap();
        let mut sum = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    sum += m[(i, j)];
                }
            }
        }
        assert!((fit.q[(0, 0)] - sum / 30.0).abs() < 1e-12);
        let theta = fit.theta();
        assert_eq!(theta[(2, 2)], 0.0);
        assert!((theta[(0, 1)] - fit.q[(0, 0)]).abs() < 1e-15);
    }

    #[test]
    fn exhaustive_recovers_exact_two_block() {
        let m = two_block(6, 0.9, 0.2);
        let fit = np_fit(&m, 2, NpStrategy::Exhaustive).unwrap();
        assert!(fit.loss < 1e-20);
        assert!(fit.theta().max_abs_diff(&m) < 1e-12);
    }

    #[test]
    fn fit_loss_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let m = random_symmetric(6, &mut rng);
            let fit = np_fit(&m, 2, NpStrategy::Exhaustive).unwrap();
            let direct = block_loss(&m, &fit.q, &fit.z).unwrap();
            assert!((fit.loss - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn exhaustive_never_worse_than_alternating() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let m = random_symmetric(7, &mut rng);
            let ex = np_fit(&m, 2, NpStrategy::Exhaustive).unwrap();
            let alt = np_fit(&m, 2, NpStrategy::default()).unwrap();
            assert!(ex.loss <= alt.loss + 1e-10);
        }
    }

    #[test]
    fn r0_equal_n_gives_zero_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_symmetric(5, &mut rng);
        let fit = np_fit(&m, 5, NpStrategy::Exhaustive).unwrap();
        assert!(fit.loss < 1e-20);
    }

    #[test]
    fn size_cap_enforced() {
        let m = Matrix::zeros(30);
        assert!(matches!(
            np_fit(&m, 3, NpStrategy::Exhaustive),
            Err(NpError::SizeCapExceeded { .. })
        ));
    }

    #[test]
    fn label_permutation_leaves_theta_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let m = random_symmetric(6, &mut rng);
        let fit = np_fit(&m, 2, NpStrategy::Exhaustive).unwrap();
        // swap labels 0 <-> 1 and the corresponding q rows/columns
        let swapped: Vec<usize> = fit.z.labels().iter().map(|&l| 1 - l).collect();
        let zq = BlockAssignment::new(swapped, 2).unwrap();
        let q2 = Matrix::from_fn(2, |a, b| fit.q[(1 - a, 1 - b)]);
        let fit2 = BlockFit {
            q: q2,
            z: zq,
            loss: fit.loss,
        };
        assert!(fit.theta().max_abs_diff(&fit2.theta()) < 1e-15);
        assert!((block_loss(&m, &fit2.q, &fit2.z).unwrap() - fit.loss).abs() < 1e-10);
    }

    #[test]
    fn perturbing_optimal_q_never_helps() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_symmetric(6, &mut rng);
        let fit = np_fit(&m, 2, NpStrategy::Exhaustive).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                for delta in [-0.01, 0.01] {
                    let mut q = fit.q.clone();
                    q[(a, b)] += delta;
                    q[(b, a)] = q[(a, b)];
                    let loss = block_loss(&m, &q, &fit.z).unwrap();
                    assert!(loss >= fit.loss - 1e-12);
                }
            }
        }
    }
}
