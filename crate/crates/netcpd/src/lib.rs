//! Online change-point detection for streams of network snapshots.
//!
//! The detector watches a sequence of adjacency matrices, maintains CUSUM
//! statistics over a geometric grid of candidate change locations, denoises
//! them (spectral thresholding, or a least-squares block-model fit), and
//! raises an alarm when a two-part criterion — a Frobenius-norm gate plus a
//! normalized inner-product score on an independent split of the stream —
//! is met.  Supporting modules provide scenario generators, Monte Carlo
//! threshold calibration, and an experiment harness.

pub mod calibration;
pub mod cusum;
pub mod detector;
pub mod eigen;
pub mod generators;
pub mod graph;
pub mod harness;
pub mod io;
pub mod matrix;
pub mod np_detector;
pub mod scenario;
pub mod usvt;

pub use cusum::{geometric_grid, CusumMatrix, CusumState};
pub use detector::{
    run, run_multi, step, DetectionOutcome, DetectorConfig, Mode, SplitStreams, TauRule,
};
pub use graph::{AdjacencySnapshot, GraphonMatrix};
pub use matrix::Matrix;
pub use scenario::{expected_cusum, jump_size, ChangeScenario};
pub use usvt::{usvt, UsvtParams};
