//! Online change point detectors.
//!
//! The stream of raw snapshots is split into odd (`A`) and even (`B`)
//! subsequences.  At every advance of the `B` stream the geometric grid is
//! scanned; a grid point `s` fires when both
//!
//! ```text
//! ||B~_{s,t}||_F > gate      and      (A^_{s,t}, B~_{s,t}/||B~_{s,t}||_F) > b_t
//! ```
//!
//! where `B~` is the denoised CUSUM matrix of the `B` stream (USVT here,
//! block-model least squares in [`crate::np_detector`]).

use crate::cusum::{geometric_grid, CusumError, CusumState};
use crate::eigen::EigenError;
use crate::graph::AdjacencySnapshot;
use crate::matrix::Matrix;
use crate::usvt::{usvt, UsvtParams};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error(transparent)]
    Cusum(#[from] CusumError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("snapshot has {got} nodes, detector expects {want}")]
    DimensionMismatch { want: usize, got: usize },
    #[error("empty snapshot source")]
    EmptySource,
    #[error(transparent)]
    Np(#[from] crate::np_detector::NpError),
}

/// Threshold formulas fail when a log argument drops to 1 or below; the
/// scan skips such grid points.
#[derive(Debug, Error)]
#[error("log argument {0:.4} <= 1 in threshold formula at (s={1}, u={2})")]
pub struct ThresholdError(pub f64, pub usize, pub usize);

/// Type-I error control regime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mode {
    /// Overall false alarm probability bounded by `alpha`.
    AlphaControl { alpha: f64 },
    /// Average run length under the null at least `gamma`.
    ArlControl { gamma: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauRule {
    /// The constants from the theory (`C` is reused for both the gate and
    /// the `tau1` concentration term; the two are never pinned separately).
    Theoretical,
    /// The simulation-section constants 0.2 and 1/15.
    Practical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub mode: Mode,
    /// Gate constant `C` (also the `tau1` leading constant under the
    /// theoretical rule; never pinned numerically by the theory).
    pub c_gate: f64,
    /// Score threshold constant `C1` in `b_u`.
    pub c1: f64,
    /// Sparsity (estimate) used inside the threshold formulas.
    pub rho_hat: f64,
    pub tau_rule: TauRule,
    /// Score with `|.|` (the proofs' variant) instead of the signed inner
    /// product of the pseudocode.
    #[serde(default)]
    pub use_absolute_inner_product: bool,
    /// Optional raw-stream horizon.
    #[serde(default)]
    pub max_time: Option<usize>,
}

impl DetectorConfig {
    pub fn validate(&self) {
        match self.mode {
            Mode::AlphaControl { alpha } => {
                assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)")
            }
            Mode::ArlControl { gamma } => assert!(gamma >= 2, "gamma must be >= 2"),
        }
        assert!(self.c_gate > 0.0, "c_gate must be positive");
        assert!(self.c1 > 0.0, "c1 must be positive");
        assert!(
            (0.0..=1.0).contains(&self.rho_hat),
            "rho_hat must lie in [0,1]"
        );
    }
}

/// All four tuning quantities at a grid point `(s, u)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub b_u: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub gate: f64,
}

fn checked_ln(arg: f64, s: usize, u: usize) -> Result<f64, ThresholdError> {
    if arg <= 1.0 {
        return Err(ThresholdError(arg, s, u));
    }
    Ok(arg.ln())
}

/// Threshold formulas as functions of mode and rule.
pub fn thresholds(
    cfg: &DetectorConfig,
    s: usize,
    u: usize,
    n: usize,
) -> Result<Thresholds, ThresholdError> {
    assert!(u >= 2 && s >= 1 && s < u, "need 2 <= u and 1 <= s < u");
    let rho = cfg.rho_hat;
    let (sf, uf, nf) = (s as f64, u as f64, n as f64);
    let tau2 = ((uf - sf) * sf / uf).sqrt() * rho;
    let ln2 = std::f64::consts::LN_2;
    match cfg.mode {
        Mode::AlphaControl { alpha } => {
            let log_u_alpha = checked_ln(uf / alpha, s, u)?;
            let b_u = cfg.c1 * (rho * log_u_alpha).sqrt();
            let gate = cfg.c_gate * log_u_alpha.sqrt();
            let tau1 = match cfg.tau_rule {
                TauRule::Theoretical => {
                    let arg = uf * (uf + 1.0) * uf.ln() / (alpha * ln2);
                    cfg.c_gate * (nf * rho).sqrt() + (2.0 * checked_ln(arg, s, u)?).sqrt()
                }
                TauRule::Practical => {
                    let d = uf - sf;
                    let arg = 2.0 * d * (d + 1.0) / alpha;
                    0.2 * (nf * rho).sqrt() + (2.0 * checked_ln(arg, s, u)?).sqrt() / 15.0
                }
            };
            Ok(Thresholds {
                b_u,
                tau1,
                tau2,
                gate,
            })
        }
        Mode::ArlControl { gamma } => {
            let gf = gamma as f64;
            let log_gamma = checked_ln(gf, s, u)?;
            let b_u = cfg.c1 * (rho * log_gamma).sqrt();
            let gate = cfg.c_gate * log_gamma.sqrt();
            let tau1 = match cfg.tau_rule {
                TauRule::Theoretical => {
                    let arg = 2.0 * (gf + 1.0) * gf * (gf + 1.0).ln() / ln2;
                    cfg.c_gate * (nf * rho).sqrt() + (2.0 * checked_ln(arg, s, u)?).sqrt()
                }
                TauRule::Practical => {
                    let arg = 2.0 * gf + 2.0;
                    0.2 * (nf * rho).sqrt() + (2.0 * checked_ln(arg, s, u)?).sqrt() / 15.0
                }
            };
            Ok(Thresholds {
                b_u,
                tau1,
                tau2,
                gate,
            })
        }
    }
}

/// Denoiser plugged into the grid scan: USVT for the polynomial-time
/// detector, least-squares block fitting for the NP variant.
pub trait DirectionEstimator {
    fn estimate(&self, b_hat: &Matrix, thr: &Thresholds) -> Result<Matrix, DetectorError>;

    /// Cheap upper bound on the Frobenius norm of `estimate`'s output, if
    /// one exists; lets the scan skip grid points that cannot pass the gate.
    fn norm_upper_bound(&self, b_hat: &Matrix, thr: &Thresholds) -> Option<f64> {
        let _ = (b_hat, thr);
        None
    }
}

/// USVT direction estimator.
#[derive(Clone, Copy, Debug, Default)]
pub struct UsvtEstimator;

impl DirectionEstimator for UsvtEstimator {
    fn estimate(&self, b_hat: &Matrix, thr: &Thresholds) -> Result<Matrix, DetectorError> {
        Ok(usvt(b_hat, UsvtParams::new(thr.tau1, thr.tau2))?)
    }

    fn norm_upper_bound(&self, b_hat: &Matrix, thr: &Thresholds) -> Option<f64> {
        // every output entry is clipped to [-tau2, tau2], and spectral
        // truncation cannot grow the Frobenius norm
        let clip_bound = if thr.tau2.is_finite() {
            b_hat.n() as f64 * thr.tau2
        } else {
            f64::INFINITY
        };
        Some(clip_bound.min(b_hat.frobenius_norm()))
    }
}

/// Everything the scan learned about one grid point.
#[derive(Clone, Copy, Debug)]
pub struct GridEval {
    pub s: usize,
    pub t: usize,
    pub gate_threshold: f64,
    /// `||B~||_F`, or its upper bound when the point was skipped.
    pub gate_value: f64,
    pub gate_passed: bool,
    /// Inner product score; 0 when the gate failed or the point was skipped.
    pub score: f64,
    pub b_u: f64,
    pub fired: bool,
    pub skipped: bool,
}

/// Odd/even split of the raw stream.
#[derive(Clone, Debug)]
pub struct SplitStreams {
    a_state: CusumState,
    b_state: CusumState,
    raw_t: usize,
}

impl SplitStreams {
    pub fn new(n: usize) -> Self {
        SplitStreams {
            a_state: CusumState::new(n),
            b_state: CusumState::new(n),
            raw_t: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.a_state.n()
    }

    pub fn raw_t(&self) -> usize {
        self.raw_t
    }

    pub fn a_state(&self) -> &CusumState {
        &self.a_state
    }

    pub fn b_state(&self) -> &CusumState {
        &self.b_state
    }

    pub(crate) fn push_a(&mut self, snap: &AdjacencySnapshot) -> Result<(), DetectorError> {
        let reindexed = snap.with_time_index(self.a_state.t() as u32 + 1);
        self.a_state.append(&reindexed)?;
        self.raw_t += 1;
        Ok(())
    }

    pub(crate) fn push_b(&mut self, snap: &AdjacencySnapshot) -> Result<(), DetectorError> {
        let reindexed = snap.with_time_index(self.b_state.t() as u32 + 1);
        self.b_state.append(&reindexed)?;
        self.raw_t += 1;
        Ok(())
    }
}

/// Detector verdict plus diagnostics from the last grid point examined.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetectionOutcome {
    pub fired: bool,
    pub t_split: Option<usize>,
    pub t_raw: Option<usize>,
    pub s_hit: Option<usize>,
    pub gate_value: f64,
    pub score: f64,
    pub threshold_used: f64,
}

impl DetectionOutcome {
    fn not_fired() -> Self {
        DetectionOutcome {
            fired: false,
            t_split: None,
            t_raw: None,
            s_hit: None,
            gate_value: 0.0,
            score: 0.0,
            threshold_used: 0.0,
        }
    }
}

/// Evaluate every grid point at the current `B`-stream length.
///
/// With `early_stop` the scan returns at the first firing grid point
/// (the algorithms' behaviour); without it all grid points are evaluated,
/// which the calibration machinery relies on.
pub fn evaluate_grid(
    streams: &SplitStreams,
    cfg: &DetectorConfig,
    estimator: &dyn DirectionEstimator,
    early_stop: bool,
) -> Result<Vec<GridEval>, DetectorError> {
    let t = streams.b_state.t();
    let n = streams.n();
    let mut evals = Vec::new();
    if t < 2 {
        return Ok(evals);
    }
    for s in geometric_grid(t)? {
        let thr = match thresholds(cfg, s, t, n) {
            Ok(thr) => thr,
            Err(_) => continue, // formula undefined here; skip the grid point
        };
        let b_hat = streams.b_state.cusum(s, t)?;
        if let Some(bound) = estimator.norm_upper_bound(&b_hat.entries, &thr) {
            if bound <= thr.gate {
                evals.push(GridEval {
                    s,
                    t,
                    gate_threshold: thr.gate,
                    gate_value: bound,
                    gate_passed: false,
                    score: 0.0,
                    b_u: thr.b_u,
                    fired: false,
                    skipped: true,
                });
                continue;
            }
        }
        let b_tilde = estimator.estimate(&b_hat.entries, &thr)?;
        let gate_value = b_tilde.frobenius_norm();
        let gate_passed = gate_value > thr.gate;
        let mut score = 0.0;
        let mut fired = false;
        if gate_passed {
            // gate_value > 0 here, so the normalization is safe
            let a_hat = streams.a_state.cusum(s, t)?;
            let raw = a_hat.entries.inner(&b_tilde) / gate_value;
            score = if cfg.use_absolute_inner_product {
                raw.abs()
            } else {
                raw
            };
            fired = score > thr.b_u;
        }
        evals.push(GridEval {
            s,
            t,
            gate_threshold: thr.gate,
            gate_value,
            gate_passed,
            score,
            b_u: thr.b_u,
            fired,
            skipped: false,
        });
        if fired && early_stop {
            break;
        }
    }
    Ok(evals)
}

fn outcome_from_evals(evals: &[GridEval]) -> DetectionOutcome {
    let last = match evals.last() {
        Some(e) => e,
        None => return DetectionOutcome::not_fired(),
    };
    if last.fired {
        DetectionOutcome {
            fired: true,
            t_split: Some(last.t),
            t_raw: Some(2 * last.t),
            s_hit: Some(last.s),
            gate_value: last.gate_value,
            score: last.score,
            threshold_used: last.b_u,
        }
    } else {
        DetectionOutcome {
            fired: false,
            t_split: None,
            t_raw: None,
            s_hit: None,
            gate_value: last.gate_value,
            score: last.score,
            threshold_used: last.b_u,
        }
    }
}

/// Feed one raw pair into the split streams and scan.  When `b_new` is
/// absent (odd raw length) only the `A` stream advances and no scan runs:
/// both criteria need a fresh `B` CUSUM.
pub fn step(
    streams: &mut SplitStreams,
    cfg: &DetectorConfig,
    a_new: &AdjacencySnapshot,
    b_new: Option<&AdjacencySnapshot>,
) -> Result<DetectionOutcome, DetectorError> {
    step_with(streams, cfg, &UsvtEstimator, a_new, b_new)
}

pub fn step_with(
    streams: &mut SplitStreams,
    cfg: &DetectorConfig,
    estimator: &dyn DirectionEstimator,
    a_new: &AdjacencySnapshot,
    b_new: Option<&AdjacencySnapshot>,
) -> Result<DetectionOutcome, DetectorError> {
    if a_new.n() != streams.n() {
        return Err(DetectorError::DimensionMismatch {
            want: streams.n(),
            got: a_new.n(),
        });
    }
    streams.push_a(a_new)?;
    let b_new = match b_new {
        Some(b) => b,
        None => return Ok(DetectionOutcome::not_fired()),
    };
    if b_new.n() != streams.n() {
        return Err(DetectorError::DimensionMismatch {
            want: streams.n(),
            got: b_new.n(),
        });
    }
    streams.push_b(b_new)?;
    let evals = evaluate_grid(streams, cfg, estimator, true)?;
    Ok(outcome_from_evals(&evals))
}

/// Run until the first firing, the horizon, or stream exhaustion.
pub fn run<I>(source: I, cfg: &DetectorConfig) -> Result<DetectionOutcome, DetectorError>
where
    I: IntoIterator<Item = AdjacencySnapshot>,
{
    run_with(source, cfg, &UsvtEstimator)
}

pub fn run_with<I>(
    source: I,
    cfg: &DetectorConfig,
    estimator: &dyn DirectionEstimator,
) -> Result<DetectionOutcome, DetectorError>
where
    I: IntoIterator<Item = AdjacencySnapshot>,
{
    let mut iter = source.into_iter();
    let first = iter.next().ok_or(DetectorError::EmptySource)?;
    let mut streams = SplitStreams::new(first.n());
    let mut pending_a = Some(first);
    let mut consumed = 1usize;
    let mut last = DetectionOutcome::not_fired();
    loop {
        if let Some(horizon) = cfg.max_time {
            if consumed > horizon {
                break;
            }
        }
        let b = match iter.next() {
            Some(b) => {
                consumed += 1;
                if cfg.max_time.is_some_and(|h| consumed > h) {
                    None
                } else {
                    Some(b)
                }
            }
            None => None,
        };
        let a = pending_a.take().expect("a snapshot pending");
        let outcome = step_with(&mut streams, cfg, estimator, &a, b.as_ref())?;
        if outcome.fired {
            return Ok(outcome);
        }
        last = outcome;
        if b.is_none() {
            break;
        }
        match iter.next() {
            Some(next_a) => {
                consumed += 1;
                if cfg.max_time.is_some_and(|h| consumed > h) {
                    break;
                }
                pending_a = Some(next_a);
            }
            None => break,
        }
    }
    Ok(last)
}

/// Restart-on-detection for multiple change points: after each firing both
/// split streams reset and detection resumes with the next raw snapshot.
/// Outcomes are in segment-relative coordinates (each segment behaves like
/// a fresh [`run`]); cumulative raw offsets are the running sum of the
/// preceding segments' `t_raw`.
pub fn run_multi<I>(source: I, cfg: &DetectorConfig) -> Result<Vec<DetectionOutcome>, DetectorError>
where
    I: IntoIterator<Item = AdjacencySnapshot>,
{
    run_multi_with(source, cfg, &UsvtEstimator)
}

pub fn run_multi_with<I>(
    source: I,
    cfg: &DetectorConfig,
    estimator: &dyn DirectionEstimator,
) -> Result<Vec<DetectionOutcome>, DetectorError>
where
    I: IntoIterator<Item = AdjacencySnapshot>,
{
    let mut iter = source.into_iter().peekable();
    let first = iter.peek().ok_or(DetectorError::EmptySource)?;
    let n = first.n();
    let mut outcomes = Vec::new();
    let mut streams = SplitStreams::new(n);
    let mut pending_a: Option<AdjacencySnapshot> = None;
    let mut consumed = 0usize;
    let mut last_not_fired = DetectionOutcome::not_fired();
    for snap in iter {
        consumed += 1;
        if cfg.max_time.is_some_and(|h| consumed > h) {
            break;
        }
        match pending_a.take() {
            None => pending_a = Some(snap),
            Some(a) => {
                let outcome = step_with(&mut streams, cfg, estimator, &a, Some(&snap))?;
                if outcome.fired {
                    outcomes.push(outcome);
                    streams = SplitStreams::new(n);
                } else {
                    last_not_fired = outcome;
                }
            }
        }
    }
    if let Some(a) = pending_a.take() {
        let outcome = step_with(&mut streams, cfg, estimator, &a, None)?;
        if !outcome.fired {
            last_not_fired = outcome;
        }
    }
    if outcomes.is_empty() {
        outcomes.push(last_not_fired);
    }
    Ok(outcomes)
}
