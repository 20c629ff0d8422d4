//! Replicated experiments and the Delay / PFA metrics.
//!
//! Detection times follow the raw-time convention (`t_raw = 2 * t_split`),
//! since change locations in scenario specs are raw indices.  With
//! `t~ = min(T, t^)`:
//!
//! ```text
//! Delay = sum 1{t~ >= delta} (t~ - delta) / sum 1{t~ >= delta}
//! PFA   = sum 1{t~ <  delta} / N
//! ```
//!
//! A never-firing replicate contributes `t~ = T`.

use crate::detector::{self, DetectorConfig, DetectorError};
use crate::generators::{sample_stream_with, GenError, ScenarioSpec};
use crate::np_detector::{NpEstimator, NpStrategy};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("no replicate records")]
    EmptyRecords,
    #[error("delta {delta} exceeds horizon {horizon}")]
    DeltaBeyondHorizon { delta: usize, horizon: usize },
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad CSV at line {line}: {reason}")]
    BadCsv { line: usize, reason: String },
}

/// Which detector the harness runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "detector", rename_all = "snake_case")]
pub enum DetectorChoice {
    Usvt,
    Np { r0: usize, restarts: usize, max_iters: usize },
}

/// One replicate's outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub seed: u64,
    pub fired: bool,
    pub t_raw: Option<usize>,
    /// `min(T, t^)`, with `T` for never-firing replicates.
    pub t_tilde: usize,
    pub s_hit: Option<usize>,
    pub gate_value: f64,
    pub score: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub records: Vec<ReplicateRecord>,
    /// `None` when no replicate had `t~ >= delta` (undefined, never 0).
    pub delay: Option<f64>,
    pub pfa: f64,
    pub spec: ScenarioSpec,
    pub config: DetectorConfig,
    pub detector: DetectorChoice,
}

/// The two aggregation formulas, applied verbatim to the records.
pub fn metrics(
    records: &[ReplicateRecord],
    delta: usize,
    horizon: usize,
) -> Result<(Option<f64>, f64), HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::EmptyRecords);
    }
    if delta > horizon {
        return Err(HarnessError::DeltaBeyondHorizon { delta, horizon });
    }
    let mut late_sum = 0.0;
    let mut late_count = 0usize;
    let mut early = 0usize;
    for r in records {
        let t_tilde = r.t_tilde;
        if t_tilde >= delta {
            late_sum += (t_tilde - delta) as f64;
            late_count += 1;
        } else {
            early += 1;
        }
    }
    let delay = (late_count > 0).then(|| late_sum / late_count as f64);
    let pfa = early as f64 / records.len() as f64;
    Ok((delay, pfa))
}

/// Run `n_reps` independent replicates; replicate `i` draws edges with
/// seed `base_seed + i`.  Deterministic given `base_seed`.
pub fn run_experiment(
    spec: &ScenarioSpec,
    cfg: &DetectorConfig,
    detector_choice: &DetectorChoice,
    n_reps: usize,
    base_seed: u64,
) -> Result<ExperimentResult, HarnessError> {
    assert!(n_reps >= 1, "need at least one replicate");
    let horizon = spec.horizon;
    let mut records = Vec::with_capacity(n_reps);
    for i in 0..n_reps {
        let seed = base_seed.wrapping_add(i as u64);
        let (snaps, _) = sample_stream_with(spec, seed)?;
        let outcome = match detector_choice {
            DetectorChoice::Usvt => detector::run(snaps, cfg)?,
            DetectorChoice::Np {
                r0,
                restarts,
                max_iters,
            } => {
                let est = NpEstimator {
                    r0: *r0,
                    strategy: NpStrategy::Alternating {
                        restarts: *restarts,
                        max_iters: *max_iters,
                    },
                };
                detector::run_with(snaps, cfg, &est)?
            }
        };
        records.push(ReplicateRecord {
            seed,
            fired: outcome.fired,
            t_raw: outcome.t_raw,
            t_tilde: outcome.t_raw.map_or(horizon, |t| t.min(horizon)),
            s_hit: outcome.s_hit,
            gate_value: outcome.gate_value,
            score: outcome.score,
        });
    }
    // a no-change spec treats any pre-horizon alarm as a false alarm
    let delta = spec.delta.unwrap_or(horizon);
    let (delay, pfa) = metrics(&records, delta, horizon)?;
    Ok(ExperimentResult {
        records,
        delay,
        pfa,
        spec: spec.clone(),
        config: cfg.clone(),
        detector: *detector_choice,
    })
}

pub const CSV_HEADER: &str = "seed,fired,t_raw,t_tilde,s_hit,gate_value,score";

fn opt_usize(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One CSV row per replicate; absent optionals are empty fields, floats in
/// shortest round-trip form (byte-deterministic).
pub fn write_records_csv<W: Write>(w: &mut W, records: &[ReplicateRecord]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.seed,
            r.fired,
            opt_usize(r.t_raw),
            r.t_tilde,
            opt_usize(r.s_hit),
            r.gate_value,
            r.score
        )?;
    }
    Ok(())
}

pub fn read_records_csv<R: BufRead>(r: R) -> Result<Vec<ReplicateRecord>, HarnessError> {
    let bad = |line: usize, reason: &str| HarnessError::BadCsv {
        line,
        reason: reason.to_string(),
    };
    let mut lines = r.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim() == CSV_HEADER => {}
        Some((_, Ok(_))) => return Err(bad(1, "unexpected header")),
        Some((_, Err(e))) => return Err(HarnessError::Io(e)),
        None => return Err(bad(1, "empty file")),
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(bad(idx + 1, "expected 7 fields"));
        }
        let parse_opt = |s: &str| -> Result<Option<usize>, HarnessError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(idx + 1, "bad integer"))
            }
        };
        out.push(ReplicateRecord {
            seed: fields[0].parse().map_err(|_| bad(idx + 1, "bad seed"))?,
            fired: fields[1].parse().map_err(|_| bad(idx + 1, "bad bool"))?,
            t_raw: parse_opt(fields[2])?,
            t_tilde: fields[3].parse().map_err(|_| bad(idx + 1, "bad t_tilde"))?,
            s_hit: parse_opt(fields[4])?,
            gate_value: fields[5].parse().map_err(|_| bad(idx + 1, "bad float"))?,
            score: fields[6].parse().map_err(|_| bad(idx + 1, "bad float"))?,
        });
    }
    Ok(out)
}

/// Aggregate block for `aggregate.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Aggregate {
    pub reps: usize,
    pub delay: Option<f64>,
    pub pfa: f64,
}

impl ExperimentResult {
    pub fn aggregate(&self) -> Aggregate {
        Aggregate {
            reps: self.records.len(),
            delay: self.delay,
            pfa: self.pfa,
        }
    }
}
