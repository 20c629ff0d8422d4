//! Snapshot file formats and JSON config/sidecar serialization.
//!
//! Dense format: a header line `n T`, then `T` blocks of `n` lines with
//! `n` space-separated 0/1 tokens each, blocks ordered by time index.
//! The parser is whitespace-tolerant (any token stream with the right
//! counts is accepted) but enforces every snapshot invariant.
//!
//! Edge-list format: lines `t i j` with 1-based indices; entries are
//! symmetrized and anything unmentioned is 0.  Dimensions are inferred
//! from the maxima.
//!
//! Both parsers handle untrusted input: they never panic and cap the
//! implied allocation size.

use crate::graph::{AdjacencySnapshot, GraphError};
use crate::scenario::ChangeScenario;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use thiserror::Error;

pub const MAX_NODES: usize = 4096;
pub const MAX_HORIZON: usize = 1_000_000;
/// Cap on `n * n * T` for a parsed stream (~2 GiB of u8 worst case guard).
pub const MAX_CELLS: usize = 1 << 28;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("header must be two positive integers `n T`")]
    BadHeader,
    #[error("dimensions n={n}, T={t} exceed limits")]
    TooLarge { n: usize, t: usize },
    #[error("token {index}: expected 0 or 1, got {token:?}")]
    BadToken { index: usize, token: String },
    #[error("input ended after {got} of {want} matrix tokens")]
    Truncated { want: usize, got: usize },
    #[error("trailing garbage after the last snapshot")]
    TrailingData,
    #[error("snapshot {t}: {source}")]
    BadSnapshot { t: usize, source: GraphError },
    #[error("edge list line {line}: {reason}")]
    BadEdge { line: usize, reason: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn check_dims(n: usize, t: usize) -> Result<(), IoError> {
    if n == 0 || t == 0 {
        return Err(IoError::BadHeader);
    }
    if n > MAX_NODES || t > MAX_HORIZON || n.saturating_mul(n).saturating_mul(t) > MAX_CELLS {
        return Err(IoError::TooLarge { n, t });
    }
    Ok(())
}

/// Parse the dense snapshot format.
pub fn parse_snapshots(input: &str) -> Result<Vec<AdjacencySnapshot>, IoError> {
    let mut tokens = input.split_whitespace();
    let n: usize = tokens
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or(IoError::BadHeader)?;
    let t: usize = tokens
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or(IoError::BadHeader)?;
    check_dims(n, t)?;
    let want = n * n * t;
    let mut snaps = Vec::with_capacity(t);
    let mut consumed = 0usize;
    for time in 1..=t {
        let mut entries = vec![0u8; n * n];
        for cell in entries.iter_mut() {
            let tok = tokens.next().ok_or(IoError::Truncated {
                want,
                got: consumed,
            })?;
            *cell = match tok {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(IoError::BadToken {
                        index: consumed,
                        token: other.chars().take(16).collect(),
                    })
                }
            };
            consumed += 1;
        }
        let snap = AdjacencySnapshot::new(n, time as u32, entries)
            .map_err(|source| IoError::BadSnapshot { t: time, source })?;
        snaps.push(snap);
    }
    if tokens.next().is_some() {
        return Err(IoError::TrailingData);
    }
    Ok(snaps)
}

pub fn read_snapshots<R: BufRead>(mut r: R) -> Result<Vec<AdjacencySnapshot>, IoError> {
    let mut buf = String::new();
    r.read_to_string(&mut buf)?;
    parse_snapshots(&buf)
}

pub fn write_snapshots<W: Write>(w: &mut W, snaps: &[AdjacencySnapshot]) -> std::io::Result<()> {
    let n = snaps.first().map_or(0, |s| s.n());
    writeln!(w, "{} {}", n, snaps.len())?;
    let mut row = String::with_capacity(2 * n);
    for snap in snaps {
        for i in 0..n {
            row.clear();
            for j in 0..n {
                if j > 0 {
                    row.push(' ');
                }
                row.push(if snap.entry(i, j) == 1 { '1' } else { '0' });
            }
            writeln!(w, "{row}")?;
        }
    }
    Ok(())
}

/// Parse the `t i j` edge-list format; `n` and `T` are the observed maxima.
pub fn parse_edge_list(input: &str) -> Result<Vec<AdjacencySnapshot>, IoError> {
    let mut edges: Vec<(usize, usize, usize)> = Vec::new();
    let mut max_t = 0usize;
    let mut max_node = 0usize;
    for (idx, line) in input.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |reason: &str| IoError::BadEdge {
            line: idx + 1,
            reason: reason.to_string(),
        };
        let mut parts = line.split_whitespace();
        let mut next_num = |what: &str| -> Result<usize, IoError> {
            parts
                .next()
                .and_then(|s| s.parse::<usize>().ok())
                .filter(|&v| v >= 1)
                .ok_or_else(|| bad(&format!("missing or invalid {what}")))
        };
        let t = next_num("time")?;
        let i = next_num("node")?;
        let j = next_num("node")?;
        if parts.next().is_some() {
            return Err(bad("expected exactly three fields"));
        }
        if i == j {
            return Err(bad("self-loops are not allowed"));
        }
        max_t = max_t.max(t);
        max_node = max_node.max(i.max(j));
        edges.push((t, i, j));
    }
    if edges.is_empty() {
        return Err(IoError::BadHeader);
    }
    check_dims(max_node, max_t)?;
    let n = max_node;
    let mut entry_sets = vec![vec![0u8; n * n]; max_t];
    for (t, i, j) in edges {
        let (i, j) = (i - 1, j - 1);
        entry_sets[t - 1][i * n + j] = 1;
        entry_sets[t - 1][j * n + i] = 1;
    }
    entry_sets
        .into_iter()
        .enumerate()
        .map(|(k, entries)| {
            AdjacencySnapshot::new(n, k as u32 + 1, entries)
                .map_err(|source| IoError::BadSnapshot { t: k + 1, source })
        })
        .collect()
}

/// Ground-truth sidecar written next to simulated snapshot files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioSidecar {
    pub n: usize,
    pub delta: Option<usize>,
    pub rho: f64,
    pub kappa: f64,
    pub kappa0: f64,
    pub rank: usize,
    pub theta_before: Vec<Vec<f64>>,
    pub theta_after: Vec<Vec<f64>>,
}

impl ScenarioSidecar {
    pub fn from_scenario(sc: &ChangeScenario) -> Self {
        let rows = |m: &crate::matrix::Matrix| {
            (0..m.n())
                .map(|i| (0..m.n()).map(|j| m[(i, j)]).collect())
                .collect()
        };
        ScenarioSidecar {
            n: sc.n(),
            delta: sc.delta,
            rho: sc.rho,
            kappa: sc.kappa,
            kappa0: sc.kappa0,
            rank: sc.rank,
            theta_before: rows(sc.theta_before.matrix()),
            theta_after: rows(sc.theta_after.matrix()),
        }
    }
}

pub fn write_json<W: Write, T: Serialize>(w: &mut W, value: &T) -> Result<(), IoError> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    Ok(())
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(input: &str) -> Result<T, IoError> {
    Ok(serde_json::from_str(input)?)
}
