//! Seeded samplers for the four simulation scenarios plus custom graphon
//! pairs.
//!
//! Scenario 1: 3-block SBM whose interaction pattern swaps between blocks.
//! Scenario 2: 5-block SBM with a level shift.
//! Scenario 3: degree-corrected 3-block model.
//! Scenario 4: random dot product graph whose first quarter of latent
//! positions is replaced at the change.

use crate::graph::{AdjacencySnapshot, GraphError, GraphonMatrix};
use crate::matrix::Matrix;
use crate::scenario::{ChangeScenario, ScenarioError};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("node count {0} too small for scenario kind")]
    BadN(usize),
    #[error("change index {delta} must satisfy 1 <= delta < horizon ({horizon})")]
    BadDelta { delta: usize, horizon: usize },
    #[error("horizon must be at least 1")]
    BadHorizon,
    #[error("time {t} outside 1..={horizon}")]
    TimeOutOfRange { t: usize, horizon: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Which generative model a [`ScenarioSpec`] describes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioKind {
    Sbm3,
    Sbm5,
    Dcbm,
    Rdpg,
    Custom {
        theta_before: Vec<Vec<f64>>,
        theta_after: Vec<Vec<f64>>,
    },
}

/// Full description of a simulated stream: model, size, change location
/// (raw index; `None` for a pure null stream), horizon and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(flatten)]
    pub kind: ScenarioKind,
    pub n: usize,
    pub delta: Option<usize>,
    pub horizon: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.horizon == 0 {
            return Err(GenError::BadHorizon);
        }
        if let Some(d) = self.delta {
            if d == 0 || d >= self.horizon {
                return Err(GenError::BadDelta {
                    delta: d,
                    horizon: self.horizon,
                });
            }
        }
        let min_n = match self.kind {
            ScenarioKind::Sbm3 | ScenarioKind::Dcbm => 3,
            ScenarioKind::Sbm5 => 5,
            ScenarioKind::Rdpg => 2,
            ScenarioKind::Custom { .. } => 1,
        };
        if self.n < min_n {
            return Err(GenError::BadN(self.n));
        }
        Ok(())
    }

    /// Null-stream variant: same model and seed, change removed.
    pub fn without_change(&self) -> ScenarioSpec {
        ScenarioSpec {
            delta: None,
            ..self.clone()
        }
    }
}

/// Block labels with sizes `floor(n/k)` for the first `k-1` blocks and the
/// remainder in the last.
fn block_labels(n: usize, k: usize) -> Vec<usize> {
    let size = n / k;
    (0..n).map(|i| (i / size).min(k - 1)).collect()
}

// Graphon matrices keep their diagonal block values (the difference
// Theta1 - Theta2 then has the low rank the community structure implies);
// samplers never draw self-loops regardless.
fn sbm_graphon(n: usize, rho: f64, b: &[[f64; 3]; 3], labels: &[usize]) -> GraphonMatrix {
    let m = Matrix::from_fn(n, |i, j| rho * b[labels[i]][labels[j]]);
    GraphonMatrix::new(m).expect("entries in [0,1] by construction")
}

fn sbm3_pair(n: usize) -> (GraphonMatrix, GraphonMatrix) {
    let rho = 0.02;
    let labels = block_labels(n, 3);
    let b_pre = [[0.6, 1.0, 0.6], [1.0, 0.6, 0.5], [0.6, 0.5, 0.6]];
    let b_post = [[0.6, 0.5, 0.6], [0.5, 0.6, 1.0], [0.6, 1.0, 0.6]];
    (
        sbm_graphon(n, rho, &b_pre, &labels),
        sbm_graphon(n, rho, &b_post, &labels),
    )
}

fn sbm5_pair(n: usize) -> (GraphonMatrix, GraphonMatrix) {
    let rho = 0.02;
    let labels = block_labels(n, 5);
    let level = |same: f64, diff: f64| {
        let labels = labels.clone();
        GraphonMatrix::new(Matrix::from_fn(n, move |i, j| {
            if labels[i] == labels[j] {
                rho * same
            } else {
                rho * diff
            }
        }))
        .expect("entries in [0,1]")
    };
    (level(0.9, 0.2), level(0.5, 0.1))
}

fn dcbm_pair(n: usize) -> (GraphonMatrix, GraphonMatrix) {
    let labels = block_labels(n, 3);
    // degree corrections v_i = sqrt(i/n) for 1-based i
    let v: Vec<f64> = (1..=n).map(|i| (i as f64 / n as f64).sqrt()).collect();
    let level = |same: f64, diff: f64| {
        let labels = labels.clone();
        let v = v.clone();
        GraphonMatrix::new(Matrix::from_fn(n, move |i, j| {
            let b = if labels[i] == labels[j] { same } else { diff };
            v[i] * v[j] * b
        }))
        .expect("entries in [0,1]")
    };
    (level(0.9, 0.1), level(0.95, 0.15))
}

/// Latent positions for Scenario 4, drawn once per seed on an RNG stream
/// separate from the edge noise so every replicate shares them.
fn rdpg_latents(n: usize, seed: u64) -> (Vec<[f64; 5]>, Vec<[f64; 5]>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut draw = |_: usize| {
        let mut p = [0.0; 5];
        for v in &mut p {
            *v = rng.gen::<f64>();
        }
        p
    };
    let x: Vec<[f64; 5]> = (0..n).map(&mut draw).collect();
    let x_tilde: Vec<[f64; 5]> = (0..n).map(&mut draw).collect();
    (x, x_tilde)
}

fn cosine(a: &[f64; 5], b: &[f64; 5]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(0.0, 1.0)
}

fn rdpg_pair(n: usize, seed: u64) -> (GraphonMatrix, GraphonMatrix) {
    let (x, x_tilde) = rdpg_latents(n, seed);
    let cut = n / 4;
    let y: Vec<[f64; 5]> = (0..n)
        .map(|i| if i < cut { x_tilde[i] } else { x[i] })
        .collect();
    let gram = |pos: Vec<[f64; 5]>| {
        GraphonMatrix::new(Matrix::from_fn(n, move |i, j| {
            if i == j {
                0.0
            } else {
                cosine(&pos[i], &pos[j])
            }
        }))
        .expect("cosine of nonnegative vectors lies in [0,1]")
    };
    (gram(x), gram(y))
}

fn custom_pair(
    before: &[Vec<f64>],
    after: &[Vec<f64>],
) -> Result<(GraphonMatrix, GraphonMatrix), GenError> {
    let b = GraphonMatrix::new(Matrix::from_rows(before))?;
    let a = GraphonMatrix::new(Matrix::from_rows(after))?;
    Ok((b, a))
}

fn graphon_pair(spec: &ScenarioSpec) -> Result<(GraphonMatrix, GraphonMatrix), GenError> {
    spec.validate()?;
    Ok(match &spec.kind {
        ScenarioKind::Sbm3 => sbm3_pair(spec.n),
        ScenarioKind::Sbm5 => sbm5_pair(spec.n),
        ScenarioKind::Dcbm => dcbm_pair(spec.n),
        ScenarioKind::Rdpg => rdpg_pair(spec.n, spec.seed),
        ScenarioKind::Custom {
            theta_before,
            theta_after,
        } => custom_pair(theta_before, theta_after)?,
    })
}

/// Ground-truth scenario for a spec; `rho` is the max mean entry.
pub fn build_scenario(spec: &ScenarioSpec) -> Result<ChangeScenario, GenError> {
    let (before, after) = graphon_pair(spec)?;
    Ok(ChangeScenario::new(before, after, spec.delta, None)?)
}

/// Exact Bernoulli mean matrix at raw time `t` (1-based).
pub fn graphon_of(spec: &ScenarioSpec, t: usize) -> Result<GraphonMatrix, GenError> {
    if t < 1 || t > spec.horizon {
        return Err(GenError::TimeOutOfRange {
            t,
            horizon: spec.horizon,
        });
    }
    let (before, after) = graphon_pair(spec)?;
    Ok(match spec.delta {
        Some(d) if t > d => after,
        _ => before,
    })
}

/// Draw the full stream with the spec's own seed as the edge seed.
pub fn sample_stream(
    spec: &ScenarioSpec,
) -> Result<(Vec<AdjacencySnapshot>, ChangeScenario), GenError> {
    sample_stream_with(spec, spec.seed)
}

/// Draw the stream with a caller-chosen edge seed, keeping the scenario
/// (including Scenario 4 latent positions) tied to `spec.seed`.  This is
/// the common-random-numbers hook used by calibration and the harness.
pub fn sample_stream_with(
    spec: &ScenarioSpec,
    edge_seed: u64,
) -> Result<(Vec<AdjacencySnapshot>, ChangeScenario), GenError> {
    let scenario = build_scenario(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(edge_seed);
    let mut snaps = Vec::with_capacity(spec.horizon);
    for t in 1..=spec.horizon {
        let theta = scenario.graphon_at(t).matrix();
        snaps.push(AdjacencySnapshot::from_upper(spec.n, t as u32, |i, j| {
            rng.gen::<f64>() < theta[(i, j)]
        }));
    }
    Ok((snaps, scenario))
}
