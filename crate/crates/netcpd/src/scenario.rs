//! Ground-truth change descriptions and oracle quantities derived from them.

use crate::eigen::eigh;
use crate::graph::GraphonMatrix;
use crate::matrix::Matrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("graphon dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("sparsity rho = 0 but the graphons differ")]
    ZeroRho,
    #[error("graphon entry {0:.6} exceeds declared sparsity rho = {1:.6}")]
    EntryAboveRho(f64, f64),
    #[error("invalid split indices s={0}, t={1}")]
    BadSplit(usize, usize),
}

/// Relative singular-value cutoff used when counting the numerical rank of
/// a graphon difference.
pub const RANK_TOL: f64 = 1e-10;

/// Generative description of a (possibly absent) change:
/// pre/post graphons, the change location, and the derived jump quantities.
#[derive(Clone, Debug)]
pub struct ChangeScenario {
    pub theta_before: GraphonMatrix,
    pub theta_after: GraphonMatrix,
    /// Last pre-change time index; `None` means no change ever happens.
    pub delta: Option<usize>,
    pub rho: f64,
    pub kappa: f64,
    pub kappa0: f64,
    pub rank: usize,
}

impl ChangeScenario {
    /// Build a scenario, deriving `kappa`, `kappa0` and `rank` from the
    /// graphon pair.  `rho` defaults to the max entry over both graphons.
    pub fn new(
        theta_before: GraphonMatrix,
        theta_after: GraphonMatrix,
        delta: Option<usize>,
        rho: Option<f64>,
    ) -> Result<Self, ScenarioError> {
        let n = theta_before.n();
        if theta_after.n() != n {
            return Err(ScenarioError::DimensionMismatch(n, theta_after.n()));
        }
        let max_entry = theta_before.max_entry().max(theta_after.max_entry());
        let rho = rho.unwrap_or(max_entry);
        if max_entry > rho + 1e-12 {
            return Err(ScenarioError::EntryAboveRho(max_entry, rho));
        }
        let (kappa, kappa0, rank) = jump_size(&theta_before, &theta_after, Some(rho))?;
        Ok(ChangeScenario {
            theta_before,
            theta_after,
            delta,
            rho,
            kappa,
            kappa0,
            rank,
        })
    }

    pub fn n(&self) -> usize {
        self.theta_before.n()
    }

    /// Graphon in force at time `t` (1-based): pre-change for `t <= delta`.
    pub fn graphon_at(&self, t: usize) -> &GraphonMatrix {
        match self.delta {
            Some(d) if t > d => &self.theta_after,
            _ => &self.theta_before,
        }
    }
}

/// Jump size `kappa = ||Theta1 - Theta2||_F`, its normalization
/// `kappa0 = kappa / (n rho)`, and the numerical rank of the difference.
///
/// When `rho` is not supplied, the max entry over both graphons is used.
pub fn jump_size(
    theta1: &GraphonMatrix,
    theta2: &GraphonMatrix,
    rho: Option<f64>,
) -> Result<(f64, f64, usize), ScenarioError> {
    let n = theta1.n();
    if theta2.n() != n {
        return Err(ScenarioError::DimensionMismatch(n, theta2.n()));
    }
    let diff = theta1.matrix().sub(theta2.matrix());
    let kappa = diff.frobenius_norm();
    let rho = rho.unwrap_or_else(|| theta1.max_entry().max(theta2.max_entry()));
    if kappa == 0.0 {
        return Ok((0.0, 0.0, 0));
    }
    if rho == 0.0 {
        return Err(ScenarioError::ZeroRho);
    }
    let kappa0 = kappa / (n as f64 * rho);
    let rank = numerical_rank(&diff);
    Ok((kappa, kappa0, rank))
}

/// Numerical rank at relative singular-value tolerance [`RANK_TOL`].
/// The input is symmetric, so singular values are eigenvalue magnitudes.
pub fn numerical_rank(m: &Matrix) -> usize {
    let ed = eigh(m).expect("graphon difference is symmetric");
    let top = ed.values.first().map(|v| v.abs()).unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    ed.values.iter().filter(|v| v.abs() > RANK_TOL * top).count()
}

/// Expected value of the CUSUM matrix under a scenario (stream coordinates
/// must match the scenario's `delta`).  Pure test oracle.
///
/// Zero when no change or `t <= delta`; otherwise
/// `(t-delta) sqrt(s/(t(t-s))) (Theta1-Theta2)` for `s <= delta < t` and
/// `delta sqrt((t-s)/(st)) (Theta1-Theta2)` for `delta < s`.
pub fn expected_cusum(
    scenario: &ChangeScenario,
    s: usize,
    t: usize,
) -> Result<Matrix, ScenarioError> {
    if s < 1 || s >= t {
        return Err(ScenarioError::BadSplit(s, t));
    }
    let n = scenario.n();
    let delta = match scenario.delta {
        None => return Ok(Matrix::zeros(n)),
        Some(d) => d,
    };
    if t <= delta {
        return Ok(Matrix::zeros(n));
    }
    let diff = scenario
        .theta_before
        .matrix()
        .sub(scenario.theta_after.matrix());
    let (sf, tf, df) = (s as f64, t as f64, delta as f64);
    let coeff = if s <= delta {
        (tf - df) * (sf / (tf * (tf - sf))).sqrt()
    } else {
        df * ((tf - sf) / (sf * tf)).sqrt()
    };
    Ok(diff.scaled(coeff))
}
