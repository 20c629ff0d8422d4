//! Universal singular value thresholding.
//!
//! Eigenvalue hard-thresholding at `tau1` followed by entrywise clipping
//! at `tau2`, applied to a symmetric matrix.

use crate::eigen::{eigh, EigenError};
use crate::matrix::Matrix;

/// Thresholding parameters: `tau1` is the eigenvalue cutoff, `tau2` the
/// entry clip level (`f64::INFINITY` disables clipping).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UsvtParams {
    pub tau1: f64,
    pub tau2: f64,
}

impl UsvtParams {
    pub fn new(tau1: f64, tau2: f64) -> Self {
        assert!(tau1 >= 0.0, "tau1 must be nonnegative");
        assert!(tau2 >= 0.0, "tau2 must be nonnegative");
        UsvtParams { tau1, tau2 }
    }

    pub fn unclipped(tau1: f64) -> Self {
        UsvtParams::new(tau1, f64::INFINITY)
    }
}

/// `USVT(m, tau1, tau2)`: keep eigencomponents with `|lambda| >= tau1`
/// (ties at exactly `tau1` are kept), then clip entries to `[-tau2, tau2]`.
pub fn usvt(m: &Matrix, p: UsvtParams) -> Result<Matrix, EigenError> {
    let n = m.n();
    if m.max_abs() == 0.0 {
        return Ok(Matrix::zeros(n));
    }
    // Max |eigenvalue| is bounded by the Frobenius norm; if even that is
    // below the cutoff no component survives and the solver can be skipped.
    if m.frobenius_norm() < p.tau1 {
        return Ok(Matrix::zeros(n));
    }
    let ed = eigh(m)?;
    let kept: Vec<usize> = (0..n).filter(|&i| ed.values[i].abs() >= p.tau1).collect();
    let mut out;
    if kept.len() <= n - kept.len() {
        // few survivors: build the sum directly
        out = Matrix::zeros(n);
        for &i in &kept {
            rank_one_update(&mut out, ed.values[i], &ed.vectors[i]);
        }
    } else {
        // few discarded: subtract them from the input instead
        out = m.clone();
        for i in 0..n {
            if ed.values[i].abs() < p.tau1 {
                rank_one_update(&mut out, -ed.values[i], &ed.vectors[i]);
            }
        }
    }
    if p.tau2.is_finite() {
        for v in out.data_mut() {
            *v = v.clamp(-p.tau2, p.tau2);
        }
    }
    Ok(out)
}

fn rank_one_update(m: &mut Matrix, lambda: f64, v: &[f64]) {
    let n = v.len();
    for i in 0..n {
        let c = lambda * v[i];
        let row = &mut m.data_mut()[i * n..(i + 1) * n];
        for (rj, vj) in row.iter_mut().zip(v) {
            *rj += c * vj;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut impl Rng) -> Matrix {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.gen_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    #[test]
    fn all_eigenvalues_below_tau1_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_symmetric(6, &mut rng);
        let big = m.frobenius_norm() + 1.0;
        let out = usvt(&m, UsvtParams::unclipped(big)).unwrap();
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn rank_one_passthrough() {
        let v = [0.6, -0.8, 0.0];
        let lambda = 3.0;
        let m = Matrix::from_fn(3, |i, j| lambda * v[i] * v[j]);
        let out = usvt(&m, UsvtParams::new(1.0, 10.0)).unwrap();
        assert!(out.max_abs_diff(&m) < 1e-10);
    }

    #[test]
    fn identity_map_with_zero_tau1() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_symmetric(7, &mut rng);
        let out = usvt(&m, UsvtParams::unclipped(0.0)).unwrap();
        assert!(out.max_abs_diff(&m) < 1e-8 * m.frobenius_norm());
    }

    #[test]
    fn zero_matrix_short_circuits() {
        let out = usvt(&Matrix::zeros(5), UsvtParams::new(0.1, 0.2)).unwrap();
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn entries_bounded_by_tau2() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let m = random_symmetric(6, &mut rng);
            let tau2 = 0.3;
            let out = usvt(&m, UsvtParams::new(0.2, tau2)).unwrap();
            assert!(out.max_abs() <= tau2 + 1e-15);
            // applying again with the same params keeps every entry in range
            let again = usvt(&out, UsvtParams::new(0.2, tau2)).unwrap();
            assert!(again.max_abs() <= tau2 + 1e-15);
        }
    }

    #[test]
    fn output_rank_bounded_by_kept_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let m = random_symmetric(8, &mut rng);
            let ed = crate::eigen::eigh(&m).unwrap();
            let tau1 = {
                let mut mags: Vec<f64> = ed.values.iter().map(|v| v.abs()).collect();
                mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
                mags[4]
            };
            let kept = ed.values.iter().filter(|v| v.abs() >= tau1).count();
            let out = usvt(&m, UsvtParams::unclipped(tau1)).unwrap();
            assert_eq!(crate::scenario::numerical_rank(&out), kept);
        }
    }
}
