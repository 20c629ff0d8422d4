//! Symmetric eigendecomposition.
//!
//! Householder tridiagonalization followed by the implicit-shift QL
//! iteration, with the eigenvector accumulation done column-major so the
//! inner rotation loops run over contiguous memory.  Dependency-free and
//! deterministic, which keeps detector runs bit-replayable.

use crate::matrix::Matrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("input matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("QL iteration failed to converge for eigenvalue index {0}")]
    NoConvergence(usize),
}

/// Eigenpairs of a symmetric matrix, ordered by descending `|lambda|`.
///
/// `vectors` is column-major: `vectors[i]` is the unit eigenvector paired
/// with `values[i]`.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl EigenDecomposition {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Reassemble `sum_i lambda_i v_i v_i^T`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.n();
        let mut m = Matrix::zeros(n);
        for (lam, v) in self.values.iter().zip(&self.vectors) {
            for i in 0..n {
                let c = lam * v[i];
                let row = &mut m.data_mut()[i * n..(i + 1) * n];
                for (rj, vj) in row.iter_mut().zip(v) {
                    *rj += c * vj;
                }
            }
        }
        m
    }
}

const SYMMETRY_TOL: f64 = 1e-12;
const MAX_QL_ITERS: usize = 50;

/// Full eigendecomposition of a symmetric matrix.
pub fn eigh(m: &Matrix) -> Result<EigenDecomposition, EigenError> {
    let n = m.n();
    let asym = max_asymmetry(m);
    if asym > SYMMETRY_TOL * (1.0 + m.max_abs()) {
        return Err(EigenError::NotSymmetric(asym));
    }
    if n == 0 {
        return Ok(EigenDecomposition {
            values: vec![],
            vectors: vec![],
        });
    }
    let mut a = m.data().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut a, n, &mut d, &mut e);
    // Transpose the accumulated transform into column-major storage so the
    // QL rotations update contiguous slices.
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            z[j * n + i] = a[i * n + j];
        }
    }
    tqli(&mut d, &mut e, n, &mut z)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        d[j].abs()
            .partial_cmp(&d[i].abs())
            .unwrap()
            .then(i.cmp(&j))
    });
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| z[i * n..(i + 1) * n].to_vec())
        .collect();
    Ok(EigenDecomposition { values, vectors })
}

fn max_asymmetry(m: &Matrix) -> f64 {
    let n = m.n();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Householder reduction to tridiagonal form (Numerical Recipes `tred2`),
/// accumulating the orthogonal transform in `a`.
fn tred2(a: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    for i in (1..n).rev() {
        let l = i;
        let mut h = 0.0;
        if l > 1 {
            let scale: f64 = (0..l).map(|k| a[i * n + k].abs()).sum();
            if scale == 0.0 {
                e[i] = a[i * n + l - 1];
            } else {
                for k in 0..l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l - 1];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l - 1] = f - g;
                let mut f_acc = 0.0;
                for j in 0..l {
                    a[j * n + i] = a[i * n + j] / h;
                    let mut g_acc = 0.0;
                    for k in 0..=j {
                        g_acc += a[j * n + k] * a[i * n + k];
                    }
                    for k in (j + 1)..l {
                        g_acc += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g_acc / h;
                    f_acc += e[j] * a[i * n + j];
                }
                let hh = f_acc / (h + h);
                for j in 0..l {
                    let f2 = a[i * n + j];
                    let g2 = e[j] - hh * f2;
                    e[j] = g2;
                    for k in 0..=j {
                        a[j * n + k] -= f2 * e[k] + g2 * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l - 1];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += a[i * n + k] * a[k * n + j];
                }
                for k in 0..i {
                    a[k * n + j] -= g * a[k * n + i];
                }
            }
        }
        d[i] = a[i * n + i];
        a[i * n + i] = 1.0;
        for j in 0..i {
            a[j * n + i] = 0.0;
            a[i * n + j] = 0.0;
        }
    }
}

/// Implicit-shift QL iteration on a tridiagonal matrix, rotating the
/// column-major eigenvector store `z` along the way.
fn tqli(d: &mut [f64], e: &mut [f64], n: usize, z: &mut [f64]) -> Result<(), EigenError> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    // Absolute deflation floor: with exact zero diagonal entries (common
    // for rank-deficient block matrices) a purely relative test never
    // fires, so tiny off-diagonals are also dropped at the matrix scale.
    let anorm = d
        .iter()
        .zip(e.iter())
        .map(|(x, y)| x.abs() + y.abs())
        .fold(0.0_f64, f64::max);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * (dd + anorm) {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERS {
                return Err(EigenError::NoConvergence(l));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = (g * g + 1.0).sqrt();
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0_f64, 1.0_f64);
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = (f * f + g * g).sqrt();
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let (za, zb) = z.split_at_mut((i + 1) * n);
                let zi = &mut za[i * n..];
                let zi1 = &mut zb[..n];
                for k in 0..n {
                    f = zi1[k];
                    zi1[k] = s * zi[k] + c * f;
                    zi[k] = c * zi[k] - s * f;
                }
            }
            if underflow && m > l {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_eigenvalues() {
        let m = Matrix::from_fn(3, |i, j| if i == j { 1.0 } else { 0.0 });
        let ed = eigh(&m).unwrap();
        for lam in &ed.values {
            assert!((lam - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_ordering_by_magnitude() {
        let m = Matrix::from_fn(3, |i, j| {
            if i != j {
                0.0
            } else {
                [3.0, -5.0, 1.0][i]
            }
        });
        let ed = eigh(&m).unwrap();
        assert!((ed.values[0] + 5.0).abs() < 1e-14);
        assert!((ed.values[1] - 3.0).abs() < 1e-14);
        assert!((ed.values[2] - 1.0).abs() < 1e-14);
        // coordinate eigenvectors
        assert!(ed.vectors[0][1].abs() > 0.999);
        assert!(ed.vectors[1][0].abs() > 0.999);
        assert!(ed.vectors[2][2].abs() > 0.999);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let mut m = Matrix::zeros(2);
        m[(0, 1)] = 1.0;
        assert!(matches!(eigh(&m), Err(EigenError::NotSymmetric(_))));
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        // deterministic pseudo-random symmetric matrix
        let n = 8;
        let mut x = 0x9e3779b97f4a7c15_u64;
        let mut next = move || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = next();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let ed = eigh(&m).unwrap();
        let rec = ed.reconstruct();
        assert!(rec.max_abs_diff(&m) < 1e-8 * m.frobenius_norm().max(1.0));
        for i in 0..n {
            for j in i..n {
                let dot: f64 = ed.vectors[i]
                    .iter()
                    .zip(&ed.vectors[j])
                    .map(|(a, b)| a * b)
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-8, "v{i}.v{j} = {dot}");
            }
        }
    }
}
