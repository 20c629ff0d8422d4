//! Independent reference implementations used only by tests.
//!
//! Nothing here depends on the main crate (or on anything else): matrices
//! are plain row-major `&[f64]` slices, and every routine is written the
//! straightforward way so it can serve as an oracle for the optimized
//! production code.

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns `(values, vectors)` sorted by descending `|lambda|`; vector `k`
/// is the eigenvector paired with `values[k]`.
pub fn jacobi_eigh(n: usize, m: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    assert_eq!(m.len(), n * n);
    let mut a = m.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-12 * norm.max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = {
            let mut s = 0.0;
            for p in 0..n {
                for q in 0..n {
                    if p != q {
                        s += a[p * n + q] * a[p * n + q];
                    }
                }
            }
            s.sqrt()
        };
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[j * n + j]
            .abs()
            .partial_cmp(&a[i * n + i].abs())
            .unwrap()
    });
    let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&col| (0..n).map(|row| v[row * n + col]).collect())
        .collect();
    (values, vectors)
}

/// CUSUM matrix by explicit weighted summation:
/// `sqrt((t-s)/(st)) sum_{l<=s} A(l) - sqrt(s/((t-s)t)) sum_{s<l<=t} A(l)`.
pub fn cusum_direct(n: usize, snapshots: &[&[f64]], s: usize, t: usize) -> Vec<f64> {
    assert!(1 <= s && s < t && t <= snapshots.len());
    let (sf, tf) = (s as f64, t as f64);
    let w_pre = ((tf - sf) / (sf * tf)).sqrt();
    let w_post = (sf / ((tf - sf) * tf)).sqrt();
    let mut out = vec![0.0; n * n];
    for (l, snap) in snapshots.iter().enumerate().take(t) {
        let w = if l < s { w_pre } else { -w_post };
        for (o, &x) in out.iter_mut().zip(snap.iter()) {
            *o += w * x;
        }
    }
    out
}

/// USVT by literal eigendecompose-threshold-reconstruct-clip.
pub fn usvt_direct(n: usize, m: &[f64], tau1: f64, tau2: f64) -> Vec<f64> {
    let (values, vectors) = jacobi_eigh(n, m);
    let mut out = vec![0.0; n * n];
    for (lambda, vec) in values.iter().zip(&vectors) {
        if lambda.abs() >= tau1 {
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] += lambda * vec[i] * vec[j];
                }
            }
        }
    }
    if tau2.is_finite() {
        for x in &mut out {
            *x = x.clamp(-tau2, tau2);
        }
    }
    out
}

/// Empirical quantile by sort-and-index: smallest value whose rank is at
/// least `ceil(q * len)`.
pub fn naive_quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

/// Block-model least-squares loss by the naive double loop.
pub fn block_loss_direct(n: usize, m: &[f64], r0: usize, q: &[f64], z: &[usize]) -> f64 {
    assert_eq!(z.len(), n);
    assert_eq!(q.len(), r0 * r0);
    let mut loss = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = m[i * n + j] - q[z[i] * r0 + z[j]];
            loss += d * d;
        }
    }
    loss
}

/// Globally optimal block-model loss by brute-force enumeration of all
/// `r0^n` assignments, with the blockwise off-diagonal mean as `Q`.
pub fn np_fit_enumeration(n: usize, m: &[f64], r0: usize) -> f64 {
    assert!(r0 >= 1);
    let total = (r0 as u128).pow(n as u32);
    assert!(total <= 1 << 24, "enumeration oracle is for tiny inputs");
    let mut best = f64::INFINITY;
    for code in 0..total {
        let mut z = vec![0usize; n];
        let mut c = code;
        for label in z.iter_mut() {
            *label = (c % r0 as u128) as usize;
            c /= r0 as u128;
        }
        let mut sums = vec![0.0; r0 * r0];
        let mut counts = vec![0usize; r0 * r0];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    sums[z[i] * r0 + z[j]] += m[i * n + j];
                    counts[z[i] * r0 + z[j]] += 1;
                }
            }
        }
        let q: Vec<f64> = sums
            .iter()
            .zip(&counts)
            .map(|(&s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
            .collect();
        let loss = block_loss_direct(n, m, r0, &q, &z);
        if loss < best {
            best = loss;
        }
    }
    best
}

/// Second implementation of the Delay / PFA aggregation formulas over
/// truncated detection times `t~`.
pub fn metrics_direct(t_tildes: &[usize], delta: usize) -> (Option<f64>, f64) {
    assert!(!t_tildes.is_empty());
    let late: Vec<usize> = t_tildes.iter().copied().filter(|&t| t >= delta).collect();
    let delay = if late.is_empty() {
        None
    } else {
        Some(late.iter().map(|&t| (t - delta) as f64).sum::<f64>() / late.len() as f64)
    };
    let pfa = t_tildes.iter().filter(|&&t| t < delta).count() as f64 / t_tildes.len() as f64;
    (delay, pfa)
}

/// Eigenvalues of a symmetric 3x3 matrix by bisection on the
/// characteristic polynomial, sorted by descending `|lambda|`.
pub fn eig3_charpoly(m: &[f64]) -> Vec<f64> {
    assert_eq!(m.len(), 9);
    let trace = m[0] + m[4] + m[8];
    // sum of principal 2x2 minors
    let m2 = (m[4] * m[8] - m[5] * m[7]) + (m[0] * m[8] - m[2] * m[6])
        + (m[0] * m[4] - m[1] * m[3]);
    let det = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
        + m[2] * (m[3] * m[7] - m[4] * m[6]);
    // p(x) = -x^3 + trace x^2 - m2 x + det; roots are the eigenvalues
    let p = |x: f64| -x * x * x + trace * x * x - m2 * x + det;
    let bound = 1.0 + m.iter().map(|v| v.abs()).fold(0.0, f64::max) * 3.0;
    // scan for sign changes, then bisect each bracket
    let steps = 20000;
    let mut roots = Vec::new();
    let mut prev_x = -bound;
    let mut prev_p = p(prev_x);
    for k in 1..=steps {
        let x = -bound + 2.0 * bound * k as f64 / steps as f64;
        let px = p(x);
        if prev_p == 0.0 {
            roots.push(prev_x);
        } else if prev_p * px < 0.0 {
            let (mut lo, mut hi) = (prev_x, x);
            let (mut plo, _) = (prev_p, px);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let pm = p(mid);
                if plo * pm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    plo = pm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_p = px;
    }
    // repeated roots may be missed by sign scanning; pad from the trace
    while roots.len() < 3 {
        let sum: f64 = roots.iter().sum();
        roots.push(trace - sum);
    }
    roots.truncate(3);
    roots.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap());
    roots
}
