//! Cross-checks of the optimized implementations against the independent
//! reference implementations in `netcpd-oracles`.

use netcpd::calibration::estimate_rho;
use netcpd::cusum::CusumState;
use netcpd::eigen::eigh;
use netcpd::generators::{sample_stream, ScenarioKind, ScenarioSpec};
use netcpd::graph::AdjacencySnapshot;
use netcpd::harness::{metrics, ReplicateRecord};
use netcpd::matrix::Matrix;
use netcpd::np_detector::{block_loss, np_fit, BlockAssignment, NpStrategy};
use netcpd::usvt::{usvt, UsvtParams};
use netcpd_oracles as oracle;
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
fn eigh_matches_jacobi_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..40 {
        let n = rng.gen_range(2..=10);
        let m = random_symmetric(n, &mut rng);
        let ed = eigh(&m).unwrap();
        let (jvals, _) = oracle::jacobi_eigh(n, m.data());
        for (a, b) in ed.values.iter().zip(&jvals) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert!(ed.reconstruct().max_abs_diff(&m) < 1e-9);
    }
}

#[test]
fn eigh_matches_charpoly_roots_3x3() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..50 {
        let m = random_symmetric(3, &mut rng);
        let ed = eigh(&m).unwrap();
        let roots = oracle::eig3_charpoly(m.data());
        for (a, b) in ed.values.iter().zip(&roots) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }
}

#[test]
fn cusum_matches_direct_weighted_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..50 {
        let n = rng.gen_range(2..=8);
        let t_max = rng.gen_range(3..=12);
        let mut st = CusumState::new(n);
        let mut raws: Vec<Vec<f64>> = Vec::new();
        for t in 1..=t_max {
            let snap = AdjacencySnapshot::from_upper(n, t as u32, |_, _| rng.gen_bool(0.4));
            raws.push(snap.to_matrix().data().to_vec());
            st.append(&snap).unwrap();
        }
        let views: Vec<&[f64]> = raws.iter().map(|v| v.as_slice()).collect();
        for t in 2..=t_max {
            for s in 1..t {
                let fast = st.cusum(s, t).unwrap();
                let slow = oracle::cusum_direct(n, &views, s, t);
                for (a, b) in fast.entries.data().iter().zip(&slow) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn usvt_matches_reconstruct_then_clip() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..40 {
        let n = rng.gen_range(2..=8);
        let m = random_symmetric(n, &mut rng);
        let (vals, _) = oracle::jacobi_eigh(n, m.data());
        // strictly between two magnitudes so both solvers agree on the cut
        let k = n / 2;
        let tau1 = if k + 1 < n {
            0.5 * (vals[k].abs() + vals[k + 1].abs())
        } else {
            0.5 * vals[k].abs()
        };
        let tau2 = rng.gen_range(0.05..1.0);
        let fast = usvt(&m, UsvtParams::new(tau1, tau2)).unwrap();
        let slow = oracle::usvt_direct(n, m.data(), tau1, tau2);
        for (a, b) in fast.data().iter().zip(&slow) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn rho_estimate_matches_naive_quantile() {
    let spec = ScenarioSpec {
        kind: ScenarioKind::Sbm3,
        n: 30,
        delta: None,
        horizon: 20,
        seed: 77,
    };
    let (snaps, _) = sample_stream(&spec).unwrap();
    let n = 30;
    let t = snaps.len();
    let mut freqs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let c: u32 = snaps.iter().map(|s| s.entry(i, j) as u32).sum();
            freqs.push(c as f64 / t as f64);
        }
    }
    let want = oracle::naive_quantile(&freqs, 0.95).clamp(1.0 / t as f64, 1.0);
    assert_eq!(estimate_rho(&snaps).unwrap(), want);
}

#[test]
fn block_loss_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..30 {
        let n = 5;
        let r0 = rng.gen_range(1..=3);
        let m = random_symmetric(n, &mut rng);
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..r0)).collect();
        let q_raw: Vec<f64> = (0..r0 * r0).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // symmetrize q
        let mut q = Matrix::zeros(r0);
        for a in 0..r0 {
            for b in 0..=a {
                let v = 0.5 * (q_raw[a * r0 + b] + q_raw[b * r0 + a]);
                q[(a, b)] = v;
                q[(b, a)] = v;
            }
        }
        let z = BlockAssignment::new(labels.clone(), r0).unwrap();
        let fast = block_loss(&m, &q, &z).unwrap();
        let slow = oracle::block_loss_direct(n, m.data(), r0, q.data(), &labels);
        assert!((fast - slow).abs() < 1e-12);
    }
}

#[test]
fn np_fit_matches_enumeration_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    for _ in 0..20 {
        let n = 6;
        let m = random_symmetric(n, &mut rng);
        let fit = np_fit(&m, 2, NpStrategy::Exhaustive).unwrap();
        let best = oracle::np_fit_enumeration(n, m.data(), 2);
        assert!((fit.loss - best).abs() < 1e-10);
    }
}

#[test]
fn metrics_match_second_implementation() {
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    for _ in 0..30 {
        let horizon = 200usize;
        let delta = rng.gen_range(1..=horizon);
        let records: Vec<ReplicateRecord> = (0..rng.gen_range(1..=40))
            .map(|k| {
                let fired = rng.gen_bool(0.6);
                let t_raw = fired.then(|| rng.gen_range(2..=2 * horizon));
                let t_tilde = t_raw.map_or(horizon, |t| t.min(horizon));
                ReplicateRecord {
                    seed: k,
                    fired,
                    t_raw,
                    t_tilde,
                    s_hit: None,
                    gate_value: 0.0,
                    score: 0.0,
                }
            })
            .collect();
        let t_tildes: Vec<usize> = records.iter().map(|r| r.t_tilde).collect();
        let fast = metrics(&records, delta, horizon).unwrap();
        let slow = oracle::metrics_direct(&t_tildes, delta);
        assert_eq!(fast, slow);
    }
}
