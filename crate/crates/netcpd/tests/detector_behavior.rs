//! Monte Carlo behaviour checks for the detectors on synthetic streams.

use netcpd::detector::{run, run_multi, DetectorConfig, Mode, TauRule};
use netcpd::generators::{sample_stream_with, ScenarioKind, ScenarioSpec};
use netcpd::np_detector::{np_run, NpEstimator, NpStrategy};

fn cfg(rho_hat: f64, c1: f64) -> DetectorConfig {
    DetectorConfig {
        mode: Mode::AlphaControl { alpha: 0.05 },
        c_gate: 1.0,
        c1,
        rho_hat,
        tau_rule: TauRule::Practical,
        use_absolute_inner_product: false,
        max_time: None,
    }
}

fn custom_spec(
    theta_before: Vec<Vec<f64>>,
    theta_after: Vec<Vec<f64>>,
    delta: Option<usize>,
    horizon: usize,
    seed: u64,
) -> ScenarioSpec {
    let n = theta_before.len();
    ScenarioSpec {
        kind: ScenarioKind::Custom {
            theta_before,
            theta_after,
        },
        n,
        delta,
        horizon,
        seed,
    }
}

fn two_block(n: usize, within: f64, between: f64) -> Vec<Vec<f64>> {
    let half = n / 2;
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if (i < half) == (j < half) {
                        within
                    } else {
                        between
                    }
                })
                .collect()
        })
        .collect()
}

/// Sparse-to-dense 2-block jump at a scale the NP detector must catch.
#[test]
fn np_detector_fires_after_the_change_in_most_replicates() {
    let n = 8;
    let delta = 20;
    let horizon = 60;
    let est = NpEstimator {
        r0: 2,
        strategy: NpStrategy::Exhaustive,
    };
    let config = cfg(0.99, 1.0);
    let mut hits = 0;
    let mut early = 0;
    for rep in 0..50u64 {
        let spec = custom_spec(
            two_block(n, 0.01, 0.01),
            two_block(n, 0.99, 0.01),
            Some(delta),
            horizon,
            rep,
        );
        let (snaps, _) = sample_stream_with(&spec, 1000 + rep).unwrap();
        let out = np_run(snaps, &config, &est).unwrap();
        match out.t_raw {
            Some(t) if t >= delta => hits += 1,
            Some(_) => early += 1,
            None => {}
        }
    }
    assert!(hits >= 45, "only {hits}/50 replicates fired after the change");
    assert!(early <= 2, "{early}/50 replicates fired before the change");
}

/// The exhaustive fit dominates a deliberately weak alternating fit, so
/// exhaustive should fire no later than alternating in at least half of
/// paired replicates.
#[test]
fn exhaustive_np_fires_no_later_than_crippled_alternating() {
    let n = 8;
    let delta = 20;
    let horizon = 60;
    let exact = NpEstimator {
        r0: 2,
        strategy: NpStrategy::Exhaustive,
    };
    let weak = NpEstimator {
        r0: 2,
        strategy: NpStrategy::Alternating {
            restarts: 1,
            max_iters: 1,
        },
    };
    let config = cfg(0.9, 1.0);
    let mut no_later = 0;
    let reps = 20u64;
    for rep in 0..reps {
        let spec = custom_spec(
            two_block(n, 0.05, 0.05),
            two_block(n, 0.85, 0.10),
            Some(delta),
            horizon,
            rep,
        );
        let (snaps, _) = sample_stream_with(&spec, 2000 + rep).unwrap();
        let a = np_run(snaps.clone(), &config, &exact).unwrap();
        let b = np_run(snaps, &config, &weak).unwrap();
        let ta = a.t_raw.unwrap_or(usize::MAX);
        let tb = b.t_raw.unwrap_or(usize::MAX);
        if ta <= tb {
            no_later += 1;
        }
    }
    assert!(
        2 * no_later >= reps,
        "exhaustive beat alternating in only {no_later}/{reps} pairs"
    );
}

/// Two large jumps in sequence: the restart-on-detection loop should fire
/// once per jump, with segment-relative raw times that stack up past each
/// change point.
#[test]
fn run_multi_catches_two_changes() {
    let n = 16;
    let seg = 40;
    // three stationary regimes, jumps at raw times 40 and 80
    let thetas = [
        two_block(n, 0.60, 0.10),
        two_block(n, 0.10, 0.60),
        two_block(n, 0.60, 0.10),
    ];
    let mut snaps = Vec::new();
    for (k, th) in thetas.iter().enumerate() {
        let spec = custom_spec(th.clone(), th.clone(), None, seg, 7);
        let (mut part, _) = sample_stream_with(&spec, 42 + k as u64).unwrap();
        snaps.append(&mut part);
    }
    let config = cfg(0.6, 1.0);
    let outcomes = run_multi(snaps, &config).unwrap();
    let fired: Vec<usize> = outcomes
        .iter()
        .filter(|o| o.fired)
        .map(|o| o.t_raw.unwrap())
        .collect();
    assert!(fired.len() >= 2, "expected two firings, got {fired:?}");
    // first firing strictly after the first jump
    assert!(fired[0] > seg && fired[0] <= 2 * seg, "first firing {fired:?}");
    // cumulative time of the second firing lands after the second jump
    let second_cum = fired[0] + fired[1];
    assert!(second_cum > 2 * seg, "second firing too early {fired:?}");
}

/// On a null stream with a tight horizon the USVT detector stays quiet.
#[test]
fn usvt_detector_rarely_fires_on_null_streams() {
    let mut fired = 0;
    for rep in 0..20u64 {
        let spec = ScenarioSpec {
            kind: ScenarioKind::Sbm3,
            n: 30,
            delta: None,
            horizon: 80,
            seed: rep,
        };
        let (snaps, _) = sample_stream_with(&spec, 3000 + rep).unwrap();
        let out = run(snaps, &cfg(0.05, 1.5)).unwrap();
        if out.fired {
            fired += 1;
        }
    }
    assert!(fired <= 2, "{fired}/20 null streams fired");
}
