//! Simulation-level properties of the engine on the three-arm mismatch
//! instance.

use acp_bandit::theory::GaussianPair;
use acp_bandit::{
    run_episode, run_replications, AdaptiveLevelConfig, DistributionSpec, Instance, PolicyConfig,
};

fn mismatch() -> Vec<DistributionSpec> {
    vec![
        DistributionSpec::gaussian(0.10, 0.05).unwrap(),
        DistributionSpec::gaussian(0.00, 0.15).unwrap(),
        DistributionSpec::gaussian(0.04, 0.08).unwrap(),
    ]
}

fn policies() -> [PolicyConfig; 2] {
    let level = AdaptiveLevelConfig::default();
    [PolicyConfig::acp_ucb1(level), PolicyConfig::ucb1(level)]
}

#[test]
fn ledgers_decompose_and_never_decrease() {
    let instance = Instance::new(mismatch(), 0.1).unwrap();
    for policy in policies() {
        for seed in 0..3 {
            let ep = run_episode(&instance, &policy, 2000, seed, false).unwrap();
            let l = &ep.ledger;
            let acp: f64 = l
                .pull_counts
                .iter()
                .zip(instance.acp_gaps())
                .map(|(&n, g)| n as f64 * g)
                .sum();
            let mean: f64 = l
                .pull_counts
                .iter()
                .zip(instance.mean_gaps())
                .map(|(&n, g)| n as f64 * g)
                .sum();
            assert!((l.final_acp() - acp).abs() < 1e-9);
            assert!((l.final_mean() - mean).abs() < 1e-9);
            assert!(l.acp_cum.windows(2).all(|w| w[1] >= w[0]));
            assert!(l.mean_cum.windows(2).all(|w| w[1] >= w[0]));
            assert_eq!(l.pull_counts.iter().sum::<usize>(), 2000);
        }
    }
}

#[test]
fn acp_policy_concentrates_on_upper_tail_arm() {
    let instance = Instance::new(mismatch(), 0.1).unwrap();
    let n = 10_000;
    let res = run_replications(&instance, &policies()[0], n, 20, 99, 4, false).unwrap();
    let best = instance.acp_opt();
    for (j, pulls) in res.mean_pulls.iter().enumerate() {
        let frac = pulls / n as f64;
        if j == best {
            assert!(frac > 0.6, "optimal arm fraction {frac}");
        } else {
            assert!(frac < 0.2, "arm {j} fraction {frac}");
        }
    }
}

#[test]
fn ucb1_acp_regret_grows_at_transfer_slope() {
    let arms = mismatch();
    let instance = Instance::new(arms.clone(), 0.1).unwrap();
    let n = 10_000;
    let res = run_replications(&instance, &policies()[1], n, 20, 5, 4, false).unwrap();
    let (pair, _, _) = GaussianPair::from_arms(&arms, 0.1).unwrap();
    let target = pair.a * pair.delta_sigma - pair.delta_mu;
    let half = n / 2;
    let slope = (res.acp_mean[n - 1] - res.acp_mean[half - 1]) / (n - half) as f64;
    assert!(
        (slope - target).abs() <= 0.25 * target,
        "slope {slope} vs {target}"
    );
}

#[test]
fn parallelism_does_not_change_results() {
    let instance = Instance::new(mismatch(), 0.2).unwrap();
    for policy in policies() {
        let serial = run_replications(&instance, &policy, 500, 7, 3, 1, true).unwrap();
        let parallel = run_replications(&instance, &policy, 500, 7, 3, 6, true).unwrap();
        assert_eq!(serial, parallel);
    }
}

#[test]
fn fixed_arm_regret_is_linear() {
    let instance = Instance::new(mismatch(), 0.1).unwrap();
    let fixed = PolicyConfig::fixed(2, AdaptiveLevelConfig::default());
    let ep = run_episode(&instance, &fixed, 100, 17, false).unwrap();
    assert!((ep.ledger.final_acp() - 100.0 * instance.acp_gaps()[2]).abs() < 1e-9);
}
