//! Seeded episode simulation, regret accounting and replication.

use rayon::prelude::*;

use crate::conformal::ArmState;
use crate::dists::{DistributionSpec, PopulationSummary};
use crate::error::{invalid, Error, Result};
use crate::policies::{select_arm, PolicyConfig, PolicyKind};
use crate::rng::{derive_seed, RandomStream};
use crate::special::two_sided_z;

/// A bandit problem at a fixed nominal level.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    arms: Vec<DistributionSpec>,
    alpha: f64,
    summaries: Vec<PopulationSummary>,
    acp_opt: usize,
    mean_opt: usize,
    acp_tie: bool,
    mean_tie: bool,
    acp_gaps: Vec<f64>,
    mean_gaps: Vec<f64>,
}

fn first_max(values: &[f64]) -> (usize, bool) {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = j;
        }
    }
    let tie = values
        .iter()
        .enumerate()
        .any(|(j, &v)| j != best && v == values[best]);
    (best, tie)
}

impl Instance {
    pub fn new(arms: Vec<DistributionSpec>, alpha: f64) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::EmptyArmSet);
        }
        let summaries = arms
            .iter()
            .map(|a| a.population_summary(alpha))
            .collect::<Result<Vec<_>>>()?;
        let acp: Vec<f64> = summaries.iter().map(|s| s.acp_value).collect();
        let means: Vec<f64> = summaries.iter().map(|s| s.mean).collect();
        let (acp_opt, acp_tie) = first_max(&acp);
        let (mean_opt, mean_tie) = first_max(&means);
        let acp_gaps = acp.iter().map(|v| acp[acp_opt] - v).collect();
        let mean_gaps = means.iter().map(|v| means[mean_opt] - v).collect();
        Ok(Self {
            arms,
            alpha,
            summaries,
            acp_opt,
            mean_opt,
            acp_tie,
            mean_tie,
            acp_gaps,
            mean_gaps,
        })
    }

    pub fn arms(&self) -> &[DistributionSpec] {
        &self.arms
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn summaries(&self) -> &[PopulationSummary] {
        &self.summaries
    }

    /// ACP-optimal arm `A`.
    pub fn acp_opt(&self) -> usize {
        self.acp_opt
    }

    /// Mean-optimal arm `M`.
    pub fn mean_opt(&self) -> usize {
        self.mean_opt
    }

    /// Whether the ACP or mean optimum was tied (resolved to the lowest index).
    pub fn ties(&self) -> (bool, bool) {
        (self.acp_tie, self.mean_tie)
    }

    pub fn acp_gaps(&self) -> &[f64] {
        &self.acp_gaps
    }

    pub fn mean_gaps(&self) -> &[f64] {
        &self.mean_gaps
    }
}

/// Per-round cumulative pseudo-regret of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretLedger {
    pub acp_cum: Vec<f64>,
    pub mean_cum: Vec<f64>,
    pub pull_counts: Vec<usize>,
    /// Arm pulled at each round.
    pub choices: Vec<u32>,
}

impl RegretLedger {
    pub fn horizon(&self) -> usize {
        self.choices.len()
    }

    pub fn final_acp(&self) -> f64 {
        self.acp_cum.last().copied().unwrap_or(0.0)
    }

    pub fn final_mean(&self) -> f64 {
        self.mean_cum.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub ledger: RegretLedger,
    pub seed: u64,
    pub policy: PolicyKind,
    /// Adaptive level path of each arm, when requested.
    pub level_traces: Option<Vec<Vec<f64>>>,
}

/// Simulates one episode of `horizon` rounds.
///
/// Arm `j` draws from its own stream `(seed, j)`, so two policies run with
/// the same seed see the same reward sequence per arm.
pub fn run_episode(
    instance: &Instance,
    policy: &PolicyConfig,
    horizon: usize,
    seed: u64,
    trace_levels: bool,
) -> Result<EpisodeResult> {
    policy.validate()?;
    let k = instance.num_arms();
    let warmup = match policy.kind {
        PolicyKind::FixedArm(j) if j >= k => {
            return Err(invalid(
                "arm",
                format!("fixed arm {j} out of range for {k} arms"),
            ));
        }
        PolicyKind::FixedArm(_) => 0,
        _ => policy.warmup_pulls()? * k,
    };
    if horizon < warmup.max(1) {
        return Err(Error::HorizonTooShort {
            horizon,
            needed: warmup.max(1),
        });
    }

    let level = policy.level.with_alpha(instance.alpha())?;
    let mut states: Vec<ArmState> = (0..k)
        .map(|_| {
            let st = ArmState::for_config(&level);
            if trace_levels {
                st.with_level_trace()
            } else {
                st
            }
        })
        .collect();
    let mut streams: Vec<RandomStream> =
        (0..k as u64).map(|j| RandomStream::new(seed, j)).collect();

    let mut ledger = RegretLedger {
        acp_cum: Vec::with_capacity(horizon),
        mean_cum: Vec::with_capacity(horizon),
        pull_counts: vec![0; k],
        choices: Vec::with_capacity(horizon),
    };
    let (mut acp_total, mut mean_total) = (0.0, 0.0);
    for t in 1..=horizon {
        let j = select_arm(policy, &states, t)?;
        let y = instance.arms()[j].sample(&mut streams[j]);
        match policy.kind {
            PolicyKind::AcpUcb1 => {
                states[j].observe(y, &level)?;
            }
            _ => states[j].push_reward(y),
        }
        acp_total += instance.acp_gaps()[j];
        mean_total += instance.mean_gaps()[j];
        ledger.acp_cum.push(acp_total);
        ledger.mean_cum.push(mean_total);
        ledger.pull_counts[j] += 1;
        ledger.choices.push(j as u32);
    }

    let level_traces = trace_levels.then(|| {
        states
            .iter()
            .map(|s| s.level_trace().map(<[f64]>::to_vec).unwrap_or_default())
            .collect()
    });
    Ok(EpisodeResult {
        ledger,
        seed,
        policy: policy.kind,
        level_traces,
    })
}

/// Gaussian utility `mu + kappa * sigma` for each arm.
pub fn kappa_utilities(instance: &Instance, kappa: f64) -> Result<Vec<f64>> {
    let a = two_sided_z(instance.alpha())?;
    if !(kappa >= 0.0 && kappa <= a) {
        return Err(invalid("kappa", format!("{kappa} outside [0, {a}]")));
    }
    instance
        .arms()
        .iter()
        .enumerate()
        .map(|(j, arm)| {
            if arm.is_gaussian() {
                Ok(arm.loc + kappa * arm.scale)
            } else {
                Err(Error::NonGaussian { arm: j })
            }
        })
        .collect()
}

/// Pseudo-regret of a pull allocation under the utility at level `kappa`.
pub fn kappa_regret(instance: &Instance, pull_counts: &[usize], kappa: f64) -> Result<f64> {
    let v = kappa_utilities(instance, kappa)?;
    if pull_counts.len() != v.len() {
        return Err(invalid(
            "pull_counts",
            format!("{} counts for {} arms", pull_counts.len(), v.len()),
        ));
    }
    let best = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(v.iter()
        .zip(pull_counts)
        .map(|(vj, &n)| (best - vj) * n as f64)
        .sum())
}

/// Aggregates over Monte Carlo replications.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub policy: PolicyKind,
    pub horizon: usize,
    pub base_seed: u64,
    /// Seed of each replication, in replication order.
    pub seeds: Vec<u64>,
    pub acp_mean: Vec<f64>,
    pub acp_se: Vec<f64>,
    pub mean_mean: Vec<f64>,
    pub mean_se: Vec<f64>,
    /// `pull_fractions[t - 1][j]`: average of `T_j(t) / t` across replications.
    pub pull_fractions: Vec<Vec<f64>>,
    /// Average final pull count per arm.
    pub mean_pulls: Vec<f64>,
    pub final_acp: Vec<f64>,
    pub final_mean: Vec<f64>,
    /// Final pull counts of each replication.
    pub final_pulls: Vec<Vec<usize>>,
    pub level_traces: Option<Vec<Vec<Vec<f64>>>>,
}

impl ExperimentResult {
    pub fn n_reps(&self) -> usize {
        self.seeds.len()
    }
}

fn mean_and_se(sum: f64, sum_sq_dev: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    let se = if n > 1 {
        (sum_sq_dev / (nf - 1.0)).sqrt() / nf.sqrt()
    } else {
        0.0
    };
    (mean, se)
}

/// Runs `n_reps` seeded episodes on up to `parallelism` threads.
///
/// Replication `r` uses seed `derive_seed(base_seed, r)`. Episodes are
/// reduced in replication order, so the output does not depend on
/// `parallelism`.
pub fn run_replications(
    instance: &Instance,
    policy: &PolicyConfig,
    horizon: usize,
    n_reps: usize,
    base_seed: u64,
    parallelism: usize,
    trace_levels: bool,
) -> Result<ExperimentResult> {
    if n_reps == 0 {
        return Err(invalid("n_reps", "need at least one replication"));
    }
    let seeds: Vec<u64> = (0..n_reps as u64)
        .map(|r| derive_seed(base_seed, r))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    let episodes: Vec<EpisodeResult> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| run_episode(instance, policy, horizon, seed, trace_levels))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(aggregate(
        instance.num_arms(),
        policy.kind,
        horizon,
        base_seed,
        seeds,
        episodes,
    ))
}

fn aggregate(
    k: usize,
    policy: PolicyKind,
    horizon: usize,
    base_seed: u64,
    seeds: Vec<u64>,
    episodes: Vec<EpisodeResult>,
) -> ExperimentResult {
    let r = episodes.len();
    let rf = r as f64;
    let column_stats = |pick: &dyn Fn(&RegretLedger) -> &[f64]| -> (Vec<f64>, Vec<f64>) {
        let mut means = Vec::with_capacity(horizon);
        let mut ses = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let sum: f64 = episodes.iter().map(|e| pick(&e.ledger)[t]).sum();
            let m = sum / rf;
            let dev: f64 = episodes
                .iter()
                .map(|e| (pick(&e.ledger)[t] - m).powi(2))
                .sum();
            let (mean, se) = mean_and_se(sum, dev, r);
            means.push(mean);
            ses.push(se);
        }
        (means, ses)
    };
    let (acp_mean, acp_se) = column_stats(&|l| &l.acp_cum);
    let (mean_mean, mean_se) = column_stats(&|l| &l.mean_cum);

    let mut pull_fractions = vec![vec![0.0; k]; horizon];
    for e in &episodes {
        let mut counts = vec![0usize; k];
        for (t, &j) in e.ledger.choices.iter().enumerate() {
            counts[j as usize] += 1;
            let row = &mut pull_fractions[t];
            for (frac, &c) in row.iter_mut().zip(&counts) {
                *frac += c as f64 / (t + 1) as f64;
            }
        }
    }
    for row in &mut pull_fractions {
        for f in row.iter_mut() {
            *f /= rf;
        }
    }
    let mean_pulls = (0..k)
        .map(|j| {
            episodes
                .iter()
                .map(|e| e.ledger.pull_counts[j] as f64)
                .sum::<f64>()
                / rf
        })
        .collect();
    let final_acp = episodes.iter().map(|e| e.ledger.final_acp()).collect();
    let final_mean = episodes.iter().map(|e| e.ledger.final_mean()).collect();
    let final_pulls = episodes
        .iter()
        .map(|e| e.ledger.pull_counts.clone())
        .collect();
    let level_traces = if episodes.iter().all(|e| e.level_traces.is_some()) {
        Some(
            episodes
                .into_iter()
                .filter_map(|e| e.level_traces)
                .collect(),
        )
    } else {
        None
    };

    ExperimentResult {
        policy,
        horizon,
        base_seed,
        seeds,
        acp_mean,
        acp_se,
        mean_mean,
        mean_se,
        pull_fractions,
        mean_pulls,
        final_acp,
        final_mean,
        final_pulls,
        level_traces,
    }
}
