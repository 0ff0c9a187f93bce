//! Running configured experiments and writing CSV results plus a manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use acp_bandit::rng::derive_seed;
use acp_bandit::{run_replications, ExperimentResult, Instance, PolicyKind};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Preset};
use crate::error::{io_err, Result};
use crate::theory_report;

/// Column names of every regret CSV, in order.
pub const CSV_HEADER: &str =
    "experiment,scenario,alpha,policy,aggregate,t,metric,mean,std_err,pull_fractions,seed";

/// Column names of level-trace CSVs.
pub const LEVEL_HEADER: &str = "experiment,policy,replication,seed,arm,update,alpha_level";

pub const MANIFEST_NAME: &str = "manifest.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    AcpRegret,
    MeanRegret,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::AcpRegret => "acp-regret",
            Metric::MeanRegret => "mean-regret",
        }
    }

    fn suffix(&self) -> &'static str {
        match self {
            Metric::AcpRegret => "acp",
            Metric::MeanRegret => "mean",
        }
    }
}

/// Files written by one run, relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
    pub manifest: PathBuf,
    pub config_hash: String,
}

pub fn experiment_id(preset: Preset, scenario: &str, alpha: f64) -> String {
    format!("{}-{}-a{}", preset.name(), scenario, alpha)
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.canonical_text().as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

fn join_fractions(fractions: impl Iterator<Item = f64>) -> String {
    fractions.map(num).collect::<Vec<_>>().join(";")
}

/// Regret CSV body for one experiment and metric, covering all policies.
pub fn render_metric_csv(
    experiment: &str,
    scenario: &str,
    alpha: f64,
    metric: Metric,
    results: &[ExperimentResult],
) -> String {
    let mut s = String::new();
    s.push_str(CSV_HEADER);
    s.push('\n');
    for res in results {
        let policy = res.policy.name();
        let (means, ses, finals) = match metric {
            Metric::AcpRegret => (&res.acp_mean, &res.acp_se, &res.final_acp),
            Metric::MeanRegret => (&res.mean_mean, &res.mean_se, &res.final_mean),
        };
        for t in 1..=res.horizon {
            let _ = writeln!(
                s,
                "{experiment},{scenario},{alpha},{policy},1,{t},{},{},{},{},{}",
                metric.name(),
                num(means[t - 1]),
                num(ses[t - 1]),
                join_fractions(res.pull_fractions[t - 1].iter().copied()),
                res.base_seed
            );
        }
        let n = res.horizon as f64;
        for (r, seed) in res.seeds.iter().enumerate() {
            let _ = writeln!(
                s,
                "{experiment},{scenario},{alpha},{policy},0,{},{},{},{},{},{seed}",
                res.horizon,
                metric.name(),
                num(finals[r]),
                num(0.0),
                join_fractions(res.final_pulls[r].iter().map(|&c| c as f64 / n)),
            );
        }
    }
    s
}

fn render_levels_csv(experiment: &str, res: &ExperimentResult) -> Option<String> {
    let traces = res.level_traces.as_ref()?;
    let mut s = String::new();
    s.push_str(LEVEL_HEADER);
    s.push('\n');
    for (r, per_arm) in traces.iter().enumerate() {
        for (j, trace) in per_arm.iter().enumerate() {
            for (i, level) in trace.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{experiment},{},{r},{},{j},{i},{}",
                    res.policy.name(),
                    res.seeds[r],
                    num(*level)
                );
            }
        }
    }
    Some(s)
}

fn write_file(dir: &Path, name: &str, contents: &str, files: &mut Vec<String>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(io_err(&path))?;
    files.push(name.to_string());
    Ok(())
}

/// Runs every configured experiment and writes its files and manifest.
pub fn run_and_emit(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    if cfg.preset == Preset::Theory {
        return emit_theory(cfg).map(|(out, _)| out);
    }
    fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    let mut files = Vec::new();
    for scenario in &cfg.scenarios {
        for &alpha in &cfg.alphas {
            let instance = Instance::new(scenario.arms.clone(), alpha)?;
            let results = cfg
                .policies
                .iter()
                .map(|&kind| {
                    let policy = cfg.policy_config(kind, alpha)?;
                    Ok(run_replications(
                        &instance,
                        &policy,
                        cfg.horizon,
                        cfg.reps,
                        cfg.seed,
                        cfg.parallelism,
                        cfg.trace_levels && kind == PolicyKind::AcpUcb1,
                    )?)
                })
                .collect::<Result<Vec<_>>>()?;
            let id = experiment_id(cfg.preset, &scenario.name, alpha);
            for metric in [Metric::AcpRegret, Metric::MeanRegret] {
                let body = render_metric_csv(&id, &scenario.name, alpha, metric, &results);
                write_file(
                    &cfg.out,
                    &format!("{id}-{}.csv", metric.suffix()),
                    &body,
                    &mut files,
                )?;
            }
            for res in &results {
                if let Some(body) = render_levels_csv(&id, res) {
                    write_file(
                        &cfg.out,
                        &format!("{id}-{}-levels.csv", res.policy.name()),
                        &body,
                        &mut files,
                    )?;
                }
            }
        }
    }

    finish(cfg, files)
}

/// Writes the theory report and kappa grid of every (scenario, alpha) of
/// `cfg`, whatever its preset. Also returns the reports.
pub fn emit_theory(
    cfg: &ExperimentConfig,
) -> Result<(RunOutput, Vec<theory_report::TheoryReport>)> {
    fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    let reports = theory_report::build_reports(cfg)?;
    let mut files = Vec::new();
    for report in &reports {
        write_file(&cfg.out, &report.text_name, &report.text, &mut files)?;
        write_file(&cfg.out, &report.csv_name, &report.kappa_csv, &mut files)?;
    }
    Ok((finish(cfg, files)?, reports))
}

fn finish(cfg: &ExperimentConfig, files: Vec<String>) -> Result<RunOutput> {
    let hash = config_hash(cfg);
    let manifest = render_manifest(cfg, &hash, &files);
    let manifest_path = cfg.out.join(MANIFEST_NAME);
    fs::write(&manifest_path, manifest).map_err(io_err(&manifest_path))?;
    Ok(RunOutput {
        out_dir: cfg.out.clone(),
        files,
        manifest: manifest_path,
        config_hash: hash,
    })
}

/// Canonical config followed by a `[manifest]` block. Loading the file as a
/// config reproduces the run.
pub fn render_manifest(cfg: &ExperimentConfig, hash: &str, files: &[String]) -> String {
    let mut s = cfg.canonical_text();
    s.push_str("\n[manifest]\n");
    let _ = writeln!(s, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "config-hash = {hash}");
    let _ = writeln!(s, "base-seed = {}", cfg.seed);
    if cfg.preset != Preset::Theory {
        let seeds: Vec<String> = (0..cfg.reps as u64)
            .map(|r| derive_seed(cfg.seed, r).to_string())
            .collect();
        let _ = writeln!(s, "replication-seeds = {}", seeds.join(","));
    }
    for f in files {
        let _ = writeln!(s, "file = {f}");
    }
    s
}
