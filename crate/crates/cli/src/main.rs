use std::path::PathBuf;
use std::process::ExitCode;

use acpb::config::{ExperimentConfig, Preset};
use acpb::output::{emit_theory, run_and_emit};
use acpb::summarize::summarize;
use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "acpb",
    version,
    about = "Conformal upper-tail bandit experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or custom experiment and write CSVs plus a manifest.
    Run(ConfigArgs),
    /// Print and write the closed-form Gaussian comparison report.
    Theory(ConfigArgs),
    /// Print final-round values from regret CSVs.
    Summarize {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// metric-comparison, alpha-sweep, robustness, custom or theory.
    #[arg(long)]
    preset: Option<String>,
    /// Config file (key = value lines, [arm] sections); a manifest works too.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    reps: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    parallelism: Option<String>,
    /// Also write the adaptive level path of every ACP-UCB1 arm.
    #[arg(long)]
    trace_levels: bool,
    /// Target miscoverage, or a comma-separated list.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    alpha_lo: Option<String>,
    #[arg(long)]
    alpha_hi: Option<String>,
    /// Per-arm warm-up pulls, or `theoretical`.
    #[arg(long)]
    warmup: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    /// Comma-separated: acp-ucb1, ucb1, fixed-<arm>.
    #[arg(long)]
    policies: Option<String>,
}

impl ConfigArgs {
    fn load(&self, fallback: Preset) -> anyhow::Result<ExperimentConfig> {
        let preset = self
            .preset
            .as_deref()
            .map(|p| Preset::parse(p).ok_or_else(|| anyhow!("unknown preset `{p}`")))
            .transpose()?;
        let mut overrides = Vec::new();
        let flags = [
            ("seed", &self.seed),
            ("reps", &self.reps),
            ("horizon", &self.horizon),
            ("out", &self.out),
            ("parallelism", &self.parallelism),
            ("alpha", &self.alpha),
            ("b", &self.b),
            ("eta", &self.eta),
            ("lambda", &self.lambda),
            ("alpha-lo", &self.alpha_lo),
            ("alpha-hi", &self.alpha_hi),
            ("warmup", &self.warmup),
            ("rho", &self.rho),
            ("policies", &self.policies),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                overrides.push((key.to_string(), v.clone()));
            }
        }
        if self.trace_levels {
            overrides.push(("trace-levels".to_string(), "true".to_string()));
        }
        Ok(ExperimentConfig::load_or(
            preset,
            fallback,
            self.config.as_deref(),
            &overrides,
        )?)
    }
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.load(Preset::Custom)?;
            let out = run_and_emit(&cfg).context("run failed")?;
            for f in &out.files {
                println!("{}", out.out_dir.join(f).display());
            }
            println!("{}", out.manifest.display());
        }
        Command::Theory(args) => {
            let cfg = args.load(Preset::Theory)?;
            let (_, reports) = emit_theory(&cfg).context("theory report failed")?;
            for (i, report) in reports.iter().enumerate() {
                if i > 0 {
                    println!();
                }
                println!("scenario = {}", report.scenario);
                print!("{}", report.text);
            }
        }
        Command::Summarize { paths } => {
            print!("{}", summarize(&paths)?.render());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
