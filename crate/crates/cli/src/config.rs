//! Experiment configuration: presets, the key=value file format and flag
//! overrides.
//!
//! A config file holds `key = value` lines, `#` comments, and any number of
//! `[arm]` sections describing one reward distribution each. A `[manifest]`
//! section is skipped, so a run manifest is itself a loadable config.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use acp_bandit::{AdaptiveLevelConfig, DistributionSpec, Family, PolicyConfig, PolicyKind, Warmup};

use crate::error::{io_err, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    MetricComparison,
    AlphaSweep,
    Robustness,
    Custom,
    Theory,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::MetricComparison => "metric-comparison",
            Preset::AlphaSweep => "alpha-sweep",
            Preset::Robustness => "robustness",
            Preset::Custom => "custom",
            Preset::Theory => "theory",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match normalize_key(s).as_str() {
            "metric-comparison" => Some(Preset::MetricComparison),
            "alpha-sweep" => Some(Preset::AlphaSweep),
            "robustness" => Some(Preset::Robustness),
            "custom" => Some(Preset::Custom),
            "theory" => Some(Preset::Theory),
            _ => None,
        }
    }

    fn accepts_arms(&self) -> bool {
        matches!(self, Preset::Custom | Preset::Theory)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarmupSetting {
    PerArm(usize),
    Theoretical,
}

/// A named arm set; experiments run every scenario at every alpha.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub arms: Vec<DistributionSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub horizon: usize,
    pub reps: usize,
    pub alphas: Vec<f64>,
    pub b: f64,
    pub eta: f64,
    pub lambda: f64,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub warmup: WarmupSetting,
    pub rho: f64,
    pub policies: Vec<PolicyKind>,
    pub scenarios: Vec<Scenario>,
    pub seed: u64,
    pub parallelism: usize,
    pub trace_levels: bool,
    pub out: PathBuf,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

fn gaussian(mu: f64, sigma: f64) -> DistributionSpec {
    DistributionSpec::gaussian(mu, sigma).expect("preset arm")
}

/// The three-arm Gaussian instance whose mean and upper-tail optima differ.
pub fn mismatch_arms() -> Vec<DistributionSpec> {
    vec![
        gaussian(0.10, 0.05),
        gaussian(0.00, 0.15),
        gaussian(0.04, 0.08),
    ]
}

const ROBUST_LOC: [f64; 3] = [0.08, 0.00, 0.03];
const ROBUST_SCALE: [f64; 3] = [0.05, 0.16, 0.08];
const ROBUST_T_DOF: [f64; 3] = [3.0, 3.0, 5.0];
const ROBUST_SKEW_DOF: [f64; 3] = [5.0, 5.0, 5.0];
const ROBUST_SKEW: [f64; 3] = [-0.2, 0.6, 0.3];

fn robustness_scenarios() -> Vec<Scenario> {
    let build = |family: &dyn Fn(usize) -> Family| -> Vec<DistributionSpec> {
        (0..3)
            .map(|j| {
                DistributionSpec::new(family(j), ROBUST_LOC[j], ROBUST_SCALE[j])
                    .expect("preset arm")
            })
            .collect()
    };
    vec![
        Scenario {
            name: "gaussian".into(),
            arms: build(&|_| Family::Gaussian),
        },
        Scenario {
            name: "student-t".into(),
            arms: build(&|j| Family::StudentT {
                dof: ROBUST_T_DOF[j],
            }),
        },
        Scenario {
            name: "skew-t".into(),
            arms: build(&|j| Family::SkewStudentT {
                dof: ROBUST_SKEW_DOF[j],
                skew: ROBUST_SKEW[j],
            }),
        },
    ]
}

impl ExperimentConfig {
    /// Parameter block of a preset.
    pub fn preset(preset: Preset) -> Self {
        let mut cfg = Self {
            preset,
            horizon: 10_000,
            reps: 30,
            alphas: vec![0.1],
            b: 1.0,
            eta: 0.01,
            lambda: 1.0,
            alpha_lo: 1e-4,
            alpha_hi: 0.5,
            warmup: WarmupSetting::PerArm(2),
            rho: 1.0,
            policies: vec![PolicyKind::AcpUcb1, PolicyKind::Ucb1],
            scenarios: vec![Scenario {
                name: "gaussian".into(),
                arms: mismatch_arms(),
            }],
            seed: DEFAULT_SEED,
            parallelism: default_parallelism(),
            trace_levels: false,
            out: PathBuf::from("results"),
        };
        match preset {
            Preset::MetricComparison => cfg.reps = 60,
            Preset::AlphaSweep => cfg.alphas = vec![0.30, 0.25, 0.20, 0.15, 0.10, 0.05],
            Preset::Robustness => cfg.scenarios = robustness_scenarios(),
            Preset::Custom => cfg.scenarios = Vec::new(),
            Preset::Theory => {}
        }
        cfg
    }

    /// Builds a config from an optional preset, an optional file and flag
    /// overrides, in increasing precedence.
    pub fn load(
        preset: Option<Preset>,
        file: Option<&Path>,
        overrides: &[(String, String)],
    ) -> Result<Self> {
        Self::load_or(preset, Preset::Custom, file, overrides)
    }

    /// Like [`load`](Self::load), falling back to `fallback` when neither the
    /// caller nor the file names a preset.
    pub fn load_or(
        preset: Option<Preset>,
        fallback: Preset,
        file: Option<&Path>,
        overrides: &[(String, String)],
    ) -> Result<Self> {
        let parsed = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(io_err(path))?;
                parse_config_text(&text, &path.display().to_string())?
            }
            None => RawConfig::default(),
        };
        Self::from_raw(preset, fallback, &parsed, overrides)
    }

    pub fn from_text(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        Self::from_raw(
            None,
            Preset::Custom,
            &parse_config_text(text, "<config>")?,
            overrides,
        )
    }

    fn from_raw(
        preset: Option<Preset>,
        fallback: Preset,
        raw: &RawConfig,
        overrides: &[(String, String)],
    ) -> Result<Self> {
        let named = |key: &str| -> Option<&str> {
            overrides
                .iter()
                .rev()
                .find(|(k, _)| normalize_key(k) == key)
                .map(|(_, v)| v.as_str())
                .or_else(|| {
                    raw.globals
                        .iter()
                        .rev()
                        .find(|e| e.key == key)
                        .map(|e| e.value.as_str())
                })
        };
        let preset = match (preset, named("preset")) {
            (Some(p), _) => p,
            (None, Some(name)) => Preset::parse(name)
                .ok_or_else(|| CliError::Invalid(format!("unknown preset `{name}`")))?,
            (None, None) => fallback,
        };

        let mut cfg = Self::preset(preset);
        for entry in &raw.globals {
            cfg.apply(&entry.key, &entry.value)
                .map_err(|e| located(e, &raw.source_name, entry.line))?;
        }
        if !raw.arms.is_empty() {
            if !preset.accepts_arms() {
                return Err(CliError::Invalid(format!(
                    "preset `{}` fixes its arms; [arm] sections need preset custom or theory",
                    preset.name()
                )));
            }
            cfg.scenarios = build_scenarios(&raw.arms, &raw.source_name)?;
        }
        for (key, value) in overrides {
            cfg.apply(&normalize_key(key), value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one global key.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| {
            CliError::Invalid(format!("key `{key}`: cannot parse `{value}` as {what}"))
        };
        let float = || value.trim().parse::<f64>().map_err(|_| bad("a number"));
        let count = || {
            value
                .trim()
                .parse::<usize>()
                .map_err(|_| bad("a nonnegative integer"))
        };
        match key {
            "preset" => {
                let p = Preset::parse(value).ok_or_else(|| bad("a preset name"))?;
                if p != self.preset {
                    return Err(CliError::Invalid(format!(
                        "preset `{}` conflicts with `{}`",
                        p.name(),
                        self.preset.name()
                    )));
                }
            }
            "horizon" => self.horizon = count()?,
            "reps" => self.reps = count()?,
            "alpha" => {
                self.alphas = split_list(value)
                    .map(|v| v.parse::<f64>().map_err(|_| bad("a list of numbers")))
                    .collect::<Result<Vec<_>>>()?;
            }
            "b" => self.b = float()?,
            "eta" => self.eta = float()?,
            "lambda" => self.lambda = float()?,
            "alpha-lo" => self.alpha_lo = float()?,
            "alpha-hi" => self.alpha_hi = float()?,
            "rho" => self.rho = float()?,
            "warmup" => {
                self.warmup = if value.trim() == "theoretical" {
                    WarmupSetting::Theoretical
                } else {
                    WarmupSetting::PerArm(count()?)
                }
            }
            "policies" => {
                self.policies = split_list(value)
                    .map(|p| {
                        parse_policy(p)
                            .ok_or_else(|| bad("a policy list (acp-ucb1, ucb1, fixed-<arm>)"))
                    })
                    .collect::<Result<Vec<_>>>()?;
            }
            "seed" => {
                self.seed = value
                    .trim()
                    .parse::<u64>()
                    .map_err(|_| bad("an unsigned integer"))?
            }
            "parallelism" => self.parallelism = count()?,
            "trace-levels" => {
                self.trace_levels = parse_bool(value).ok_or_else(|| bad("true or false"))?
            }
            "out" => self.out = PathBuf::from(value.trim()),
            other => return Err(CliError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(CliError::Invalid(msg));
        if self.horizon == 0 {
            return invalid("horizon must be positive".into());
        }
        if self.reps == 0 {
            return invalid("reps must be positive".into());
        }
        if self.parallelism == 0 {
            return invalid("parallelism must be positive".into());
        }
        if self.alphas.is_empty() {
            return invalid("alpha list is empty".into());
        }
        if self.policies.is_empty() {
            return invalid("policy list is empty".into());
        }
        if self.scenarios.is_empty() {
            return invalid("no arms configured; add [arm] sections or choose a preset".into());
        }
        for &alpha in &self.alphas {
            self.level_config(alpha)?;
        }
        for scenario in &self.scenarios {
            if scenario.arms.is_empty() {
                return invalid(format!("scenario `{}` has no arms", scenario.name));
            }
            let k = scenario.arms.len();
            if self.preset == Preset::Theory {
                if let Some(j) = scenario.arms.iter().position(|a| !a.is_gaussian()) {
                    return invalid(format!(
                        "theory needs Gaussian arms; arm {j} of `{}` is not",
                        scenario.name
                    ));
                }
                continue;
            }
            for &kind in &self.policies {
                let policy = self.policy_config(kind, self.alphas[0])?;
                if let PolicyKind::FixedArm(j) = kind {
                    if j >= k {
                        return invalid(format!(
                            "fixed-{j} out of range for {k} arms in `{}`",
                            scenario.name
                        ));
                    }
                    continue;
                }
                let needed = policy.warmup_pulls()? * k;
                if self.horizon < needed {
                    return invalid(format!(
                        "horizon {} shorter than warm-up of {needed} rounds",
                        self.horizon
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn level_config(&self, alpha: f64) -> Result<AdaptiveLevelConfig> {
        Ok(AdaptiveLevelConfig::new(
            alpha,
            self.eta,
            self.lambda,
            self.alpha_lo,
            self.alpha_hi,
        )?)
    }

    pub fn policy_config(&self, kind: PolicyKind, alpha: f64) -> Result<PolicyConfig> {
        let mut policy = PolicyConfig::new(kind, self.level_config(alpha)?);
        policy.b = self.b;
        policy.rho = self.rho;
        policy.warmup = match self.warmup {
            WarmupSetting::PerArm(c) => Warmup::PerArmPulls(c),
            WarmupSetting::Theoretical => Warmup::Theoretical {
                horizon: self.horizon,
            },
        };
        policy.validate()?;
        Ok(policy)
    }

    /// Canonical config text. Output location and thread count are left out:
    /// neither affects results.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "preset = {}", self.preset.name());
        let _ = writeln!(s, "horizon = {}", self.horizon);
        let _ = writeln!(s, "reps = {}", self.reps);
        let alphas: Vec<String> = self.alphas.iter().map(|a| a.to_string()).collect();
        let _ = writeln!(s, "alpha = {}", alphas.join(","));
        let _ = writeln!(s, "b = {}", self.b);
        let _ = writeln!(s, "eta = {}", self.eta);
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "alpha-lo = {}", self.alpha_lo);
        let _ = writeln!(s, "alpha-hi = {}", self.alpha_hi);
        match self.warmup {
            WarmupSetting::PerArm(c) => {
                let _ = writeln!(s, "warmup = {c}");
            }
            WarmupSetting::Theoretical => {
                let _ = writeln!(s, "warmup = theoretical");
            }
        }
        let _ = writeln!(s, "rho = {}", self.rho);
        let policies: Vec<String> = self.policies.iter().map(PolicyKind::name).collect();
        let _ = writeln!(s, "policies = {}", policies.join(","));
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "trace-levels = {}", self.trace_levels);
        if self.preset.accepts_arms() {
            for scenario in &self.scenarios {
                for arm in &scenario.arms {
                    s.push_str("\n[arm]\n");
                    let _ = writeln!(s, "scenario = {}", scenario.name);
                    let _ = writeln!(s, "family = {}", arm.family.name());
                    let _ = writeln!(s, "loc = {}", arm.loc);
                    let _ = writeln!(s, "scale = {}", arm.scale);
                    match arm.family {
                        Family::Gaussian => {}
                        Family::StudentT { dof } => {
                            let _ = writeln!(s, "dof = {dof}");
                        }
                        Family::SkewStudentT { dof, skew } => {
                            let _ = writeln!(s, "dof = {dof}");
                            let _ = writeln!(s, "skew = {skew}");
                        }
                    }
                }
            }
        }
        s
    }
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|v| !v.is_empty())
}

fn parse_bool(value: &str) -> Option<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

pub fn parse_policy(name: &str) -> Option<PolicyKind> {
    match normalize_key(name).as_str() {
        "acp-ucb1" => Some(PolicyKind::AcpUcb1),
        "ucb1" => Some(PolicyKind::Ucb1),
        other => other
            .strip_prefix("fixed-")?
            .parse()
            .ok()
            .map(PolicyKind::FixedArm),
    }
}

fn normalize_key(key: &str) -> String {
    key.trim()
        .trim_start_matches("--")
        .replace('_', "-")
        .to_ascii_lowercase()
}

fn located(err: CliError, source_name: &str, line: usize) -> CliError {
    match err {
        CliError::Parse { .. } => err,
        other => CliError::Parse {
            source_name: source_name.to_string(),
            line,
            message: other.to_string(),
        },
    }
}

#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug, Clone, Default)]
struct RawConfig {
    source_name: String,
    globals: Vec<Entry>,
    arms: Vec<Vec<Entry>>,
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Global,
    Arm,
    Manifest,
}

fn parse_config_text(text: &str, source_name: &str) -> Result<RawConfig> {
    let mut raw = RawConfig {
        source_name: source_name.to_string(),
        ..RawConfig::default()
    };
    let mut section = Section::Global;
    let parse_err = |line: usize, message: String| CliError::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = match name.trim() {
                "arm" => {
                    raw.arms.push(Vec::new());
                    Section::Arm
                }
                "manifest" => Section::Manifest,
                other => return Err(parse_err(lineno, format!("unknown section [{other}]"))),
            };
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(lineno, format!("expected `key = value`, got `{line}`")))?;
        let entry = Entry {
            key: normalize_key(key),
            value: value.trim().to_string(),
            line: lineno,
        };
        match section {
            Section::Global => raw.globals.push(entry),
            Section::Arm => raw.arms.last_mut().expect("arm section opened").push(entry),
            Section::Manifest => {}
        }
    }
    Ok(raw)
}

fn build_scenarios(blocks: &[Vec<Entry>], source_name: &str) -> Result<Vec<Scenario>> {
    let mut scenarios: Vec<Scenario> = Vec::new();
    for block in blocks {
        let first_line = block.first().map(|e| e.line).unwrap_or(0);
        let (name, arm) = parse_arm(block).map_err(|e| located(e, source_name, first_line))?;
        match scenarios.iter_mut().find(|s| s.name == name) {
            Some(s) => s.arms.push(arm),
            None => scenarios.push(Scenario {
                name,
                arms: vec![arm],
            }),
        }
    }
    Ok(scenarios)
}

fn parse_arm(block: &[Entry]) -> Result<(String, DistributionSpec)> {
    let mut scenario = "custom".to_string();
    let (mut family, mut loc, mut scale, mut dof, mut skew) = (None, None, None, None, None);
    for e in block {
        let num = || {
            e.value.parse::<f64>().map_err(|_| {
                CliError::Invalid(format!("arm key `{}`: cannot parse `{}`", e.key, e.value))
            })
        };
        match e.key.as_str() {
            "scenario" => scenario = e.value.clone(),
            "family" => family = Some(e.value.clone()),
            "loc" => loc = Some(num()?),
            "scale" => scale = Some(num()?),
            "dof" => dof = Some(num()?),
            "skew" => skew = Some(num()?),
            other => return Err(CliError::UnknownKey(format!("arm.{other}"))),
        }
    }
    let require = |v: Option<f64>, what: &str| {
        v.ok_or_else(|| CliError::Invalid(format!("arm is missing `{what}`")))
    };
    let family = match family.as_deref().map(normalize_key).as_deref() {
        Some("gaussian") | None => Family::Gaussian,
        Some("student-t") => Family::StudentT {
            dof: require(dof, "dof")?,
        },
        Some("skew-t") => Family::SkewStudentT {
            dof: require(dof, "dof")?,
            skew: require(skew, "skew")?,
        },
        Some(other) => return Err(CliError::Invalid(format!("unknown family `{other}`"))),
    };
    let spec = DistributionSpec::new(family, require(loc, "loc")?, require(scale, "scale")?)?;
    Ok((scenario, spec))
}
