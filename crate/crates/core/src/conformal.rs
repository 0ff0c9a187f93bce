//! Per-arm conformal endpoints and the localized adaptive level.
//!
//! For an arm with observations `Y_1..Y_m` the endpoint is built in three
//! steps: empirical central anchors `q_low`, `q_high`; recomputed scores of all
//! `m` observations against those anchors; and the empirical `1 - level`
//! quantile of the scores as a correction added to both anchors.

use crate::empquant::{kth_smallest, quantile_rank, raw_score, Sample};
use crate::error::{check_open_unit, invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveLevelConfig {
    /// Nominal miscoverage `alpha`.
    pub alpha_target: f64,
    /// Step size of the level update.
    pub eta: f64,
    /// Localization radius multiplier.
    pub lambda: f64,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
}

impl Default for AdaptiveLevelConfig {
    fn default() -> Self {
        Self {
            alpha_target: 0.1,
            eta: 0.01,
            lambda: 1.0,
            alpha_lo: 1e-4,
            alpha_hi: 0.5,
        }
    }
}

impl AdaptiveLevelConfig {
    pub fn new(
        alpha_target: f64,
        eta: f64,
        lambda: f64,
        alpha_lo: f64,
        alpha_hi: f64,
    ) -> Result<Self> {
        let cfg = Self {
            alpha_target,
            eta,
            lambda,
            alpha_lo,
            alpha_hi,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_alpha(self, alpha_target: f64) -> Result<Self> {
        Self::new(
            alpha_target,
            self.eta,
            self.lambda,
            self.alpha_lo,
            self.alpha_hi,
        )
    }

    pub fn validate(&self) -> Result<()> {
        check_open_unit(self.alpha_lo)?;
        check_open_unit(self.alpha_hi)?;
        check_open_unit(self.alpha_target)?;
        if !(self.alpha_lo <= self.alpha_target && self.alpha_target <= self.alpha_hi) {
            return Err(invalid(
                "alpha",
                format!(
                    "{} outside projection interval [{}, {}]",
                    self.alpha_target, self.alpha_lo, self.alpha_hi
                ),
            ));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(invalid("eta", format!("{} must be positive", self.eta)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(invalid(
                "lambda",
                format!("{} must be nonnegative", self.lambda),
            ));
        }
        Ok(())
    }

    /// Step size at local time `s`. Constant for now; schedules hook in here.
    pub fn step_size(&self, _s: usize) -> f64 {
        self.eta
    }

    pub fn tau_low(&self) -> f64 {
        0.5 * self.alpha_target
    }

    pub fn tau_high(&self) -> f64 {
        1.0 - 0.5 * self.alpha_target
    }
}

/// Localization radius `sqrt(log s / s)`.
pub fn localization_radius(s: usize) -> f64 {
    let s = s as f64;
    (s.ln() / s).sqrt()
}

/// Empirical conformal interval of one arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalEndpoint {
    pub q_low_hat: f64,
    pub q_high_hat: f64,
    pub correction: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Endpoint from empirical anchors at `(tau_low, tau_high)` and correction
/// level `level`.
pub fn endpoint_from_sample(
    sample: &Sample,
    tau_low: f64,
    tau_high: f64,
    level: f64,
) -> Result<ConformalEndpoint> {
    if sample.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            have: sample.len(),
        });
    }
    let q_low_hat = sample.quantile(tau_low)?;
    let q_high_hat = sample.quantile(tau_high)?;
    endpoint_with_anchors(sample, q_low_hat, q_high_hat, level)
}

/// Endpoint using caller-supplied anchors; with population anchors the
/// correction is the empirical quantile of the oracle scores.
pub fn endpoint_with_anchors(
    sample: &Sample,
    q_low: f64,
    q_high: f64,
    level: f64,
) -> Result<ConformalEndpoint> {
    check_open_unit(level)?;
    if q_low > q_high {
        return Err(invalid("q_low", format!("{q_low} exceeds q_high {q_high}")));
    }
    let k = quantile_rank(sample.len(), 1.0 - level)?;
    let mut scores: Vec<f64> = sample
        .values()
        .iter()
        .map(|&y| raw_score(y, q_low, q_high))
        .collect();
    let correction = kth_smallest(&mut scores, k);
    Ok(ConformalEndpoint {
        q_low_hat: q_low,
        q_high_hat: q_high,
        correction,
        lower: q_low - correction,
        upper: q_high + correction,
    })
}

/// Endpoint of an arm at its current adaptive level.
pub fn build_endpoint(state: &ArmState, tau_low: f64, tau_high: f64) -> Result<ConformalEndpoint> {
    endpoint_from_sample(&state.sample, tau_low, tau_high, state.alpha_level)
}

/// True when `y_new` falls outside the closed interval `[lower, upper]`.
pub fn miss_indicator(endpoint: &ConformalEndpoint, y_new: f64) -> bool {
    y_new < endpoint.lower || y_new > endpoint.upper
}

/// Projected level update at local time `s`.
pub fn update_level(cfg: &AdaptiveLevelConfig, alpha_cur: f64, err: bool, s: usize) -> Result<f64> {
    if s < 2 {
        return Err(invalid("s", format!("local time {s} must be at least 2")));
    }
    if !(alpha_cur >= cfg.alpha_lo && alpha_cur <= cfg.alpha_hi) {
        return Err(invalid(
            "alpha_cur",
            format!("{alpha_cur} outside [{}, {}]", cfg.alpha_lo, cfg.alpha_hi),
        ));
    }
    let radius = cfg.lambda * localization_radius(s);
    let lo = cfg.alpha_lo.max(cfg.alpha_target - radius);
    let hi = cfg.alpha_hi.min(cfg.alpha_target + radius);
    if lo > hi {
        return Err(invalid(
            "lambda",
            format!("empty projection window [{lo}, {hi}] at s = {s}"),
        ));
    }
    let miss = if err { 1.0 } else { 0.0 };
    let proposal = alpha_cur + cfg.step_size(s) * (cfg.alpha_target - miss);
    Ok(proposal.clamp(lo, hi))
}

/// Local history of one arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmState {
    sample: Sample,
    sum: f64,
    alpha_level: f64,
    err_history: Vec<bool>,
    endpoint: Option<ConformalEndpoint>,
    level_trace: Option<Vec<f64>>,
}

impl ArmState {
    /// Fresh arm whose level starts at `alpha_init`.
    pub fn new(alpha_init: f64) -> Self {
        Self {
            sample: Sample::new(),
            sum: 0.0,
            alpha_level: alpha_init,
            err_history: Vec::new(),
            endpoint: None,
            level_trace: None,
        }
    }

    pub fn for_config(cfg: &AdaptiveLevelConfig) -> Self {
        Self::new(cfg.alpha_target)
    }

    /// Record every level this arm takes from now on.
    pub fn with_level_trace(mut self) -> Self {
        self.level_trace = Some(vec![self.alpha_level]);
        self
    }

    pub fn pulls(&self) -> usize {
        self.sample.len()
    }

    pub fn sample(&self) -> &Sample {
        &self.sample
    }

    pub fn mean(&self) -> Option<f64> {
        (self.pulls() > 0).then(|| self.sum / self.pulls() as f64)
    }

    pub fn alpha_level(&self) -> f64 {
        self.alpha_level
    }

    pub fn err_history(&self) -> &[bool] {
        &self.err_history
    }

    /// Interval for the arm's next pull, once it has two observations.
    pub fn endpoint(&self) -> Option<&ConformalEndpoint> {
        self.endpoint.as_ref()
    }

    pub fn level_trace(&self) -> Option<&[f64]> {
        self.level_trace.as_deref()
    }

    /// Adds a reward without any conformal bookkeeping.
    pub fn push_reward(&mut self, y: f64) {
        self.sample.push(y);
        self.sum += y;
    }

    /// Full update after observing `y`: score the miss against the current
    /// interval, move the level, then rebuild the interval for the next pull.
    /// Returns the miss indicator when an interval was available.
    pub fn observe(&mut self, y: f64, cfg: &AdaptiveLevelConfig) -> Result<Option<bool>> {
        let miss = match self.endpoint {
            Some(ep) => {
                let err = miss_indicator(&ep, y);
                let s = self.pulls() + 1;
                self.alpha_level = update_level(cfg, self.alpha_level, err, s)?;
                self.err_history.push(err);
                if let Some(trace) = self.level_trace.as_mut() {
                    trace.push(self.alpha_level);
                }
                Some(err)
            }
            None => None,
        };
        self.push_reward(y);
        if self.pulls() >= 2 {
            self.endpoint = Some(build_endpoint(self, cfg.tau_low(), cfg.tau_high())?);
        }
        Ok(miss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dists::DistributionSpec;
    use crate::empquant::{empirical_quantile, recompute_scores};
    use crate::rng::RandomStream;

    fn state_with(values: &[f64], level: f64) -> ArmState {
        let mut st = ArmState::new(level);
        for &v in values {
            st.push_reward(v);
        }
        st
    }

    #[test]
    fn hand_enumerated_endpoint() {
        let st = state_with(&[0.0, 1.0, 2.0, 3.0], 0.5);
        let ep = build_endpoint(&st, 0.25, 0.75).unwrap();
        assert_eq!(ep.q_low_hat, 0.0);
        assert_eq!(ep.q_high_hat, 2.0);
        assert_eq!(ep.correction, 0.0);
        assert_eq!(ep.upper, 2.0);
        assert_eq!(ep.lower, 0.0);
    }

    #[test]
    fn degenerate_sample_collapses() {
        let st = state_with(&[1.5; 7], 0.1);
        let ep = build_endpoint(&st, 0.05, 0.95).unwrap();
        assert_eq!(ep.upper, 1.5);
        assert_eq!(ep.lower, 1.5);
    }

    #[test]
    fn needs_two_observations() {
        let st = state_with(&[1.0], 0.1);
        assert!(matches!(
            build_endpoint(&st, 0.05, 0.95),
            Err(Error::InsufficientData { needed: 2, have: 1 })
        ));
    }

    #[test]
    fn population_anchors_use_oracle_scores() {
        let sample = Sample::from_values([0.3, -1.7, 0.2, 2.4, -0.1, 0.9]);
        let (lo, hi, level) = (-1.644, 1.644, 0.3);
        let ep = endpoint_with_anchors(&sample, lo, hi, level).unwrap();
        let oracle = recompute_scores(&sample, lo, hi).unwrap();
        assert_eq!(
            ep.correction,
            empirical_quantile(&oracle, 1.0 - level).unwrap()
        );
        assert!((ep.upper - ep.q_high_hat - ep.correction).abs() < 1e-15);
        assert!((ep.q_low_hat - ep.lower - ep.correction).abs() < 1e-15);
    }

    #[test]
    fn miss_indicator_boundaries() {
        let ep = ConformalEndpoint {
            q_low_hat: -1.0,
            q_high_hat: 1.0,
            correction: 0.25,
            lower: -1.25,
            upper: 1.25,
        };
        assert!(!miss_indicator(&ep, 0.3));
        assert!(!miss_indicator(&ep, ep.upper));
        assert!(!miss_indicator(&ep, ep.lower));
        assert!(miss_indicator(&ep, ep.upper + 1e-9));
        assert!(miss_indicator(&ep, ep.lower - 1e-9));
    }

    #[test]
    fn update_level_examples() {
        let cfg = AdaptiveLevelConfig::new(0.1, 0.01, 1.0, 1e-4, 0.5).unwrap();
        assert!((localization_radius(100) - 0.21460).abs() < 1e-5);
        assert!((update_level(&cfg, 0.1, false, 100).unwrap() - 0.101).abs() < 1e-15);
        assert!((update_level(&cfg, 0.1, true, 100).unwrap() - 0.091).abs() < 1e-15);

        let tight = AdaptiveLevelConfig::new(0.1, 0.01, 0.01, 1e-4, 0.5).unwrap();
        let got = update_level(&tight, 0.1003, false, 10_000).unwrap();
        let want = 0.1 + 0.01 * (10_000f64.ln() / 10_000.0).sqrt();
        assert_eq!(got, want);
        assert!((got - 0.100304).abs() < 1e-6);
    }

    #[test]
    fn update_level_rejects_bad_inputs() {
        let cfg = AdaptiveLevelConfig::default();
        assert!(update_level(&cfg, 0.1, false, 1).is_err());
        assert!(update_level(&cfg, 0.9, false, 10).is_err());
    }

    #[test]
    fn config_requires_alpha_inside_projection() {
        assert!(AdaptiveLevelConfig::new(0.6, 0.01, 1.0, 1e-4, 0.5).is_err());
        assert!(AdaptiveLevelConfig::new(0.1, 0.0, 1.0, 1e-4, 0.5).is_err());
        assert!(AdaptiveLevelConfig::new(0.1, 0.01, -1.0, 1e-4, 0.5).is_err());
    }

    #[test]
    fn observe_keeps_invariants() {
        let cfg = AdaptiveLevelConfig::default();
        let spec = DistributionSpec::gaussian(0.0, 1.0).unwrap();
        let mut rng = RandomStream::new(3, 0);
        let mut st = ArmState::for_config(&cfg).with_level_trace();
        for _ in 0..500 {
            st.observe(spec.sample(&mut rng), &cfg).unwrap();
            let s = st.pulls();
            let a = st.alpha_level();
            assert!(a >= cfg.alpha_lo && a <= cfg.alpha_hi);
            if s >= 3 {
                let r = cfg.lambda * localization_radius(s);
                assert!(a >= cfg.alpha_target - r && a <= cfg.alpha_target + r);
            }
            if let Some(ep) = st.endpoint() {
                assert!((ep.upper - ep.q_high_hat - ep.correction).abs() < 1e-12);
            }
        }
        assert_eq!(st.err_history().len(), 498);
        assert_eq!(st.level_trace().unwrap().len(), 499);
    }

    #[test]
    fn self_coverage_tracks_alpha() {
        let cfg = AdaptiveLevelConfig::default();
        let spec = DistributionSpec::gaussian(0.1, 0.05).unwrap();
        let mut rng = RandomStream::new(2024, 0);
        let mut st = ArmState::for_config(&cfg);
        for _ in 0..5000 {
            st.observe(spec.sample(&mut rng), &cfg).unwrap();
        }
        let errs = st.err_history();
        let tail = &errs[errs.len() - 2500..];
        let rate = tail.iter().filter(|&&e| e).count() as f64 / tail.len() as f64;
        assert!((rate - 0.1).abs() <= 0.02, "trailing miss rate {rate}");
    }
}
