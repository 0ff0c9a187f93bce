//! Arm-selection rules.

use crate::conformal::{AdaptiveLevelConfig, ArmState};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    /// Conformal upper endpoint plus a `b sqrt(log t / T)` bonus.
    AcpUcb1,
    /// Mean-based benchmark, `mean + sqrt(2 log t / T)`.
    Ucb1,
    /// Always the same arm.
    FixedArm(usize),
}

impl PolicyKind {
    pub fn name(&self) -> String {
        match self {
            PolicyKind::AcpUcb1 => "acp-ucb1".to_string(),
            PolicyKind::Ucb1 => "ucb1".to_string(),
            PolicyKind::FixedArm(j) => format!("fixed-{j}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Warmup {
    /// Fixed number of round-robin pulls per arm.
    PerArmPulls(usize),
    /// `s_loc(n)` for the given horizon, using the policy's `rho`.
    Theoretical { horizon: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Exploration coefficient of the ACP index.
    pub b: f64,
    pub warmup: Warmup,
    pub level: AdaptiveLevelConfig,
    /// Local regularity radius, used only by the theoretical warm-up.
    pub rho: f64,
}

impl PolicyConfig {
    /// Experimental defaults: `b = 1`, two round-robin pulls per arm.
    pub fn new(kind: PolicyKind, level: AdaptiveLevelConfig) -> Self {
        Self {
            kind,
            b: 1.0,
            warmup: Warmup::PerArmPulls(2),
            level,
            rho: 1.0,
        }
    }

    pub fn acp_ucb1(level: AdaptiveLevelConfig) -> Self {
        Self::new(PolicyKind::AcpUcb1, level)
    }

    pub fn ucb1(level: AdaptiveLevelConfig) -> Self {
        Self::new(PolicyKind::Ucb1, level)
    }

    pub fn fixed(arm: usize, level: AdaptiveLevelConfig) -> Self {
        Self::new(PolicyKind::FixedArm(arm), level)
    }

    pub fn validate(&self) -> Result<()> {
        self.level.validate()?;
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(invalid("b", format!("{} must be nonnegative", self.b)));
        }
        let pulls = self.warmup_pulls()?;
        if self.kind == PolicyKind::AcpUcb1 && pulls < 2 {
            return Err(invalid(
                "warmup",
                format!("ACP-UCB1 needs at least 2 warm-up pulls, got {pulls}"),
            ));
        }
        if self.kind == PolicyKind::Ucb1 && pulls < 1 {
            return Err(invalid("warmup", "UCB1 needs at least 1 warm-up pull"));
        }
        Ok(())
    }

    /// Per-arm warm-up pulls.
    pub fn warmup_pulls(&self) -> Result<usize> {
        match self.warmup {
            Warmup::PerArmPulls(c) => Ok(c),
            Warmup::Theoretical { horizon } => theoretical_warmup(horizon, self.b, self.rho),
        }
    }
}

/// Decomposed index value of one arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexBreakdown {
    pub exploit: f64,
    pub bonus: f64,
    pub total: f64,
}

impl IndexBreakdown {
    fn new(exploit: f64, bonus: f64) -> Self {
        Self {
            exploit,
            bonus,
            total: exploit + bonus,
        }
    }
}

fn check_round(t: usize) -> Result<()> {
    if t < 2 {
        return Err(invalid("t", format!("round {t} must be at least 2")));
    }
    Ok(())
}

/// ACP-UCB1 index from an upper endpoint and a pull count.
pub fn acp_index_value(upper: f64, t: usize, b: f64, pulls: usize) -> Result<IndexBreakdown> {
    check_round(t)?;
    if pulls == 0 {
        return Err(Error::InsufficientData { needed: 1, have: 0 });
    }
    Ok(IndexBreakdown::new(
        upper,
        b * ((t as f64).ln() / pulls as f64).sqrt(),
    ))
}

/// ACP-UCB1 index of an arm at round `t`, using the interval the arm holds
/// for its next pull.
pub fn acp_index(state: &ArmState, t: usize, b: f64) -> Result<IndexBreakdown> {
    let endpoint = state.endpoint().ok_or(Error::InsufficientData {
        needed: 2,
        have: state.pulls(),
    })?;
    acp_index_value(endpoint.upper, t, b, state.pulls())
}

pub fn ucb1_index(mean_hat: f64, t: usize, pulls: usize) -> Result<IndexBreakdown> {
    check_round(t)?;
    if pulls == 0 {
        return Err(Error::InsufficientData { needed: 1, have: 0 });
    }
    Ok(IndexBreakdown::new(
        mean_hat,
        (2.0 * (t as f64).ln() / pulls as f64).sqrt(),
    ))
}

/// `max(ceil(b^2 log n / (16 rho^2)), 2)`.
pub fn theoretical_warmup(n: usize, b: f64, rho: f64) -> Result<usize> {
    if n < 2 {
        return Err(invalid("n", format!("horizon {n} must be at least 2")));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(invalid("b", format!("{b} must be positive")));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(invalid("rho", format!("{rho} must be positive")));
    }
    let raw = b * b * (n as f64).ln() / (16.0 * rho * rho);
    Ok((raw.ceil() as usize).max(2))
}

/// First arm (lowest index) with the largest value.
fn argmax(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, v) in values.enumerate() {
        match best {
            Some((_, bv)) if !(v > bv) => {}
            _ => best = Some((j, v)),
        }
    }
    best.map(|(j, _)| j)
}

/// Chooses the arm for round `t`.
///
/// Arms below their warm-up count are pulled round-robin in index order;
/// afterwards the policy's index is maximized with ties going to the
/// smallest arm index.
pub fn select_arm(policy: &PolicyConfig, states: &[ArmState], t: usize) -> Result<usize> {
    if states.is_empty() {
        return Err(Error::EmptyArmSet);
    }
    if let PolicyKind::FixedArm(j) = policy.kind {
        if j >= states.len() {
            return Err(invalid(
                "arm",
                format!("fixed arm {j} out of range for {} arms", states.len()),
            ));
        }
        return Ok(j);
    }
    let warmup = policy.warmup_pulls()?;
    let min_pulls = states.iter().map(ArmState::pulls).min().unwrap_or(0);
    if min_pulls < warmup {
        // Round-robin: lowest index among the least-pulled arms.
        return Ok(states
            .iter()
            .position(|s| s.pulls() == min_pulls)
            .unwrap_or(0));
    }
    let totals = states
        .iter()
        .map(|s| match policy.kind {
            PolicyKind::AcpUcb1 => acp_index(s, t, policy.b).map(|ix| ix.total),
            PolicyKind::Ucb1 => {
                let mean = s
                    .mean()
                    .ok_or(Error::InsufficientData { needed: 1, have: 0 })?;
                ucb1_index(mean, t, s.pulls()).map(|ix| ix.total)
            }
            PolicyKind::FixedArm(_) => unreachable!(),
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(argmax(totals.into_iter()).expect("non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arm(values: &[f64]) -> ArmState {
        let cfg = AdaptiveLevelConfig::default();
        let mut st = ArmState::for_config(&cfg);
        for &v in values {
            st.observe(v, &cfg).unwrap();
        }
        st
    }

    #[test]
    fn acp_index_arithmetic() {
        let ix = acp_index_value(0.2, 100, 1.0, 25).unwrap();
        assert!((ix.bonus - 0.42919).abs() < 1e-5);
        assert!((ix.total - 0.62919).abs() < 1e-5);
        assert_eq!(ix.total, ix.exploit + ix.bonus);
        assert_eq!(acp_index_value(0.2, 100, 0.0, 25).unwrap().total, 0.2);
        let far = acp_index_value(0.2, 100, 1.0, 100_000_000).unwrap();
        assert!((far.total - 0.2).abs() < 3e-4);
    }

    #[test]
    fn acp_index_needs_endpoint() {
        assert!(acp_index(&arm(&[1.0]), 5, 1.0).is_err());
        let st = arm(&[0.0, 1.0, 2.0]);
        let ix = acp_index(&st, 5, 1.0).unwrap();
        assert_eq!(ix.exploit, st.endpoint().unwrap().upper);
    }

    #[test]
    fn ucb1_index_arithmetic() {
        let ix = ucb1_index(0.1, 100, 25).unwrap();
        assert!((ix.bonus - 0.60697).abs() < 1e-5);
        assert!((ix.total - 0.70697).abs() < 1e-5);
        assert!(ucb1_index(0.1, 1, 25).is_err());
        assert!(ucb1_index(0.1, 10, 0).is_err());
        let late = ucb1_index(0.0, 1_000_000, 999_999).unwrap();
        assert!(late.total < 0.01);
    }

    #[test]
    fn theoretical_warmup_examples() {
        let n = 16f64.exp().ceil() as usize;
        assert_eq!(theoretical_warmup(n, 1.0, 1.0).unwrap(), 2);
        assert_eq!(theoretical_warmup(10_000, 1.0, 0.05).unwrap(), 231);
        assert_eq!(theoretical_warmup(100, 0.5, 1.0).unwrap(), 2);
        assert!(theoretical_warmup(1, 1.0, 1.0).is_err());
        assert!(theoretical_warmup(100, 1.0, 0.0).is_err());
    }

    #[test]
    fn warmup_round_robin() {
        let policy = PolicyConfig::acp_ucb1(AdaptiveLevelConfig::default());
        let mut states = vec![arm(&[]), arm(&[]), arm(&[])];
        let mut order = Vec::new();
        for t in 1..=6 {
            let j = select_arm(&policy, &states, t).unwrap();
            order.push(j);
            states[j].observe(t as f64, &policy.level).unwrap();
        }
        assert_eq!(order, vec![0, 1, 2, 0, 1, 2]);
        // After warm-up every arm has two pulls and round 7 uses the index.
        assert!(states.iter().all(|s| s.pulls() == 2));
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let policy = PolicyConfig::ucb1(AdaptiveLevelConfig::default());
        let states = vec![arm(&[1.0, 2.0]), arm(&[2.0, 1.0])];
        assert_eq!(select_arm(&policy, &states, 10).unwrap(), 0);
        let acp = PolicyConfig::acp_ucb1(AdaptiveLevelConfig::default());
        assert_eq!(select_arm(&acp, &states, 10).unwrap(), 0);
    }

    #[test]
    fn fixed_and_empty() {
        let fixed = PolicyConfig::fixed(2, AdaptiveLevelConfig::default());
        let states = vec![arm(&[]), arm(&[]), arm(&[])];
        for t in [1, 7, 1000] {
            assert_eq!(select_arm(&fixed, &states, t).unwrap(), 2);
        }
        assert_eq!(select_arm(&fixed, &[], 3), Err(Error::EmptyArmSet));
    }

    #[test]
    fn validate_warmup() {
        let mut p = PolicyConfig::acp_ucb1(AdaptiveLevelConfig::default());
        p.warmup = Warmup::PerArmPulls(1);
        assert!(p.validate().is_err());
        p.warmup = Warmup::Theoretical { horizon: 10_000 };
        p.rho = 0.05;
        assert_eq!(p.warmup_pulls().unwrap(), 231);
        assert!(p.validate().is_ok());
    }

    proptest! {
        #[test]
        fn bonus_monotone(t in 2usize..100_000, pulls in 1usize..10_000) {
            let base = acp_index_value(0.0, t, 1.0, pulls).unwrap().bonus;
            prop_assert!(acp_index_value(0.0, t, 1.0, pulls + 1).unwrap().bonus < base);
            prop_assert!(acp_index_value(0.0, t + 1, 1.0, pulls).unwrap().bonus > base);
            prop_assert!(base >= 0.0);
        }

        #[test]
        fn argmax_translation_invariant(values in prop::collection::vec(-1.0f64..1.0, 1..8), shift in -0.5f64..0.5) {
            // Shift by a dyadic amount so ties and order survive rounding exactly.
            let shift = (shift * 1024.0).round() / 1024.0;
            let values: Vec<f64> = values.iter().map(|v| (v * 1024.0).round() / 1024.0).collect();
            let before = argmax(values.iter().copied());
            let after = argmax(values.iter().map(|v| v + shift));
            prop_assert_eq!(before, after);
        }
    }
}
