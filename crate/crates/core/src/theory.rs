//! Closed-form Gaussian comparison between the mean and upper-tail objectives.
//!
//! For Gaussian arms the nominal upper-tail value is `mu + a sigma` with
//! `a = z_{1-alpha/2}`, so both objectives sit on the utility path
//! `v(kappa) = mu + kappa sigma`, `kappa in [0, a]`. A policy that concentrates
//! on arm `g` pays `D_g(kappa) = max_j v_j(kappa) - v_g(kappa)` per round.

use crate::dists::DistributionSpec;
use crate::error::{invalid, Error, Result};
use crate::special::two_sided_z;

/// ACP-optimal arm `A` and mean-optimal arm `M` of a mismatch instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPair {
    pub mu_a: f64,
    pub sigma_a: f64,
    pub mu_m: f64,
    pub sigma_m: f64,
    pub alpha: f64,
    /// `z_{1-alpha/2}`, always derived from `alpha`.
    pub a: f64,
    /// `mu_M - mu_A`.
    pub delta_mu: f64,
    /// `sigma_A - sigma_M`.
    pub delta_sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DValues {
    pub d_a: f64,
    pub d_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimax {
    pub sup_d_a: f64,
    pub sup_d_m: f64,
    /// ACP-UCB1 has the smaller worst-case leading coefficient over `[0, a]`.
    pub acp_wins_minimax: bool,
    /// Path averages `(1/a) * integral of D over [0, a]`.
    pub avg_d_a: f64,
    pub avg_d_m: f64,
    /// `2 / a`: the minimax condition reads `sigma_A - sigma_M > (2/a)(mu_M - mu_A)`.
    pub threshold_coefficient: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadingTerms {
    pub acp_leading: f64,
    pub ucb_leading: f64,
}

impl GaussianPair {
    pub fn new(mu_a: f64, sigma_a: f64, mu_m: f64, sigma_m: f64, alpha: f64) -> Result<Self> {
        if !(sigma_a > 0.0 && sigma_m > 0.0) {
            return Err(invalid("sigma", "standard deviations must be positive"));
        }
        let a = two_sided_z(alpha)?;
        let pair = Self {
            mu_a,
            sigma_a,
            mu_m,
            sigma_m,
            alpha,
            a,
            delta_mu: mu_m - mu_a,
            delta_sigma: sigma_a - sigma_m,
        };
        if !(pair.delta_mu > 0.0 && pair.delta_mu < a * pair.delta_sigma) {
            return Err(Error::InvalidRegime(format!(
                "need 0 < delta_mu < a * delta_sigma, got delta_mu = {}, a * delta_sigma = {}",
                pair.delta_mu,
                a * pair.delta_sigma
            )));
        }
        Ok(pair)
    }

    /// Pair formed by the ACP- and mean-optimal arms of a Gaussian arm set.
    pub fn from_arms(arms: &[DistributionSpec], alpha: f64) -> Result<(Self, usize, usize)> {
        let (acp_opt, mean_opt) = optima(arms, alpha)?;
        let (a_arm, m_arm) = (arms[acp_opt], arms[mean_opt]);
        let pair = Self::new(a_arm.loc, a_arm.scale, m_arm.loc, m_arm.scale, alpha)?;
        Ok((pair, acp_opt, mean_opt))
    }

    /// Crossing level `delta_mu / delta_sigma`.
    pub fn kappa0(&self) -> f64 {
        self.delta_mu / self.delta_sigma
    }

    pub fn d_functions(&self, kappa: f64) -> Result<DValues> {
        self.check_kappa(kappa)?;
        let diff = self.delta_mu - kappa * self.delta_sigma;
        Ok(DValues {
            d_a: diff.max(0.0),
            d_m: (-diff).max(0.0),
        })
    }

    pub fn suprema_and_minimax(&self) -> Minimax {
        let (a, dm, ds) = (self.a, self.delta_mu, self.delta_sigma);
        Minimax {
            sup_d_a: dm,
            sup_d_m: a * ds - dm,
            acp_wins_minimax: 2.0 * dm < a * ds,
            avg_d_a: dm * dm / (2.0 * a * ds),
            avg_d_m: (a * ds - dm).powi(2) / (2.0 * a * ds),
            threshold_coefficient: 2.0 / a,
        }
    }

    /// Linear leading terms `D_A(kappa) n` and `D_M(kappa) n` of the
    /// kappa-regret of policies concentrating on `A` and on `M`.
    pub fn transfer_leading_terms(&self, kappa: f64, n: usize) -> Result<LeadingTerms> {
        let d = self.d_functions(kappa)?;
        Ok(LeadingTerms {
            acp_leading: d.d_a * n as f64,
            ucb_leading: d.d_m * n as f64,
        })
    }

    fn check_kappa(&self, kappa: f64) -> Result<()> {
        if kappa >= 0.0 && kappa <= self.a {
            Ok(())
        } else {
            Err(invalid("kappa", format!("{kappa} outside [0, {}]", self.a)))
        }
    }
}

fn check_gaussian(arms: &[DistributionSpec]) -> Result<()> {
    if arms.is_empty() {
        return Err(Error::EmptyArmSet);
    }
    match arms.iter().position(|s| !s.is_gaussian()) {
        Some(arm) => Err(Error::NonGaussian { arm }),
        None => Ok(()),
    }
}

fn first_argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (j, v) in values.enumerate() {
        if v > best.1 {
            best = (j, v);
        }
    }
    best.0
}

/// `(A, M)` for Gaussian arms, ties to the smallest index.
pub fn optima(arms: &[DistributionSpec], alpha: f64) -> Result<(usize, usize)> {
    check_gaussian(arms)?;
    let a = two_sided_z(alpha)?;
    Ok((
        first_argmax(arms.iter().map(|s| s.loc + a * s.scale)),
        first_argmax(arms.iter().map(|s| s.loc)),
    ))
}

/// `D_g(kappa)` for every arm of a Gaussian arm set.
pub fn d_path(arms: &[DistributionSpec], alpha: f64, kappa: f64) -> Result<Vec<f64>> {
    check_gaussian(arms)?;
    let a = two_sided_z(alpha)?;
    if !(kappa >= 0.0 && kappa <= a) {
        return Err(invalid("kappa", format!("{kappa} outside [0, {a}]")));
    }
    let v: Vec<f64> = arms.iter().map(|s| s.loc + kappa * s.scale).collect();
    let best = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(v.iter().map(|vj| best - vj).collect())
}

/// Whether `max_j v_j(kappa) = max(v_A, v_M)` on all of `[0, a]`.
///
/// `max(v_A, v_M)` is linear on `[0, kappa0]` and on `[kappa0, a]`, so a line
/// stays below it everywhere iff it does at `0`, `kappa0` and `a`.
pub fn two_arm_envelope_holds(arms: &[DistributionSpec], pair: &GaussianPair) -> bool {
    let upper = |k: f64| (pair.mu_a + k * pair.sigma_a).max(pair.mu_m + k * pair.sigma_m);
    [0.0, pair.kappa0(), pair.a].iter().all(|&k| {
        let top = upper(k);
        arms.iter()
            .all(|s| s.loc + k * s.scale <= top + 1e-12 * top.abs().max(1.0))
    })
}

/// Log-coefficient constants of the pull-count envelopes in the
/// common-optimizer regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeConstants {
    /// `4 b^2 / gap_acp^2`.
    pub gamma_acp: f64,
    /// `max(256 sigma_j^2 / gap_mu^2, 8)`.
    pub gamma_ucb: f64,
    pub gap_acp: f64,
    pub gap_mu: f64,
    /// `gap_acp / gap_mu`.
    pub ratio: f64,
    /// Smallest ratio for which ACP-UCB1 has the smaller leading term.
    pub ratio_threshold: f64,
    pub acp_smaller: bool,
}

pub fn envelope_constants(
    mu_a: f64,
    sigma_a: f64,
    mu_j: f64,
    sigma_j: f64,
    alpha: f64,
    b: f64,
) -> Result<EnvelopeConstants> {
    let a = two_sided_z(alpha)?;
    let gap_mu = mu_a - mu_j;
    let gap_acp = (mu_a + a * sigma_a) - (mu_j + a * sigma_j);
    if !(gap_mu > 0.0 && gap_acp > 0.0) {
        return Err(Error::InvalidRegime(format!(
            "arm A must strictly beat arm j on both objectives (gap_mu = {gap_mu}, gap_acp = {gap_acp})"
        )));
    }
    let gamma_acp = 4.0 * b * b / (gap_acp * gap_acp);
    let gamma_ucb = (256.0 * sigma_j * sigma_j / (gap_mu * gap_mu)).max(8.0);
    let ratio_threshold = 2.0 * b
        / (256.0 * sigma_j * sigma_j)
            .max(8.0 * gap_mu * gap_mu)
            .sqrt();
    Ok(EnvelopeConstants {
        gamma_acp,
        gamma_ucb,
        gap_acp,
        gap_mu,
        ratio: gap_acp / gap_mu,
        ratio_threshold,
        acp_smaller: gamma_acp < gamma_ucb,
    })
}

/// Leading pull-count reference curve `gamma_acp * log n` for a suboptimal
/// arm with ACP gap `gap_acp`. The additive constant is not quantified.
pub fn acp_pull_envelope(gap_acp: f64, b: f64, n: f64) -> Result<f64> {
    if !(gap_acp > 0.0) {
        return Err(invalid("gap_acp", format!("{gap_acp} must be positive")));
    }
    Ok(4.0 * b * b / (gap_acp * gap_acp) * n.ln())
}

/// Mean-regret bound of UCB1-NORMAL:
/// `sum_j (256 sigma_j^2 / gap_j + 8 gap_j) log n + (1 + pi^2/2) sum_j gap_j`.
pub fn auer_mean_regret_envelope(arms: &[DistributionSpec], n: f64) -> Result<f64> {
    check_gaussian(arms)?;
    if !(n >= 1.0) {
        return Err(invalid("n", format!("horizon {n} must be at least 1")));
    }
    let best = first_argmax(arms.iter().map(|s| s.loc));
    let log_n = n.ln();
    let mut log_coef = 0.0;
    let mut gap_sum = 0.0;
    for (j, arm) in arms.iter().enumerate() {
        if j == best {
            continue;
        }
        let gap = arms[best].loc - arm.loc;
        if !(gap > 0.0) {
            return Err(Error::InvalidRegime(format!(
                "arm {j} ties the mean-optimal arm {best}"
            )));
        }
        log_coef += 256.0 * arm.scale * arm.scale / gap + 8.0 * gap;
        gap_sum += gap;
    }
    let constant = 1.0 + std::f64::consts::PI.powi(2) / 2.0;
    Ok(log_coef * log_n + constant * gap_sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mismatch_pair() -> GaussianPair {
        GaussianPair::new(0.0, 0.15, 0.10, 0.05, 0.1).unwrap()
    }

    fn mismatch_arms() -> Vec<DistributionSpec> {
        vec![
            DistributionSpec::gaussian(0.10, 0.05).unwrap(),
            DistributionSpec::gaussian(0.00, 0.15).unwrap(),
            DistributionSpec::gaussian(0.04, 0.08).unwrap(),
        ]
    }

    #[test]
    fn d_function_examples() {
        let p = mismatch_pair();
        let at_cross = p.d_functions(p.kappa0()).unwrap();
        assert!(at_cross.d_a.abs() < 1e-15 && at_cross.d_m.abs() < 1e-15);
        let at_a = p.d_functions(p.a).unwrap();
        assert!((at_a.d_m - 0.064485).abs() < 1e-6);
        assert_eq!(at_a.d_a, 0.0);
        let at_zero = p.d_functions(0.0).unwrap();
        assert!((at_zero.d_a - 0.10).abs() < 1e-15);
        assert_eq!(at_zero.d_m, 0.0);
        assert!(p.d_functions(-0.01).is_err());
        assert!(p.d_functions(p.a + 1e-9).is_err());
    }

    #[test]
    fn minimax_examples() {
        let p95 = GaussianPair::new(0.0, 0.3, 0.1, 0.05, 0.05).unwrap();
        assert!((p95.suprema_and_minimax().threshold_coefficient - 1.0204).abs() < 1e-3);

        let m = mismatch_pair().suprema_and_minimax();
        assert!(!m.acp_wins_minimax);
        assert!((m.sup_d_a - 0.10).abs() < 1e-15);
        assert!((m.sup_d_m - 0.064485).abs() < 1e-6);

        let small = GaussianPair::new(0.0, 0.15, 1e-9, 0.05, 0.1)
            .unwrap()
            .suprema_and_minimax();
        assert!(small.sup_d_a < 1e-8);
        assert!(small.acp_wins_minimax);
    }

    #[test]
    fn regime_checks() {
        assert!(matches!(
            GaussianPair::new(0.1, 0.05, 0.0, 0.15, 0.1),
            Err(Error::InvalidRegime(_))
        ));
        // Mean gap too large for the ACP ordering to flip.
        assert!(GaussianPair::new(0.0, 0.06, 0.10, 0.05, 0.1).is_err());
    }

    #[test]
    fn from_arms_and_envelope() {
        let arms = mismatch_arms();
        let (pair, a, m) = GaussianPair::from_arms(&arms, 0.1).unwrap();
        assert_eq!((a, m), (1, 0));
        assert!(two_arm_envelope_holds(&arms, &pair));
        let mut extra = arms.clone();
        // Beats both at the crossing point.
        extra.push(DistributionSpec::gaussian(0.09, 0.09).unwrap());
        assert!(!two_arm_envelope_holds(&extra, &pair));
        let path = d_path(&extra, 0.1, pair.kappa0()).unwrap();
        assert!(path.iter().all(|&d| d >= 0.0));
        assert_eq!(path[3], 0.0);
    }

    #[test]
    fn leading_terms() {
        let p = mismatch_pair();
        let at_a = p.transfer_leading_terms(p.a, 10_000).unwrap();
        assert!((at_a.ucb_leading - 644.85).abs() < 0.01);
        assert_eq!(at_a.acp_leading, 0.0);
        let at_cross = p.transfer_leading_terms(p.kappa0(), 10_000).unwrap();
        assert!(at_cross.acp_leading.abs() < 1e-9 && at_cross.ucb_leading.abs() < 1e-9);
        let at_zero = p.transfer_leading_terms(0.0, 10_000).unwrap();
        assert!((at_zero.acp_leading - 1000.0).abs() < 1e-9);
        assert_eq!(at_zero.ucb_leading, 0.0);
    }

    #[test]
    fn envelope_constant_examples() {
        let e = envelope_constants(0.0, 0.2, -0.1, 0.1, 0.05, 1.0).unwrap();
        assert!((e.gap_mu - 0.1).abs() < 1e-15);
        assert!((e.gap_acp - 0.295996).abs() < 1e-6);
        assert!((e.gamma_acp - 45.655).abs() < 1e-2);
        assert!((e.gamma_ucb - 256.0).abs() < 1e-9);
        assert!(e.acp_smaller);
        assert_eq!(e.acp_smaller, e.ratio > e.ratio_threshold);

        let same_sigma = envelope_constants(0.3, 0.1, 0.1, 0.1, 0.1, 1.0).unwrap();
        assert!((same_sigma.gap_acp - same_sigma.gap_mu).abs() < 1e-12);

        let huge = envelope_constants(10.0, 0.1, 0.0, 0.1, 0.1, 1.0).unwrap();
        assert_eq!(huge.gamma_ucb, 8.0);

        assert!(envelope_constants(0.0, 0.1, 0.0, 0.1, 0.1, 1.0).is_err());
    }

    #[test]
    fn auer_envelope_examples() {
        let arms = vec![
            DistributionSpec::gaussian(0.1, 0.3).unwrap(),
            DistributionSpec::gaussian(0.0, 0.1).unwrap(),
        ];
        let e = std::f64::consts::E;
        let want = 256.0 * 0.01 / 0.1 + 0.8 + (1.0 + std::f64::consts::PI.powi(2) / 2.0) * 0.1;
        assert!((auer_mean_regret_envelope(&arms, e).unwrap() - want).abs() < 1e-9);
        assert!((want - 26.99348).abs() < 1e-4);

        let constant_only = auer_mean_regret_envelope(&arms, 1.0).unwrap();
        assert!((constant_only - 5.934802 * 0.1).abs() < 1e-6);

        let doubled = vec![arms[0], arms[1], arms[1]];
        let n = 1000.0;
        let one = auer_mean_regret_envelope(&arms, n).unwrap()
            - auer_mean_regret_envelope(&arms, 1.0).unwrap();
        let two = auer_mean_regret_envelope(&doubled, n).unwrap()
            - auer_mean_regret_envelope(&doubled, 1.0).unwrap();
        assert!((two - 2.0 * one).abs() < 1e-9);

        let tied = vec![arms[0], arms[0]];
        assert!(auer_mean_regret_envelope(&tied, n).is_err());
    }

    #[test]
    fn pull_envelope_reference() {
        let v = acp_pull_envelope(0.1, 1.0, std::f64::consts::E).unwrap();
        assert!((v - 400.0).abs() < 1e-9);
        assert!(acp_pull_envelope(0.0, 1.0, 10.0).is_err());
    }
}
