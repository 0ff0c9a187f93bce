//! Key=value report of the closed-form Gaussian comparison.

use std::fmt::Write as _;

use acp_bandit::theory::{
    acp_pull_envelope, auer_mean_regret_envelope, d_path, envelope_constants, optima,
    two_arm_envelope_holds, GaussianPair,
};
use acp_bandit::{special::two_sided_z, DistributionSpec};

use crate::config::ExperimentConfig;
use crate::error::Result;

/// Number of intervals in the kappa grid of the CSV output.
pub const KAPPA_GRID: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryReport {
    pub scenario: String,
    pub alpha: f64,
    pub text: String,
    pub text_name: String,
    pub kappa_csv: String,
    pub csv_name: String,
}

pub fn build_reports(cfg: &ExperimentConfig) -> Result<Vec<TheoryReport>> {
    let mut out = Vec::new();
    for scenario in &cfg.scenarios {
        for &alpha in &cfg.alphas {
            let stem = format!("theory-{}-a{alpha}", scenario.name);
            out.push(TheoryReport {
                scenario: scenario.name.clone(),
                alpha,
                text: report_text(&scenario.arms, alpha, cfg.b, cfg.horizon)?,
                text_name: format!("{stem}.txt"),
                kappa_csv: kappa_csv(&scenario.arms, alpha)?,
                csv_name: format!("{stem}-kappa.csv"),
            });
        }
    }
    Ok(out)
}

fn kv(s: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(s, "{key} = {value}");
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

fn grid(a: f64) -> impl Iterator<Item = f64> {
    (0..=KAPPA_GRID).map(move |i| {
        if i == KAPPA_GRID {
            a
        } else {
            a * i as f64 / KAPPA_GRID as f64
        }
    })
}

/// Report for one Gaussian arm set at level `alpha` and horizon `n`.
pub fn report_text(arms: &[DistributionSpec], alpha: f64, b: f64, n: usize) -> Result<String> {
    let a = two_sided_z(alpha)?;
    let (opt_a, opt_m) = optima(arms, alpha)?;
    let nf = n as f64;
    let mut s = String::new();
    kv(&mut s, "alpha", alpha);
    kv(&mut s, "a", num(a));
    kv(&mut s, "horizon", n);
    kv(&mut s, "arm-acp", opt_a);
    kv(&mut s, "arm-mean", opt_m);

    if opt_a == opt_m {
        kv(&mut s, "regime", "common-optimizer");
        let best = &arms[opt_a];
        for (j, arm) in arms.iter().enumerate() {
            if j == opt_a {
                continue;
            }
            match envelope_constants(best.loc, best.scale, arm.loc, arm.scale, alpha, b) {
                Ok(c) => {
                    kv(&mut s, &format!("arm{j}-gap-acp"), num(c.gap_acp));
                    kv(&mut s, &format!("arm{j}-gap-mean"), num(c.gap_mu));
                    kv(&mut s, &format!("arm{j}-gamma-acp"), num(c.gamma_acp));
                    kv(&mut s, &format!("arm{j}-gamma-ucb"), num(c.gamma_ucb));
                    kv(&mut s, &format!("arm{j}-gap-ratio"), num(c.ratio));
                    kv(
                        &mut s,
                        &format!("arm{j}-gap-ratio-threshold"),
                        num(c.ratio_threshold),
                    );
                    kv(
                        &mut s,
                        &format!("arm{j}-acp-envelope-smaller"),
                        c.acp_smaller,
                    );
                }
                Err(e) => kv(
                    &mut s,
                    &format!("arm{j}-envelope"),
                    format!("unavailable ({e})"),
                ),
            }
        }
    } else {
        kv(&mut s, "regime", "mismatch");
        match GaussianPair::from_arms(arms, alpha) {
            Ok((pair, _, _)) => {
                let holds = two_arm_envelope_holds(arms, &pair);
                kv(&mut s, "two-arm-envelope", holds);
                kv(&mut s, "delta-mu", num(pair.delta_mu));
                kv(&mut s, "delta-sigma", num(pair.delta_sigma));
                kv(&mut s, "kappa0", num(pair.kappa0()));
                if holds {
                    let mm = pair.suprema_and_minimax();
                    kv(&mut s, "sup-d-a", num(mm.sup_d_a));
                    kv(&mut s, "sup-d-m", num(mm.sup_d_m));
                    kv(&mut s, "avg-d-a", num(mm.avg_d_a));
                    kv(&mut s, "avg-d-m", num(mm.avg_d_m));
                    kv(
                        &mut s,
                        "threshold-coefficient",
                        num(mm.threshold_coefficient),
                    );
                    kv(&mut s, "acp-wins-minimax", mm.acp_wins_minimax);
                    for (label, kappa) in [("a", a), ("0", 0.0)] {
                        let lt = pair.transfer_leading_terms(kappa, n)?;
                        kv(
                            &mut s,
                            &format!("leading-acp-kappa-{label}"),
                            num(lt.acp_leading),
                        );
                        kv(
                            &mut s,
                            &format!("leading-ucb-kappa-{label}"),
                            num(lt.ucb_leading),
                        );
                    }
                } else {
                    // Other arms cut into the upper envelope: fall back to
                    // per-arm suprema over the grid.
                    let mut sup = vec![0.0f64; arms.len()];
                    for kappa in grid(a) {
                        for (j, d) in d_path(arms, alpha, kappa)?.into_iter().enumerate() {
                            sup[j] = sup[j].max(d);
                        }
                    }
                    for (j, v) in sup.iter().enumerate() {
                        kv(&mut s, &format!("arm{j}-sup-d"), num(*v));
                    }
                }
            }
            Err(e) => kv(&mut s, "pair", format!("unavailable ({e})")),
        }
    }

    let acp_values: Vec<f64> = arms.iter().map(|arm| arm.loc + a * arm.scale).collect();
    for (j, v) in acp_values.iter().enumerate() {
        if j == opt_a {
            continue;
        }
        let gap = acp_values[opt_a] - v;
        if gap > 0.0 {
            kv(
                &mut s,
                &format!("arm{j}-pull-envelope"),
                num(acp_pull_envelope(gap, b, nf)?),
            );
            kv(
                &mut s,
                &format!("arm{j}-pull-envelope-constant"),
                "unquantified",
            );
        }
    }
    kv(
        &mut s,
        "auer-mean-regret-envelope",
        num(auer_mean_regret_envelope(arms, nf)?),
    );
    Ok(s)
}

/// `D_g(kappa)` for every arm on a uniform grid over `[0, a]`.
pub fn kappa_csv(arms: &[DistributionSpec], alpha: f64) -> Result<String> {
    let a = two_sided_z(alpha)?;
    let mut s = String::from("kappa");
    for j in 0..arms.len() {
        let _ = write!(s, ",d_arm{j}");
    }
    s.push('\n');
    for kappa in grid(a) {
        s.push_str(&num(kappa));
        for d in d_path(arms, alpha, kappa)? {
            let _ = write!(s, ",{}", num(d));
        }
        s.push('\n');
    }
    Ok(s)
}
