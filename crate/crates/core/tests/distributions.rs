use acp_bandit::dists::gaussian_score_quantile;
use acp_bandit::{DistributionSpec, Family, RandomStream};
use proptest::prelude::*;
use statrs::distribution::{Continuous, ContinuousCDF, Normal, StudentsT};
use statrs::function::gamma::ln_gamma;

fn families() -> Vec<DistributionSpec> {
    vec![
        DistributionSpec::gaussian(0.1, 0.05).unwrap(),
        DistributionSpec::student_t(0.0, 0.16, 3.0).unwrap(),
        DistributionSpec::student_t(0.03, 0.08, 5.0).unwrap(),
        DistributionSpec::skew_t(0.08, 0.05, 5.0, -0.2).unwrap(),
        DistributionSpec::skew_t(0.0, 0.16, 5.0, 0.6).unwrap(),
        DistributionSpec::skew_t(0.0, 1.0, 3.5, -0.9).unwrap(),
    ]
}

fn grid() -> impl Iterator<Item = f64> {
    (1..=99).map(|i| i as f64 / 100.0)
}

/// Student-t CDF by Simpson integration of the density from the centre.
fn integrated_t_cdf(density: &StudentsT, x: f64) -> f64 {
    let n = 40_000usize;
    let h = x.abs() / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * density.pdf(i as f64 * h);
    }
    0.5 + x.signum() * acc * h / 3.0
}

#[test]
fn student_t_quantile_matches_reference() {
    for dof in [2.5, 3.0, 5.0, 10.0, 30.0] {
        let reference = StudentsT::new(0.0, 1.0, dof).unwrap();
        let spec = DistributionSpec::student_t(0.0, 1.0, dof).unwrap();
        for p in grid().chain([0.001, 0.999]) {
            let got = spec.quantile(p).unwrap();
            // One Newton step against the independent CDF measures the
            // distance to the true quantile.
            let err = (integrated_t_cdf(&reference, got) - p) / reference.pdf(got);
            assert!(
                err.abs() < 1e-8,
                "dof {dof} p {p}: quantile {got} off by {err:e}"
            );
        }
    }
}

#[test]
fn gaussian_quantile_matches_reference() {
    let reference = Normal::new(0.0, 1.0).unwrap();
    let spec = DistributionSpec::gaussian(0.0, 1.0).unwrap();
    for p in grid().chain([1e-6, 1e-3, 0.999, 1.0 - 1e-6]) {
        assert!((spec.quantile(p).unwrap() - reference.inverse_cdf(p)).abs() < 1e-9);
    }
}

#[test]
fn cdf_round_trip() {
    for spec in families() {
        for p in grid() {
            let q = spec.quantile(p).unwrap();
            assert!((spec.cdf(q) - p).abs() <= 1e-7, "{spec:?} at {p}");
        }
    }
}

#[test]
fn quantiles_increase() {
    for spec in families() {
        let qs: Vec<f64> = grid().map(|p| spec.quantile(p).unwrap()).collect();
        assert!(qs.windows(2).all(|w| w[0] < w[1]), "{spec:?}");
    }
}

#[test]
fn gaussian_acp_value_identity() {
    let reference = Normal::new(0.0, 1.0).unwrap();
    for alpha in [0.05, 0.1, 0.2, 0.3] {
        let z = reference.inverse_cdf(1.0 - alpha / 2.0);
        for (mu, sigma) in [(0.1, 0.05), (0.0, 0.15), (0.04, 0.08), (-3.0, 2.0)] {
            let got = DistributionSpec::gaussian(mu, sigma)
                .unwrap()
                .population_summary(alpha)
                .unwrap();
            assert!((got.acp_value - (mu + z * sigma)).abs() < 1e-9);
        }
    }
}

#[test]
fn score_quantile_vanishes_at_nominal_level() {
    for alpha in [0.01, 0.1, 0.3, 0.5] {
        assert!(gaussian_score_quantile(0.7, alpha, alpha).unwrap().abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn location_scale_equivariance(
        p in 0.01f64..0.99,
        loc in -5.0f64..5.0,
        shift in -5.0f64..5.0,
        scale in 0.01f64..10.0,
        k in 0.1f64..10.0,
        dof in 2.5f64..30.0,
        skew in -0.9f64..0.9,
    ) {
        for family in [Family::Gaussian, Family::StudentT { dof }, Family::SkewStudentT { dof, skew }] {
            let base = DistributionSpec::new(family, loc, scale).unwrap();
            let moved = DistributionSpec::new(family, loc + shift, scale).unwrap();
            let stretched = DistributionSpec::new(family, loc, k * scale).unwrap();
            let q = base.quantile(p).unwrap();
            prop_assert!((moved.quantile(p).unwrap() - (q + shift)).abs() < 1e-9 * (1.0 + q.abs() + shift.abs()));
            let centred = stretched.quantile(p).unwrap() - loc;
            prop_assert!((centred - k * (q - loc)).abs() < 1e-8 * (1.0 + k * (q - loc).abs()));
        }
    }
}

fn sample_moments(spec: &DistributionSpec, n: usize, seed: u64) -> (f64, f64) {
    let mut rng = RandomStream::new(seed, 0);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        let y = spec.sample(&mut rng);
        sum += y;
        sum_sq += y * y;
    }
    let mean = sum / n as f64;
    (mean, sum_sq / n as f64 - mean * mean)
}

#[test]
fn gaussian_sample_mean() {
    let n = 1_000_000;
    let (mean, _) = sample_moments(&DistributionSpec::gaussian(0.10, 0.05).unwrap(), n, 11);
    let se = 0.05 / (n as f64).sqrt();
    assert!((mean - 0.10).abs() < 4.0 * se, "mean {mean}");
}

#[test]
fn student_t_sample_variance() {
    let (mean, var) = sample_moments(
        &DistributionSpec::student_t(1.0, 2.0, 8.0).unwrap(),
        1_000_000,
        12,
    );
    assert!((mean - 1.0).abs() < 0.01);
    assert!((var - 4.0 * 8.0 / 6.0).abs() < 0.06, "var {var}");
}

/// Standardized skewed-t density written out from its definition.
fn skew_t_density(z: f64, dof: f64, skew: f64) -> f64 {
    let c = (ln_gamma((dof + 1.0) / 2.0) - ln_gamma(dof / 2.0)).exp()
        / (std::f64::consts::PI * (dof - 2.0)).sqrt();
    let a = 4.0 * skew * c * (dof - 2.0) / (dof - 1.0);
    let b = (1.0 + 3.0 * skew * skew - a * a).sqrt();
    let side = if z < -a / b { 1.0 - skew } else { 1.0 + skew };
    let w = (b * z + a) / side;
    b * c * (1.0 + w * w / (dof - 2.0)).powf(-(dof + 1.0) / 2.0)
}

#[test]
fn skew_t_density_is_standardized() {
    let (dof, skew) = (5.0, 0.6);
    let spec = DistributionSpec::skew_t(0.0, 1.0, dof, skew).unwrap();
    // Simpson's rule on [-L, L]; the tails beyond carry negligible mass
    // for the second moment at this range.
    let (lo, hi, n) = (-400.0, 400.0, 800_000usize);
    let h = (hi - lo) / n as f64;
    let mut moments = [0.0f64; 3];
    for i in 0..=n {
        let z = lo + i as f64 * h;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let f = skew_t_density(z, dof, skew);
        assert!(
            (spec.pdf(z) - f).abs() <= 1e-12 * (1.0 + f),
            "pdf mismatch at {z}"
        );
        moments[0] += w * f;
        moments[1] += w * z * f;
        moments[2] += w * z * z * f;
    }
    let [m0, m1, m2] = moments.map(|m| m * h / 3.0);
    assert!((m0 - 1.0).abs() < 1e-6, "mass {m0}");
    assert!(m1.abs() < 1e-6, "mean {m1}");
    assert!((m2 - 1.0).abs() < 1e-4, "second moment {m2}");
}

#[test]
fn skew_t_sample_moments() {
    let spec = DistributionSpec::skew_t(0.0, 1.0, 5.0, 0.6).unwrap();
    let (mean, var) = sample_moments(&spec, 1_000_000, 13);
    assert!(mean.abs() < 0.005, "mean {mean}");
    assert!((var - 1.0).abs() < 0.02, "var {var}");
}
