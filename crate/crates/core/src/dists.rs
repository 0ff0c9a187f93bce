//! Parametric reward families and their population upper-tail quantities.
//!
//! Each arm is a location-scale family `Y = loc + scale * Z` where `Z` is a
//! standard Gaussian, a standard Student-t, or the Hansen standardized
//! skewed Student-t (zero mean, unit variance).

use crate::error::{check_open_unit, invalid, Error, Result};
use crate::rng::RandomStream;
use crate::special::{
    normal_cdf, normal_pdf, normal_quantile, student_t_cdf, student_t_pdf, student_t_quantile,
    two_sided_z,
};

/// Shape of the standardized variable `Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Gaussian,
    /// Standard (not variance-normalized) Student-t.
    StudentT {
        dof: f64,
    },
    /// Hansen's skewed Student-t with zero mean and unit variance.
    SkewStudentT {
        dof: f64,
        skew: f64,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::StudentT { .. } => "student-t",
            Family::SkewStudentT { .. } => "skew-t",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionSpec {
    pub family: Family,
    pub loc: f64,
    pub scale: f64,
}

/// Population anchors of one arm at a fixed nominal level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationSummary {
    pub q_low: f64,
    pub q_high: f64,
    /// Nominal upper-tail value `F^{-1}(1 - alpha/2)`.
    pub acp_value: f64,
    pub mean: f64,
}

/// Shape constants of the Hansen skewed-t density.
#[derive(Debug, Clone, Copy)]
struct SkewConstants {
    a: f64,
    b: f64,
    c: f64,
    /// `sqrt((dof - 2) / dof)`, maps a standard t onto unit variance.
    unit_var: f64,
}

impl SkewConstants {
    fn new(dof: f64, skew: f64) -> Self {
        let c = (libm::lgamma(0.5 * (dof + 1.0)) - libm::lgamma(0.5 * dof)).exp()
            / (std::f64::consts::PI * (dof - 2.0)).sqrt();
        let a = 4.0 * skew * c * (dof - 2.0) / (dof - 1.0);
        let b = (1.0 + 3.0 * skew * skew - a * a).sqrt();
        Self {
            a,
            b,
            c,
            unit_var: ((dof - 2.0) / dof).sqrt(),
        }
    }
}

impl DistributionSpec {
    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        Self::new(Family::Gaussian, mean, sd)
    }

    pub fn student_t(loc: f64, scale: f64, dof: f64) -> Result<Self> {
        Self::new(Family::StudentT { dof }, loc, scale)
    }

    pub fn skew_t(loc: f64, scale: f64, dof: f64, skew: f64) -> Result<Self> {
        Self::new(Family::SkewStudentT { dof, skew }, loc, scale)
    }

    pub fn new(family: Family, loc: f64, scale: f64) -> Result<Self> {
        let spec = Self { family, loc, scale };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.loc.is_finite() {
            return Err(invalid("loc", format!("{} is not finite", self.loc)));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(invalid("scale", format!("{} must be positive", self.scale)));
        }
        match self.family {
            Family::Gaussian => {}
            Family::StudentT { dof } => check_dof(dof)?,
            Family::SkewStudentT { dof, skew } => {
                check_dof(dof)?;
                if !(skew > -1.0 && skew < 1.0) {
                    return Err(invalid("skew", format!("{skew} outside (-1, 1)")));
                }
            }
        }
        Ok(())
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.family, Family::Gaussian)
    }

    /// Mean of the reward; every supported family has `E[Z] = 0`.
    pub fn mean(&self) -> f64 {
        self.loc
    }

    /// Inverse CDF.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        self.validate()?;
        check_open_unit(p)?;
        let z = match self.family {
            Family::Gaussian => normal_quantile(p)?,
            Family::StudentT { dof } => student_t_quantile(p, dof)?,
            Family::SkewStudentT { dof, skew } => skew_t_quantile(p, dof, skew)?,
        };
        Ok(self.loc + self.scale * z)
    }

    pub fn cdf(&self, y: f64) -> f64 {
        let z = (y - self.loc) / self.scale;
        match self.family {
            Family::Gaussian => normal_cdf(z),
            Family::StudentT { dof } => student_t_cdf(z, dof),
            Family::SkewStudentT { dof, skew } => skew_t_cdf(z, dof, skew),
        }
    }

    pub fn pdf(&self, y: f64) -> f64 {
        let z = (y - self.loc) / self.scale;
        let density = match self.family {
            Family::Gaussian => normal_pdf(z),
            Family::StudentT { dof } => student_t_pdf(z, dof),
            Family::SkewStudentT { dof, skew } => skew_t_pdf(z, dof, skew),
        };
        density / self.scale
    }

    /// One draw from the reward law.
    pub fn sample(&self, rng: &mut RandomStream) -> f64 {
        let z = match self.family {
            Family::Gaussian => rng.standard_normal(),
            Family::StudentT { dof } => {
                let num = rng.standard_normal();
                num / (rng.chi_square(dof) / dof).sqrt()
            }
            Family::SkewStudentT { dof, skew } => {
                let u = rng.uniform();
                skew_t_quantile(u, dof, skew).expect("uniform draw lies in (0, 1)")
            }
        };
        self.loc + self.scale * z
    }

    /// Central anchors and the nominal upper-tail value at level `alpha`.
    pub fn population_summary(&self, alpha: f64) -> Result<PopulationSummary> {
        check_open_unit(alpha)?;
        let q_low = self.quantile(0.5 * alpha)?;
        let q_high = self.quantile(1.0 - 0.5 * alpha)?;
        Ok(PopulationSummary {
            q_low,
            q_high,
            acp_value: q_high,
            mean: self.mean(),
        })
    }
}

fn check_dof(dof: f64) -> Result<()> {
    if dof > 2.0 && dof.is_finite() {
        Ok(())
    } else {
        Err(invalid("dof", format!("{dof} must exceed 2")))
    }
}

fn skew_t_quantile(p: f64, dof: f64, skew: f64) -> Result<f64> {
    let k = SkewConstants::new(dof, skew);
    let left_mass = 0.5 * (1.0 - skew);
    let (piece_scale, t_level) = if p < left_mass {
        (1.0 - skew, p / (1.0 - skew))
    } else {
        (1.0 + skew, 0.5 + (p - left_mass) / (1.0 + skew))
    };
    let w = student_t_quantile(t_level, dof)? * k.unit_var;
    Ok((piece_scale * w - k.a) / k.b)
}

fn skew_t_cdf(z: f64, dof: f64, skew: f64) -> f64 {
    let k = SkewConstants::new(dof, skew);
    let shifted = k.b * z + k.a;
    if z < -k.a / k.b {
        let w = shifted / (1.0 - skew);
        (1.0 - skew) * student_t_cdf(w / k.unit_var, dof)
    } else {
        let w = shifted / (1.0 + skew);
        0.5 * (1.0 - skew) + (1.0 + skew) * (student_t_cdf(w / k.unit_var, dof) - 0.5)
    }
}

fn skew_t_pdf(z: f64, dof: f64, skew: f64) -> f64 {
    let k = SkewConstants::new(dof, skew);
    let shifted = k.b * z + k.a;
    let piece = if z < -k.a / k.b {
        1.0 - skew
    } else {
        1.0 + skew
    };
    let w = shifted / piece;
    k.b * k.c * (1.0 + w * w / (dof - 2.0)).powf(-0.5 * (dof + 1.0))
}

/// Population score quantile `c(beta)` of a Gaussian arm with scale `sigma`
/// calibrated at nominal level `alpha`: `sigma * (z_{1-beta/2} - z_{1-alpha/2})`.
pub fn gaussian_score_quantile(sigma: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(invalid("sigma", format!("{sigma} must be positive")));
    }
    Ok(sigma * (two_sided_z(beta)? - two_sided_z(alpha)?))
}

/// Local density constants that make every Gaussian arm with
/// `sigma in [sigma_min, sigma_max]` satisfy the local regularity conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianConstants {
    pub f_min: f64,
    pub f_max: f64,
    pub g_min: f64,
    pub z_min: f64,
    pub z_max: f64,
}

pub fn gaussian_assumption_constants(
    sigma_min: f64,
    sigma_max: f64,
    alpha_lo: f64,
    alpha_hi: f64,
    r_y: f64,
    r_s: f64,
) -> Result<GaussianConstants> {
    if !(sigma_min > 0.0 && sigma_min <= sigma_max) {
        return Err(invalid(
            "sigma_min",
            format!("need 0 < {sigma_min} <= {sigma_max}"),
        ));
    }
    check_open_unit(alpha_lo)?;
    check_open_unit(alpha_hi)?;
    if alpha_lo > alpha_hi {
        return Err(invalid(
            "alpha_lo",
            format!("{alpha_lo} exceeds alpha_hi {alpha_hi}"),
        ));
    }
    if !(r_y > 0.0) {
        return Err(invalid("r_y", format!("{r_y} must be positive")));
    }
    let z_min = two_sided_z(alpha_hi)?;
    let z_max = two_sided_z(alpha_lo)?;
    if !(r_s > 0.0 && r_s < sigma_min * z_min) {
        return Err(Error::InvalidParameter {
            name: "r_s",
            reason: format!(
                "{r_s} must lie in (0, sigma_min * z_min = {})",
                sigma_min * z_min
            ),
        });
    }
    Ok(GaussianConstants {
        f_min: normal_pdf(z_max + r_y / sigma_min) / sigma_max,
        f_max: normal_pdf(0.0) / sigma_min,
        g_min: 2.0 / sigma_max * normal_pdf(z_max + r_s / sigma_min),
        z_min,
        z_max,
    })
}
