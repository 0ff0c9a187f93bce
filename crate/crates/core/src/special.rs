//! Special functions: the standard normal distribution and the Student-t
//! distribution through the regularized incomplete beta function.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{check_open_unit, Result};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Standard normal CDF, accurate in both tails.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

// Acklam's rational approximation, relative error below 1.2e-9.
const ACKLAM_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACKLAM_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACKLAM_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACKLAM_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];
const ACKLAM_P_LOW: f64 = 0.02425;

fn acklam(p: f64) -> f64 {
    let (a, b, c, d) = (&ACKLAM_A, &ACKLAM_B, &ACKLAM_C, &ACKLAM_D);
    if p < ACKLAM_P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
            / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
            / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    }
}

/// Inverse of the standard normal CDF.
///
/// Rational initializer followed by one Newton step on the CDF. The upper
/// half is mapped onto the lower tail (`1 - p` is exact for `p >= 0.5`) so
/// the correction is computed with full relative precision.
pub fn normal_quantile(p: f64) -> Result<f64> {
    check_open_unit(p)?;
    if p > 0.5 {
        return Ok(-lower_normal_quantile(1.0 - p));
    }
    Ok(lower_normal_quantile(p))
}

fn lower_normal_quantile(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let x = acklam(p);
    let err = normal_cdf(x) - p;
    x - err / normal_pdf(x)
}

/// `z_{1 - alpha/2}`, the upper endpoint of a central `1 - alpha` interval.
pub fn two_sided_z(alpha: f64) -> Result<f64> {
    check_open_unit(alpha)?;
    Ok(-lower_normal_quantile(0.5 * alpha))
}

fn ln_beta(a: f64, b: f64) -> f64 {
    libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)
}

/// Regularized incomplete beta `I_x(a, b)` with `y = 1 - x` supplied by the
/// caller so that values of `x` near one keep their precision.
pub fn inc_beta(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let front = (a * x.ln() + b * y.ln() - ln_beta(a, b)).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cont_frac(a, b, x) / a
    } else {
        1.0 - front * beta_cont_frac(b, a, y) / b
    }
}

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn beta_cont_frac(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 500;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Density of the standard Student-t distribution with `dof` degrees of freedom.
pub fn student_t_pdf(t: f64, dof: f64) -> f64 {
    let log_norm =
        libm::lgamma(0.5 * (dof + 1.0)) - libm::lgamma(0.5 * dof) - 0.5 * (dof * PI).ln();
    (log_norm - 0.5 * (dof + 1.0) * (t * t / dof).ln_1p()).exp()
}

/// Lower-tail probability `P(T <= -|t|)`.
fn student_t_tail(t: f64, dof: f64) -> f64 {
    let t2 = t * t;
    let denom = dof + t2;
    0.5 * inc_beta(0.5 * dof, 0.5, dof / denom, t2 / denom)
}

/// CDF of the standard Student-t distribution.
pub fn student_t_cdf(t: f64, dof: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    let tail = student_t_tail(t, dof);
    if t < 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Inverse CDF of the standard Student-t distribution.
///
/// Bracketed Newton iteration on the lower tail, falling back to bisection
/// whenever a Newton step leaves the bracket.
pub fn student_t_quantile(p: f64, dof: f64) -> Result<f64> {
    check_open_unit(p)?;
    if !(dof > 0.0) {
        return Err(crate::error::invalid(
            "dof",
            format!("{dof} must be positive"),
        ));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p > 0.5 {
        return Ok(-lower_t_quantile(1.0 - p, dof));
    }
    Ok(lower_t_quantile(p, dof))
}

fn lower_t_quantile(p: f64, dof: f64) -> f64 {
    // Cornish-Fisher start; always negative for p < 0.5.
    let z = lower_normal_quantile(p);
    let z3 = z * z * z;
    let z5 = z3 * z * z;
    let mut x = z + (z3 + z) / (4.0 * dof) + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * dof * dof);
    if !(x < 0.0) || !x.is_finite() {
        x = z;
    }

    let mut hi = 0.0;
    let mut lo = x.min(-1.0);
    while student_t_tail(lo, dof) > p {
        hi = lo;
        lo *= 2.0;
        if !lo.is_finite() {
            return f64::NEG_INFINITY;
        }
    }
    if !(x > lo && x < hi) {
        x = 0.5 * (lo + hi);
    }

    for _ in 0..200 {
        let f = student_t_tail(x, dof) - p;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = f / student_t_pdf(x, dof);
        let mut next = x - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let moved = (next - x).abs();
        x = next;
        if moved <= 1e-14 * (1.0 + x.abs()) || hi - lo <= 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}
