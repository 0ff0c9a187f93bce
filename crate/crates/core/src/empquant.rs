//! Empirical quantiles and conformity scores.

use crate::error::{invalid, Error, Result};

/// Arm-local rewards in arrival order, plus a sorted copy for order statistics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    sorted: Vec<f64>,
}

impl Sample {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let mut sample = Self::new();
        for v in values {
            sample.push(v);
        }
        sample
    }

    /// Appends a value; the sorted copy is maintained by binary insertion.
    pub fn push(&mut self, y: f64) {
        // Insert after any equal values so ties keep arrival order.
        let at = self.sorted.partition_point(|&v| v <= y);
        self.sorted.insert(at, y);
        self.values.push(y);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn quantile(&self, tau: f64) -> Result<f64> {
        quantile_of_sorted(&self.sorted, tau)
    }
}

/// Rank `k` (1-based) of the empirical `tau`-quantile of `m` values: the
/// smallest `k` with `k / m >= tau`, evaluated exactly as written.
pub fn quantile_rank(m: usize, tau: f64) -> Result<usize> {
    if m == 0 {
        return Err(Error::InsufficientData { needed: 1, have: 0 });
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::ProbabilityOutOfRange {
            value: tau,
            range: "(0, 1]",
        });
    }
    let mf = m as f64;
    let mut k = ((mf * tau).ceil() as usize).clamp(1, m);
    while k > 1 && ((k - 1) as f64) / mf >= tau {
        k -= 1;
    }
    while k < m && (k as f64) / mf < tau {
        k += 1;
    }
    Ok(k)
}

/// Empirical quantile of an already sorted slice.
pub fn quantile_of_sorted(sorted: &[f64], tau: f64) -> Result<f64> {
    let k = quantile_rank(sorted.len(), tau)?;
    Ok(sorted[k - 1])
}

/// Empirical `tau`-quantile: `inf{x : (1/m) #{x_r <= x} >= tau}`.
pub fn empirical_quantile(values: &[f64], tau: f64) -> Result<f64> {
    let k = quantile_rank(values.len(), tau)?;
    let mut scratch = values.to_vec();
    Ok(kth_smallest(&mut scratch, k))
}

/// `k`-th smallest (1-based) entry; reorders `buf`.
pub(crate) fn kth_smallest(buf: &mut [f64], k: usize) -> f64 {
    let (_, kth, _) = buf.select_nth_unstable_by(k - 1, f64::total_cmp);
    *kth
}

/// Conformity score `max(low - y, y - high)`: how far `[low, high]` must be
/// widened to cover `y`.
pub fn score(y: f64, low: f64, high: f64) -> Result<f64> {
    check_order(low, high)?;
    Ok(raw_score(y, low, high))
}

#[inline]
pub(crate) fn raw_score(y: f64, low: f64, high: f64) -> f64 {
    (low - y).max(y - high)
}

fn check_order(low: f64, high: f64) -> Result<()> {
    if low <= high {
        Ok(())
    } else {
        Err(invalid("low", format!("{low} exceeds high {high}")))
    }
}

/// Scores of every sample value against one common interval, in arrival order.
pub fn recompute_scores(sample: &Sample, low_hat: f64, high_hat: f64) -> Result<Vec<f64>> {
    check_order(low_hat, high_hat)?;
    Ok(sample
        .values()
        .iter()
        .map(|&y| raw_score(y, low_hat, high_hat))
        .collect())
}

/// Largest absolute difference between plug-in and population scores over the
/// sample. Never exceeds `|low_hat - low_pop| + |high_hat - high_pop|`.
pub fn plugin_score_gap(
    sample: &Sample,
    low_hat: f64,
    high_hat: f64,
    low_pop: f64,
    high_pop: f64,
) -> Result<f64> {
    check_order(low_hat, high_hat)?;
    check_order(low_pop, high_pop)?;
    Ok(sample
        .values()
        .iter()
        .map(|&y| (raw_score(y, low_hat, high_hat) - raw_score(y, low_pop, high_pop)).abs())
        .fold(0.0, f64::max))
}
