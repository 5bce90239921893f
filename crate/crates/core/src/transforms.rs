//! Zero-skewness Box-Cox transformation of a positive treatment.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, compensated_sum, exp, expm1, ln, log1p, mean, sqrt};

/// Skewness tolerance accepted for a fitted transform.
pub const SKEW_TOLERANCE: f64 = 1e-6;
/// Skewness at which the bisection is considered converged.
pub const ROOT_TOLERANCE: f64 = 1e-8;
const INITIAL_BRACKET: f64 = 5.0;
const BRACKET_EXPANSIONS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxCoxFit {
    pub k: f64,
    /// Skewness of the transformed sample.
    pub achieved_skewness: f64,
    pub source_min: f64,
}

impl BoxCoxFit {
    pub fn apply(&self, z: f64) -> Result<f64> {
        boxcox_value(z, self.k)
    }
}

/// Population sample skewness `m3 / m2^(3/2)`.
pub fn skewness(x: &[f64]) -> Result<f64> {
    if x.len() < 3 {
        return Err(Error::DegenerateSample("skewness needs at least 3 values"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("skewness sample"));
    }
    let n = x.len() as f64;
    let m = mean(x);
    let m2 = compensated_sum(x.iter().map(|v| (v - m) * (v - m))) / n;
    let m3 = compensated_sum(x.iter().map(|v| (v - m) * (v - m) * (v - m))) / n;
    let scale = x.iter().fold(0.0f64, |acc, v| acc.max(abs(*v)));
    if !(m2 > (1e-14 * scale) * (1e-14 * scale)) {
        return Err(Error::DegenerateSample("zero variance"));
    }
    Ok(m3 / (m2 * sqrt(m2)))
}

fn boxcox_value(z: f64, k: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain("Box-Cox requires positive finite values"));
    }
    Ok(if k == 0.0 { ln(z) } else { expm1(k * ln(z)) / k })
}

/// `(z^k - 1) / k`, or `ln z` when `k == 0`.
pub fn boxcox_apply(z: &[f64], k: f64) -> Result<Vec<f64>> {
    z.iter().map(|&v| boxcox_value(v, k)).collect()
}

/// Inverse of [`boxcox_apply`].
pub fn boxcox_invert(zstar: &[f64], k: f64) -> Result<Vec<f64>> {
    zstar
        .iter()
        .map(|&v| {
            if k == 0.0 {
                return Ok(exp(v));
            }
            if !(1.0 + k * v > 0.0) {
                return Err(Error::Domain("Box-Cox inverse outside range (1 + k z* <= 0)"));
            }
            Ok(exp(log1p(k * v) / k))
        })
        .collect()
}

/// Skewness of the transform at exponent `k`, computed on a positively
/// rescaled copy `expm1(k (ln z - c)) / k` that cannot overflow.
fn transformed_skewness(log_z: &[f64], log_min: f64, log_max: f64, k: f64) -> Result<f64> {
    let shifted: Vec<f64> = if k == 0.0 {
        log_z.iter().map(|l| l - log_min).collect()
    } else {
        let c = if k > 0.0 { log_max } else { log_min };
        log_z.iter().map(|l| expm1(k * (l - c)) / k).collect()
    };
    skewness(&shifted)
}

/// Finds the exponent whose transform has zero skewness, by bisection on
/// `[-5, 5]` (bracket doubled up to three times), and returns the fit with
/// the transformed sample.
pub fn boxcox_zero_skew(z: &[f64]) -> Result<(BoxCoxFit, Vec<f64>)> {
    if z.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain("Box-Cox requires positive finite values"));
    }
    let log_z: Vec<f64> = z.iter().map(|&v| ln(v)).collect();
    let log_min = log_z.iter().copied().fold(f64::INFINITY, f64::min);
    let log_max = log_z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let objective = |k: f64| transformed_skewness(&log_z, log_min, log_max, k);

    let mut lo = -INITIAL_BRACKET;
    let mut hi = INITIAL_BRACKET;
    let mut s_lo = objective(lo)?;
    let mut s_hi = objective(hi)?;
    let mut expansions = 0;
    while s_lo.signum() == s_hi.signum() && s_lo != 0.0 && s_hi != 0.0 {
        if expansions == BRACKET_EXPANSIONS {
            return Err(Error::NoRoot {
                lower: lo,
                upper: hi,
                skew_lower: s_lo,
                skew_upper: s_hi,
            });
        }
        lo *= 2.0;
        hi *= 2.0;
        s_lo = objective(lo)?;
        s_hi = objective(hi)?;
        expansions += 1;
    }

    let k = if s_lo == 0.0 {
        lo
    } else if s_hi == 0.0 {
        hi
    } else {
        // Bisect until the bracket cannot shrink further.
        loop {
            let mid = lo + 0.5 * (hi - lo);
            if mid <= lo || mid >= hi {
                break if abs(s_lo) <= abs(s_hi) { lo } else { hi };
            }
            let s_mid = objective(mid)?;
            if s_mid == 0.0 {
                break mid;
            }
            if s_mid.signum() == s_lo.signum() {
                lo = mid;
                s_lo = s_mid;
            } else {
                hi = mid;
                s_hi = s_mid;
            }
        }
    };

    let transformed = boxcox_apply(z, k)?;
    let achieved = skewness(&transformed)?;
    if abs(achieved) > SKEW_TOLERANCE {
        return Err(Error::DegenerateSample(
            "Box-Cox skewness root not attained to tolerance",
        ));
    }
    let fit = BoxCoxFit {
        k,
        achieved_skewness: achieved,
        source_min: exp(log_min),
    };
    Ok((fit, transformed))
}
