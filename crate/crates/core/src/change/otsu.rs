//! Otsu thresholding on a quantized intensity histogram.
//!
//! Intensities are min-max scaled and quantized into `bins` bins. For a split
//! after bin `t` the between-class variance is proportional to
//!
//! ```text
//! (n₁·s₀ − n₀·s₁)² / (n₀·n₁)
//! ```
//!
//! where `n` are class pixel counts and `s` the sums of bin indices. All
//! quantities are integers, so candidate splits are compared exactly and ties
//! resolve to the lowest bin.

use super::{ChangeMap, DifferenceImage};
use crate::error::{Error, Result};

pub const DEFAULT_BINS: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct OtsuResult {
    /// Pixels with intensity strictly above this value are changed.
    pub threshold: f64,
    /// Last bin of the unchanged class.
    pub bin: usize,
    pub change_map: ChangeMap,
}

pub fn otsu_threshold(di: &DifferenceImage) -> Result<OtsuResult> {
    otsu_threshold_with_bins(di, DEFAULT_BINS)
}

/// Bin index of every intensity after min-max scaling.
fn quantize(values: &[f64], bins: usize) -> Result<Vec<usize>> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return Err(Error::ConstantImage);
    }
    let span = hi - lo;
    Ok(values
        .iter()
        .map(|&v| (((v - lo) / span * bins as f64) as usize).min(bins - 1))
        .collect())
}

/// Full-width product of two `u128` values as `(high, low)` words.
fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    const MASK: u128 = (1 << 64) - 1;
    let (a_hi, a_lo) = (a >> 64, a & MASK);
    let (b_hi, b_lo) = (b >> 64, b & MASK);
    let lo_lo = a_lo * b_lo;
    let hi_lo = a_hi * b_lo;
    let lo_hi = a_lo * b_hi;
    let hi_hi = a_hi * b_hi;
    let cross = (lo_lo >> 64) + (hi_lo & MASK) + (lo_hi & MASK);
    let low = (cross << 64) | (lo_lo & MASK);
    let high = hi_hi + (hi_lo >> 64) + (lo_hi >> 64) + (cross >> 64);
    (high, low)
}

/// Exact `a/b > c/d` for positive denominators.
fn ratio_greater(a: u128, b: u128, c: u128, d: u128) -> bool {
    mul_wide(a, d) > mul_wide(c, b)
}

pub fn otsu_threshold_with_bins(di: &DifferenceImage, bins: usize) -> Result<OtsuResult> {
    if bins < 2 {
        return Err(Error::InvalidConfig("otsu needs at least 2 bins".into()));
    }
    let values = di.intensity();
    let quantized = quantize(values, bins)?;
    let mut hist = vec![0u64; bins];
    for &b in &quantized {
        hist[b] += 1;
    }
    let n_total: u64 = hist.iter().sum();
    let s_total: u128 = hist.iter().enumerate().map(|(b, &c)| b as u128 * c as u128).sum();

    let mut best: Option<(usize, u128, u128)> = None;
    let (mut n0, mut s0) = (0u64, 0u128);
    for (t, &count) in hist.iter().enumerate().take(bins - 1) {
        n0 += count;
        s0 += t as u128 * count as u128;
        let n1 = n_total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let s1 = s_total - s0;
        let lhs = n1 as u128 * s0;
        let rhs = n0 as u128 * s1;
        let diff = lhs.abs_diff(rhs);
        let (num_hi, num_lo) = mul_wide(diff, diff);
        // diff² fits in u128 for any realistic image; saturate otherwise.
        let num = if num_hi == 0 { num_lo } else { u128::MAX };
        let den = n0 as u128 * n1 as u128;
        match best {
            Some((_, bn, bd)) if !ratio_greater(num, den, bn, bd) => {}
            _ => best = Some((t, num, den)),
        }
    }
    let (bin, _, _) = best.ok_or(Error::ConstantImage)?;

    let threshold = values
        .iter()
        .zip(&quantized)
        .filter(|(_, &b)| b <= bin)
        .map(|(&v, _)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let mask = quantized.iter().map(|&b| b > bin).collect();
    Ok(OtsuResult {
        threshold,
        bin,
        change_map: ChangeMap::new(di.height(), di.width(), mask)?,
    })
}
