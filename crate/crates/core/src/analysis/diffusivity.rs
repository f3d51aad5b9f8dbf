//! Diffusivity extraction from a sampled gradient trajectory.

use crate::error::{Error, Result};
use crate::math::slope_through_origin;
use crate::real::Real;
use crate::units::KHZ2_PER_MHZ2;

/// Result of the increment-variance fit.
#[derive(Debug, Clone, Copy)]
pub struct DiffusivityFit<T> {
    pub d_khz2_per_us: T,
    pub n_lags: usize,
}

/// Variance of increments versus lag, fitted by a line through the
/// origin.
///
/// `series` holds samples of the gradient (MHz) spaced `dt_us` apart.
/// `min_lag` skips short lags where measurement noise dominates; for
/// probe-estimate series use at least 5 probe periods.
pub fn fit_diffusivity<T: Real>(
    series: &[T],
    dt_us: T,
    min_lag: usize,
    max_lag: usize,
) -> Result<DiffusivityFit<T>> {
    if series.len() < 1000 {
        return Err(Error::InvalidConfig(
            "diffusivity fit needs at least 1000 samples".into(),
        ));
    }
    if min_lag == 0 || max_lag < min_lag || max_lag >= series.len() / 2 {
        return Err(Error::InvalidConfig("bad lag window".into()));
    }
    let mut lags_us = Vec::with_capacity(max_lag - min_lag + 1);
    let mut variances = Vec::with_capacity(max_lag - min_lag + 1);
    for lag in min_lag..=max_lag {
        let mut sum = T::zero();
        let mut sum_sq = T::zero();
        let n = series.len() - lag;
        for i in 0..n {
            let d = series[i + lag] - series[i];
            sum += d;
            sum_sq += d * d;
        }
        let count = T::from_usize(n).unwrap();
        let mean = sum / count;
        variances.push(sum_sq / count - mean * mean);
        lags_us.push(T::from_usize(lag).unwrap() * dt_us);
    }
    let slope_mhz2_per_us = slope_through_origin(&lags_us, &variances);
    Ok(DiffusivityFit {
        d_khz2_per_us: slope_mhz2_per_us * T::lit(KHZ2_PER_MHZ2),
        n_lags: variances.len(),
    })
}
