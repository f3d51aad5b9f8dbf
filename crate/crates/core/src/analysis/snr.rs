//! Charge-sensor sensitivity from the SNR versus integration time.

use crate::error::{Error, Result};
use crate::math::linear_fit;
use crate::real::Real;
use crate::units::SECONDS_PER_NS;

/// Linear fit of SNR^2 against integration time.
#[derive(Debug, Clone, Copy)]
pub struct SnrFit<T> {
    /// Slope of SNR^2 per ns.
    pub slope_per_ns: T,
    pub intercept: T,
    /// Integration time at which the fitted SNR reaches 1, ns.
    pub tau_min_ns: T,
    /// Charge sensitivity e * sqrt(tau_min), reported in e/sqrt(Hz).
    pub sensitivity_e_per_sqrt_hz: T,
}

/// Fit SNR^2 = slope * t_int + intercept and extract the minimum
/// integration time for unit SNR.
pub fn fit_snr<T: Real>(t_int_ns: &[T], snr: &[T]) -> Result<SnrFit<T>> {
    if t_int_ns.len() != snr.len() || t_int_ns.len() < 3 {
        return Err(Error::InvalidConfig(
            "SNR fit needs at least 3 points".into(),
        ));
    }
    let snr2: Vec<T> = snr.iter().map(|&s| s * s).collect();
    let (slope, intercept) = linear_fit(t_int_ns, &snr2);
    if slope <= T::zero() {
        return Err(Error::NonPositiveSlope);
    }
    let tau_min = (T::one() - intercept) / slope;
    if tau_min <= T::zero() {
        return Err(Error::NonPositiveSlope);
    }
    Ok(SnrFit {
        slope_per_ns: slope,
        intercept,
        tau_min_ns: tau_min,
        sensitivity_e_per_sqrt_hz: sensitivity_from_tau_min(tau_min),
    })
}

/// Charge sensitivity metric e * sqrt(tau_min) in units of e/sqrt(Hz).
pub fn sensitivity_from_tau_min<T: Real>(tau_min_ns: T) -> T {
    (tau_min_ns * T::lit(SECONDS_PER_NS)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn proportional_data_gives_analytic_tau_min() {
        // SNR(200 ns) = 9.2 with zero intercept: tau_min = 200 / 9.2^2.
        let t: Vec<f64> = vec![50.0, 100.0, 200.0, 400.0, 800.0];
        let snr: Vec<f64> = t.iter().map(|&ti| 9.2 * (ti / 200.0).sqrt()).collect();
        let fit = fit_snr(&t, &snr).unwrap();
        assert_relative_eq!(fit.tau_min_ns, 200.0 / (9.2 * 9.2), max_relative = 1e-9);
        assert_relative_eq!(fit.tau_min_ns, 2.3629, max_relative = 1e-3);
        assert!(fit.intercept.abs() < 1e-9);
    }

    #[test]
    fn reported_sensitivity_matches_table_entry() {
        let s: f64 = sensitivity_from_tau_min(2.45);
        assert_relative_eq!(s, 4.95e-5, max_relative = 0.01);
    }

    #[test]
    fn doubling_snr_quarters_tau_min() {
        let t: Vec<f64> = vec![100.0, 200.0, 400.0];
        let snr: Vec<f64> = t.iter().map(|&ti| 9.2 * (ti / 200.0).sqrt()).collect();
        let snr2x: Vec<f64> = snr.iter().map(|&s| 2.0 * s).collect();
        let a = fit_snr(&t, &snr).unwrap();
        let b = fit_snr(&t, &snr2x).unwrap();
        assert_relative_eq!(b.tau_min_ns, a.tau_min_ns / 4.0, max_relative = 1e-9);
    }

    #[test]
    fn non_positive_slope_is_rejected() {
        let t: Vec<f64> = vec![100.0, 200.0, 400.0];
        let snr: Vec<f64> = vec![5.0, 4.0, 3.0];
        assert!(matches!(fit_snr(&t, &snr), Err(Error::NonPositiveSlope)));
    }
}
