//! Electron thermometry from charge-transition broadening.
//!
//! The last-electron transition signal follows a Fermi-Dirac step whose
//! width measures the electron temperature through the gate lever arm;
//! the temperature saturates at low mixing-chamber temperature following
//! a power law.

use crate::error::{Error, Result};
use crate::levmar::{self, LmOptions};
use crate::math::correlation;
use crate::real::Real;
use crate::units::BOLTZMANN_MEV_PER_K;

/// Fitted Fermi-Dirac transition, P(V) = 1 / (exp(a (V - b)) + 1).
#[derive(Debug, Clone, Copy)]
pub struct FermiFit<T> {
    /// Slope parameter, 1/mV.
    pub a_per_mv: T,
    /// Transition center, mV.
    pub b_mv: T,
    pub residual_norm: T,
}

/// Fit the transition curve; the sweep must bracket the step and the
/// signal must be a monotonic transition.
pub fn fit_fermi_dirac<T: Real>(v_mv: &[T], signal: &[T]) -> Result<FermiFit<T>> {
    if v_mv.len() != signal.len() || v_mv.len() < 5 {
        return Err(Error::InvalidConfig(
            "thermometry fit needs at least 5 sweep points".into(),
        ));
    }
    let min = signal.iter().copied().fold(T::infinity(), T::min);
    let max = signal.iter().copied().fold(T::neg_infinity(), T::max);
    if min > T::lit(0.4) || max < T::lit(0.6) {
        return Err(Error::NonMonotonicSignal);
    }
    // Logit-linearized trend: monotone transitions correlate strongly.
    let eps = T::lit(1e-6);
    let logit: Vec<T> = signal
        .iter()
        .map(|&y| {
            let y = y.clamp(eps, T::one() - eps);
            (T::one() / y - T::one()).ln()
        })
        .collect();
    let corr = correlation(v_mv, &logit);
    if corr.abs() < T::lit(0.7) {
        return Err(Error::NonMonotonicSignal);
    }
    let (a0, ab0) = crate::math::linear_fit(v_mv, &logit);
    let b0 = -ab0 / a0;

    let residuals = |p: &[T], out: &mut Vec<T>| {
        out.clear();
        for (&v, &y) in v_mv.iter().zip(signal) {
            let arg = (p[0] * (v - p[1])).clamp(T::lit(-500.0), T::lit(500.0));
            out.push(T::one() / (arg.exp() + T::one()) - y);
        }
    };
    let res = levmar::fit(&residuals, v_mv.len(), &[a0, b0], LmOptions::default());
    if !res.converged {
        return Err(Error::FitDiverged {
            residual: res.residual_norm.as_f64(),
        });
    }
    Ok(FermiFit {
        a_per_mv: res.params[0],
        b_mv: res.params[1],
        residual_norm: res.residual_norm,
    })
}

/// Electron temperature in kelvin from the fitted slope (1/mV) and the
/// lever arm (meV/mV): a = lever / (k_B T_e).
pub fn electron_temperature<T: Real>(a_per_mv: T, lever_arm_mev_per_mv: T) -> T {
    lever_arm_mev_per_mv / (T::lit(BOLTZMANN_MEV_PER_K) * a_per_mv)
}

/// Fitted saturation law T_e = (T_S^k + T_mixing^k)^(1/k).
#[derive(Debug, Clone, Copy)]
pub struct PowerLawFit<T> {
    /// Saturation temperature, same unit as the inputs.
    pub t_s: T,
    pub k: T,
    pub residual_norm: T,
}

pub fn fit_te_power_law<T: Real>(t_mixing: &[T], t_e: &[T]) -> Result<PowerLawFit<T>> {
    if t_mixing.len() != t_e.len() || t_mixing.len() < 4 {
        return Err(Error::InvalidConfig(
            "power-law fit needs at least 4 points".into(),
        ));
    }
    let t_s0 = t_e.iter().copied().fold(T::infinity(), T::min);
    let residuals = |p: &[T], out: &mut Vec<T>| {
        out.clear();
        let (t_s, k) = (p[0].abs(), p[1].abs().max(T::lit(0.2)));
        for (&tm, &te) in t_mixing.iter().zip(t_e) {
            let predicted = (t_s.powf(k) + tm.powf(k)).powf(T::one() / k);
            out.push(predicted - te);
        }
    };
    let mut best: Option<levmar::LmResult<T>> = None;
    for k0 in [T::lit(1.5), T::lit(3.0), T::lit(5.0)] {
        let res = levmar::fit(
            &residuals,
            t_mixing.len(),
            &[t_s0, k0],
            LmOptions::default(),
        );
        if best
            .as_ref()
            .is_none_or(|b| res.residual_norm < b.residual_norm)
        {
            best = Some(res);
        }
    }
    let res = best.unwrap();
    Ok(PowerLawFit {
        t_s: res.params[0].abs(),
        k: res.params[1].abs(),
        residual_norm: res.residual_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    /// Slope parameter for a given electron temperature in mK.
    fn a_for_temperature(t_e_mk: f64, lever: f64) -> f64 {
        lever / (BOLTZMANN_MEV_PER_K * t_e_mk * 1e-3)
    }

    #[test]
    fn recovers_slope_from_synthetic_transition() {
        let lever = 0.0497;
        let a_true = a_for_temperature(72.0, lever);
        let b_true = 3.2;
        let v: Vec<f64> = (0..120).map(|i| b_true - 1.0 + i as f64 / 60.0).collect();
        let y: Vec<f64> = v
            .iter()
            .map(|&vv| 1.0 / ((a_true * (vv - b_true)).exp() + 1.0))
            .collect();
        let fit = fit_fermi_dirac(&v, &y).unwrap();
        let t_e = electron_temperature(fit.a_per_mv, lever);
        assert_relative_eq!(t_e * 1e3, 72.0, max_relative = 0.01);
        assert_relative_eq!(fit.b_mv, b_true, max_relative = 0.01);
    }

    #[test]
    fn non_monotonic_signal_is_rejected() {
        let v: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = v.iter().map(|&vv| 0.5 + 0.45 * (vv * 3.0).sin()).collect();
        assert!(matches!(
            fit_fermi_dirac(&v, &y),
            Err(Error::NonMonotonicSignal)
        ));
    }

    #[test]
    fn unbracketed_transition_is_rejected() {
        let v: Vec<f64> = (0..50).map(|i| i as f64 * 0.01).collect();
        let y: Vec<f64> = v.iter().map(|_| 0.95).collect();
        assert!(fit_fermi_dirac(&v, &y).is_err());
    }

    #[test]
    fn power_law_asymptote_is_mixing_temperature() {
        let t_s: f64 = 72.0;
        let k: f64 = 3.35;
        let te = |tm: f64| (t_s.powf(k) + tm.powf(k)).powf(1.0 / k);
        assert_relative_eq!(te(500.0), 500.0, max_relative = 0.01);
        assert_relative_eq!(te(0.0), t_s, max_relative = 1e-12);
    }

    #[test]
    fn power_law_round_trip_with_noise() {
        let (t_s, k): (f64, f64) = (72.0, 3.35);
        let mut rng = crate::rng::stream(66, &[0]);
        let t_mixing: Vec<f64> = (0..40).map(|i| 7.0 + i as f64 * (293.0 / 39.0)).collect();
        let t_e: Vec<f64> = t_mixing
            .iter()
            .map(|&tm| {
                let clean = (t_s.powf(k) + tm.powf(k)).powf(1.0 / k);
                clean * (1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0))
            })
            .collect();
        let fit = fit_te_power_law(&t_mixing, &t_e).unwrap();
        assert!((fit.t_s - t_s).abs() < 2.0, "T_S = {}", fit.t_s);
        assert!((fit.k - k).abs() < 0.2, "k = {}", fit.k);
    }
}
