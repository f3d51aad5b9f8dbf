//! Error-channel model for single-shot readout of the ST0 qubit.
//!
//! A measured shot passes through three stages: imperfect initialization
//! (`beta_s` / `beta_t`), coherent evolution with flip probability
//! `p_flip`, relaxation before detection (`gamma`), and finally tunneling
//! detection with its own error rates (`e_t`, `e_n`) plus thermal
//! tunneling of the singlet (`alpha_s`). This module carries the
//! closed-form state probabilities and the detection probability built
//! from them, and a least-squares fit that recovers `alpha_s` and
//! `beta_t` from an oscillation curve.

use crate::error::{Error, Result};
use crate::levmar::{self, LmOptions};
use crate::qubit::larmor_flip_prob;
use crate::real::Real;

/// Error-channel parameters of the measurement model.
///
/// All fields are probabilities. `beta_s + beta_t` must equal one: the
/// qubit initializes to the singlet or to one of the three triplets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinOutcomeModel<T> {
    /// Probability of initializing to the singlet.
    pub beta_s: T,
    /// Probability of initializing to a triplet (split evenly over the three).
    pub beta_t: T,
    /// Thermal tunneling probability of the singlet during readout.
    pub alpha_s: T,
    /// Relaxation probability of a triplet before detection.
    pub gamma: T,
    /// Probability of missing a tunneling event.
    pub e_t: T,
    /// Probability of falsely detecting a tunneling event.
    pub e_n: T,
}

impl<T: Real> SpinOutcomeModel<T> {
    /// Baseline error budget: fitted detection errors of 1.4% / 0.7%,
    /// thermal tunneling 0.6%, relaxation tau_out / T1 = 1 us / 337 us,
    /// and negligible false initialization.
    pub fn baseline() -> Self {
        Self {
            beta_s: T::one(),
            beta_t: T::zero(),
            alpha_s: T::lit(0.006),
            gamma: gamma_from_relaxation(T::one(), T::lit(337.0)),
            e_t: T::lit(0.014),
            e_n: T::lit(0.007),
        }
    }

    /// Error-free model: perfect initialization, detection, and retention.
    pub fn ideal() -> Self {
        Self {
            beta_s: T::one(),
            beta_t: T::zero(),
            alpha_s: T::zero(),
            gamma: T::zero(),
            e_t: T::zero(),
            e_n: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("beta_s", self.beta_s),
            ("beta_t", self.beta_t),
            ("alpha_s", self.alpha_s),
            ("gamma", self.gamma),
            ("e_t", self.e_t),
            ("e_n", self.e_n),
        ];
        for (name, value) in fields {
            if !(T::zero()..=T::one()).contains(&value) {
                return Err(Error::ModelParameterRange {
                    name,
                    value: value.as_f64(),
                });
            }
        }
        let sum = self.beta_s + self.beta_t;
        if (sum - T::one()).abs() > T::lit(1e-12) {
            return Err(Error::ModelNotNormalized { sum: sum.as_f64() });
        }
        Ok(())
    }

    /// Probability that a shot whose final state is the singlet is
    /// (falsely or thermally) detected as a tunneling event.
    ///
    /// The neglected E_T * E_N cross terms can push the linearized sum
    /// above one for large error rates; it is clamped back to a
    /// probability.
    pub fn detect_given_singlet(&self) -> T {
        (self.e_n + self.alpha_s * (T::one() - self.e_t)).min(T::one())
    }

    /// Probability that a shot whose final state is any triplet is detected.
    pub fn detect_given_triplet(&self) -> T {
        T::one() - self.e_t
    }

    /// Singlet measurement fidelity F_S: a prepared singlet is read as
    /// no-tunneling.
    pub fn fidelity_singlet(&self) -> T {
        T::one() - self.detect_given_singlet()
    }

    /// Triplet-zero measurement fidelity F_T0: a prepared T0 is read as a
    /// tunneling event, accounting for relaxation before detection.
    pub fn fidelity_t0(&self) -> T {
        (T::one() - self.gamma) * self.detect_given_triplet()
            + self.gamma * self.detect_given_singlet()
    }

    /// Oscillation visibility of the detection probability,
    /// F_S + F_T0 - 1.
    pub fn visibility(&self) -> T {
        self.fidelity_singlet() + self.fidelity_t0() - T::one()
    }
}

/// Relaxation probability before detection, tau_out / T1.
pub fn gamma_from_relaxation<T: Real>(tunnel_out_rate_mhz: T, t1_us: T) -> T {
    (T::one() / tunnel_out_rate_mhz) / t1_us
}

/// Final-state probabilities after initialization, manipulation with flip
/// probability `p_flip`, and relaxation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinProbabilities<T> {
    pub p_s: T,
    pub p_t0: T,
    pub p_tp: T,
    pub p_tm: T,
}

impl<T: Real> SpinProbabilities<T> {
    pub fn sum(&self) -> T {
        self.p_s + self.p_t0 + self.p_tp + self.p_tm
    }

    pub fn any_triplet(&self) -> T {
        self.p_t0 + self.p_tp + self.p_tm
    }
}

/// The four final-state probabilities (S, T0, T+, T-) for a given flip
/// probability.
///
/// The polarized triplets take no part in the coherent dynamics; all three
/// triplets relax at the same rate, and false initialization populates
/// each of them with probability `beta_t / 3`.
pub fn visibility_probabilities<T: Real>(
    p_flip: T,
    model: &SpinOutcomeModel<T>,
) -> SpinProbabilities<T> {
    let flip = p_flip;
    let stay = T::one() - flip;
    let g = model.gamma;
    let bt3 = model.beta_t / T::lit(3.0);

    let p_s = model.beta_s * (stay + flip * g) + bt3 * (flip + stay * g) + T::lit(2.0) * bt3 * g;
    let p_t0 = model.beta_s * flip * (T::one() - g) + bt3 * stay * (T::one() - g);
    let p_tp = bt3 * (T::one() - g);

    SpinProbabilities {
        p_s,
        p_t0,
        p_tp,
        p_tm: p_tp,
    }
}

/// Detection probability for a given final-state distribution, with the
/// E_T * E_N cross terms neglected (clamped: the dropped terms only
/// matter when the error rates are far outside the percent regime).
pub fn detection_probability_from_flip<T: Real>(p_flip: T, model: &SpinOutcomeModel<T>) -> T {
    let probs = visibility_probabilities(p_flip, model);
    let p = probs.any_triplet() * (T::one() - model.e_t)
        + probs.p_s * model.e_n
        + model.alpha_s * probs.p_s * (T::one() - model.e_t);
    p.clamp(T::zero(), T::one())
}

/// Detection probability of a Larmor shot of evolution time `tau_ns` at
/// gradient `delta_bz_mhz`.
pub fn detection_probability<T: Real>(
    tau_ns: T,
    delta_bz_mhz: T,
    model: &SpinOutcomeModel<T>,
) -> T {
    detection_probability_from_flip(larmor_flip_prob(delta_bz_mhz, tau_ns), model)
}

/// Detection error rates and conditions held fixed while fitting the
/// oscillation model.
#[derive(Debug, Clone, Copy)]
pub struct FixedErrorRates<T> {
    pub e_t: T,
    pub e_n: T,
    pub gamma: T,
    pub delta_bz_mhz: T,
}

/// Result of fitting the measurement model to an oscillation curve.
#[derive(Debug, Clone)]
pub struct VisibilityFit<T> {
    pub alpha_s: T,
    pub beta_t: T,
    pub fidelity_singlet: T,
    pub fidelity_t0: T,
    pub visibility: T,
    pub residual_norm: T,
    pub model: SpinOutcomeModel<T>,
}

/// Fit `(alpha_s, beta_t)` to a measured detection-probability curve
/// P1(tau), holding the detection errors, relaxation, and gradient fixed.
///
/// `data` pairs are `(tau_ns, p1)` and should span at least two
/// oscillation periods.
pub fn fit_visibility_model<T: Real>(
    data: &[(T, T)],
    fixed: FixedErrorRates<T>,
) -> Result<VisibilityFit<T>> {
    fit_visibility_model_counted(data, fixed, None)
}

/// [`fit_visibility_model`] for counted data: when `shots_per_point` is
/// given, residuals are scaled by the binomial uncertainty of each point,
/// which sharpens the near-degenerate (alpha_s, beta_t) split at the
/// oscillation extremes.
pub fn fit_visibility_model_counted<T: Real>(
    data: &[(T, T)],
    fixed: FixedErrorRates<T>,
    shots_per_point: Option<u64>,
) -> Result<VisibilityFit<T>> {
    if data.len() < 8 {
        return Err(Error::InvalidConfig(
            "visibility fit needs at least 8 points".into(),
        ));
    }
    let model_for = |alpha_s: T, beta_t: T| SpinOutcomeModel {
        beta_s: T::one() - beta_t,
        beta_t,
        alpha_s,
        gamma: fixed.gamma,
        e_t: fixed.e_t,
        e_n: fixed.e_n,
    };
    let weights: Vec<T> = match shots_per_point {
        None => vec![T::one(); data.len()],
        Some(n) => {
            let n = T::from_u64(n).unwrap();
            data.iter()
                .map(|&(_, y)| {
                    let y = y.clamp(T::lit(1e-4), T::lit(1.0 - 1e-4));
                    (y * (T::one() - y) / n).sqrt().recip()
                })
                .collect()
        }
    };
    let residuals = |p: &[T], out: &mut Vec<T>| {
        let m = model_for(p[0], p[1]);
        out.clear();
        for (&(tau, y), &w) in data.iter().zip(&weights) {
            out.push(w * (detection_probability(tau, fixed.delta_bz_mhz, &m) - y));
        }
    };
    let result = levmar::fit(
        &residuals,
        data.len(),
        &[T::lit(0.005), T::lit(0.001)],
        LmOptions::default(),
    );
    if !result.converged {
        return Err(Error::FitDiverged {
            residual: result.residual_norm.as_f64(),
        });
    }
    // The parameters are probabilities; data noise may push the optimum a
    // hair below zero.
    let alpha_s = result.params[0].max(T::zero());
    let beta_t = result.params[1].max(T::zero());
    let model = model_for(alpha_s, beta_t);
    Ok(VisibilityFit {
        alpha_s,
        beta_t,
        fidelity_singlet: model.fidelity_singlet(),
        fidelity_t0: model.fidelity_t0(),
        visibility: model.visibility(),
        residual_norm: result.residual_norm,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::Rng;

    fn reference_model() -> SpinOutcomeModel<f64> {
        SpinOutcomeModel {
            beta_s: 1.0,
            beta_t: 0.0,
            alpha_s: 0.006,
            gamma: 0.003,
            e_t: 0.014,
            e_n: 0.007,
        }
    }

    #[test]
    fn half_flip_splits_evenly_without_errors() {
        let model = SpinOutcomeModel::<f64>::ideal();
        let p = visibility_probabilities(0.5, &model);
        assert_abs_diff_eq!(p.p_s, 0.5);
        assert_abs_diff_eq!(p.p_t0, 0.5);
        assert_abs_diff_eq!(p.p_tp, 0.0);
        assert_abs_diff_eq!(p.p_tm, 0.0);
    }

    #[test]
    fn probabilities_sum_to_one_with_relaxation() {
        let model = SpinOutcomeModel::<f64> {
            beta_s: 1.0,
            beta_t: 0.0,
            alpha_s: 0.0,
            gamma: 0.42,
            e_t: 0.0,
            e_n: 0.0,
        };
        for i in 0..=20 {
            let p_flip = i as f64 / 20.0;
            let p = visibility_probabilities(p_flip, &model);
            assert_abs_diff_eq!(p.sum(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn triplet_initialized_hand_evaluation() {
        // beta_s = 0, beta_t = 1, gamma = 0.3%, p_flip = 0.
        let model = SpinOutcomeModel::<f64> {
            beta_s: 0.0,
            beta_t: 1.0,
            alpha_s: 0.0,
            gamma: 0.003,
            e_t: 0.0,
            e_n: 0.0,
        };
        let p = visibility_probabilities(0.0, &model);
        assert_relative_eq!(p.p_t0, (1.0 / 3.0) * 0.997, epsilon = 1e-15);
        assert_relative_eq!(
            p.p_s,
            (1.0 / 3.0) * 0.003 + (2.0 / 3.0) * 0.003,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(p.sum(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn sum_identity_over_random_models() {
        let mut rng = crate::rng::stream(11, &[0]);
        for _ in 0..10_000 {
            let beta_s: f64 = rng.random();
            let model = SpinOutcomeModel {
                beta_s,
                beta_t: 1.0 - beta_s,
                alpha_s: rng.random(),
                gamma: rng.random(),
                e_t: rng.random(),
                e_n: rng.random(),
            };
            let p = visibility_probabilities(rng.random(), &model);
            assert_abs_diff_eq!(p.sum(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn detection_probability_ideal_extremes() {
        let model = SpinOutcomeModel::<f64>::ideal();
        // tau at half Larmor period: full flip.
        let half_period = 1e3 / (2.0 * 30.0);
        assert_abs_diff_eq!(
            detection_probability(half_period, 30.0, &model),
            1.0,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(detection_probability(0.0, 30.0, &model), 0.0);
    }

    #[test]
    fn reference_model_visibility_is_about_98_percent() {
        let model = reference_model();
        // Extremes of the oscillation are at p_flip = 0 and 1.
        let lo = detection_probability_from_flip(0.0, &model);
        let hi = detection_probability_from_flip(1.0, &model);
        let visibility = hi - lo;
        assert!(
            (visibility - 0.98).abs() <= 0.01,
            "visibility = {visibility}"
        );
        assert_relative_eq!(visibility, model.visibility(), epsilon = 1e-12);
    }

    #[test]
    fn rejects_unnormalized_model() {
        let mut model = reference_model();
        model.beta_t = 0.5;
        assert!(matches!(
            model.validate(),
            Err(Error::ModelNotNormalized { .. })
        ));
    }

    #[test]
    fn fit_recovers_known_parameters_with_noise() {
        // Round trip: generate from a known model with binomial noise at
        // 10^4 shots per point, fit, compare.
        let truth = SpinOutcomeModel::<f64> {
            beta_s: 1.0 - 0.0005,
            beta_t: 0.0005,
            alpha_s: 0.006,
            gamma: 0.003,
            e_t: 0.014,
            e_n: 0.007,
        };
        let fixed = FixedErrorRates {
            e_t: truth.e_t,
            e_n: truth.e_n,
            gamma: truth.gamma,
            delta_bz_mhz: 30.0,
        };
        let shots = 10_000u32;
        let mut rng = crate::rng::stream(17, &[3]);
        let data: Vec<(f64, f64)> = (0..160)
            .map(|i| {
                let tau = i as f64 * 0.5; // 0..80 ns, > 2 periods at 30 MHz
                let p = detection_probability(tau, 30.0, &truth);
                let hits: u32 = (0..shots).map(|_| u32::from(rng.random::<f64>() < p)).sum();
                (tau, hits as f64 / shots as f64)
            })
            .collect();
        let fit = fit_visibility_model_counted(&data, fixed, Some(shots as u64)).unwrap();
        assert!(
            (fit.alpha_s - truth.alpha_s).abs() < 0.0015,
            "alpha_s = {}",
            fit.alpha_s
        );
        assert!(
            (fit.beta_t - truth.beta_t).abs() < 0.001,
            "beta_t = {}",
            fit.beta_t
        );
    }

    #[test]
    fn fit_on_ideal_data_returns_zero_errors() {
        let truth = SpinOutcomeModel::<f64> {
            beta_s: 1.0,
            beta_t: 0.0,
            alpha_s: 0.0,
            gamma: 0.0,
            e_t: 0.0,
            e_n: 0.0,
        };
        let fixed = FixedErrorRates {
            e_t: 0.0,
            e_n: 0.0,
            gamma: 0.0,
            delta_bz_mhz: 30.0,
        };
        let data: Vec<(f64, f64)> = (0..80)
            .map(|i| {
                let tau = i as f64;
                (tau, detection_probability(tau, 30.0, &truth))
            })
            .collect();
        let fit = fit_visibility_model(&data, fixed).unwrap();
        assert_abs_diff_eq!(fit.alpha_s, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(fit.beta_t, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn reference_fidelities_match_reported_visibility() {
        let model = reference_model();
        let vis = model.fidelity_singlet() + model.fidelity_t0() - 1.0;
        assert!((vis - 0.978).abs() <= 0.01, "F_S + F_T0 - 1 = {vis}");
    }

    #[test]
    fn detection_probability_stays_in_the_unit_interval() {
        let mut rng = crate::rng::stream(11, &[7]);
        for _ in 0..10_000 {
            let beta_s: f64 = rng.random();
            let model = SpinOutcomeModel {
                beta_s,
                beta_t: 1.0 - beta_s,
                alpha_s: rng.random(),
                gamma: rng.random(),
                e_t: rng.random(),
                e_n: rng.random(),
            };
            let tau = rng.random::<f64>() * 100.0;
            let delta = 10.0 + rng.random::<f64>() * 150.0;
            let p = detection_probability(tau, delta, &model);
            assert!((0.0..=1.0).contains(&p), "P_D = {p} for {model:?}");
        }
    }
}
