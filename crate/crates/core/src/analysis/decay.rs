//! Gaussian-decay oscillation fits.
//!
//! Model: y(t) = offset + amplitude * cos(2 pi f t + phase) * exp(-(t/T)^2)
//! with t in ns and f in MHz. The frequency is located by a coarse
//! periodogram scan before the damped least-squares polish, which keeps
//! the fit deterministic and out of local minima.

use crate::error::{Error, Result};
use crate::levmar::{self, LmOptions};
use crate::real::Real;
use crate::units::CYCLES_PER_MHZ_NS;

/// Fitted parameters of a decaying oscillation.
#[derive(Debug, Clone)]
pub struct DecayFit<T> {
    pub amplitude: T,
    pub frequency_mhz: T,
    pub phase: T,
    pub offset: T,
    /// Gaussian 1/e decay time in the time unit of the input (ns).
    pub decay_time: T,
    /// Peak-to-peak oscillation amplitude, 2 * amplitude.
    pub visibility: T,
    pub residual_norm: T,
    /// Rough per-parameter variances (amplitude, frequency, phase,
    /// offset, decay rate).
    pub covariance_diag: Vec<T>,
    /// False when the decay time exceeds ten times the data span, i.e.
    /// the decay is unresolved and `decay_time` is only a lower-bound
    /// sentinel.
    pub decay_resolved: bool,
}

fn model<T: Real>(t: T, p: &[T]) -> T {
    let (a, f, phi, b, u) = (p[0], p[1], p[2], p[3], p[4]);
    let phase = T::lit(2.0) * T::PI() * f * t * T::lit(CYCLES_PER_MHZ_NS) + phi;
    // u is the decay rate 1/T^2; the exponent is clamped so trial steps
    // with negative u cannot overflow.
    let exponent = (-u * t * t).min(T::lit(50.0));
    b + a * phase.cos() * exponent.exp()
}

/// Periodogram power of the mean-removed data at frequency `f`.
fn periodogram_point<T: Real>(t: &[T], y: &[T], mean: T, f: T) -> (T, T) {
    let mut c = T::zero();
    let mut s = T::zero();
    for (&ti, &yi) in t.iter().zip(y) {
        let phase = T::lit(2.0) * T::PI() * f * ti * T::lit(CYCLES_PER_MHZ_NS);
        let (sin, cos) = phase.sin_cos();
        c += (yi - mean) * cos;
        s += (yi - mean) * sin;
    }
    (c, s)
}

fn scan_frequency<T: Real>(t: &[T], y: &[T], mean: T, f_lo: T, f_hi: T) -> (T, T, T) {
    let steps = 2000usize;
    let mut best = (f_lo, T::neg_infinity(), T::zero(), T::zero());
    for i in 0..=steps {
        let f = f_lo + (f_hi - f_lo) * T::from_usize(i).unwrap() / T::from_usize(steps).unwrap();
        let (c, s) = periodogram_point(t, y, mean, f);
        let power = c * c + s * s;
        if power > best.1 {
            best = (f, power, c, s);
        }
    }
    // Two refinement passes around the coarse peak.
    let mut f_center = best.0;
    let mut width = (f_hi - f_lo) / T::from_usize(steps).unwrap();
    for _ in 0..2 {
        for i in 0..=40 {
            let f = f_center - width + width * T::from_usize(i).unwrap() / T::lit(20.0);
            let (c, s) = periodogram_point(t, y, mean, f);
            let power = c * c + s * s;
            if power > best.1 {
                best = (f, power, c, s);
            }
        }
        f_center = best.0;
        width /= T::lit(10.0);
    }
    (best.0, best.2, best.3)
}

/// Fit a Gaussian-decay oscillation to `(t_ns, y)` samples.
///
/// Errors with [`Error::FrequencyUnidentifiable`] when the data span
/// covers less than half a period of the best-fitting frequency.
pub fn fit_gaussian_decay<T: Real>(t_ns: &[T], y: &[T]) -> Result<DecayFit<T>> {
    if t_ns.len() != y.len() || t_ns.len() < 8 {
        return Err(Error::InvalidConfig(
            "decay fit needs at least 8 (t, y) samples".into(),
        ));
    }
    let span = t_ns.iter().copied().fold(T::neg_infinity(), T::max)
        - t_ns.iter().copied().fold(T::infinity(), T::min);
    if span <= T::zero() {
        return Err(Error::InvalidConfig("zero time span".into()));
    }
    let dt_min = {
        let mut sorted: Vec<T> = t_ns.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|&d| d > T::zero())
            .fold(T::infinity(), T::min)
    };
    let n = T::from_usize(t_ns.len()).unwrap();
    let mean: T = y.iter().copied().sum::<T>() / n;

    // Search from half a period per span up to Nyquist.
    let f_lo = T::lit(500.0) / span;
    let f_hi = T::lit(500.0) / dt_min;
    let (f0, c, s) = scan_frequency(t_ns, y, mean, f_lo, f_hi);
    let amp0 = T::lit(2.0) * (c * c + s * s).sqrt() / n;
    let phi0 = (-s).atan2(c);

    let residuals = |p: &[T], out: &mut Vec<T>| {
        out.clear();
        for (&ti, &yi) in t_ns.iter().zip(y) {
            out.push(model(ti, p) - yi);
        }
    };
    // Two decay-rate starts: no decay, and a decay time of 2/3 span.
    let u_starts = [T::zero(), (T::lit(1.5) / span) * (T::lit(1.5) / span)];
    let mut best: Option<levmar::LmResult<T>> = None;
    for &u0 in &u_starts {
        let res = levmar::fit(
            &residuals,
            t_ns.len(),
            &[amp0, f0, phi0, mean, u0],
            LmOptions::default(),
        );
        if best
            .as_ref()
            .is_none_or(|b| res.residual_norm < b.residual_norm)
        {
            best = Some(res);
        }
    }
    let result = best.unwrap();
    let mut p = result.params.clone();

    // Canonical form: non-negative amplitude, phase in (-pi, pi].
    if p[0] < T::zero() {
        p[0] = -p[0];
        p[2] += T::PI();
    }
    if p[1] < T::zero() {
        p[1] = -p[1];
        p[2] = -p[2];
    }
    let tau = T::lit(2.0) * T::PI();
    p[2] = p[2] - (p[2] / tau).round() * tau;

    if p[1] * span * T::lit(CYCLES_PER_MHZ_NS) < T::lit(0.5) {
        return Err(Error::FrequencyUnidentifiable);
    }

    let u = p[4];
    let t_big = T::lit(1000.0) * span;
    let decay_time = if u > T::zero() {
        (T::one() / u.sqrt()).min(t_big)
    } else {
        t_big
    };
    Ok(DecayFit {
        amplitude: p[0],
        frequency_mhz: p[1],
        phase: p[2],
        offset: p[3],
        decay_time,
        visibility: T::lit(2.0) * p[0],
        residual_norm: result.residual_norm,
        covariance_diag: result.covariance_diag,
        decay_resolved: decay_time < T::lit(10.0) * span,
    })
}

/// Frequency, decay time, and quality factor of one exchange-oscillation
/// curve.
#[derive(Debug, Clone)]
pub struct QFit<T> {
    pub frequency_mhz: T,
    pub decay_time_ns: T,
    /// Q = f * T_decay (MHz * ns * 1e-3).
    pub q: T,
    pub decay_resolved: bool,
    pub fit: DecayFit<T>,
}

/// Fit one oscillation curve and report its quality factor.
pub fn fit_exchange_q<T: Real>(t_ns: &[T], y: &[T]) -> Result<QFit<T>> {
    let fit = fit_gaussian_decay(t_ns, y)?;
    Ok(QFit {
        frequency_mhz: fit.frequency_mhz,
        decay_time_ns: fit.decay_time,
        q: fit.frequency_mhz * fit.decay_time * T::lit(CYCLES_PER_MHZ_NS),
        decay_resolved: fit.decay_resolved,
        fit,
    })
}

/// Fit a family of curves labeled by exchange coupling.
pub fn fit_exchange_q_family<T: Real>(curves: &[(T, Vec<T>, Vec<T>)]) -> Result<Vec<(T, QFit<T>)>> {
    curves
        .iter()
        .map(|(j, t, y)| Ok((*j, fit_exchange_q(t, y)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn synth(f: f64, t2: f64, a: f64, b: f64, phi: f64, t: &[f64]) -> Vec<f64> {
        t.iter()
            .map(|&ti| {
                b + a
                    * (2.0 * std::f64::consts::PI * f * ti * 1e-3 + phi).cos()
                    * (-(ti / t2).powi(2)).exp()
            })
            .collect()
    }

    #[test]
    fn noiseless_round_trip_recovers_parameters() {
        let t: Vec<f64> = (0..=250).map(|i| i as f64 * 4.0).collect();
        let y = synth(30.0, 835.0, 0.489, 0.5, std::f64::consts::PI, &t);
        let fit = fit_gaussian_decay(&t, &y).unwrap();
        assert_relative_eq!(fit.frequency_mhz, 30.0, max_relative = 1e-3);
        assert_relative_eq!(fit.decay_time, 835.0, max_relative = 1e-3);
        assert_relative_eq!(fit.amplitude, 0.489, max_relative = 1e-3);
        assert_relative_eq!(fit.offset, 0.5, max_relative = 1e-3);
        assert!(fit.decay_resolved);
    }

    #[test]
    fn undamped_data_reports_unbounded_decay() {
        let t: Vec<f64> = (0..=200).map(|i| i as f64 * 4.0).collect();
        let y = synth(30.0, f64::INFINITY, 0.5, 0.5, 0.0, &t);
        let fit = fit_gaussian_decay(&t, &y).unwrap();
        let span = 800.0;
        assert!(
            fit.decay_time >= 10.0 * span,
            "decay_time = {}",
            fit.decay_time
        );
        assert!(!fit.decay_resolved);
    }

    #[test]
    fn too_short_span_is_unidentifiable() {
        // 10 ns of a 30 MHz oscillation is less than half a period.
        let t: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y = synth(30.0, f64::INFINITY, 0.5, 0.5, 0.0, &t);
        assert!(matches!(
            fit_gaussian_decay(&t, &y),
            Err(Error::FrequencyUnidentifiable)
        ));
    }

    #[test]
    fn fit_is_deterministic() {
        let t: Vec<f64> = (0..=150).map(|i| i as f64 * 5.0).collect();
        let mut rng = crate::rng::stream(55, &[0]);
        let y: Vec<f64> = synth(22.0, 600.0, 0.4, 0.5, 0.3, &t)
            .into_iter()
            .map(|v| v + 0.01 * (rng.random::<f64>() - 0.5))
            .collect();
        let a = fit_gaussian_decay(&t, &y).unwrap();
        let b = fit_gaussian_decay(&t, &y).unwrap();
        assert_eq!(a.frequency_mhz, b.frequency_mhz);
        assert_eq!(a.decay_time, b.decay_time);
        assert_eq!(a.residual_norm, b.residual_norm);
    }

    #[test]
    fn exchange_q_product() {
        let t: Vec<f64> = (0..=300).map(|i| i as f64 * 1.5).collect();
        let y = synth(75.0, 450.0, 0.45, 0.5, std::f64::consts::PI, &t);
        let fit = fit_exchange_q(&t, &y).unwrap();
        assert_relative_eq!(fit.q, 33.75, max_relative = 0.02);
    }

    #[test]
    fn exchange_q_unbounded_without_decay() {
        let t: Vec<f64> = (0..=300).map(|i| i as f64 * 1.5).collect();
        let y = synth(75.0, f64::INFINITY, 0.45, 0.5, 0.0, &t);
        let fit = fit_exchange_q(&t, &y).unwrap();
        assert!(!fit.decay_resolved);
        assert!(fit.q > 1000.0);
    }

    #[test]
    fn high_q_family_fits_above_28() {
        // Synthetic truth with Q > 30 across the exchange range; fitted
        // Q must stay above 28 despite binomial noise.
        let mut rng = crate::rng::stream(55, &[1]);
        let shots = 2000u32;
        for &j in &[40.0f64, 60.0, 75.0, 100.0, 120.0] {
            let omega = (j * j + 900.0f64).sqrt();
            let q_true = 33.0 * (omega * omega) / (j * j);
            let t2 = q_true / (omega * 1e-3);
            let t: Vec<f64> = (0..=250)
                .map(|i| i as f64 * (3000.0 / omega) / 250.0)
                .collect();
            let clean = synth(omega, t2, 0.45, 0.5, std::f64::consts::PI, &t);
            let y: Vec<f64> = clean
                .iter()
                .map(|&p| {
                    let hits: u32 = (0..shots).map(|_| u32::from(rng.random::<f64>() < p)).sum();
                    hits as f64 / shots as f64
                })
                .collect();
            let fit = fit_exchange_q(&t, &y).unwrap();
            assert!(fit.q > 28.0, "J = {j}: fitted Q = {}", fit.q);
        }
    }
}
