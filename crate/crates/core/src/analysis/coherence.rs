//! Relations between dephasing time and frequency uncertainty.

use crate::real::Real;

/// Frequency uncertainty behind a Gaussian-decay dephasing time:
/// sigma = 1 / (sqrt(2) * pi * T2*), with T2* in ns and sigma in MHz.
///
/// Averaging cos(2 pi df t) over df ~ N(0, sigma^2) gives
/// exp(-2 pi^2 sigma^2 t^2), so exp(-(t/T2*)^2) pins sigma to this value.
pub fn sigma_from_t2<T: Real>(t2_star_ns: T) -> T {
    debug_assert!(t2_star_ns > T::zero());
    T::lit(1000.0) / (T::SQRT_2() * T::PI() * t2_star_ns)
}

/// Inverse of [`sigma_from_t2`]: T2* in ns for a gradient spread in MHz.
pub fn t2_from_sigma<T: Real>(sigma_mhz: T) -> T {
    debug_assert!(sigma_mhz > T::zero());
    T::lit(1000.0) / (T::SQRT_2() * T::PI() * sigma_mhz)
}

/// Quality-factor limit on the pi-pulse fidelity, exp(-1/(2 Q)^2).
pub fn pi_pulse_fidelity_limit<T: Real>(q_rabi: T) -> T {
    debug_assert!(q_rabi > T::zero());
    let x = T::one() / (T::lit(2.0) * q_rabi);
    (-x * x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn sigma_at_the_closed_loop_coherence_time() {
        // 1000 / (sqrt(2) * pi * 835) = 0.269555... MHz.
        let sigma: f64 = sigma_from_t2(835.0);
        assert_abs_diff_eq!(sigma, 0.2696, epsilon = 1e-4);
        assert_relative_eq!(sigma, 0.26955578328057067, epsilon = 1e-12);
    }

    #[test]
    fn sigma_at_the_bare_coherence_time() {
        let sigma: f64 = sigma_from_t2(20.0);
        assert_abs_diff_eq!(sigma, 11.25, epsilon = 0.01);
    }

    #[test]
    fn t2_sigma_round_trip() {
        let t2: f64 = t2_from_sigma(sigma_from_t2(835.0));
        assert_relative_eq!(t2, 835.0, epsilon = 1e-9);
    }

    #[test]
    fn gaussian_dephasing_quadrature_oracle() {
        // Numerically average cos(2 pi df t) over df ~ N(0, sigma^2) and
        // compare against exp(-(t / T2*)^2) with T2* from the closed form.
        let sigma = 0.27f64;
        let t2 = t2_from_sigma(sigma);
        for &t_ns in &[50.0, 300.0, 835.0, 1500.0] {
            let mut integral = 0.0;
            let n = 40_000;
            let lim = 8.0 * sigma;
            let h = 2.0 * lim / n as f64;
            for i in 0..=n {
                let df = -lim + i as f64 * h;
                let w = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let gauss = (-df * df / (2.0 * sigma * sigma)).exp()
                    / (sigma * (2.0 * std::f64::consts::PI).sqrt());
                integral += w * gauss * (2.0 * std::f64::consts::PI * df * t_ns * 1e-3).cos();
            }
            integral *= h / 3.0;
            let expected = (-(t_ns / t2).powi(2)).exp();
            assert_abs_diff_eq!(integral, expected, epsilon = 1e-6);
        }
    }

    #[test]
    fn fidelity_limit_reference_points() {
        assert_abs_diff_eq!(pi_pulse_fidelity_limit(10.35f64), 0.99767, epsilon = 1e-5);
        assert_abs_diff_eq!(
            pi_pulse_fidelity_limit(0.5f64),
            (-1.0f64).exp(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(pi_pulse_fidelity_limit(1e9f64), 1.0, epsilon = 1e-12);
    }
}
