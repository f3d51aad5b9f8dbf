//! Two-level dynamics of the ST0 qubit.
//!
//! The Hamiltonian is (J/2) sigma_z + (dBz/2) sigma_x in frequency units,
//! so a Bloch vector precesses about the axis (dBz, 0, J) at the rate
//! sqrt(J^2 + dBz^2). The singlet sits at +z, the triplet-zero at -z.

use rand::Rng;

use crate::analysis::visibility::{visibility_probabilities, SpinOutcomeModel};
use crate::error::Result;
use crate::real::Real;
use crate::units::CYCLES_PER_MHZ_NS;

/// Exchange splitting and magnetic gradient, both in MHz.
///
/// `j_exchange` is non-negative; `delta_bz` may be any real. The
/// estimator's grid restricts its own support, the physics does not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianParams<T> {
    pub j_exchange: T,
    pub delta_bz: T,
}

impl<T: Real> HamiltonianParams<T> {
    pub fn new(j_exchange: T, delta_bz: T) -> Self {
        debug_assert!(j_exchange >= T::zero());
        Self {
            j_exchange,
            delta_bz,
        }
    }

    /// Free precession: exchange off.
    pub fn larmor(delta_bz: T) -> Self {
        Self {
            j_exchange: T::zero(),
            delta_bz,
        }
    }

    /// Total rotation rate in MHz.
    pub fn rotation_frequency(&self) -> T {
        self.j_exchange.hypot(self.delta_bz)
    }
}

/// A point in or on the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> BlochVector<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    /// The singlet.
    pub fn singlet() -> Self {
        Self::new(T::zero(), T::zero(), T::one())
    }

    /// The triplet-zero.
    pub fn triplet_zero() -> Self {
        Self::new(T::zero(), T::zero(), -T::one())
    }

    pub fn x_axis() -> Self {
        Self::new(T::one(), T::zero(), T::zero())
    }

    pub fn norm(&self) -> T {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Probability of projecting onto the triplet-zero, (1 - z) / 2.
    pub fn triplet_probability(&self) -> T {
        ((T::one() - self.z) / T::lit(2.0)).clamp(T::zero(), T::one())
    }
}

/// Spin species after the manipulation stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpinLabel {
    Singlet,
    TripletZero,
    TripletPlus,
    TripletMinus,
}

impl SpinLabel {
    pub fn is_triplet(self) -> bool {
        !matches!(self, SpinLabel::Singlet)
    }
}

/// Drive settings for a resonant exchange-modulation (Rabi) pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiDriveParams<T> {
    /// Applied modulation frequency, MHz.
    pub f_drive: T,
    /// Rabi frequency, MHz.
    pub f_rabi: T,
    /// Gaussian decay time of the Rabi envelope, us.
    pub t_rabi_decay: T,
    /// Pulse duration, us.
    pub duration: T,
}

/// Exact rotation of a Bloch vector under fixed Hamiltonian parameters for
/// `t_ns` nanoseconds.
///
/// The rotation axis is (dBz, 0, J) normalized, the angle is
/// 2*pi*sqrt(J^2 + dBz^2)*t. Norm is preserved to machine precision.
pub fn evolve<T: Real>(
    state: BlochVector<T>,
    params: HamiltonianParams<T>,
    t_ns: T,
) -> BlochVector<T> {
    debug_assert!(t_ns >= T::zero());
    let omega = params.rotation_frequency();
    if omega == T::zero() || t_ns == T::zero() {
        return state;
    }
    let (nx, nz) = (params.delta_bz / omega, params.j_exchange / omega);
    let theta = T::lit(2.0) * T::PI() * omega * t_ns * T::lit(CYCLES_PER_MHZ_NS);
    let (sin, cos) = theta.sin_cos();

    // Rodrigues rotation with axis n = (nx, 0, nz).
    let dot = nx * state.x + nz * state.z;
    let cross = BlochVector::new(-nz * state.y, nz * state.x - nx * state.z, nx * state.y);
    let omc = T::one() - cos;
    BlochVector::new(
        state.x * cos + cross.x * sin + nx * dot * omc,
        state.y * cos + cross.y * sin,
        state.z * cos + cross.z * sin + nz * dot * omc,
    )
}

/// Probability that a singlet flips to the triplet-zero after free
/// evolution for `tau_ns`: sin^2(pi * dBz * tau).
pub fn larmor_flip_prob<T: Real>(delta_bz_mhz: T, tau_ns: T) -> T {
    debug_assert!(tau_ns >= T::zero());
    let phase = T::PI() * delta_bz_mhz * tau_ns * T::lit(CYCLES_PER_MHZ_NS);
    let s = phase.sin();
    s * s
}

/// Detuned Rabi transition probability with a Gaussian decay envelope.
///
/// The oscillating term decays with exp(-(t/T)^2) while the envelope
/// center relaxes toward half the chevron amplitude
/// f_rabi^2 / (f_rabi^2 + detuning^2).
pub fn rabi_prob<T: Real>(drive: &RabiDriveParams<T>, delta_bz_mhz: T, t_us: T) -> T {
    debug_assert!(t_us >= T::zero());
    let detuning = drive.f_drive - delta_bz_mhz;
    let f2 = drive.f_rabi * drive.f_rabi;
    let amplitude = f2 / (f2 + detuning * detuning);
    let omega_eff = drive.f_rabi.hypot(detuning);
    let envelope = if drive.t_rabi_decay.is_infinite() {
        T::one()
    } else {
        let u = t_us / drive.t_rabi_decay;
        (-u * u).exp()
    };
    let s = (T::PI() * omega_eff * t_us).sin();
    let p = amplitude * s * s * envelope + (T::one() - envelope) * amplitude / T::lit(2.0);
    p.clamp(T::zero(), T::one())
}

/// Draw the final spin species for a shot whose coherent flip probability
/// is `p_t0`, passing through the initialization and relaxation channels
/// of `model`.
pub fn sample_outcome<T: Real, R: Rng + ?Sized>(
    p_t0: T,
    model: &SpinOutcomeModel<T>,
    rng: &mut R,
) -> Result<SpinLabel> {
    model.validate()?;
    let p = visibility_probabilities(p_t0.clamp(T::zero(), T::one()), model);
    let u = T::lit(rng.random::<f64>());
    let mut acc = p.p_s;
    if u < acc {
        return Ok(SpinLabel::Singlet);
    }
    acc += p.p_t0;
    if u < acc {
        return Ok(SpinLabel::TripletZero);
    }
    acc += p.p_tp;
    if u < acc {
        return Ok(SpinLabel::TripletPlus);
    }
    Ok(SpinLabel::TripletMinus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn zero_time_is_identity() {
        let s = BlochVector::singlet();
        let out = evolve(s, HamiltonianParams::larmor(30.0), 0.0);
        assert_eq!(out, s);
    }

    #[test]
    fn half_larmor_period_inverts_z() {
        // 1 / (2 * 30 MHz) = 16.666... ns.
        let t = 1e3 / 60.0;
        let out = evolve(BlochVector::singlet(), HamiltonianParams::larmor(30.0), t);
        assert_abs_diff_eq!(out.x, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(out.z, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn full_period_returns_x_axis_state() {
        let params = HamiltonianParams::new(75.0, 30.0);
        let t = 1e3 / params.rotation_frequency();
        let out = evolve(BlochVector::x_axis(), params, t);
        assert_abs_diff_eq!(out.x, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(out.y, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(out.z, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn norm_preserved_over_random_inputs() {
        let mut rng = stream(5, &[1]);
        for _ in 0..10_000 {
            let v = random_state(&mut rng);
            let params = HamiltonianParams::new(
                rng.random::<f64>() * 100.0,
                rng.random::<f64>() * 300.0 - 150.0,
            );
            let t = rng.random::<f64>() * 1000.0;
            let out = evolve(v, params, t);
            assert_abs_diff_eq!(out.norm(), v.norm(), epsilon = 1e-12);
        }
    }

    #[test]
    fn evolution_composes() {
        let mut rng = stream(5, &[2]);
        for _ in 0..1000 {
            let v = random_state(&mut rng);
            let params = HamiltonianParams::new(
                rng.random::<f64>() * 100.0,
                rng.random::<f64>() * 300.0 - 150.0,
            );
            let (t1, t2) = (rng.random::<f64>() * 100.0, rng.random::<f64>() * 100.0);
            let once = evolve(v, params, t1 + t2);
            let twice = evolve(evolve(v, params, t1), params, t2);
            assert_abs_diff_eq!(once.x, twice.x, epsilon = 1e-10);
            assert_abs_diff_eq!(once.y, twice.y, epsilon = 1e-10);
            assert_abs_diff_eq!(once.z, twice.z, epsilon = 1e-10);
        }
    }

    fn random_state(rng: &mut impl Rng) -> BlochVector<f64> {
        // Uniform on the sphere surface.
        let z = rng.random::<f64>() * 2.0 - 1.0;
        let phi = rng.random::<f64>() * std::f64::consts::TAU;
        let r = (1.0 - z * z).sqrt();
        BlochVector::new(r * phi.cos(), r * phi.sin(), z)
    }

    #[test]
    fn flip_prob_trivial_points() {
        assert_abs_diff_eq!(larmor_flip_prob(30.0, 0.0), 0.0);
        assert_abs_diff_eq!(larmor_flip_prob(30.0, 16.667), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn flip_prob_matches_bloch_evolution() {
        let mut rng = stream(5, &[3]);
        for _ in 0..2000 {
            let delta = 10.0 + rng.random::<f64>() * 150.0;
            let tau = rng.random::<f64>() * 200.0;
            let out = evolve(
                BlochVector::singlet(),
                HamiltonianParams::larmor(delta),
                tau,
            );
            let from_bloch = (1.0 - out.z) / 2.0;
            assert_abs_diff_eq!(larmor_flip_prob(delta, tau), from_bloch, epsilon = 1e-9);
        }
    }

    #[test]
    fn rabi_trivial_points() {
        let drive = RabiDriveParams {
            f_drive: 110.0,
            f_rabi: 6.05,
            t_rabi_decay: f64::INFINITY,
            duration: 0.0,
        };
        assert_abs_diff_eq!(rabi_prob(&drive, 110.0, 0.0), 0.0);
        // Pi pulse on resonance.
        let t_pi = 1.0 / (2.0 * 6.05);
        assert_abs_diff_eq!(rabi_prob(&drive, 110.0, t_pi), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn chevron_amplitude_at_one_rabi_detuning() {
        let drive = RabiDriveParams {
            f_drive: 110.0 + 6.05,
            f_rabi: 6.05,
            t_rabi_decay: f64::INFINITY,
            duration: 0.0,
        };
        // Max over t of the detuned oscillation is f_r^2/(f_r^2 + d^2) = 1/2.
        let max = (0..4000)
            .map(|i| rabi_prob(&drive, 110.0, i as f64 * 1e-4))
            .fold(0.0f64, f64::max);
        assert_abs_diff_eq!(max, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn decayed_rabi_relaxes_to_half_on_resonance() {
        let drive = RabiDriveParams {
            f_drive: 110.0,
            f_rabi: 6.05,
            t_rabi_decay: 1.71,
            duration: 0.0,
        };
        assert_abs_diff_eq!(rabi_prob(&drive, 110.0, 50.0), 0.5, epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn rabi_prob_in_unit_interval_and_symmetric(
            detuning in -40.0f64..40.0,
            f_rabi in 0.1f64..20.0,
            t in 0.0f64..10.0,
            decay in 0.1f64..5.0,
        ) {
            let drive_plus = RabiDriveParams { f_drive: 110.0 + detuning, f_rabi, t_rabi_decay: decay, duration: t };
            let drive_minus = RabiDriveParams { f_drive: 110.0 - detuning, f_rabi, t_rabi_decay: decay, duration: t };
            let p = rabi_prob(&drive_plus, 110.0, t);
            let q = rabi_prob(&drive_minus, 110.0, t);
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn ideal_model_outcomes_are_deterministic() {
        let ideal = SpinOutcomeModel::<f64>::ideal();
        let mut rng = stream(5, &[4]);
        for _ in 0..100 {
            assert_eq!(
                sample_outcome(1.0, &ideal, &mut rng).unwrap(),
                SpinLabel::TripletZero
            );
            assert_eq!(
                sample_outcome(0.0, &ideal, &mut rng).unwrap(),
                SpinLabel::Singlet
            );
        }
    }

    #[test]
    fn sample_outcome_rejects_bad_model() {
        let mut model = SpinOutcomeModel::<f64>::ideal();
        model.beta_s = 0.9;
        let mut rng = stream(5, &[5]);
        assert!(sample_outcome(0.5, &model, &mut rng).is_err());
    }

    #[test]
    fn outcome_frequencies_match_analytic_probabilities() {
        // Chi-square against the closed-form categorical distribution,
        // 10^6 draws, 3 degrees of freedom, p > 0.001.
        let model = SpinOutcomeModel::<f64> {
            beta_s: 0.995,
            beta_t: 0.005,
            alpha_s: 0.006,
            gamma: 0.003,
            e_t: 0.014,
            e_n: 0.007,
        };
        let p = crate::analysis::visibility::visibility_probabilities(0.5, &model);
        let expected = [p.p_s, p.p_t0, p.p_tp, p.p_tm];
        let n = 1_000_000usize;
        let mut counts = [0u64; 4];
        let mut rng = stream(5, &[6]);
        for _ in 0..n {
            let label = sample_outcome(0.5, &model, &mut rng).unwrap();
            let idx = match label {
                SpinLabel::Singlet => 0,
                SpinLabel::TripletZero => 1,
                SpinLabel::TripletPlus => 2,
                SpinLabel::TripletMinus => 3,
            };
            counts[idx] += 1;
        }
        let mut chi2 = 0.0;
        for (c, e) in counts.iter().zip(expected) {
            let exp = e * n as f64;
            chi2 += (*c as f64 - exp).powi(2) / exp;
        }
        // Critical value of chi-square with 3 dof at p = 0.001.
        assert!(chi2 < 16.266, "chi2 = {chi2}, counts = {counts:?}");

        // And the empirical frequencies sit within 4 sigma binomially.
        for (c, e) in counts.iter().zip(expected) {
            let sigma = (e * (1.0 - e) / n as f64).sqrt();
            let freq = *c as f64 / n as f64;
            assert!((freq - e).abs() < 4.0 * sigma, "freq {freq} vs {e}");
        }
    }

    #[test]
    fn rotation_frequency_is_hypotenuse() {
        let params = HamiltonianParams::new(75.0f64, 30.0);
        assert_relative_eq!(params.rotation_frequency(), (75.0f64 * 75.0 + 900.0).sqrt());
    }
}
