//! Stochastic drift of the nuclear magnetic gradient dBz.
//!
//! The gradient performs a diffusion with configurable diffusivity,
//! optionally mean-reverting, reflected at the edges of the estimator's
//! frequency range so long simulations cannot leave the grid.

use rand::Rng;

use crate::real::Real;
use crate::units::MHZ2_PER_KHZ2;

/// Instantaneous gradient value and elapsed trajectory time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathState<T> {
    pub delta_bz: T,
    pub elapsed_us: T,
}

impl<T: Real> BathState<T> {
    pub fn new(delta_bz: T) -> Self {
        Self {
            delta_bz,
            elapsed_us: T::zero(),
        }
    }
}

/// Parameters of the gradient process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathConfig<T> {
    /// Diffusivity in kHz^2 per us.
    pub diffusivity_khz2_per_us: T,
    /// Ensemble center in MHz.
    pub mean_mhz: T,
    /// Mean-reversion rate in 1/us; zero for a pure diffusion.
    pub reversion_rate_per_us: T,
    /// Reflecting bounds in MHz.
    pub bounds_mhz: (T, T),
}

impl<T: Real> Default for BathConfig<T> {
    /// Measured diffusivity (10.16 kHz)^2/us, centered at 30 MHz, pure
    /// diffusion reflected into the default 10-160 MHz grid.
    fn default() -> Self {
        Self {
            diffusivity_khz2_per_us: T::lit(10.16 * 10.16),
            mean_mhz: T::lit(30.0),
            reversion_rate_per_us: T::zero(),
            bounds_mhz: (T::lit(10.0), T::lit(160.0)),
        }
    }
}

impl<T: Real> BathConfig<T> {
    /// Mean-reverting variant whose stationary spread about `mean_mhz` is
    /// `sigma_mhz`: reversion rate D / (2 sigma^2). Keeps long
    /// closed-loop runs hovering near the field-set working point without
    /// touching the short-time diffusion.
    pub fn reverting(mean_mhz: T, sigma_mhz: T) -> Self {
        let base = Self::default();
        let d_mhz2 = base.diffusivity_khz2_per_us * T::lit(MHZ2_PER_KHZ2);
        Self {
            mean_mhz,
            reversion_rate_per_us: d_mhz2 / (T::lit(2.0) * sigma_mhz * sigma_mhz),
            ..base
        }
    }

    pub fn validate(&self) -> crate::error::Result<()> {
        if self.diffusivity_khz2_per_us < T::zero() {
            return Err(crate::error::Error::InvalidConfig(
                "diffusivity must be non-negative".into(),
            ));
        }
        if self.bounds_mhz.0 >= self.bounds_mhz.1 {
            return Err(crate::error::Error::InvalidConfig(
                "bath bounds must be ordered".into(),
            ));
        }
        Ok(())
    }

    pub fn initial_state(&self) -> BathState<T> {
        BathState::new(self.mean_mhz)
    }
}

fn reflect<T: Real>(mut x: T, lo: T, hi: T) -> T {
    loop {
        if x < lo {
            x = lo + (lo - x);
        } else if x > hi {
            x = hi - (x - hi);
        } else {
            return x;
        }
    }
}

/// Advance the gradient by `dt_us`.
///
/// The increment is a deterministic reversion toward the mean plus a
/// Gaussian diffusion term of variance D * dt, then reflected into bounds.
pub fn step<T: Real, R: Rng + ?Sized>(
    state: BathState<T>,
    dt_us: T,
    cfg: &BathConfig<T>,
    rng: &mut R,
) -> BathState<T> {
    debug_assert!(dt_us > T::zero());
    let d_mhz2 = cfg.diffusivity_khz2_per_us * T::lit(MHZ2_PER_KHZ2);
    let drift = -cfg.reversion_rate_per_us * (state.delta_bz - cfg.mean_mhz) * dt_us;
    let diffusion = (d_mhz2 * dt_us).sqrt() * T::standard_normal(rng);
    let (lo, hi) = cfg.bounds_mhz;
    BathState {
        delta_bz: reflect(state.delta_bz + drift + diffusion, lo, hi),
        elapsed_us: state.elapsed_us + dt_us,
    }
}

/// Draw a quasi-static gradient for one probe-plus-operation block from a
/// Gaussian ensemble of width `sigma_mhz` about the configured mean,
/// truncated to the bounds.
pub fn ensemble_sample<T: Real, R: Rng + ?Sized>(
    cfg: &BathConfig<T>,
    sigma_mhz: T,
    rng: &mut R,
) -> T {
    let (lo, hi) = cfg.bounds_mhz;
    if sigma_mhz <= T::zero() {
        return cfg.mean_mhz.clamp(lo, hi);
    }
    for _ in 0..1000 {
        let x = cfg.mean_mhz + sigma_mhz * T::standard_normal(rng);
        if (lo..=hi).contains(&x) {
            return x;
        }
    }
    // A mean far outside the bounds with a tiny sigma: saturate.
    cfg.mean_mhz.clamp(lo, hi)
}
