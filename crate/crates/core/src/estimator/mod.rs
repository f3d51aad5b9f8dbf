//! Grid Bayesian estimation of the qubit frequency.
//!
//! The posterior lives on a uniform frequency grid. Each single shot at
//! evolution time t_k = k * tau_step multiplies every bin by
//! (1 + r (alpha + beta cos(2 pi f t_k))) / 2, with r = +1 for a
//! no-tunnel (singlet) outcome and -1 for a detected tunneling event,
//! then renormalizes. [`FixedPosterior`] carries the integer datapath
//! that mirrors the hardware implementation; [`rmse_study`] the
//! convergence study.

mod fixed_point;
mod lut;
mod rmse;

pub use fixed_point::{quantize_frequency, FixedPointConfig, FixedPosterior, QuantizedFrequency};
pub use lut::{FixedLut, LikelihoodTable};
pub use rmse::{rmse_study, RmseCell, RmseStudyConfig, RmseTable};

use crate::analysis::visibility::SpinOutcomeModel;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::units::CYCLES_PER_MHZ_NS;

/// Default number of shots per estimation.
pub const DEFAULT_SHOTS: u32 = 70;
/// Default evolution-time step, ns (t_k = 4 k).
pub const DEFAULT_TAU_STEP_NS: f64 = 4.0;

/// Uniform frequency grid, endpoints inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid<T> {
    pub n_bins: usize,
    pub f_min: T,
    pub f_max: T,
}

impl<T: Real> Default for FrequencyGrid<T> {
    /// 512 bins spanning 10 to 160 MHz.
    fn default() -> Self {
        Self {
            n_bins: 512,
            f_min: T::lit(10.0),
            f_max: T::lit(160.0),
        }
    }
}

impl<T: Real> FrequencyGrid<T> {
    pub fn new(n_bins: usize, f_min: T, f_max: T) -> Result<Self> {
        if n_bins < 2 {
            return Err(Error::InvalidConfig("grid needs at least 2 bins".into()));
        }
        if f_min >= f_max {
            return Err(Error::InvalidConfig("grid bounds must be ordered".into()));
        }
        Ok(Self {
            n_bins,
            f_min,
            f_max,
        })
    }

    pub fn span(&self) -> T {
        self.f_max - self.f_min
    }

    /// Center frequency of bin `i`.
    pub fn center(&self, i: usize) -> T {
        debug_assert!(i < self.n_bins);
        self.f_min + T::from_usize(i).unwrap() * self.spacing()
    }

    /// Distance between adjacent bin centers.
    pub fn spacing(&self) -> T {
        self.span() / T::from_usize(self.n_bins - 1).unwrap()
    }

    /// Index of the bin whose center is nearest to `f`, clamped to the
    /// grid.
    pub fn nearest_index(&self, f: T) -> usize {
        let raw = ((f - self.f_min) / self.spacing()).round();
        let raw = raw.max(T::zero());
        let idx = raw.to_usize().unwrap_or(0);
        idx.min(self.n_bins - 1)
    }

    pub fn centers(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.n_bins).map(|i| self.center(i))
    }
}

/// Measurement outcome of one shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// No tunneling event: singlet-like, bit 0.
    NoTunnel,
    /// Tunneling detected: triplet-like, bit 1.
    Tunnel,
}

impl Outcome {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Outcome::Tunnel
        } else {
            Outcome::NoTunnel
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Outcome::NoTunnel => 0,
            Outcome::Tunnel => 1,
        }
    }

    /// Sign r entering the likelihood: +1 for singlet, -1 for triplet.
    pub fn sign<T: Real>(self) -> T {
        match self {
            Outcome::NoTunnel => T::one(),
            Outcome::Tunnel => -T::one(),
        }
    }
}

/// Axis-offset and visibility parameters of the shot likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodParams<T> {
    pub alpha: T,
    pub beta: T,
}

impl<T: Real> LikelihoodParams<T> {
    pub fn new(alpha: T, beta: T) -> Result<Self> {
        let ok = alpha.abs() <= T::one()
            && (T::zero()..=T::one()).contains(&beta)
            && alpha.abs() + beta <= T::one() + T::lit(1e-12);
        if !ok {
            return Err(Error::LikelihoodRange {
                alpha: alpha.as_f64(),
                beta: beta.as_f64(),
            });
        }
        Ok(Self { alpha, beta })
    }

    /// Ideal likelihood: alpha 0, beta 1.
    pub fn ideal() -> Self {
        Self {
            alpha: T::zero(),
            beta: T::one(),
        }
    }

    /// Likelihood matched to a measurement model: alpha 0 by convention,
    /// beta = F_S + F_T0 - 1.
    pub fn for_model(model: &SpinOutcomeModel<T>) -> Self {
        Self {
            alpha: T::zero(),
            beta: model.visibility(),
        }
    }
}

impl<T: Real> Default for LikelihoodParams<T> {
    fn default() -> Self {
        Self::for_model(&SpinOutcomeModel::baseline())
    }
}

/// Shot likelihood (1 + r (alpha + beta cos(2 pi f t_k))) / 2 at
/// frequency `f_mhz` for shot index `k`.
pub fn shot_likelihood<T: Real>(
    f_mhz: T,
    k: u32,
    outcome: Outcome,
    params: &LikelihoodParams<T>,
    tau_step_ns: T,
) -> T {
    let t_k = tau_step_ns * T::from_u32(k).unwrap();
    let phase = T::lit(2.0) * T::PI() * f_mhz * t_k * T::lit(CYCLES_PER_MHZ_NS);
    (T::one() + outcome.sign::<T>() * (params.alpha + params.beta * phase.cos())) / T::lit(2.0)
}

/// Result of one Bayesian update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateStatus {
    Updated,
    /// All likelihoods vanished (possible only when |alpha| + beta = 1
    /// exactly); the posterior was reset to uniform.
    ResetToUniform,
}

/// Discrete posterior over the frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior<T> {
    grid: FrequencyGrid<T>,
    weights: Vec<T>,
}

impl<T: Real> Posterior<T> {
    /// Uniform initial distribution.
    pub fn uniform(grid: FrequencyGrid<T>) -> Self {
        let w = T::one() / T::from_usize(grid.n_bins).unwrap();
        Self {
            grid,
            weights: vec![w; grid.n_bins],
        }
    }

    pub fn grid(&self) -> &FrequencyGrid<T> {
        &self.grid
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    fn renormalize(&mut self) -> UpdateStatus {
        let sum: T = self.weights.iter().copied().sum();
        if sum <= T::zero() || !sum.is_finite() {
            let w = T::one() / T::from_usize(self.grid.n_bins).unwrap();
            self.weights.fill(w);
            return UpdateStatus::ResetToUniform;
        }
        let inv = T::one() / sum;
        for w in &mut self.weights {
            *w *= inv;
        }
        UpdateStatus::Updated
    }

    /// Multiply in the likelihood of shot `k` with the given outcome and
    /// renormalize.
    pub fn bayes_update(
        &mut self,
        k: u32,
        outcome: Outcome,
        params: &LikelihoodParams<T>,
        tau_step_ns: T,
    ) -> UpdateStatus {
        for (i, w) in self.weights.iter_mut().enumerate() {
            let f = self.grid.f_min + T::from_usize(i).unwrap() * self.grid.spacing();
            *w *= shot_likelihood(f, k, outcome, params, tau_step_ns);
        }
        self.renormalize()
    }

    /// Fast-path update through a precomputed likelihood table.
    pub fn bayes_update_with_table(
        &mut self,
        table: &LikelihoodTable<T>,
        k: u32,
        outcome: Outcome,
    ) -> UpdateStatus {
        let row = table.row(k, outcome);
        for (w, &l) in self.weights.iter_mut().zip(row) {
            *w *= l;
        }
        self.renormalize()
    }

    /// Most probable frequency: the center of the argmax bin, ties broken
    /// toward the lowest index.
    pub fn estimate(&self) -> T {
        self.grid.center(argmax_lowest(&self.weights))
    }
}

/// Index of the maximum, lowest index on ties.
pub(crate) fn argmax_lowest<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
