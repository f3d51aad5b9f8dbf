//! Unit conventions, centralized so the 10^3 factors live in one place.
//!
//! Frequencies are MHz throughout. Larmor and exchange evolution times are
//! ns, Rabi and readout times are us. A phase in cycles is therefore
//! `f_mhz * t_ns * CYCLES_PER_MHZ_NS`, and MHz * us needs no factor.

/// Cycles accumulated per (MHz * ns).
pub const CYCLES_PER_MHZ_NS: f64 = 1e-3;

pub const NS_PER_US: f64 = 1e3;
pub const US_PER_NS: f64 = 1e-3;
pub const US_PER_MS: f64 = 1e3;

/// Diffusivities are configured in kHz^2/us but the bath state is MHz.
pub const MHZ2_PER_KHZ2: f64 = 1e-6;
pub const KHZ2_PER_MHZ2: f64 = 1e6;

/// Boltzmann constant in meV/K (CODATA).
pub const BOLTZMANN_MEV_PER_K: f64 = 8.617333262e-2;

pub const SECONDS_PER_NS: f64 = 1e-9;
