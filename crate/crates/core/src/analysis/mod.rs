//! Fidelity models and curve fits: the measurement error channels, decay
//! and benchmarking fits, thermometry, sensor sensitivity, and
//! diffusivity extraction.

pub mod coherence;
pub mod decay;
pub mod diffusivity;
pub mod rb;
pub mod snr;
pub mod thermometry;
pub mod visibility;

pub use coherence::{pi_pulse_fidelity_limit, sigma_from_t2, t2_from_sigma};
pub use decay::{fit_exchange_q, fit_exchange_q_family, fit_gaussian_decay, DecayFit, QFit};
pub use diffusivity::{fit_diffusivity, DiffusivityFit};
pub use rb::{
    fit_rb, irb_fidelity, rb_simulate, CliffordGroup, PrimitiveGate, RBResult, RbConfig, RbRow,
    RbTable,
};
pub use snr::{fit_snr, sensitivity_from_tau_min, SnrFit};
pub use thermometry::{
    electron_temperature, fit_fermi_dirac, fit_te_power_law, FermiFit, PowerLawFit,
};
pub use visibility::{
    detection_probability, detection_probability_from_flip, fit_visibility_model,
    gamma_from_relaxation, visibility_probabilities, FixedErrorRates, SpinOutcomeModel,
    SpinProbabilities, VisibilityFit,
};
