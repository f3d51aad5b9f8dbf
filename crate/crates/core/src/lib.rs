//! Closed-loop simulation and estimation library for a singlet-triplet
//! spin qubit whose magnetic-gradient frequency is tracked in real time
//! by grid Bayesian inference on single-shot tunneling readout.
//!
//! The crate is organized along the loop:
//!
//! - [`qubit`]: exact two-level dynamics and outcome sampling
//! - [`bath`]: the drifting nuclear gradient the estimator chases
//! - [`readout`]: sensor-trace synthesis and threshold discrimination
//! - [`estimator`]: the grid posterior, float and fixed-point
//! - [`controller`]: probe / heralded / feedback state machines
//! - [`analysis`]: fidelity models, decay fits, benchmarking, thermometry
//!
//! Scalar-generic math accepts `f32` or `f64` through the [`real::Real`]
//! trait; the simulation loops and the integer estimator are concrete.
//! The aliases below fix the default `f64` instantiations.

pub mod analysis;
pub mod bath;
pub mod controller;
pub mod error;
pub mod estimator;
pub mod levmar;
pub mod math;
pub mod qubit;
pub mod readout;
pub mod real;
pub mod rng;
pub mod units;

pub use error::{Error, Result};

/// Default scalar for the concrete simulation stack.
pub type Scalar = f64;

pub type BlochVector64 = qubit::BlochVector<Scalar>;
pub type HamiltonianParams64 = qubit::HamiltonianParams<Scalar>;
pub type RabiDriveParams64 = qubit::RabiDriveParams<Scalar>;
pub type BathConfig64 = bath::BathConfig<Scalar>;
pub type BathState64 = bath::BathState<Scalar>;
pub type FrequencyGrid64 = estimator::FrequencyGrid<Scalar>;
pub type Posterior64 = estimator::Posterior<Scalar>;
pub type LikelihoodParams64 = estimator::LikelihoodParams<Scalar>;
pub type SpinOutcomeModel64 = analysis::SpinOutcomeModel<Scalar>;
