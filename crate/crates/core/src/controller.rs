//! Closed-loop state machines: probe, heralded operation, and active
//! frequency feedback.
//!
//! A probe step runs N single shots at evolution times t_k = k * tau_step,
//! feeding sequential Bayesian updates. Heralded mode triggers a short
//! operation block only when the probe estimate falls inside a tolerance
//! window around the target frequency; feedback mode always operates,
//! driving at the (9-bit quantized) estimate. The bath drifts by the
//! wall-clock of every step, including measurement, calculation, and
//! initialization latencies, which is what degrades long probes.

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::analysis::visibility::SpinOutcomeModel;
use crate::bath::{self, BathConfig, BathState};
use crate::error::{Error, Result};
use crate::estimator::{
    quantize_frequency, FrequencyGrid, LikelihoodParams, LikelihoodTable, Outcome, Posterior,
};
use crate::math::gauss_tail;
use crate::qubit::{self, BlochVector, HamiltonianParams, RabiDriveParams, SpinLabel};
use crate::readout::{single_shot, ReadoutConfig, ShotSynthesis};
use crate::rng::stream;
use crate::units::US_PER_NS;

/// Latency budget of one loop iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingModel {
    /// Measurement window, us.
    pub t_meas_us: f64,
    /// Bayesian calculation time per shot, us.
    pub t_calc_us: f64,
    /// One initialization check, ns.
    pub t_init_check_ns: f64,
    /// Nominal probe-shot repetition period, us (reporting/validation).
    pub probe_period_us: f64,
    /// Nominal operation-shot repetition period, us.
    pub op_period_us: f64,
    /// When true the calculation overlaps the next initialization instead
    /// of being charged sequentially.
    pub pipelined_calc: bool,
}

impl Default for TimingModel {
    fn default() -> Self {
        Self {
            t_meas_us: 15.0,
            t_calc_us: 10.0,
            t_init_check_ns: 200.0,
            probe_period_us: 26.0,
            op_period_us: 16.0,
            pipelined_calc: false,
        }
    }
}

impl TimingModel {
    pub fn validate(&self) -> Result<()> {
        if self.probe_period_us < self.t_meas_us || self.op_period_us < self.t_meas_us {
            return Err(Error::InvalidConfig(
                "nominal periods cannot be shorter than the measurement window".into(),
            ));
        }
        Ok(())
    }
}

/// Adaptive initialization settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitConfig {
    /// Probability that one 200 ns check confirms the singlet. The
    /// default 0.2 puts the mean probe repetition period at ~26 us.
    pub success_prob: f64,
    pub attempt_cap: u64,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            success_prob: 0.2,
            attempt_cap: 10_000,
        }
    }
}

/// Probe-step settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub n_shots: u32,
    pub tau_step_ns: f64,
    pub likelihood: LikelihoodParams<f64>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            n_shots: 70,
            tau_step_ns: 4.0,
            likelihood: LikelihoodParams::default(),
        }
    }
}

/// Heralding window and operation block length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeraldConfig {
    pub target_mhz: f64,
    pub tolerance_mhz: f64,
    pub op_shots: u32,
}

impl Default for HeraldConfig {
    fn default() -> Self {
        Self {
            target_mhz: 30.0,
            tolerance_mhz: 0.1,
            op_shots: 20,
        }
    }
}

/// How much telemetry the loop keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordLevel {
    None,
    /// Operation shots only.
    Ops,
    /// Every shot, probe and operation.
    All,
}

/// Everything the loop needs wired together.
#[derive(Debug, Clone)]
pub struct SimEnv {
    pub model: SpinOutcomeModel<f64>,
    pub readout: ReadoutConfig,
    pub grid: FrequencyGrid<f64>,
    pub timing: TimingModel,
    pub init: InitConfig,
    pub shot_mode: ShotSynthesis,
    /// Leakage probability through the S-T+ anticrossing while preparing
    /// or projecting on the x-axis; applied to feedback-mode operations.
    pub st_plus_leakage: f64,
    pub records: RecordLevel,
}

impl Default for SimEnv {
    fn default() -> Self {
        Self {
            model: SpinOutcomeModel::baseline(),
            readout: ReadoutConfig::reference_device(),
            grid: FrequencyGrid::default(),
            timing: TimingModel::default(),
            init: InitConfig::default(),
            shot_mode: ShotSynthesis::Analytic,
            st_plus_leakage: 0.003,
            records: RecordLevel::Ops,
        }
    }
}

/// Gradient model driving a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BathModel {
    /// Constant gradient.
    Frozen(f64),
    /// Continuous diffusion stepped by wall-clock.
    Diffusive(BathConfig<f64>),
    /// Quasi-static: redrawn from a Gaussian ensemble at every probe.
    Ensemble {
        cfg: BathConfig<f64>,
        sigma_mhz: f64,
    },
}

#[derive(Debug, Clone)]
enum BathDriver {
    Frozen(f64),
    Diffusive {
        state: BathState<f64>,
        cfg: BathConfig<f64>,
    },
    Ensemble {
        cfg: BathConfig<f64>,
        sigma_mhz: f64,
        current: f64,
    },
}

impl BathDriver {
    fn new(model: &BathModel, rng: &mut ChaCha12Rng) -> Self {
        match *model {
            BathModel::Frozen(v) => BathDriver::Frozen(v),
            BathModel::Diffusive(cfg) => BathDriver::Diffusive {
                state: cfg.initial_state(),
                cfg,
            },
            BathModel::Ensemble { cfg, sigma_mhz } => {
                let current = bath::ensemble_sample(&cfg, sigma_mhz, rng);
                BathDriver::Ensemble {
                    cfg,
                    sigma_mhz,
                    current,
                }
            }
        }
    }

    fn delta_bz(&self) -> f64 {
        match self {
            BathDriver::Frozen(v) => *v,
            BathDriver::Diffusive { state, .. } => state.delta_bz,
            BathDriver::Ensemble { current, .. } => *current,
        }
    }

    fn advance(&mut self, dt_us: f64, rng: &mut ChaCha12Rng) {
        if let BathDriver::Diffusive { state, cfg } = self {
            if dt_us > 0.0 {
                *state = bath::step(*state, dt_us, cfg, rng);
            }
        }
    }

    fn next_probe_block(&mut self, rng: &mut ChaCha12Rng) {
        if let BathDriver::Ensemble {
            cfg,
            sigma_mhz,
            current,
        } = self
        {
            *current = bath::ensemble_sample(cfg, *sigma_mhz, rng);
        }
    }
}

/// Phase tag of a telemetry record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopMode {
    Probe,
    Op,
}

impl LoopMode {
    fn as_str(self) -> &'static str {
        match self {
            LoopMode::Probe => "probe",
            LoopMode::Op => "op",
        }
    }
}

/// Per-shot telemetry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopRecord {
    pub shot: u64,
    pub t_us: f64,
    pub mode: LoopMode,
    pub outcome: u8,
    pub estimate_mhz: f64,
    pub herald: bool,
    pub init_attempts: u32,
}

/// Export records with the fixed header
/// `shot,t_us,mode,outcome,estimate_mhz,herald,init_attempts`.
pub fn write_records_csv<W: Write>(records: &[LoopRecord], mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "shot,t_us,mode,outcome,estimate_mhz,herald,init_attempts"
    )?;
    for r in records {
        writeln!(
            w,
            "{},{:.3},{},{},{:.6},{},{}",
            r.shot,
            r.t_us,
            r.mode.as_str(),
            r.outcome,
            r.estimate_mhz,
            u8::from(r.herald),
            r.init_attempts
        )?;
    }
    Ok(())
}

/// Geometric adaptive initialization: repeat 200 ns threshold checks
/// until the latest sample confirms the singlet.
pub fn adaptive_initialize<R: Rng + ?Sized>(cfg: &InitConfig, rng: &mut R) -> Result<u32> {
    debug_assert!(cfg.success_prob > 0.0 && cfg.success_prob <= 1.0);
    for attempt in 1..=cfg.attempt_cap {
        if rng.random::<f64>() < cfg.success_prob {
            return Ok(attempt as u32);
        }
    }
    Err(Error::InitializationStuck {
        attempts: cfg.attempt_cap,
    })
}

/// Gaussian-tail error probabilities of a single initialization check at
/// the readout SNR: (miss a loaded triplet's blip level, falsely see a
/// blip on the baseline).
pub fn init_check_error_probs(readout: &ReadoutConfig) -> (f64, f64) {
    let sigma = readout.sigma_at_tint(readout.t_int_ns);
    if sigma == 0.0 {
        return (0.0, 0.0);
    }
    let miss = gauss_tail((1.0 - readout.threshold) / sigma);
    let false_alarm = gauss_tail(readout.threshold / sigma);
    (miss, false_alarm)
}

/// Residual probability that a confirmed initialization actually left a
/// triplet behind: P(triplet and check missed | check confirmed).
pub fn false_init_probability(triplet_fraction: f64, miss: f64, false_alarm: f64) -> f64 {
    let confirmed_triplet = triplet_fraction * miss;
    let confirmed_singlet = (1.0 - triplet_fraction) * (1.0 - false_alarm);
    confirmed_triplet / (confirmed_triplet + confirmed_singlet)
}

/// One operation shot requested by an experiment callback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpShotSpec {
    /// Free evolution for `tau_ns`.
    Larmor { tau_ns: f64 },
    /// Quarter-Larmor rotation, exchange pulse, quarter-Larmor rotation.
    Exchange { j_mhz: f64, t_e_ns: f64 },
    /// Resonant drive for `duration_us` at `f_drive_mhz`.
    Rabi {
        f_drive_mhz: f64,
        f_rabi_mhz: f64,
        t_rabi_decay_us: f64,
        duration_us: f64,
    },
}

impl OpShotSpec {
    fn evolution_us(&self) -> f64 {
        match *self {
            OpShotSpec::Larmor { tau_ns } => tau_ns * US_PER_NS,
            OpShotSpec::Exchange { t_e_ns, .. } => t_e_ns * US_PER_NS,
            OpShotSpec::Rabi { duration_us, .. } => duration_us,
        }
    }
}

/// One recorded operation shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpOutcome {
    pub spec: OpShotSpec,
    pub bit: bool,
    pub true_delta_bz_mhz: f64,
    pub estimate_mhz: f64,
    pub t_us: f64,
}

/// Result of a single probe step.
#[derive(Debug, Clone)]
pub struct ProbeStep {
    pub estimate_mhz: f64,
    pub posterior: Posterior<f64>,
    pub records: Vec<LoopRecord>,
}

/// Result of a heralded run.
#[derive(Debug, Clone)]
pub struct HeraldRun {
    pub records: Vec<LoopRecord>,
    pub op_outcomes: Vec<OpOutcome>,
    /// Per probe: wall-clock at the end of the probe, the estimate, and
    /// the true gradient at that moment.
    pub probe_estimates: Vec<ProbeSample>,
    pub probes_run: u64,
    pub probes_accepted: u64,
    /// Operation wall-clock over total wall-clock.
    pub duty_cycle: f64,
    pub total_clock_us: f64,
}

/// One probe's outcome in a loop run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSample {
    pub t_us: f64,
    pub estimate_mhz: f64,
    pub true_delta_bz_mhz: f64,
    pub accepted: bool,
}

/// Result of a feedback run.
#[derive(Debug, Clone)]
pub struct FeedbackRun {
    pub records: Vec<LoopRecord>,
    pub shots: Vec<RabiShot>,
    pub probes_run: u64,
    pub total_clock_us: f64,
}

/// One feedback-mode Rabi shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiShot {
    pub t_us: f64,
    pub duration_us: f64,
    pub f_drive_mhz: f64,
    pub true_delta_bz_mhz: f64,
    /// Applied drive minus the true gradient at shot time.
    pub detuning_mhz: f64,
    pub bit: bool,
}

/// Drive template for feedback-mode operation.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveTemplate {
    pub f_rabi_mhz: f64,
    pub t_rabi_decay_us: f64,
    /// Pulse durations cycled over the operation shots.
    pub durations_us: Vec<f64>,
    /// User-controlled detuning added to the decoded estimate.
    pub detuning_offset_mhz: f64,
    /// Band center the gradient was tuned to. Probing at multiples of
    /// tau_step cannot distinguish f from 2 * f_fold - f
    /// (f_fold = 500 / tau_step MHz); the estimate is folded toward this
    /// target before driving.
    pub target_mhz: f64,
}

/// Heralded Larmor dataset: triplet-return probability versus evolution
/// time.
#[derive(Debug, Clone)]
pub struct P1Curve {
    pub tau_ns: Vec<f64>,
    pub p1: Vec<f64>,
    pub counts: Vec<u64>,
    /// Telemetry of the underlying run, at the configured record level.
    pub records: Vec<LoopRecord>,
}

struct LoopState {
    clock_us: f64,
    op_clock_us: f64,
    bath: BathDriver,
    records: Vec<LoopRecord>,
    shot_counter: u64,
    level: RecordLevel,
}

impl LoopState {
    fn new(model: &BathModel, level: RecordLevel, rng: &mut ChaCha12Rng) -> Self {
        Self {
            clock_us: 0.0,
            op_clock_us: 0.0,
            bath: BathDriver::new(model, rng),
            records: Vec::new(),
            shot_counter: 0,
            level,
        }
    }

    fn advance(&mut self, dt_us: f64, in_op: bool, rng: &mut ChaCha12Rng) {
        if dt_us <= 0.0 {
            return;
        }
        self.clock_us += dt_us;
        if in_op {
            self.op_clock_us += dt_us;
        }
        self.bath.advance(dt_us, rng);
    }

    fn record(
        &mut self,
        mode: LoopMode,
        outcome: bool,
        estimate: f64,
        herald: bool,
        attempts: u32,
    ) {
        self.shot_counter += 1;
        let keep = match self.level {
            RecordLevel::None => false,
            RecordLevel::Ops => mode == LoopMode::Op,
            RecordLevel::All => true,
        };
        if keep {
            self.records.push(LoopRecord {
                shot: self.shot_counter,
                t_us: self.clock_us,
                mode,
                outcome: u8::from(outcome),
                estimate_mhz: estimate,
                herald,
                init_attempts: attempts,
            });
        }
    }
}

/// Wires the qubit, readout, and estimator together and runs the loop
/// protocols.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub env: SimEnv,
    pub probe: ProbeConfig,
    table: LikelihoodTable<f64>,
}

impl Simulation {
    pub fn new(env: SimEnv, probe: ProbeConfig) -> Self {
        let table = LikelihoodTable::build(
            &env.grid,
            &probe.likelihood,
            probe.tau_step_ns,
            probe.n_shots,
        );
        Self { env, probe, table }
    }

    /// Initialization, evolution, measurement, and (for probe shots)
    /// calculation; returns the detection bit and the init attempt count.
    fn run_shot(
        &self,
        lp: &mut LoopState,
        evolution_us: f64,
        is_probe: bool,
        leakage: f64,
        p_of_delta: impl FnOnce(f64) -> f64,
        rng: &mut ChaCha12Rng,
    ) -> Result<(bool, u32)> {
        let attempts = adaptive_initialize(&self.env.init, rng)?;
        lp.advance(
            attempts as f64 * self.env.timing.t_init_check_ns * US_PER_NS,
            !is_probe,
            rng,
        );
        let delta = lp.bath.delta_bz();
        let p_t0 = p_of_delta(delta);
        lp.advance(evolution_us, !is_probe, rng);
        let label = if leakage > 0.0 && rng.random::<f64>() < leakage {
            SpinLabel::TripletPlus
        } else {
            qubit::sample_outcome(p_t0, &self.env.model, rng)?
        };
        let bit = single_shot(
            label,
            &self.env.model,
            &self.env.readout,
            self.env.shot_mode,
            rng,
        );
        lp.advance(self.env.timing.t_meas_us, !is_probe, rng);
        if is_probe && !self.env.timing.pipelined_calc {
            lp.advance(self.env.timing.t_calc_us, false, rng);
        }
        Ok((bit, attempts))
    }

    fn run_probe_inner(&self, lp: &mut LoopState, rng: &mut ChaCha12Rng) -> Result<Posterior<f64>> {
        let mut posterior = Posterior::uniform(self.env.grid);
        for k in 1..=self.probe.n_shots {
            let tau_ns = self.probe.tau_step_ns * k as f64;
            let (bit, attempts) = self.run_shot(
                lp,
                tau_ns * US_PER_NS,
                true,
                0.0,
                |delta| qubit::larmor_flip_prob(delta, tau_ns),
                rng,
            )?;
            posterior.bayes_update_with_table(&self.table, k, Outcome::from_bit(bit));
            lp.record(LoopMode::Probe, bit, posterior.estimate(), false, attempts);
        }
        Ok(posterior)
    }

    /// One standalone probe step.
    pub fn probe_step(&self, bath_model: &BathModel, seed: u64) -> Result<ProbeStep> {
        let mut rng = stream(seed, &[0x50]);
        let mut lp = LoopState::new(bath_model, self.env.records, &mut rng);
        let posterior = self.run_probe_inner(&mut lp, &mut rng)?;
        Ok(ProbeStep {
            estimate_mhz: posterior.estimate(),
            posterior,
            records: lp.records,
        })
    }

    fn run_op_shot(
        &self,
        lp: &mut LoopState,
        spec: OpShotSpec,
        estimate_mhz: f64,
        leakage: f64,
        rng: &mut ChaCha12Rng,
    ) -> Result<OpOutcome> {
        let evo = spec.evolution_us();
        let (bit, attempts) = self.run_shot(
            lp,
            evo,
            false,
            leakage,
            |delta| op_flip_probability(&spec, delta, estimate_mhz),
            rng,
        )?;
        lp.record(LoopMode::Op, bit, estimate_mhz, true, attempts);
        Ok(OpOutcome {
            spec,
            bit,
            true_delta_bz_mhz: lp.bath.delta_bz(),
            estimate_mhz,
            t_us: lp.clock_us,
        })
    }

    /// Probe repeatedly; when the estimate lands inside the herald window,
    /// run a block of operation shots defined by `experiment`.
    ///
    /// The run stops after `max_probes` probes or once `target_op_shots`
    /// operation shots have been collected, whichever comes first.
    pub fn heralded_run(
        &self,
        bath_model: &BathModel,
        herald: &HeraldConfig,
        mut experiment: impl FnMut(f64, u64) -> OpShotSpec,
        max_probes: u64,
        target_op_shots: Option<u64>,
        seed: u64,
    ) -> Result<HeraldRun> {
        let mut rng = stream(seed, &[0x51]);
        let mut lp = LoopState::new(bath_model, self.env.records, &mut rng);
        let mut op_outcomes = Vec::new();
        let mut probe_estimates = Vec::new();
        let mut probes_accepted = 0u64;
        let mut probes_run = 0u64;
        let mut op_index = 0u64;

        while probes_run < max_probes {
            if let Some(target) = target_op_shots {
                if op_index >= target {
                    break;
                }
            }
            lp.bath.next_probe_block(&mut rng);
            let posterior = self.run_probe_inner(&mut lp, &mut rng)?;
            let estimate = posterior.estimate();
            probes_run += 1;
            let accepted = (estimate - herald.target_mhz).abs() <= herald.tolerance_mhz;
            probe_estimates.push(ProbeSample {
                t_us: lp.clock_us,
                estimate_mhz: estimate,
                true_delta_bz_mhz: lp.bath.delta_bz(),
                accepted,
            });
            if accepted {
                probes_accepted += 1;
                for _ in 0..herald.op_shots {
                    let spec = experiment(lp.bath.delta_bz(), op_index);
                    op_outcomes.push(self.run_op_shot(&mut lp, spec, estimate, 0.0, &mut rng)?);
                    op_index += 1;
                }
            }
        }
        Ok(HeraldRun {
            records: lp.records,
            op_outcomes,
            probe_estimates,
            probes_run,
            probes_accepted,
            duty_cycle: if lp.clock_us > 0.0 {
                lp.op_clock_us / lp.clock_us
            } else {
                0.0
            },
            total_clock_us: lp.clock_us,
        })
    }

    /// Active feedback: probe, then drive Rabi oscillations at the
    /// decoded 9-bit estimate plus the template's detuning offset.
    pub fn feedback_run(
        &self,
        bath_model: &BathModel,
        template: &DriveTemplate,
        n_blocks: u64,
        seed: u64,
    ) -> Result<FeedbackRun> {
        let mut rng = stream(seed, &[0x52]);
        let mut lp = LoopState::new(bath_model, self.env.records, &mut rng);
        let mut shots = Vec::new();
        let fold = 500.0 / self.probe.tau_step_ns;
        for _ in 0..n_blocks {
            lp.bath.next_probe_block(&mut rng);
            let posterior = self.run_probe_inner(&mut lp, &mut rng)?;
            let mut estimate = posterior.estimate();
            // The posterior cannot tell the alias pair apart; take the
            // member of the pair nearer the tuned band.
            let mirror = 2.0 * fold - estimate;
            if (mirror - template.target_mhz).abs() < (estimate - template.target_mhz).abs() {
                estimate = mirror;
            }
            let code = quantize_frequency(estimate, &self.env.grid);
            let decoded = self.env.grid.center(code.code as usize);
            let f_drive = decoded + template.detuning_offset_mhz;
            for &duration in &template.durations_us {
                let spec = OpShotSpec::Rabi {
                    f_drive_mhz: f_drive,
                    f_rabi_mhz: template.f_rabi_mhz,
                    t_rabi_decay_us: template.t_rabi_decay_us,
                    duration_us: duration,
                };
                let out =
                    self.run_op_shot(&mut lp, spec, estimate, self.env.st_plus_leakage, &mut rng)?;
                shots.push(RabiShot {
                    t_us: out.t_us,
                    duration_us: duration,
                    f_drive_mhz: f_drive,
                    true_delta_bz_mhz: out.true_delta_bz_mhz,
                    detuning_mhz: f_drive - out.true_delta_bz_mhz,
                    bit: out.bit,
                });
            }
        }
        Ok(FeedbackRun {
            records: lp.records,
            shots,
            probes_run: n_blocks,
            total_clock_us: lp.clock_us,
        })
    }

    /// Heralded Larmor dataset: cycle the evolution times of `tau_grid_ns`
    /// over the operation shots until every point has `reps` shots.
    pub fn larmor_dataset(
        &self,
        bath_model: &BathModel,
        herald: &HeraldConfig,
        tau_grid_ns: &[f64],
        reps: u64,
        max_probes: u64,
        seed: u64,
    ) -> Result<P1Curve> {
        let taus = tau_grid_ns.to_vec();
        let n = taus.len() as u64;
        let run = self.heralded_run(
            bath_model,
            herald,
            |_, op_index| OpShotSpec::Larmor {
                tau_ns: taus[(op_index % n) as usize],
            },
            max_probes,
            Some(reps * n),
            seed,
        )?;
        let mut sums = vec![0u64; tau_grid_ns.len()];
        let mut counts = vec![0u64; tau_grid_ns.len()];
        for (i, out) in run.op_outcomes.iter().enumerate() {
            let idx = i % tau_grid_ns.len();
            sums[idx] += u64::from(out.bit);
            counts[idx] += 1;
        }
        Ok(P1Curve {
            tau_ns: tau_grid_ns.to_vec(),
            p1: sums
                .iter()
                .zip(&counts)
                .map(|(&s, &c)| if c > 0 { s as f64 / c as f64 } else { f64::NAN })
                .collect(),
            counts,
            records: run.records,
        })
    }
}

/// Triplet-return probability of one operation shot given the true
/// gradient and the controller's current estimate.
fn op_flip_probability(spec: &OpShotSpec, delta_bz: f64, estimate_mhz: f64) -> f64 {
    match *spec {
        OpShotSpec::Larmor { tau_ns } => qubit::larmor_flip_prob(delta_bz, tau_ns),
        OpShotSpec::Exchange { j_mhz, t_e_ns } => {
            // pi/2 rotation about x timed from the estimate, exchange
            // pulse, second pi/2 rotation.
            let quarter_ns = 1e3 / (4.0 * estimate_mhz);
            let free = HamiltonianParams::larmor(delta_bz);
            let pulsed = HamiltonianParams::new(j_mhz, delta_bz);
            let mut state = BlochVector::singlet();
            state = qubit::evolve(state, free, quarter_ns);
            state = qubit::evolve(state, pulsed, t_e_ns);
            state = qubit::evolve(state, free, quarter_ns);
            state.triplet_probability()
        }
        OpShotSpec::Rabi {
            f_drive_mhz,
            f_rabi_mhz,
            t_rabi_decay_us,
            duration_us,
        } => {
            let drive = RabiDriveParams {
                f_drive: f_drive_mhz,
                f_rabi: f_rabi_mhz,
                t_rabi_decay: t_rabi_decay_us,
                duration: duration_us,
            };
            qubit::rabi_prob(&drive, delta_bz, duration_us)
        }
    }
}
