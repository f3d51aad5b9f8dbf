//! Plain-text key-value configuration.
//!
//! One `key = value` pair per line, `#` comments, dotted keys for
//! nesting. Every key has a default (the shipped `defaults.cfg` documents
//! them all); a config file and `--set` overrides replace defaults, and
//! unknown keys are rejected. The resolved map is what the manifest
//! records, so a manifest is itself a valid config file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use stq_core::analysis::SpinOutcomeModel;
use stq_core::bath::BathConfig;
use stq_core::controller::{
    HeraldConfig, InitConfig, ProbeConfig, RecordLevel, SimEnv, TimingModel,
};
use stq_core::estimator::{FixedPointConfig, FrequencyGrid, LikelihoodParams};
use stq_core::readout::{ReadoutConfig, ShotSynthesis};

/// The shipped defaults, embedded so the binary is self-contained.
pub const DEFAULTS: &str = include_str!("../defaults.cfg");

/// Ordered key-value map with typed accessors.
#[derive(Debug, Clone, Default)]
pub struct KvMap {
    entries: BTreeMap<String, String>,
}

impl KvMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || value.is_empty() {
                bail!("line {}: empty key or value", lineno + 1);
            }
            entries.insert(key.to_string(), value.to_string());
        }
        Ok(Self { entries })
    }

    pub fn merge(&mut self, other: &KvMap) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

/// Typed accessor that records which keys were consumed, so unknown keys
/// can be rejected afterwards.
pub struct ConfigReader<'a> {
    map: &'a KvMap,
    consumed: std::cell::RefCell<std::collections::BTreeSet<String>>,
}

impl<'a> ConfigReader<'a> {
    pub fn new(map: &'a KvMap) -> Self {
        Self {
            map,
            consumed: Default::default(),
        }
    }

    fn raw(&self, key: &str) -> Result<&str> {
        self.consumed.borrow_mut().insert(key.to_string());
        self.map
            .get(key)
            .ok_or_else(|| anyhow!("missing config key `{key}`"))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let raw = self.raw(key)?;
        raw.parse()
            .with_context(|| format!("key `{key}` = `{raw}` is not a number"))
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        let raw = self.raw(key)?;
        raw.parse()
            .with_context(|| format!("key `{key}` = `{raw}` is not an unsigned integer"))
    }

    pub fn u32(&self, key: &str) -> Result<u32> {
        Ok(u32::try_from(self.u64(key)?)?)
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        Ok(usize::try_from(self.u64(key)?)?)
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        let raw = self.raw(key)?;
        match raw {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => bail!("key `{key}` = `{raw}` is not a boolean"),
        }
    }

    pub fn string(&self, key: &str) -> Result<String> {
        Ok(self.raw(key)?.to_string())
    }

    /// Comma-separated list of numbers.
    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self.raw(key)?;
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .with_context(|| format!("key `{key}`: `{s}` is not a number"))
            })
            .collect()
    }

    pub fn u32_list(&self, key: &str) -> Result<Vec<u32>> {
        let raw = self.raw(key)?;
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .with_context(|| format!("key `{key}`: `{s}` is not an integer"))
            })
            .collect()
    }

    /// Error if the map holds keys never read by the experiment setup.
    pub fn reject_unknown(&self, extra_allowed: &[&str]) -> Result<()> {
        let consumed = self.consumed.borrow();
        for key in self.map.keys() {
            if !consumed.contains(key) && !extra_allowed.contains(&key) {
                bail!("unknown config key `{key}`");
            }
        }
        Ok(())
    }
}

/// Fully resolved run settings shared by all experiments.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub map: KvMap,
    pub grid: FrequencyGrid<f64>,
    pub bath: BathConfig<f64>,
    pub ensemble_sigma_mhz: f64,
    pub loop_bath_sigma_mhz: f64,
    pub readout: ReadoutConfig,
    pub model: SpinOutcomeModel<f64>,
    pub likelihood: LikelihoodParams<f64>,
    pub probe: ProbeConfig,
    pub herald: HeraldConfig,
    pub timing: TimingModel,
    pub init: InitConfig,
    pub fixed: FixedPointConfig,
    pub shot_mode: ShotSynthesis,
    pub st_plus_leakage: f64,
    pub drive_f_rabi_mhz: f64,
    pub drive_t_rabi_decay_us: f64,
    pub drive_detuning_mhz: f64,
    pub drive_target_mhz: f64,
    pub exchange_j_mhz: f64,
    pub exchange_j_noise_relative: f64,
}

impl RunConfig {
    /// Resolve defaults, then the optional config file, then overrides.
    pub fn load(
        config_path: Option<&Path>,
        overrides: &[(String, String)],
        seed_override: Option<u64>,
    ) -> Result<RunConfig> {
        let mut map = KvMap::parse(DEFAULTS).expect("shipped defaults must parse");
        if let Some(path) = config_path {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config `{}`", path.display()))?;
            let file_map = KvMap::parse(&text)?;
            map.merge(&file_map);
        }
        for (k, v) in overrides {
            map.set(k, v);
        }
        if let Some(seed) = seed_override {
            map.set("seed", &seed.to_string());
        }
        Self::from_map(map)
    }

    pub fn from_map(map: KvMap) -> Result<RunConfig> {
        let r = ConfigReader::new(&map);
        let seed = r.u64("seed")?;

        let grid = FrequencyGrid::new(
            r.usize("grid.n_bins")?,
            r.f64("grid.f_min_mhz")?,
            r.f64("grid.f_max_mhz")?,
        )?;

        let bath = BathConfig {
            diffusivity_khz2_per_us: r.f64("bath.diffusivity_khz2_per_us")?,
            mean_mhz: r.f64("bath.mean_mhz")?,
            reversion_rate_per_us: r.f64("bath.reversion_rate_per_us")?,
            bounds_mhz: (r.f64("bath.bound_lo_mhz")?, r.f64("bath.bound_hi_mhz")?),
        };
        bath.validate()?;

        let readout = ReadoutConfig {
            t_meas_us: r.f64("readout.t_meas_us")?,
            t_int_ns: r.f64("readout.t_int_ns")?,
            sample_period_ns: r.f64("readout.sample_period_ns")?,
            tunnel_out_rate_mhz: r.f64("readout.tunnel_out_rate_mhz")?,
            tunnel_in_rate_mhz: r.f64("readout.tunnel_in_rate_mhz")?,
            snr_at_tint: r.f64("readout.snr")?,
            threshold: r.f64("readout.threshold")?,
        };
        readout.validate()?;

        let model = SpinOutcomeModel {
            beta_t: r.f64("model.beta_t")?,
            beta_s: 1.0 - r.f64("model.beta_t")?,
            alpha_s: r.f64("model.alpha_s")?,
            gamma: r.f64("model.gamma")?,
            e_t: r.f64("model.e_t")?,
            e_n: r.f64("model.e_n")?,
        };
        model.validate()?;

        let beta_raw = r.string("likelihood.beta")?;
        let beta = if beta_raw == "auto" {
            model.visibility()
        } else {
            beta_raw
                .parse()
                .with_context(|| format!("likelihood.beta = `{beta_raw}`"))?
        };
        let likelihood = LikelihoodParams::new(r.f64("likelihood.alpha")?, beta)?;

        let probe = ProbeConfig {
            n_shots: r.u32("probe.n_shots")?,
            tau_step_ns: r.f64("probe.tau_step_ns")?,
            likelihood,
        };

        let herald = HeraldConfig {
            target_mhz: r.f64("herald.target_mhz")?,
            tolerance_mhz: r.f64("herald.tolerance_mhz")?,
            op_shots: r.u32("herald.op_shots")?,
        };

        let timing = TimingModel {
            t_meas_us: r.f64("timing.t_meas_us")?,
            t_calc_us: r.f64("timing.t_calc_us")?,
            t_init_check_ns: r.f64("timing.t_init_check_ns")?,
            probe_period_us: r.f64("timing.probe_period_us")?,
            op_period_us: r.f64("timing.op_period_us")?,
            pipelined_calc: r.bool("timing.pipelined_calc")?,
        };
        timing.validate()?;

        let init = InitConfig {
            success_prob: r.f64("init.success_prob")?,
            attempt_cap: r.u64("init.attempt_cap")?,
        };

        let fixed = FixedPointConfig {
            lut_bits: r.u32("fixed.lut_bits")?,
            accumulator_bits: r.u32("fixed.accumulator_bits")?,
            ..FixedPointConfig::default()
        };
        fixed.validate()?;

        let shot_mode = match r.string("shot_mode")?.as_str() {
            "analytic" => ShotSynthesis::Analytic,
            "trace" => ShotSynthesis::Trace,
            other => bail!("shot_mode must be `analytic` or `trace`, got `{other}`"),
        };

        let cfg = RunConfig {
            seed,
            grid,
            bath,
            ensemble_sigma_mhz: r.f64("ensemble.sigma_mhz")?,
            loop_bath_sigma_mhz: r.f64("loop.bath_sigma_mhz")?,
            readout,
            model,
            likelihood,
            probe,
            herald,
            timing,
            init,
            fixed,
            shot_mode,
            st_plus_leakage: r.f64("leakage.st_plus")?,
            drive_f_rabi_mhz: r.f64("drive.f_rabi_mhz")?,
            drive_t_rabi_decay_us: r.f64("drive.t_rabi_decay_us")?,
            drive_detuning_mhz: r.f64("drive.detuning_mhz")?,
            drive_target_mhz: r.f64("drive.target_mhz")?,
            exchange_j_mhz: r.f64("exchange.j_mhz")?,
            exchange_j_noise_relative: r.f64("exchange.j_noise_relative")?,
            map: map.clone(),
        };
        // Experiment-specific keys are consumed later from the same map;
        // list them here so strict checking still works.
        r.reject_unknown(&EXPERIMENT_KEYS)?;
        Ok(cfg)
    }

    pub fn env(&self) -> SimEnv {
        SimEnv {
            model: self.model,
            readout: self.readout,
            grid: self.grid,
            timing: self.timing,
            init: self.init,
            shot_mode: self.shot_mode,
            st_plus_leakage: self.st_plus_leakage,
            records: RecordLevel::Ops,
        }
    }

    pub fn reader(&self) -> ConfigReader<'_> {
        ConfigReader::new(&self.map)
    }

    /// Manifest text: experiment id, version, and the full resolved map.
    /// A manifest parses as a config, so re-running from it reproduces
    /// the run (and its own manifest).
    pub fn manifest(&self, experiment: &str) -> String {
        let mut map = self.map.clone();
        map.set("experiment", experiment);
        map.set("version", env!("CARGO_PKG_VERSION"));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# run manifest: re-run with `stq run {experiment} --config <this file>`"
        );
        out.push_str(&map.render());
        out
    }
}

/// Keys consumed by individual experiments rather than the shared setup.
pub const EXPERIMENT_KEYS: [&str; 37] = [
    "experiment",
    "version",
    "fig1b.trials",
    "fig1b.n_list",
    "fig1b.beta_list",
    "fig2a.tau_max_ns",
    "fig2a.tau_step_ns",
    "fig2a.reps",
    "fig2b.n_list",
    "fig2b.reps",
    "fig2c.trajectories",
    "fig2c.steps",
    "fig2c.dt_us",
    "fig2c.probe_chunks",
    "fig2c.probes_per_chunk",
    "fig2d.tolerances",
    "fig3a.tau_max_ns",
    "fig3a.tau_step_ns",
    "fig3a.reps",
    "fig3bc.t_e_max_ns",
    "fig3d.j_list",
    "fig4ab.detunings_mhz",
    "fig4ab.duration_max_us",
    "fig4c.m_list",
    "fig4c.sequences",
    "fig4c.reps",
    "fig4c.p_clifford",
    "fig4c.p_x",
    "s2.t_mixing_list_mk",
    "s2.noise_relative",
    "s2.lever_mev_per_mv",
    "s2.t_s_mk",
    "s2.k_exponent",
    "s3.t_int_list_ns",
    "s3.traces_per_point",
    "s4.shots_per_point",
    "bench.updates",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_and_resolve() {
        let cfg = RunConfig::load(None, &[], None).unwrap();
        assert_eq!(cfg.grid.n_bins, 512);
        assert_eq!(cfg.probe.n_shots, 70);
        assert_eq!(cfg.readout.t_meas_us, 15.0);
        // likelihood.beta = auto resolves to the model visibility.
        assert!((cfg.likelihood.beta - cfg.model.visibility()).abs() < 1e-12);
    }

    #[test]
    fn overrides_win_over_defaults() {
        let overrides = vec![("probe.n_shots".to_string(), "42".to_string())];
        let cfg = RunConfig::load(None, &overrides, Some(7)).unwrap();
        assert_eq!(cfg.probe.n_shots, 42);
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let overrides = vec![("probe.n_shotz".to_string(), "42".to_string())];
        assert!(RunConfig::load(None, &overrides, None).is_err());
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let map = KvMap::parse("# comment\n\n a = 1 # trailing\n").unwrap();
        assert_eq!(map.get("a"), Some("1"));
    }

    #[test]
    fn malformed_lines_error() {
        assert!(KvMap::parse("just words\n").is_err());
        assert!(KvMap::parse("a =\n").is_err());
    }

    #[test]
    fn manifest_is_a_valid_config() {
        let cfg = RunConfig::load(None, &[], Some(99)).unwrap();
        let manifest = cfg.manifest("fig2c");
        let map = KvMap::parse(&manifest).unwrap();
        let cfg2 = RunConfig::from_map(map).unwrap();
        assert_eq!(cfg2.seed, 99);
        // A manifest regenerates itself exactly.
        assert_eq!(manifest, cfg2.manifest("fig2c"));
    }
}
