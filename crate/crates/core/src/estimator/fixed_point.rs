//! Integer Bayesian datapath mirroring the hardware implementation.
//!
//! Weights are unsigned integers. One update multiplies each weight by
//! the quantized likelihood and takes the high part of the product; when
//! the maximum weight drops below the renormalization trigger, all
//! weights are left-shifted by the same amount. A uniform shift cannot
//! change the argmax, so the estimate semantics match the float engine up
//! to quantization.

use crate::error::{Error, Result};
use crate::estimator::{argmax_lowest, FixedLut, FrequencyGrid, Outcome, UpdateStatus};
use crate::real::Real;

/// Bit widths and renormalization policy of the integer engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedPointConfig {
    /// Bits per LUT entry.
    pub lut_bits: u32,
    /// Logical accumulator width; weights stay below 2^accumulator_bits.
    pub accumulator_bits: u32,
    /// Left-shift all weights when the maximum falls below this.
    pub renorm_trigger: u64,
    /// When false, updates rely on integer headroom alone and only shift
    /// when the maximum would otherwise reach zero.
    pub renorm_between_shots: bool,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            lut_bits: 16,
            accumulator_bits: 32,
            renorm_trigger: 1 << 30,
            renorm_between_shots: true,
        }
    }
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lut_bits >= self.accumulator_bits {
            return Err(Error::InvalidConfig(
                "lut_bits must be smaller than accumulator_bits".into(),
            ));
        }
        if self.lut_bits + self.accumulator_bits > 63 {
            return Err(Error::InvalidConfig(
                "lut_bits + accumulator_bits must fit a 64-bit product".into(),
            ));
        }
        if self.renorm_trigger == 0 || self.renorm_trigger >= 1u64 << (self.accumulator_bits - 1) {
            return Err(Error::InvalidConfig(
                "renorm_trigger must lie below half the accumulator range".into(),
            ));
        }
        Ok(())
    }

    fn initial_weight(&self) -> u64 {
        1u64 << (self.accumulator_bits - 1)
    }
}

/// Integer posterior weights.
#[derive(Debug, Clone)]
pub struct FixedPosterior {
    cfg: FixedPointConfig,
    weights: Vec<u64>,
}

impl FixedPosterior {
    pub fn uniform(n_bins: usize, cfg: FixedPointConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            weights: vec![cfg.initial_weight(); n_bins],
            cfg,
        })
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    fn reset(&mut self) {
        let w = self.cfg.initial_weight();
        self.weights.fill(w);
    }

    /// Multiply-accumulate one shot through the quantized table.
    pub fn update(&mut self, lut: &FixedLut, k: u32, outcome: Outcome) -> UpdateStatus {
        assert_eq!(lut.n_bins(), self.weights.len(), "LUT grid mismatch");
        assert_eq!(lut.lut_bits, self.cfg.lut_bits, "LUT width mismatch");
        let shift = self.cfg.lut_bits;
        let cap = 1u64 << self.cfg.accumulator_bits;
        let row = lut.row(k, outcome);
        let mut max = 0u64;
        for (w, &l) in self.weights.iter_mut().zip(row) {
            // The product is bounded by 2^(accumulator + lut) <= 2^63.
            let prod = (*w * u64::from(l)) >> shift;
            debug_assert!(prod < cap, "accumulator overflow");
            *w = prod;
            max = max.max(prod);
        }
        if max == 0 {
            // All likelihoods quantized to zero: degenerate posterior.
            self.reset();
            return UpdateStatus::ResetToUniform;
        }
        let must_renorm = if self.cfg.renorm_between_shots {
            max < self.cfg.renorm_trigger
        } else {
            // Headroom mode: shift only when weights are about to vanish.
            max < (1 << shift)
        };
        if must_renorm {
            let target = self.cfg.renorm_trigger;
            let mut s = 0u32;
            while (max << s) < target {
                s += 1;
            }
            debug_assert!((max << s) < cap);
            for w in &mut self.weights {
                *w <<= s;
            }
        }
        UpdateStatus::Updated
    }

    /// Index of the most probable bin, ties to the lowest index.
    pub fn argmax_index(&self) -> usize {
        argmax_lowest(&self.weights)
    }

    pub fn estimate<T: Real>(&self, grid: &FrequencyGrid<T>) -> T {
        grid.center(self.argmax_index())
    }
}

/// Frequency code sent to the waveform generator: the argmax bin index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantizedFrequency {
    pub code: u16,
    /// Set when the estimate fell outside the grid and was clamped.
    pub clamped: bool,
}

/// Encode an estimate as a bin index (9 bits on the default 512-bin
/// grid). Decoding with [`FrequencyGrid::center`] returns the bin center.
pub fn quantize_frequency<T: Real>(estimate_mhz: T, grid: &FrequencyGrid<T>) -> QuantizedFrequency {
    let clamped = estimate_mhz < grid.f_min || estimate_mhz > grid.f_max;
    QuantizedFrequency {
        code: grid.nearest_index(estimate_mhz) as u16,
        clamped,
    }
}
