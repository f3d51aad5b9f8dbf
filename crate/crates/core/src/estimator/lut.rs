//! Precomputed likelihood tables, float and quantized.
//!
//! The float table is the fast path for simulation loops; the quantized
//! table is the image of what the hardware datapath holds in block RAM,
//! one entry per (shot index, outcome, bin). The binary dump format is
//! documented bit-exactly in `docs/lut_format.md`.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::estimator::{shot_likelihood, FrequencyGrid, LikelihoodParams, Outcome};
use crate::real::Real;

/// Dense table of shot likelihoods for k = 1..=n_max.
#[derive(Debug, Clone)]
pub struct LikelihoodTable<T> {
    n_max: u32,
    n_bins: usize,
    values: Vec<T>,
}

impl<T: Real> LikelihoodTable<T> {
    pub fn build(
        grid: &FrequencyGrid<T>,
        params: &LikelihoodParams<T>,
        tau_step_ns: T,
        n_max: u32,
    ) -> Self {
        let n_bins = grid.n_bins;
        let mut values = Vec::with_capacity(n_max as usize * 2 * n_bins);
        for k in 1..=n_max {
            for outcome in [Outcome::NoTunnel, Outcome::Tunnel] {
                for f in grid.centers() {
                    values.push(shot_likelihood(f, k, outcome, params, tau_step_ns));
                }
            }
        }
        Self {
            n_max,
            n_bins,
            values,
        }
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// Likelihoods over all bins for shot `k` and the given outcome.
    pub fn row(&self, k: u32, outcome: Outcome) -> &[T] {
        assert!(k >= 1 && k <= self.n_max, "shot index {k} outside table");
        let o = outcome.bit() as usize;
        let start = ((k - 1) as usize * 2 + o) * self.n_bins;
        &self.values[start..start + self.n_bins]
    }
}

/// Quantized likelihood table plus the context needed to rebuild it.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedLut {
    pub lut_bits: u32,
    pub n_max: u32,
    pub grid: FrequencyGrid<f64>,
    pub params: LikelihoodParams<f64>,
    pub tau_step_ns: f64,
    /// Row-major (k, outcome, bin), values in [0, 2^lut_bits - 1].
    values: Vec<u32>,
}

const MAGIC: &[u8; 8] = b"STQLUT01";

impl FixedLut {
    /// Quantize likelihoods to `lut_bits`: round(L * 2^bits) saturated to
    /// the maximum code, so |code / 2^bits - L| <= 2^-bits.
    pub fn build(
        grid: &FrequencyGrid<f64>,
        params: &LikelihoodParams<f64>,
        tau_step_ns: f64,
        n_max: u32,
        lut_bits: u32,
    ) -> Self {
        assert!((1..=31).contains(&lut_bits));
        let scale = (1u64 << lut_bits) as f64;
        let max_code = (1u64 << lut_bits) - 1;
        let mut values = Vec::with_capacity(n_max as usize * 2 * grid.n_bins);
        for k in 1..=n_max {
            for outcome in [Outcome::NoTunnel, Outcome::Tunnel] {
                for f in grid.centers() {
                    let l = shot_likelihood(f, k, outcome, params, tau_step_ns);
                    let code = (l * scale).round() as u64;
                    values.push(code.min(max_code) as u32);
                }
            }
        }
        Self {
            lut_bits,
            n_max,
            grid: *grid,
            params: *params,
            tau_step_ns,
            values,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.grid.n_bins
    }

    pub fn row(&self, k: u32, outcome: Outcome) -> &[u32] {
        assert!(k >= 1 && k <= self.n_max, "shot index {k} outside table");
        let o = outcome.bit() as usize;
        let n = self.grid.n_bins;
        let start = ((k - 1) as usize * 2 + o) * n;
        &self.values[start..start + n]
    }

    fn entry_bytes(&self) -> usize {
        self.lut_bits.div_ceil(8) as usize
    }

    /// Serialize: magic, dimension record, then the entries as
    /// little-endian unsigned integers of ceil(lut_bits / 8) bytes each,
    /// ordered by shot index, then outcome (no-tunnel first), then bin.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        for v in [self.lut_bits, self.n_max, self.grid.n_bins as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in [
            self.grid.f_min,
            self.grid.f_max,
            self.params.alpha,
            self.params.beta,
            self.tau_step_ns,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        let nb = self.entry_bytes();
        for &v in &self.values {
            w.write_all(&v.to_le_bytes()[..nb])?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::LutFormat("bad magic".into()));
        }
        let mut u32buf = [0u8; 4];
        let mut next_u32 = |r: &mut R| -> Result<u32> {
            r.read_exact(&mut u32buf)?;
            Ok(u32::from_le_bytes(u32buf))
        };
        let lut_bits = next_u32(&mut r)?;
        let n_max = next_u32(&mut r)?;
        let n_bins = next_u32(&mut r)? as usize;
        if !(1..=31).contains(&lut_bits) || n_max == 0 || n_bins < 2 {
            return Err(Error::LutFormat("dimension record out of range".into()));
        }
        let mut f64buf = [0u8; 8];
        let mut next_f64 = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut f64buf)?;
            Ok(f64::from_le_bytes(f64buf))
        };
        let f_min = next_f64(&mut r)?;
        let f_max = next_f64(&mut r)?;
        let alpha = next_f64(&mut r)?;
        let beta = next_f64(&mut r)?;
        let tau_step_ns = next_f64(&mut r)?;
        let grid = FrequencyGrid::new(n_bins, f_min, f_max)
            .map_err(|e| Error::LutFormat(e.to_string()))?;
        let params =
            LikelihoodParams::new(alpha, beta).map_err(|e| Error::LutFormat(e.to_string()))?;

        let count = n_max as usize * 2 * n_bins;
        let nb = lut_bits.div_ceil(8) as usize;
        let mut bytes = vec![0u8; count * nb];
        r.read_exact(&mut bytes)?;
        let max_code = (1u64 << lut_bits) - 1;
        let mut values = Vec::with_capacity(count);
        for chunk in bytes.chunks_exact(nb) {
            let mut le = [0u8; 4];
            le[..nb].copy_from_slice(chunk);
            let v = u32::from_le_bytes(le);
            if u64::from(v) > max_code {
                return Err(Error::LutFormat(format!(
                    "entry {v} exceeds {lut_bits}-bit range"
                )));
            }
            values.push(v);
        }
        Ok(Self {
            lut_bits,
            n_max,
            grid,
            params,
            tau_step_ns,
            values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_lut() -> FixedLut {
        let grid = FrequencyGrid::default();
        let params = LikelihoodParams::new(0.0, 0.95).unwrap();
        FixedLut::build(&grid, &params, 4.0, 70, 16)
    }

    #[test]
    fn quantization_error_is_bounded() {
        let grid = FrequencyGrid::default();
        let params = LikelihoodParams::new(0.0, 0.95).unwrap();
        let lut = FixedLut::build(&grid, &params, 4.0, 70, 16);
        let scale = (1u64 << 16) as f64;
        let bound = 2f64.powi(-16);
        for k in [1u32, 7, 35, 70] {
            for outcome in [Outcome::NoTunnel, Outcome::Tunnel] {
                for (i, f) in grid.centers().enumerate() {
                    let exact = shot_likelihood(f, k, outcome, &params, 4.0);
                    let q = lut.row(k, outcome)[i] as f64 / scale;
                    assert!((q - exact).abs() <= bound, "k={k} bin={i}: {q} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn float_table_rows_match_direct_evaluation() {
        let grid = FrequencyGrid::<f64>::default();
        let params = LikelihoodParams::new(0.1, 0.8).unwrap();
        let table = LikelihoodTable::build(&grid, &params, 4.0, 10);
        let row = table.row(3, Outcome::Tunnel);
        for (i, f) in grid.centers().enumerate() {
            assert_eq!(row[i], shot_likelihood(f, 3, Outcome::Tunnel, &params, 4.0));
        }
    }

    #[test]
    fn dump_load_round_trip_is_exact() {
        let lut = sample_lut();
        let mut buf = Vec::new();
        lut.write_to(&mut buf).unwrap();
        let loaded = FixedLut::read_from(buf.as_slice()).unwrap();
        assert_eq!(lut, loaded);
    }

    #[test]
    fn load_rejects_bad_magic() {
        let lut = sample_lut();
        let mut buf = Vec::new();
        lut.write_to(&mut buf).unwrap();
        buf[0] ^= 0xFF;
        assert!(matches!(
            FixedLut::read_from(buf.as_slice()),
            Err(Error::LutFormat(_))
        ));
    }

    #[test]
    fn load_rejects_truncated_data() {
        let lut = sample_lut();
        let mut buf = Vec::new();
        lut.write_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(FixedLut::read_from(buf.as_slice()).is_err());
    }
}
