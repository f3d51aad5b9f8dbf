//! Convergence study: estimator error versus shot count and visibility.

use rayon::prelude::*;

use crate::estimator::{FrequencyGrid, LikelihoodParams, LikelihoodTable, Outcome, Posterior};
use crate::rng::stream;
use crate::units::CYCLES_PER_MHZ_NS;
use rand::Rng;

#[derive(Debug, Clone)]
pub struct RmseStudyConfig {
    pub grid: FrequencyGrid<f64>,
    /// Shot counts to evaluate.
    pub n_list: Vec<u32>,
    /// Visibilities to evaluate.
    pub beta_list: Vec<f64>,
    pub alpha: f64,
    /// Trials per (N, beta) cell.
    pub trials: u32,
    pub tau_step_ns: f64,
    /// Band the true frequency is drawn from (uniform). `None` uses the
    /// identifiable band: sampling at multiples of tau_step cannot tell f
    /// from 2*f_fold - f (f_fold = 500/tau_step MHz), so truths whose
    /// mirror also lands inside the grid are excluded by default.
    pub f_true_range: Option<(f64, f64)>,
}

impl Default for RmseStudyConfig {
    fn default() -> Self {
        Self {
            grid: FrequencyGrid::default(),
            n_list: (10..=120).step_by(10).collect(),
            beta_list: vec![0.5, 0.7, 0.9],
            alpha: 0.0,
            trials: 1000,
            tau_step_ns: 4.0,
            f_true_range: None,
        }
    }
}

impl RmseStudyConfig {
    /// Truth-draw band: configured range, or the widest sub-band of the
    /// grid whose alias mirror stays outside the grid. A 5 MHz guard
    /// keeps the mirror peak's tail from clipping the far grid edge at
    /// small N.
    pub fn truth_band(&self) -> (f64, f64) {
        if let Some(range) = self.f_true_range {
            return range;
        }
        let fold = 500.0 / self.tau_step_ns;
        let hi = (2.0 * fold - self.grid.f_max - 5.0).min(self.grid.f_max);
        (self.grid.f_min, hi.max(self.grid.f_min))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmseCell {
    pub n_shots: u32,
    pub beta: f64,
    pub rmse_mhz: f64,
}

#[derive(Debug, Clone)]
pub struct RmseTable {
    pub cells: Vec<RmseCell>,
}

impl RmseTable {
    pub fn get(&self, n_shots: u32, beta: f64) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.n_shots == n_shots && (c.beta - beta).abs() < 1e-12)
            .map(|c| c.rmse_mhz)
    }
}

/// Root-mean-squared estimation error over random true frequencies.
///
/// Each trial draws a true frequency uniformly over the grid span,
/// simulates `N` outcomes with singlet probability
/// (1 + alpha + beta cos(2 pi f* t_k)) / 2, runs the Bayesian updates,
/// and scores (estimate - f*)^2.
pub fn rmse_study(cfg: &RmseStudyConfig, seed: u64) -> RmseTable {
    assert!(cfg.trials >= 1);
    let n_max = cfg.n_list.iter().copied().max().unwrap_or(0);
    let (f_lo, f_hi) = cfg.truth_band();
    let mut cells = Vec::with_capacity(cfg.n_list.len() * cfg.beta_list.len());
    for (bi, &beta) in cfg.beta_list.iter().enumerate() {
        let params = LikelihoodParams::new(cfg.alpha, beta).expect("study likelihood out of range");
        let table = LikelihoodTable::build(&cfg.grid, &params, cfg.tau_step_ns, n_max);
        for &n_shots in &cfg.n_list {
            let sum_sq: f64 = (0..cfg.trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = stream(seed, &[bi as u64, n_shots as u64, trial as u64]);
                    let f_true = f_lo + rng.random::<f64>() * (f_hi - f_lo);
                    let mut posterior = Posterior::uniform(cfg.grid);
                    for k in 1..=n_shots {
                        let t_k = cfg.tau_step_ns * k as f64;
                        let phase = 2.0 * std::f64::consts::PI * f_true * t_k * CYCLES_PER_MHZ_NS;
                        let p_singlet = 0.5 * (1.0 + cfg.alpha + beta * phase.cos());
                        let outcome = if rng.random::<f64>() < p_singlet {
                            Outcome::NoTunnel
                        } else {
                            Outcome::Tunnel
                        };
                        posterior.bayes_update_with_table(&table, k, outcome);
                    }
                    let err = posterior.estimate() - f_true;
                    err * err
                })
                .collect::<Vec<f64>>()
                .iter()
                .sum();
            cells.push(RmseCell {
                n_shots,
                beta,
                rmse_mhz: (sum_sq / cfg.trials as f64).sqrt(),
            });
        }
    }
    RmseTable { cells }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_visibility_matches_uninformative_baseline() {
        // With beta = 0 the posterior stays uniform and the tie-break
        // pins the estimate at f_min; the RMSE must equal a direct
        // simulation of that baseline.
        let cfg = RmseStudyConfig {
            n_list: vec![20],
            beta_list: vec![0.0],
            trials: 4000,
            ..RmseStudyConfig::default()
        };
        let table = rmse_study(&cfg, 99);
        let rmse = table.get(20, 0.0).unwrap();

        // Brute-force baseline with the identical truth draws.
        let (f_lo, f_hi) = cfg.truth_band();
        let sum_sq: f64 = (0..cfg.trials)
            .map(|trial| {
                let mut rng = stream(99, &[0, 20, trial as u64]);
                let f_true = f_lo + rng.random::<f64>() * (f_hi - f_lo);
                (cfg.grid.f_min - f_true).powi(2)
            })
            .sum();
        let baseline = (sum_sq / cfg.trials as f64).sqrt();
        assert!(
            (rmse - baseline).abs() < 1e-12,
            "rmse = {rmse}, baseline = {baseline}"
        );
    }

    #[test]
    fn seventy_shots_at_high_visibility_are_sub_mhz() {
        let cfg = RmseStudyConfig {
            n_list: vec![70],
            beta_list: vec![0.9],
            trials: 1000,
            ..RmseStudyConfig::default()
        };
        let table = rmse_study(&cfg, 7);
        let rmse = table.get(70, 0.9).unwrap();
        assert!(rmse < 1.0, "RMSE = {rmse} MHz");
    }

    #[test]
    fn higher_visibility_always_converges_faster() {
        let cfg = RmseStudyConfig {
            n_list: (20..=120).step_by(20).collect(),
            beta_list: vec![0.5, 0.9],
            trials: 400,
            ..RmseStudyConfig::default()
        };
        let table = rmse_study(&cfg, 8);
        for &n in &cfg.n_list {
            let lo = table.get(n, 0.5).unwrap();
            let hi = table.get(n, 0.9).unwrap();
            assert!(hi < lo, "N = {n}: rmse(0.9) = {hi} !< rmse(0.5) = {lo}");
        }
    }
}
