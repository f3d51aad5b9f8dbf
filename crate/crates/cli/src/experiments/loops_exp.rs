//! Closed-loop experiments: heralded Larmor and exchange operation, and
//! the gradient statistics around them.

use anyhow::Result;
use rayon::prelude::*;
use stq_core::analysis::{
    fit_diffusivity, fit_exchange_q, fit_gaussian_decay, sigma_from_t2, DecayFit,
};
use stq_core::bath::{self, BathConfig, BathState};
use stq_core::controller::{BathModel, HeraldConfig, OpShotSpec, Simulation};
use stq_core::rng::stream;

use crate::config::RunConfig;
use crate::experiments::fit_report;
use crate::output::{fmt_f64, RunOutput};

/// Diffusive bath hovering about the herald target when a stationary
/// spread is configured, pure diffusion otherwise.
fn loop_bath(cfg: &RunConfig, mean_mhz: f64) -> BathModel {
    let sigma = cfg.loop_bath_sigma_mhz;
    let reversion = if sigma > 0.0 {
        cfg.bath.diffusivity_khz2_per_us * 1e-6 / (2.0 * sigma * sigma)
    } else {
        cfg.bath.reversion_rate_per_us
    };
    BathModel::Diffusive(BathConfig {
        mean_mhz,
        reversion_rate_per_us: reversion,
        ..cfg.bath
    })
}

fn larmor_curve(
    cfg: &RunConfig,
    tau_max_ns: f64,
    tau_step_ns: f64,
    reps: u64,
    seed_path: u64,
) -> Result<stq_core::controller::P1Curve> {
    let sim = Simulation::new(cfg.env(), cfg.probe);
    let points = (tau_max_ns / tau_step_ns).round() as usize + 1;
    let tau_grid: Vec<f64> = (0..points).map(|i| i as f64 * tau_step_ns).collect();
    sim.larmor_dataset(
        &loop_bath(cfg, cfg.herald.target_mhz),
        &cfg.herald,
        &tau_grid,
        reps,
        2_000_000,
        cfg.seed ^ seed_path,
    )
    .map_err(Into::into)
}

fn decay_csv(tau: &[f64], p1: &[f64], fit: &DecayFit<f64>) -> Vec<Vec<String>> {
    tau.iter()
        .zip(p1)
        .map(|(&t, &p)| {
            let model = fit.offset
                + fit.amplitude
                    * (2.0 * std::f64::consts::PI * fit.frequency_mhz * t * 1e-3 + fit.phase).cos()
                    * (-(t / fit.decay_time).powi(2)).exp();
            vec![fmt_f64(t), fmt_f64(p), fmt_f64(model)]
        })
        .collect()
}

pub fn fig2a(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let r = cfg.reader();
    let curve = larmor_curve(
        cfg,
        r.f64("fig2a.tau_max_ns")?,
        r.f64("fig2a.tau_step_ns")?,
        r.u64("fig2a.reps")?,
        0x2A,
    )?;
    let (tau, p1) = (curve.tau_ns, curve.p1);
    let mut log = Vec::new();
    stq_core::controller::write_records_csv(&curve.records, &mut log)?;
    out.write_text("run_log.csv", &String::from_utf8(log)?)?;
    let fit = fit_gaussian_decay(&tau, &p1)?;
    out.write_csv(
        "p1_vs_tau.csv",
        "tau_ns,p1,fit",
        &decay_csv(&tau, &p1, &fit),
    )?;
    let model: Vec<f64> = tau
        .iter()
        .zip(&p1)
        .map(|(&t, _)| {
            fit.offset
                + fit.amplitude
                    * (2.0 * std::f64::consts::PI * fit.frequency_mhz * t * 1e-3 + fit.phase).cos()
                    * (-(t / fit.decay_time).powi(2)).exp()
        })
        .collect();
    out.write_text(
        "fit_report.txt",
        &fit_report(
            &[
                ("t2_star_ns", fit.decay_time),
                ("frequency_mhz", fit.frequency_mhz),
                ("visibility", fit.visibility),
                ("offset", fit.offset),
                ("residual_norm", fit.residual_norm),
            ],
            &tau,
            &p1,
            &model,
        ),
    )?;
    out.check(
        &format!("fitted T2* = {:.0} ns within [500, 1100]", fit.decay_time),
        (500.0..=1100.0).contains(&fit.decay_time),
    );
    out.check(
        &format!(
            "oscillation at {:.2} MHz near the 30 MHz target",
            fit.frequency_mhz
        ),
        (fit.frequency_mhz - cfg.herald.target_mhz).abs() < 1.0,
    );
    out.note(&format!(
        "sigma from T2*: {:.4} MHz",
        sigma_from_t2(fit.decay_time)
    ));
    Ok(())
}

pub fn fig2b(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let r = cfg.reader();
    let n_list = r.u32_list("fig2b.n_list")?;
    let reps = r.u64("fig2b.reps")?;
    let results: Vec<(u32, f64)> = n_list
        .par_iter()
        .map(|&n| {
            let mut run_cfg = cfg.clone();
            run_cfg.probe.n_shots = n;
            let curve = larmor_curve(&run_cfg, 1200.0, 8.0, reps, 0x2B00 + u64::from(n)).unwrap();
            let fit = fit_gaussian_decay(&curve.tau_ns, &curve.p1).unwrap();
            (n, fit.decay_time)
        })
        .collect();
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|(n, t2)| vec![n.to_string(), fmt_f64(*t2)])
        .collect();
    out.write_csv("t2_vs_n.csv", "n_shots,t2_star_ns", &rows)?;

    let t2_at = |n: u32| results.iter().find(|(m, _)| *m == n).map(|(_, t)| *t);
    if let (Some(low), Some(opt)) = (t2_at(*n_list.first().unwrap()), t2_at(70)) {
        out.check(
            &format!(
                "T2*(70) = {opt:.0} ns exceeds T2*({}) = {low:.0} ns",
                n_list[0]
            ),
            opt > low,
        );
    }
    out.note("long probes trade estimation accuracy against drift during estimation");
    Ok(())
}

pub fn fig2c(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let r = cfg.reader();
    let n_traj = r.usize("fig2c.trajectories")?;
    let steps = r.usize("fig2c.steps")?;
    let dt_us = r.f64("fig2c.dt_us")?;

    // Truth series: independent trajectories, variance of increments by lag.
    let bath_cfg = BathConfig {
        mean_mhz: 85.0,
        reversion_rate_per_us: 0.0,
        ..cfg.bath
    };
    let trajectories: Vec<Vec<f64>> = (0..n_traj)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(cfg.seed, &[0x2C, t as u64]);
            let mut state = BathState::new(85.0);
            let mut path = Vec::with_capacity(steps + 1);
            path.push(state.delta_bz);
            for _ in 0..steps {
                state = bath::step(state, dt_us, &bath_cfg, &mut rng);
                path.push(state.delta_bz);
            }
            path
        })
        .collect();
    let max_lag = 40usize;
    let mut rows = Vec::new();
    let mut lags_us = Vec::new();
    let mut vars = Vec::new();
    for lag in 1..=max_lag {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut count = 0usize;
        for path in &trajectories {
            for i in (0..=(steps - lag)).step_by(lag) {
                let d = path[i + lag] - path[i];
                sum += d;
                sum_sq += d * d;
                count += 1;
            }
        }
        let mean = sum / count as f64;
        let var = sum_sq / count as f64 - mean * mean;
        lags_us.push(lag as f64 * dt_us);
        vars.push(var);
        rows.push(vec![fmt_f64(lag as f64 * dt_us), fmt_f64(var)]);
    }
    out.write_csv("var_vs_lag.csv", "lag_us,variance_mhz2", &rows)?;
    let slope = stq_core::math::slope_through_origin(&lags_us, &vars);
    let d_fit = slope * 1e6;
    let d_cfg = cfg.bath.diffusivity_khz2_per_us;
    out.check(
        &format!("truth-series D = {d_fit:.2} kHz^2/us within 5% of {d_cfg:.2}"),
        (d_fit - d_cfg).abs() / d_cfg < 0.05,
    );

    // Estimate series: probe-only loop at the probe cadence, alias-folded.
    let chunks = r.u64("fig2c.probe_chunks")?;
    let per_chunk = r.u64("fig2c.probes_per_chunk")?;
    let sim = Simulation::new(cfg.env(), cfg.probe);
    let herald = HeraldConfig {
        target_mhz: 60.0,
        tolerance_mhz: -1.0,
        op_shots: 0,
    };
    let est_bath = BathConfig {
        mean_mhz: 60.0,
        reversion_rate_per_us: 0.0,
        ..cfg.bath
    };
    let fold = 500.0 / cfg.probe.tau_step_ns;
    let fits: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let run = sim
                .heralded_run(
                    &BathModel::Diffusive(est_bath),
                    &herald,
                    |_, _| OpShotSpec::Larmor { tau_ns: 16.0 },
                    per_chunk,
                    None,
                    cfg.seed ^ (0x2C50 + chunk),
                )
                .unwrap();
            let series: Vec<f64> = run
                .probe_estimates
                .iter()
                .map(|p| {
                    if p.estimate_mhz > fold {
                        2.0 * fold - p.estimate_mhz
                    } else {
                        p.estimate_mhz
                    }
                })
                .collect();
            let dt = run.total_clock_us / run.probes_run as f64;
            fit_diffusivity(&series, dt, 5, 40).unwrap().d_khz2_per_us
        })
        .collect();
    let d_est = fits.iter().sum::<f64>() / fits.len() as f64;
    out.check(
        &format!("estimate-series D = {d_est:.2} kHz^2/us within 15% of {d_cfg:.2}"),
        (d_est - d_cfg).abs() / d_cfg < 0.15,
    );
    let est_rows: Vec<Vec<String>> = fits
        .iter()
        .enumerate()
        .map(|(i, d)| vec![i.to_string(), fmt_f64(*d)])
        .collect();
    out.write_csv("d_from_estimates.csv", "chunk,d_khz2_per_us", &est_rows)?;
    Ok(())
}

pub fn fig2d(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let r = cfg.reader();
    let tolerances = r.f64_list("fig2d.tolerances")?;
    let results: Vec<(f64, f64, f64)> = tolerances
        .par_iter()
        .enumerate()
        .map(|(i, &tolerance)| {
            let mut run_cfg = cfg.clone();
            run_cfg.herald.tolerance_mhz = tolerance;
            let curve = larmor_curve(&run_cfg, 1000.0, 6.0, 60, 0x2D00 + i as u64).unwrap();
            let fit = fit_gaussian_decay(&curve.tau_ns, &curve.p1).unwrap();
            (tolerance, fit.decay_time, sigma_from_t2(fit.decay_time))
        })
        .collect();
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|(tol, t2, sigma)| vec![fmt_f64(*tol), fmt_f64(*t2), fmt_f64(*sigma)])
        .collect();
    out.write_csv(
        "sigma_vs_tolerance.csv",
        "tolerance_mhz,t2_star_ns,sigma_mhz",
        &rows,
    )?;
    let monotone = results.windows(2).all(|w| w[1].2 > w[0].2);
    out.check("sigma_dBz grows monotonically with the tolerance", monotone);

    // Duty cycle over the same tolerance sweep, quasi-static ensemble
    // gradient: the cost of heralding.
    let sim = Simulation::new(cfg.env(), cfg.probe);
    let duties: Vec<(f64, f64)> = tolerances
        .par_iter()
        .enumerate()
        .map(|(i, &tolerance)| {
            let herald = HeraldConfig {
                tolerance_mhz: tolerance,
                ..cfg.herald
            };
            let bath = BathModel::Ensemble {
                cfg: cfg.bath,
                sigma_mhz: cfg.ensemble_sigma_mhz,
            };
            let mut op = 0.0;
            let mut total = 0.0;
            for run in 0..100u64 {
                let result = sim
                    .heralded_run(
                        &bath,
                        &herald,
                        |_, _| OpShotSpec::Larmor { tau_ns: 16.0 },
                        40,
                        None,
                        cfg.seed ^ (0x2D80 + 100 * i as u64 + run),
                    )
                    .unwrap();
                op += result.duty_cycle * result.total_clock_us;
                total += result.total_clock_us;
            }
            (tolerance, op / total)
        })
        .collect();
    let duty_rows: Vec<Vec<String>> = duties
        .iter()
        .map(|(tol, duty)| vec![fmt_f64(*tol), fmt_f64(*duty)])
        .collect();
    out.write_csv(
        "duty_vs_tolerance.csv",
        "tolerance_mhz,duty_cycle",
        &duty_rows,
    )?;
    if let Some((_, duty)) = duties.iter().find(|(t, _)| (*t - 0.1).abs() < 1e-12) {
        out.check(
            &format!("duty cycle {duty:.5} < 1% at 0.1 MHz tolerance"),
            *duty < 0.01,
        );
    }
    let duty_monotone = duties.windows(2).all(|w| w[1].1 >= w[0].1);
    out.check("duty cycle nondecreasing in tolerance", duty_monotone);
    Ok(())
}

pub fn fig3a(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let r = cfg.reader();
    let curve = larmor_curve(
        cfg,
        r.f64("fig3a.tau_max_ns")?,
        r.f64("fig3a.tau_step_ns")?,
        r.u64("fig3a.reps")?,
        0x3A,
    )?;
    let (tau, p1) = (curve.tau_ns, curve.p1);
    let fit = fit_gaussian_decay(&tau, &p1)?;
    out.write_csv(
        "p1_vs_tau.csv",
        "tau_ns,p1,fit",
        &decay_csv(&tau, &p1, &fit),
    )?;
    let expected = cfg.model.visibility();
    out.check(
        &format!(
            "fitted visibility {:.3} within 0.03 of the model budget {:.3}",
            fit.visibility, expected
        ),
        (fit.visibility - expected).abs() <= 0.03,
    );
    out.note(&format!(
        "measurement fidelities F_S = {:.4}, F_T0 = {:.4}",
        cfg.model.fidelity_singlet(),
        cfg.model.fidelity_t0()
    ));
    Ok(())
}

fn exchange_curve(
    cfg: &RunConfig,
    j_mhz: f64,
    t_e_max_ns: f64,
    reps: u64,
    seed_path: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let sim = Simulation::new(cfg.env(), cfg.probe);
    let points = 300usize;
    let step = t_e_max_ns / points as f64;
    let taus: Vec<f64> = (0..=points).map(|i| i as f64 * step).collect();
    let sigma_j = cfg.exchange_j_noise_relative * j_mhz;
    let mut noise_rng = stream(cfg.seed, &[seed_path, 0xEE]);
    let taus_for_cb = taus.clone();
    let run = sim.heralded_run(
        &loop_bath(cfg, cfg.herald.target_mhz),
        &cfg.herald,
        move |_, op_index| {
            let t_e = taus_for_cb[(op_index as usize) % taus_for_cb.len()];
            let noise: f64 = stq_core::real::GaussianSample::standard_normal(&mut noise_rng);
            let j = j_mhz + sigma_j * noise;
            OpShotSpec::Exchange {
                j_mhz: j,
                t_e_ns: t_e,
            }
        },
        2_000_000,
        Some(reps * taus.len() as u64),
        cfg.seed ^ seed_path,
    )?;
    let mut sums = vec![0u64; taus.len()];
    let mut counts = vec![0u64; taus.len()];
    for (i, o) in run.op_outcomes.iter().enumerate() {
        sums[i % taus.len()] += u64::from(o.bit);
        counts[i % taus.len()] += 1;
    }
    let p1: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| s as f64 / c.max(1) as f64)
        .collect();
    Ok((taus, p1))
}

pub fn fig3bc(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let r = cfg.reader();
    let t_e_max = r.f64("fig3bc.t_e_max_ns")?;
    let j = cfg.exchange_j_mhz;
    let (taus, p1) = exchange_curve(cfg, j, t_e_max, 60, 0x3B)?;
    let q_fit = fit_exchange_q(&taus, &p1)?;
    let rows: Vec<Vec<String>> = taus
        .iter()
        .zip(&p1)
        .map(|(&t, &p)| vec![fmt_f64(t), fmt_f64(p)])
        .collect();
    out.write_csv("p1_vs_te.csv", "t_e_ns,p1", &rows)?;
    let omega = (j * j + cfg.herald.target_mhz.powi(2)).sqrt();
    out.check(
        &format!(
            "exchange oscillation at {:.1} MHz near sqrt(J^2 + dBz^2) = {omega:.1}",
            q_fit.frequency_mhz
        ),
        (q_fit.frequency_mhz - omega).abs() < 3.0,
    );
    out.check(
        &format!("decay time {:.0} ns within [300, 700]", q_fit.decay_time_ns),
        (300.0..=700.0).contains(&q_fit.decay_time_ns),
    );
    out.note(&format!("quality factor Q = {:.1}", q_fit.q));
    Ok(())
}

pub fn fig3d(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let r = cfg.reader();
    let j_list = r.f64_list("fig3d.j_list")?;
    let results: Vec<(f64, f64, f64, f64)> = j_list
        .par_iter()
        .enumerate()
        .map(|(i, &j)| {
            let t_e_max = 25.0 * 1e3 / (j * j + cfg.herald.target_mhz.powi(2)).sqrt();
            let (taus, p1) = exchange_curve(cfg, j, t_e_max, 50, 0x3D00 + i as u64).unwrap();
            let fit = fit_exchange_q(&taus, &p1).unwrap();
            (j, fit.frequency_mhz, fit.decay_time_ns, fit.q)
        })
        .collect();
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|(j, f, t, q)| vec![fmt_f64(*j), fmt_f64(*f), fmt_f64(*t), fmt_f64(*q)])
        .collect();
    out.write_csv("q_vs_j.csv", "j_mhz,frequency_mhz,t_decay_ns,q", &rows)?;
    let all_high = results.iter().all(|(_, _, _, q)| *q > 28.0);
    out.check("fitted Q > 28 across the exchange range", all_high);
    Ok(())
}
