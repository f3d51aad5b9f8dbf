//! Feedback-mode experiments: Rabi chevron and randomized benchmarking.

use anyhow::Result;
use rayon::prelude::*;
use stq_core::analysis::{
    fit_gaussian_decay, fit_rb, irb_fidelity, pi_pulse_fidelity_limit, rb_simulate, CliffordGroup,
    PrimitiveGate, RbConfig,
};
use stq_core::bath::BathConfig;
use stq_core::controller::{BathModel, DriveTemplate, Simulation};

use crate::config::RunConfig;
use crate::output::{fmt_f64, RunOutput};

pub fn fig4ab(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let r = cfg.reader();
    let detunings = r.f64_list("fig4ab.detunings_mhz")?;
    let duration_max = r.f64("fig4ab.duration_max_us")?;
    let durations: Vec<f64> = (1..=50).map(|i| i as f64 * duration_max / 50.0).collect();

    let bath_cfg = BathConfig {
        mean_mhz: cfg.drive_target_mhz,
        reversion_rate_per_us: if cfg.loop_bath_sigma_mhz > 0.0 {
            cfg.bath.diffusivity_khz2_per_us * 1e-6
                / (2.0 * cfg.loop_bath_sigma_mhz * cfg.loop_bath_sigma_mhz)
        } else {
            0.0
        },
        ..cfg.bath
    };
    let sim = Simulation::new(cfg.env(), cfg.probe);

    let columns: Vec<(f64, Vec<f64>)> = detunings
        .par_iter()
        .enumerate()
        .map(|(i, &detuning)| {
            let template = DriveTemplate {
                f_rabi_mhz: cfg.drive_f_rabi_mhz,
                t_rabi_decay_us: cfg.drive_t_rabi_decay_us,
                durations_us: durations.clone(),
                detuning_offset_mhz: cfg.drive_detuning_mhz + detuning,
                target_mhz: cfg.drive_target_mhz,
            };
            let run = sim
                .feedback_run(
                    &BathModel::Diffusive(bath_cfg),
                    &template,
                    60,
                    cfg.seed ^ (0x4A00 + i as u64),
                )
                .unwrap();
            let mut sums = vec![0u64; durations.len()];
            let mut counts = vec![0u64; durations.len()];
            for (s, shot) in run.shots.iter().enumerate() {
                sums[s % durations.len()] += u64::from(shot.bit);
                counts[s % durations.len()] += 1;
            }
            let p1 = sums
                .iter()
                .zip(&counts)
                .map(|(&a, &c)| a as f64 / c.max(1) as f64)
                .collect();
            (detuning, p1)
        })
        .collect();

    let mut rows = Vec::new();
    for (detuning, p1) in &columns {
        for (d, p) in durations.iter().zip(p1) {
            rows.push(vec![fmt_f64(*detuning), fmt_f64(*d), fmt_f64(*p)]);
        }
    }
    out.write_csv("chevron.csv", "detuning_mhz,duration_us,p1", &rows)?;

    // Resonant slice fit (times to ns for the decay fit).
    let resonant = columns
        .iter()
        .min_by(|a, b| a.0.abs().partial_cmp(&b.0.abs()).unwrap())
        .expect("at least one detuning");
    let t_ns: Vec<f64> = durations.iter().map(|d| d * 1e3).collect();
    let fit = fit_gaussian_decay(&t_ns, &resonant.1)?;
    out.check(
        &format!(
            "resonant Rabi frequency {:.3} MHz within 5% of {:.2}",
            fit.frequency_mhz, cfg.drive_f_rabi_mhz
        ),
        (fit.frequency_mhz - cfg.drive_f_rabi_mhz).abs() / cfg.drive_f_rabi_mhz < 0.05,
    );
    let t_rabi_us = fit.decay_time * 1e-3;
    out.check(
        &format!(
            "Rabi decay time {:.2} us within [1.2, 2.3] (configured {:.2})",
            t_rabi_us, cfg.drive_t_rabi_decay_us
        ),
        (1.2..=2.3).contains(&t_rabi_us),
    );
    out.note(&format!(
        "resonant visibility {:.3}; Q_Rabi = f * T = {:.1}",
        fit.visibility,
        fit.frequency_mhz * t_rabi_us
    ));
    Ok(())
}

pub fn fig4c(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let r = cfg.reader();
    let m_list = r.u32_list("fig4c.m_list")?;
    let sequences = r.u32("fig4c.sequences")?;
    let reps = r.u32("fig4c.reps")?;
    let p_clifford = r.f64("fig4c.p_clifford")?;
    let p_x = r.f64("fig4c.p_x")?;

    let group = CliffordGroup::build();
    let reference_cfg = RbConfig {
        m_list: m_list.clone(),
        sequences_per_length: sequences,
        reps_per_sequence: reps,
        p_clifford,
        interleaved: None,
        ..RbConfig::default()
    };
    let interleaved_cfg = RbConfig {
        interleaved: Some((PrimitiveGate::X, p_x)),
        ..reference_cfg.clone()
    };
    let reference = rb_simulate(
        &group,
        &reference_cfg,
        &cfg.model,
        &cfg.readout,
        cfg.seed ^ 0x4C,
    )?;
    let interleaved = rb_simulate(
        &group,
        &interleaved_cfg,
        &cfg.model,
        &cfg.readout,
        cfg.seed ^ 0x4D,
    )?;

    let rows: Vec<Vec<String>> = reference
        .rows
        .iter()
        .zip(&interleaved.rows)
        .map(|(a, b)| {
            vec![
                a.m.to_string(),
                fmt_f64(a.p1),
                fmt_f64(a.std_err),
                fmt_f64(b.p1),
                fmt_f64(b.std_err),
                fmt_f64(a.mean_duration_us),
            ]
        })
        .collect();
    out.write_csv(
        "rb_decay.csv",
        "m,p1_reference,err_reference,p1_interleaved,err_interleaved,mean_duration_us",
        &rows,
    )?;

    let ref_fit = fit_rb(&reference)?;
    let int_fit = fit_rb(&interleaved)?;
    let f_avg = ref_fit.f_avg;
    let f_x = irb_fidelity(int_fit.p, ref_fit.p);
    let expected_f_avg = (1.0 + p_clifford) / 2.0;
    let expected_f_x = (1.0 + p_x) / 2.0;
    out.check(
        &format!(
            "F_avg = {:.4} within 0.01 of injected {:.4}",
            f_avg, expected_f_avg
        ),
        (f_avg - expected_f_avg).abs() < 0.01,
    );
    out.check(
        &format!(
            "interleaved F_X = {:.4} within 0.006 of injected {:.4}",
            f_x, expected_f_x
        ),
        (f_x - expected_f_x).abs() < 0.006,
    );
    let q_rabi = cfg.drive_f_rabi_mhz * cfg.drive_t_rabi_decay_us;
    out.note(&format!(
        "pi-pulse limit exp(-1/(2 Q)^2) at Q = {:.2}: {:.5}",
        q_rabi,
        pi_pulse_fidelity_limit(q_rabi)
    ));
    Ok(())
}
