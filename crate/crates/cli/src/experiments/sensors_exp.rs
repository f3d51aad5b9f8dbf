//! Sensor-side experiments: thermometry, SNR, and the visibility model.

use anyhow::Result;
use rand::Rng;
use stq_core::analysis::{
    detection_probability, electron_temperature, fit_fermi_dirac, fit_snr, fit_te_power_law,
    visibility::fit_visibility_model_counted, FixedErrorRates,
};
use stq_core::readout::snr_curve;
use stq_core::rng::stream;
use stq_core::units::BOLTZMANN_MEV_PER_K;

use crate::config::RunConfig;
use crate::experiments::fit_report;
use crate::output::{fmt_f64, RunOutput};

pub fn s2_temp(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let r = cfg.reader();
    let t_mixing: Vec<f64> = r.f64_list("s2.t_mixing_list_mk")?;
    let noise = r.f64("s2.noise_relative")?;
    let lever = r.f64("s2.lever_mev_per_mv")?;
    let t_s_true = r.f64("s2.t_s_mk")?;
    let k_true = r.f64("s2.k_exponent")?;

    let mut rng = stream(cfg.seed, &[0x52]);
    let mut t_e_fitted = Vec::new();
    let mut transition_rows = Vec::new();
    for (i, &tm) in t_mixing.iter().enumerate() {
        let t_e_mk = (t_s_true.powf(k_true) + tm.powf(k_true)).powf(1.0 / k_true);
        let a_true = lever / (BOLTZMANN_MEV_PER_K * t_e_mk * 1e-3);
        let b_true = 3.0;
        let width = 8.0 / a_true;
        let sweep: Vec<f64> = (0..160)
            .map(|s| b_true - width + s as f64 * width / 80.0)
            .collect();
        let signal: Vec<f64> = sweep
            .iter()
            .map(|&v| {
                let clean = 1.0 / ((a_true * (v - b_true)).exp() + 1.0);
                clean + noise * (2.0 * rng.random::<f64>() - 1.0)
            })
            .collect();
        let fit = fit_fermi_dirac(&sweep, &signal)?;
        let t_e = electron_temperature(fit.a_per_mv, lever) * 1e3;
        t_e_fitted.push(t_e);
        if i == 0 {
            for (v, s) in sweep.iter().zip(&signal) {
                transition_rows.push(vec![fmt_f64(*v), fmt_f64(*s)]);
            }
        }
    }
    out.write_csv("transition_example.csv", "v1_mv,signal", &transition_rows)?;
    let rows: Vec<Vec<String>> = t_mixing
        .iter()
        .zip(&t_e_fitted)
        .map(|(tm, te)| vec![fmt_f64(*tm), fmt_f64(*te)])
        .collect();
    out.write_csv("te_vs_tmixing.csv", "t_mixing_mk,t_e_mk", &rows)?;

    let law = fit_te_power_law(&t_mixing, &t_e_fitted)?;
    out.check(
        &format!("saturation T_S = {:.1} mK within 2 of {t_s_true}", law.t_s),
        (law.t_s - t_s_true).abs() < 2.0,
    );
    out.check(
        &format!("exponent k = {:.2} within 0.2 of {k_true}", law.k),
        (law.k - k_true).abs() < 0.2,
    );
    Ok(())
}

pub fn s3_snr(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let r = cfg.reader();
    let t_int_list = r.f64_list("s3.t_int_list_ns")?;
    let traces = r.usize("s3.traces_per_point")?;

    // One example shot trace of each species.
    let mut rng = stream(cfg.seed, &[0x53, 1]);
    for (label, name) in [
        (stq_core::qubit::SpinLabel::TripletZero, "trace_triplet.csv"),
        (stq_core::qubit::SpinLabel::Singlet, "trace_singlet.csv"),
    ] {
        let trace = stq_core::readout::synthesize_trace(label, &cfg.readout, &mut rng);
        let mut buf = Vec::new();
        trace.write_csv(&mut buf)?;
        out.write_text(name, &String::from_utf8(buf)?)?;
    }

    let curve = snr_curve(&cfg.readout, &t_int_list, traces, cfg.seed ^ 0x53)?;
    let rows: Vec<Vec<String>> = curve
        .iter()
        .map(|(t, s)| vec![fmt_f64(*t), fmt_f64(*s), fmt_f64(s * s)])
        .collect();
    out.write_csv("snr_vs_tint.csv", "t_int_ns,snr,snr_squared", &rows)?;

    let t: Vec<f64> = curve.iter().map(|p| p.0).collect();
    let snr: Vec<f64> = curve.iter().map(|p| p.1).collect();
    let fit = fit_snr(&t, &snr)?;
    let reference = curve
        .iter()
        .find(|(ti, _)| (*ti - cfg.readout.t_int_ns).abs() < 1e-9)
        .map(|(_, s)| *s);
    if let Some(measured) = reference {
        out.check(
            &format!(
                "measured SNR({}) = {measured:.2} within 3% of {}",
                cfg.readout.t_int_ns, cfg.readout.snr_at_tint
            ),
            (measured - cfg.readout.snr_at_tint).abs() / cfg.readout.snr_at_tint < 0.03,
        );
    }
    let tau_analytic = cfg.readout.t_int_ns / (cfg.readout.snr_at_tint * cfg.readout.snr_at_tint);
    out.check(
        &format!(
            "tau_min = {:.3} ns within 15% of the analytic {:.3}",
            fit.tau_min_ns, tau_analytic
        ),
        (fit.tau_min_ns - tau_analytic).abs() / tau_analytic < 0.15,
    );
    out.note(&format!(
        "charge sensitivity e sqrt(tau_min) = {:.3e} e/sqrt(Hz)",
        fit.sensitivity_e_per_sqrt_hz
    ));
    Ok(())
}

pub fn s4_visibility(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let r = cfg.reader();
    let shots = r.u64("s4.shots_per_point")?;
    let delta_bz = cfg.herald.target_mhz;
    let model = cfg.model;

    // Analytic curve plus counted synthetic data for the fit round trip.
    let mut rng = stream(cfg.seed, &[0x54]);
    let taus: Vec<f64> = (0..160).map(|i| i as f64 * 0.5).collect();
    let mut data = Vec::with_capacity(taus.len());
    let mut rows = Vec::with_capacity(taus.len());
    for &tau in &taus {
        let p = detection_probability(tau, delta_bz, &model);
        let hits: u64 = (0..shots).map(|_| u64::from(rng.random::<f64>() < p)).sum();
        let measured = hits as f64 / shots as f64;
        data.push((tau, measured));
        rows.push(vec![fmt_f64(tau), fmt_f64(p), fmt_f64(measured)]);
    }
    out.write_csv(
        "pd_vs_tau.csv",
        "tau_ns,p_detect_analytic,p_detect_sampled",
        &rows,
    )?;

    // Oscillation visibility from the analytic extremes.
    let visibility = model.visibility();
    out.check(
        &format!("detection visibility {visibility:.4} = 0.98 +- 0.01"),
        (visibility - 0.98).abs() <= 0.01,
    );

    let fixed = FixedErrorRates {
        e_t: model.e_t,
        e_n: model.e_n,
        gamma: model.gamma,
        delta_bz_mhz: delta_bz,
    };
    let fit = fit_visibility_model_counted(&data, fixed, Some(shots))?;
    out.check(
        &format!(
            "recovered alpha_s = {:.4} within 0.0015 of {:.4}",
            fit.alpha_s, model.alpha_s
        ),
        (fit.alpha_s - model.alpha_s).abs() < 0.0015,
    );
    out.check(
        &format!(
            "recovered beta_t = {:.4} within 0.001 of {:.4}",
            fit.beta_t, model.beta_t
        ),
        (fit.beta_t - model.beta_t).abs() < 0.001,
    );
    let analytic: Vec<f64> = taus
        .iter()
        .map(|&t| detection_probability(t, delta_bz, &fit.model))
        .collect();
    let measured: Vec<f64> = data.iter().map(|d| d.1).collect();
    out.write_text(
        "fit_report.txt",
        &fit_report(
            &[
                ("alpha_s", fit.alpha_s),
                ("beta_t", fit.beta_t),
                ("fidelity_singlet", fit.fidelity_singlet),
                ("fidelity_t0", fit.fidelity_t0),
                ("visibility", fit.visibility),
                ("residual_norm", fit.residual_norm),
            ],
            &taus,
            &measured,
            &analytic,
        ),
    )?;
    Ok(())
}
