//! One experiment per reproducible figure of the reference dataset.

mod estimator_exp;
mod loops_exp;
mod rf_exp;
mod sensors_exp;

use anyhow::{bail, Result};

use crate::config::RunConfig;
use crate::output::RunOutput;

pub const EXPERIMENT_IDS: [&str; 14] = [
    "fig1b",
    "fig2a",
    "fig2b",
    "fig2c",
    "fig2d",
    "fig3a",
    "fig3bc",
    "fig3d",
    "fig4ab",
    "fig4c",
    "s2-temp",
    "s3-snr",
    "s4-visibility",
    "bench-latency",
];

pub fn is_known(id: &str) -> bool {
    EXPERIMENT_IDS.contains(&id)
}

pub fn describe(id: &str) -> &'static str {
    match id {
        "fig1b" => "estimator RMSE versus shot count and visibility",
        "fig2a" => "heralded Larmor oscillations and coherence-time fit",
        "fig2b" => "coherence time versus probe length",
        "fig2c" => "gradient diffusivity from truth and estimate series",
        "fig2d" => "estimation uncertainty versus herald tolerance",
        "fig3a" => "heralded Larmor visibility",
        "fig3bc" => "heralded exchange oscillations and quality factor",
        "fig3d" => "quality factor versus exchange coupling",
        "fig4ab" => "feedback-mode Rabi chevron and decay fit",
        "fig4c" => "randomized benchmarking, standard and interleaved",
        "s2-temp" => "electron thermometry round trip",
        "s3-snr" => "sensor SNR versus integration time",
        "s4-visibility" => "detection-probability visibility model",
        "bench-latency" => "Bayesian update latency budget",
        _ => "",
    }
}

pub fn run(id: &str, cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    match id {
        "fig1b" => estimator_exp::fig1b(cfg, out),
        "fig2a" => loops_exp::fig2a(cfg, out),
        "fig2b" => loops_exp::fig2b(cfg, out),
        "fig2c" => loops_exp::fig2c(cfg, out),
        "fig2d" => loops_exp::fig2d(cfg, out),
        "fig3a" => loops_exp::fig3a(cfg, out),
        "fig3bc" => loops_exp::fig3bc(cfg, out),
        "fig3d" => loops_exp::fig3d(cfg, out),
        "fig4ab" => rf_exp::fig4ab(cfg, out),
        "fig4c" => rf_exp::fig4c(cfg, out),
        "s2-temp" => sensors_exp::s2_temp(cfg, out),
        "s3-snr" => sensors_exp::s3_snr(cfg, out),
        "s4-visibility" => sensors_exp::s4_visibility(cfg, out),
        "bench-latency" => estimator_exp::bench_latency(cfg, out),
        _ => bail!("unknown experiment `{id}`"),
    }
}

/// Fit-report text: key=value block plus a residual table.
pub fn fit_report(pairs: &[(&str, f64)], t: &[f64], data: &[f64], model: &[f64]) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    for (k, v) in pairs {
        let _ = writeln!(out, "{k} = {}", crate::output::fmt_f64(*v));
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "t,data,model,residual");
    for ((x, y), m) in t.iter().zip(data).zip(model) {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            crate::output::fmt_f64(*x),
            crate::output::fmt_f64(*y),
            crate::output::fmt_f64(*m),
            crate::output::fmt_f64(y - m)
        );
    }
    out
}
