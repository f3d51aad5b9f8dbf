//! Monte-Carlo behavior of the trace synthesis and discrimination.

use rayon::prelude::*;
use stq_core::analysis::SpinOutcomeModel;
use stq_core::qubit::SpinLabel;
use stq_core::readout::{
    detection_error_rates, peak_distributions, single_shot, snr_curve, ReadoutConfig, ShotSynthesis,
};
use stq_core::rng::stream;

#[test]
fn reference_device_operating_point_matches_reference_errors() {
    let cfg = ReadoutConfig::reference_device();
    let rates = detection_error_rates(&cfg, cfg.threshold, 50_000, 301);
    // Loose factor-of-two window: the generative model is not the device.
    assert!(
        rates.e_t >= 0.007 && rates.e_t <= 0.028,
        "E_T = {} +- {}",
        rates.e_t,
        rates.ci95_e_t
    );
    assert!(
        rates.e_n >= 0.0035 && rates.e_n <= 0.014,
        "E_N = {} +- {}",
        rates.e_n,
        rates.ci95_e_n
    );
}

#[test]
fn threshold_sweep_is_u_shaped() {
    let cfg = ReadoutConfig::reference_device();
    let peaks = peak_distributions(&cfg, 50_000, 302);
    let thresholds: Vec<f64> = (4..=19).map(|i| i as f64 * 0.05).collect();
    let totals: Vec<f64> = thresholds
        .iter()
        .map(|&t| {
            let (e_t, e_n) = peaks.error_rates_at(t);
            e_t + e_n
        })
        .collect();
    let (best_idx, &best) = totals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    assert!(
        best_idx > 0 && best_idx < totals.len() - 1,
        "minimum at the edge"
    );
    assert!(totals[0] > 2.0 * best, "no left wall: {totals:?}");
    assert!(
        *totals.last().unwrap() > 1.2 * best,
        "no right wall: {totals:?}"
    );

    // Component monotonicity on average across the sweep.
    for pair in thresholds.windows(2) {
        let (e_t_lo, e_n_lo) = peaks.error_rates_at(pair[0]);
        let (e_t_hi, e_n_hi) = peaks.error_rates_at(pair[1]);
        assert!(e_t_hi >= e_t_lo - 1e-12, "E_T not nondecreasing");
        assert!(e_n_hi <= e_n_lo + 1e-12, "E_N not nonincreasing");
    }
}

#[test]
fn snr_scales_as_sqrt_integration_time() {
    let cfg = ReadoutConfig::default();
    let t_ints = [50.0, 100.0, 200.0, 400.0, 800.0];
    let curve = snr_curve(&cfg, &t_ints, 400, 303).unwrap();
    let at = |t: f64| curve.iter().find(|p| p.0 == t).unwrap().1;
    assert!(
        (at(200.0) - 9.2).abs() / 9.2 < 0.03,
        "SNR(200) = {}",
        at(200.0)
    );
    assert!(
        (at(50.0) - 4.6).abs() / 4.6 < 0.05,
        "SNR(50) = {}",
        at(50.0)
    );
    assert!(
        (at(800.0) - 18.4).abs() / 18.4 < 0.05,
        "SNR(800) = {}",
        at(800.0)
    );

    // SNR^2 linear with negligible intercept.
    let t: Vec<f64> = curve.iter().map(|p| p.0).collect();
    let s2: Vec<f64> = curve.iter().map(|p| p.1 * p.1).collect();
    let fit =
        stq_core::analysis::fit_snr(&t, &curve.iter().map(|p| p.1).collect::<Vec<_>>()).unwrap();
    let s2_200 = 9.2f64 * 9.2;
    assert!(
        fit.intercept.abs() < 0.05 * s2_200,
        "intercept {} too large (slope {})",
        fit.intercept,
        fit.slope_per_ns
    );
    let _ = s2;
}

#[test]
fn analytic_and_trace_modes_agree_per_label() {
    // Measure (E_T, E_N) of the synthesis, feed them to the analytic
    // path, and compare detection frequencies for every label.
    let cfg = ReadoutConfig::reference_device();
    let n = 100_000usize;
    let rates = detection_error_rates(&cfg, cfg.threshold, n, 304);
    let model = SpinOutcomeModel::<f64> {
        e_t: rates.e_t,
        e_n: rates.e_n,
        ..SpinOutcomeModel::baseline()
    };
    for (li, label) in [
        SpinLabel::Singlet,
        SpinLabel::TripletZero,
        SpinLabel::TripletPlus,
        SpinLabel::TripletMinus,
    ]
    .into_iter()
    .enumerate()
    {
        let count = |mode: ShotSynthesis, tag: u64| -> f64 {
            let hits: u64 = (0..n)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = stream(305, &[tag, li as u64, trial as u64]);
                    u64::from(single_shot(label, &model, &cfg, mode, &mut rng))
                })
                .sum();
            hits as f64 / n as f64
        };
        let analytic = count(ShotSynthesis::Analytic, 0);
        let trace = count(ShotSynthesis::Trace, 1);
        let p = f64::midpoint(analytic, trace);
        let sigma = (2.0 * p * (1.0 - p) / n as f64).sqrt().max(1e-6);
        assert!(
            (analytic - trace).abs() < 3.0 * sigma + 2e-4,
            "{label:?}: analytic {analytic} vs trace {trace} (sigma {sigma})"
        );
    }
}
