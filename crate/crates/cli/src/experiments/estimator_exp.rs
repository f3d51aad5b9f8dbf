//! Estimator-focused experiments: convergence study and latency budget.

use std::time::Instant;

use anyhow::Result;
use stq_core::estimator::{
    FixedLut, FixedPosterior, LikelihoodTable, Outcome, Posterior, RmseStudyConfig,
};
use stq_core::rng::stream;

use crate::config::RunConfig;
use crate::output::{fmt_f64, RunOutput};

pub fn fig1b(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let r = cfg.reader();
    let study = RmseStudyConfig {
        grid: cfg.grid,
        n_list: r.u32_list("fig1b.n_list")?,
        beta_list: r.f64_list("fig1b.beta_list")?,
        alpha: cfg.likelihood.alpha,
        trials: r.u32("fig1b.trials")?,
        tau_step_ns: cfg.probe.tau_step_ns,
        f_true_range: None,
    };
    let started = Instant::now();
    let table = stq_core::estimator::rmse_study(&study, cfg.seed);
    let elapsed = started.elapsed();

    let rows: Vec<Vec<String>> = table
        .cells
        .iter()
        .map(|c| vec![c.n_shots.to_string(), fmt_f64(c.beta), fmt_f64(c.rmse_mhz)])
        .collect();
    out.write_csv("rmse.csv", "n_shots,beta,rmse_mhz", &rows)?;

    if let Some(rmse) = table.get(70, 0.9) {
        out.check(
            &format!("rmse(N=70, beta=0.9) = {rmse:.4} MHz < 1"),
            rmse < 1.0,
        );
    }
    let has = |b: f64| study.beta_list.iter().any(|&x| (x - b).abs() < 1e-12);
    if has(0.5) && has(0.9) {
        let monotone = study
            .n_list
            .iter()
            .filter(|&&n| (20..=120).contains(&n))
            .all(|&n| table.get(n, 0.9).unwrap() < table.get(n, 0.5).unwrap());
        out.check(
            "rmse(N, 0.9) < rmse(N, 0.5) for all N in 20..=120",
            monotone,
        );
    }
    out.note(&format!("runtime {:.2} s", elapsed.as_secs_f64()));
    Ok(())
}

pub fn bench_latency(cfg: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let r = cfg.reader();
    let updates = r.usize("bench.updates")?;
    let table = LikelihoodTable::build(
        &cfg.grid,
        &cfg.likelihood,
        cfg.probe.tau_step_ns,
        cfg.probe.n_shots,
    );
    let lut = FixedLut::build(
        &cfg.grid,
        &cfg.likelihood,
        cfg.probe.tau_step_ns,
        cfg.probe.n_shots,
        cfg.fixed.lut_bits,
    );
    let mut rng = stream(cfg.seed, &[0xBE]);
    let outcomes: Vec<(u32, Outcome)> = (0..updates)
        .map(|i| {
            let k = (i % cfg.probe.n_shots as usize) as u32 + 1;
            (k, Outcome::from_bit(rand_bit(&mut rng)))
        })
        .collect();

    // Float engine.
    let mut float_p = Posterior::uniform(cfg.grid);
    let started = Instant::now();
    for &(k, o) in &outcomes {
        float_p.bayes_update_with_table(&table, k, o);
    }
    let float_total = started.elapsed();
    std::hint::black_box(float_p.estimate());

    // Fixed-point engine, with batch timings for the variance report.
    let mut fixed_p = FixedPosterior::uniform(cfg.grid.n_bins, cfg.fixed)?;
    let batch = 500usize;
    let mut batch_means_us = Vec::new();
    let started = Instant::now();
    for chunk in outcomes.chunks(batch) {
        let t0 = Instant::now();
        for &(k, o) in chunk {
            fixed_p.update(&lut, k, o);
        }
        batch_means_us.push(t0.elapsed().as_secs_f64() * 1e6 / chunk.len() as f64);
    }
    let fixed_total = started.elapsed();
    std::hint::black_box(fixed_p.argmax_index());

    // Full 70-shot probe wall time (float path, as the loop runs it).
    let probes = 200u32;
    let started = Instant::now();
    for p in 0..probes {
        let mut posterior = Posterior::uniform(cfg.grid);
        let mut rng = stream(cfg.seed, &[0xBF, u64::from(p)]);
        for k in 1..=cfg.probe.n_shots {
            posterior.bayes_update_with_table(&table, k, Outcome::from_bit(rand_bit(&mut rng)));
        }
        std::hint::black_box(posterior.estimate());
    }
    let probe_total = started.elapsed();

    let float_us = float_total.as_secs_f64() * 1e6 / updates as f64;
    let fixed_us = fixed_total.as_secs_f64() * 1e6 / updates as f64;
    let probe_us = probe_total.as_secs_f64() * 1e6 / f64::from(probes);
    let mean_batch = batch_means_us.iter().sum::<f64>() / batch_means_us.len() as f64;
    let var_batch = batch_means_us
        .iter()
        .map(|m| (m - mean_batch).powi(2))
        .sum::<f64>()
        / batch_means_us.len() as f64;

    let rows = vec![
        vec!["float_update_us".into(), fmt_f64(float_us)],
        vec!["fixed_update_us".into(), fmt_f64(fixed_us)],
        vec![
            "fixed_update_batch_std_us".into(),
            fmt_f64(var_batch.sqrt()),
        ],
        vec!["probe_70_shot_us".into(), fmt_f64(probe_us)],
        vec!["updates".into(), updates.to_string()],
    ];
    out.write_csv("latency.csv", "metric,value", &rows)?;

    out.check(
        &format!("fixed-point 512-bin update mean {fixed_us:.3} us < 10 us"),
        fixed_us < 10.0,
    );
    out.check(
        &format!(
            "timing variance report over {} batches",
            batch_means_us.len()
        ),
        !batch_means_us.is_empty(),
    );
    out.note(&format!(
        "float update {float_us:.3} us, full {}-shot probe {probe_us:.1} us",
        cfg.probe.n_shots
    ));
    Ok(())
}

fn rand_bit(rng: &mut impl rand::Rng) -> bool {
    rng.random()
}
