//! Scenario presets, Monte-Carlo aggregation, and CSV rendering.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sim::channel::draw_channels;
use crate::sim::config::{Decoder, ScenarioConfig, Sweep};
use crate::sim::protocol::{run_protocol, RunRecord};

/// Per-sweep-point aggregate over all realizations.
#[derive(Clone, Debug)]
pub struct ScenarioRow {
    pub sweep_value: f64,
    pub mean_rates: Vec<f64>,
    /// Standard error of each user's mean rate.
    pub se_rates: Vec<f64>,
    pub mean_sum_rate: f64,
    pub se_sum_rate: f64,
    pub converged_frac: f64,
    pub mean_rounds: f64,
    pub realizations: usize,
}

/// Runs every sweep point of the scenario and aggregates per point.
/// Realizations run concurrently; records are reduced in realization order,
/// so the output is identical for any worker count.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<ScenarioRow>> {
    cfg.validate()?;
    Ok(cfg
        .sweep_values()
        .iter()
        .map(|&value| {
            let point_cfg = cfg.at_sweep_value(value);
            let records: Vec<RunRecord> = (0..point_cfg.realizations)
                .into_par_iter()
                .map(|r| run_protocol(&point_cfg, &draw_channels(&point_cfg, r), value))
                .collect();
            aggregate(value, &records, cfg.k)
        })
        .collect())
}

fn aggregate(sweep_value: f64, records: &[RunRecord], k: usize) -> ScenarioRow {
    let n = records.len();
    let mean_of = |f: &dyn Fn(&RunRecord) -> f64| records.iter().map(|r| f(r)).sum::<f64>() / n as f64;
    let se_of = |f: &dyn Fn(&RunRecord) -> f64, mean: f64| {
        if n < 2 {
            return 0.0;
        }
        let var = records.iter().map(|r| (f(r) - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    };

    let mut mean_rates = Vec::with_capacity(k);
    let mut se_rates = Vec::with_capacity(k);
    for u in 0..k {
        let f = move |r: &RunRecord| r.rates[u];
        let m = mean_of(&f);
        se_rates.push(se_of(&f, m));
        mean_rates.push(m);
    }
    let sum = |r: &RunRecord| r.sum_rate;
    let mean_sum_rate = mean_of(&sum);
    let se_sum_rate = se_of(&sum, mean_sum_rate);
    ScenarioRow {
        sweep_value,
        mean_rates,
        se_rates,
        mean_sum_rate,
        se_sum_rate,
        converged_frac: records.iter().filter(|r| r.converged).count() as f64 / n as f64,
        mean_rounds: mean_of(&|r: &RunRecord| r.rounds as f64),
        realizations: n,
    }
}

/// Which CSV layout a simulation renders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CsvFlavor {
    /// Two-arm comparison: the scenario is run once with every receiver
    /// treating interference as noise and once with every receiver decoding
    /// opportunistically, merged per sweep point.
    Fig2,
    /// Primary/secondary rate columns with a fixed case label.
    Fig3 { case: String },
    /// One row per sweep point with per-user rates and the sum rate.
    Generic,
}

/// Built-in scenario presets, by external name.
pub fn preset_config(name: &str) -> Option<(ScenarioConfig, CsvFlavor)> {
    match name {
        "fig2" => Some((
            ScenarioConfig {
                k: 2,
                antennas: vec![(2, 2), (2, 2)],
                powers: vec![100.0, 100.0],
                channel_variances: vec![vec![1.0, 1.0], vec![1.0, 1.0]],
                decoders: vec![Decoder::Omd, Decoder::Omd],
                realizations: 500,
                seed: 0,
                sweep: Some(Sweep::CrossVariance(
                    (1..=30).map(|i| i as f64 / 10.0).collect(),
                )),
                max_rounds: 100,
                rate_tol: 1e-6,
            },
            CsvFlavor::Fig2,
        )),
        "fig3-case1" | "fig3-case2" => {
            let case_two = name == "fig3-case2";
            Some((
                ScenarioConfig {
                    k: 2,
                    antennas: vec![(2, 2), (2, 2)],
                    // user 1 is the high-power incumbent: ten times the
                    // swept base power
                    powers: vec![10.0, 1.0],
                    channel_variances: vec![vec![1.0, 10.0], vec![1.0, 10.0]],
                    decoders: vec![
                        Decoder::Sud,
                        if case_two { Decoder::Omd } else { Decoder::Sud },
                    ],
                    realizations: 500,
                    seed: 0,
                    sweep: Some(Sweep::PowerScale(vec![
                        1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0,
                    ])),
                    max_rounds: 100,
                    rate_tol: 1e-6,
                },
                CsvFlavor::Fig3 {
                    case: if case_two { "case2".into() } else { "case1".into() },
                },
            ))
        }
        _ => None,
    }
}

/// Knobs shared by all simulation entry points.
#[derive(Clone, Debug, Default)]
pub struct SimOptions {
    /// Worker threads; `None` uses the global default. Any value produces
    /// byte-identical output.
    pub workers: Option<usize>,
    /// Report rates in bits instead of nats.
    pub bits: bool,
}

/// Runs a scenario end to end and renders its CSV.
pub fn run_simulation(
    cfg: &ScenarioConfig,
    flavor: &CsvFlavor,
    opts: &SimOptions,
) -> Result<String> {
    cfg.validate()?;
    if matches!(flavor, CsvFlavor::Fig3 { .. } | CsvFlavor::Fig2) && cfg.k != 2 {
        return Err(Error::InvalidConfig(
            "two-arm and primary/secondary layouts need exactly 2 users".into(),
        ));
    }
    let unit = if opts.bits { std::f64::consts::LN_2 } else { 1.0 };
    let body = || -> Result<String> {
        match flavor {
            CsvFlavor::Fig2 => {
                let sud = run_scenario(&cfg.with_all_decoders(Decoder::Sud))?;
                let omd = run_scenario(&cfg.with_all_decoders(Decoder::Omd))?;
                Ok(render_fig2(&sud, &omd, unit))
            }
            CsvFlavor::Fig3 { case } => Ok(render_fig3(&run_scenario(cfg)?, case, unit)),
            CsvFlavor::Generic => Ok(render_generic(&run_scenario(cfg)?, cfg, unit)),
        }
    };
    match opts.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?
            .install(body),
        None => body(),
    }
}

fn render_fig2(sud: &[ScenarioRow], omd: &[ScenarioRow], unit: f64) -> String {
    let mut out = String::from("rho,sum_rate_sud,sum_rate_omd,converged_frac_sud,converged_frac_omd\n");
    for (s, o) in sud.iter().zip(omd.iter()) {
        debug_assert_eq!(s.sweep_value, o.sweep_value);
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.sweep_value,
            s.mean_sum_rate / unit,
            o.mean_sum_rate / unit,
            s.converged_frac,
            o.converged_frac
        ));
    }
    out
}

fn render_fig3(rows: &[ScenarioRow], case: &str, unit: f64) -> String {
    let mut out = String::from("P,rate_pu,rate_su,case\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.sweep_value,
            r.mean_rates[0] / unit,
            r.mean_rates[1] / unit,
            case
        ));
    }
    out
}

fn render_generic(rows: &[ScenarioRow], cfg: &ScenarioConfig, unit: f64) -> String {
    let label = cfg.sweep.as_ref().map_or("point", Sweep::label);
    let mut out = String::from(label);
    for u in 0..cfg.k {
        out.push_str(&format!(",rate_user{}", u + 1));
    }
    out.push_str(",sum_rate,se_sum_rate,converged_frac\n");
    for r in rows {
        out.push_str(&format!("{}", r.sweep_value));
        for m in &r.mean_rates {
            out.push_str(&format!(",{}", m / unit));
        }
        out.push_str(&format!(
            ",{},{},{}\n",
            r.mean_sum_rate / unit,
            r.se_sum_rate / unit,
            r.converged_frac
        ));
    }
    out
}
