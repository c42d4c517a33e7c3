//! `compare`: pooled empirical size distributions of surviving replicates
//! against the limiting profiles, plus a growth-rate check.

use serde::Serialize;

use isoclust_core::malthus::{geometric_pmf, solve_spectral};
use isoclust_core::model::Regime;
use isoclust_core::sim::replicate_map;
use isoclust_core::stats::{
    empirical_active, empirical_isolated, estimate_alpha_series, pooled_active_series,
    tv_distance, EmpiricalDist,
};

use crate::config::RunConfig;
use crate::output::{ensure_dir, write_json, write_table, Cell, Manifest, Table};
use crate::CliError;

#[derive(Serialize)]
struct Verdict {
    manifest: Manifest,
    n_replicates: u64,
    n_surviving: u64,
    pooled_active_clusters: u64,
    pooled_isolated_clusters: u64,
    alpha: f64,
    alpha_hat: Option<f64>,
    alpha_rel_err: Option<f64>,
    alpha_band: f64,
    tv_active_vs_pi_a: Option<f64>,
    tv_isolated_vs_pi_i: Option<f64>,
    tv_isolated_vs_geometric: Option<f64>,
    tv_threshold: f64,
    /// True when the isolated profile sits much closer to pi_i than to the
    /// geometric law of a typical isolated cluster.
    detection_bias_visible: Option<bool>,
    conclusive: bool,
    pass: bool,
}

pub fn run(config: &RunConfig, tv_threshold: f64, alpha_band: f64) -> Result<(), CliError> {
    let params = &config.params;
    if params.regime() != Regime::Supercritical {
        return Err(CliError::runtime(
            "compare needs supercritical parameters; the limiting profiles exist conditionally on survival",
        ));
    }
    if params.detection_free() {
        return Err(CliError::runtime(
            "delta = 0 has no isolated clusters; use the `yule` subcommand",
        ));
    }
    ensure_dir(&config.out)?;
    let manifest = Manifest::new("compare", config);
    let spectral = solve_spectral(params, config.trunc_k, config.tol)?;

    let stop = config.stop_or_cap(20_000);
    struct PerRun {
        surviving: bool,
        end_time: f64,
        active: EmpiricalDist,
        isolated: EmpiricalDist,
        series_source: Option<isoclust_core::sim::Trace>,
    }
    let runs = replicate_map(params, config.seed, config.replicates, stop, |_, trace| {
        let surviving = trace.is_surviving();
        PerRun {
            surviving,
            end_time: trace.end_time,
            active: empirical_active(trace, trace.end_time).unwrap_or_default(),
            isolated: empirical_isolated(trace, trace.end_time).unwrap_or_default(),
            series_source: surviving.then(|| trace.clone()),
        }
    })?;

    let n_surviving = runs.iter().filter(|r| r.surviving).count() as u64;
    let mut pooled_active = EmpiricalDist::default();
    let mut pooled_isolated = EmpiricalDist::default();
    for run in runs.iter().filter(|r| r.surviving) {
        pooled_active.merge(&run.active);
        pooled_isolated.merge(&run.isolated);
    }

    // growth rate from the pooled active-cluster counts of surviving runs
    let survivors: Vec<_> = runs
        .iter()
        .filter_map(|r| r.series_source.clone())
        .collect();
    let alpha_hat = if survivors.is_empty() {
        None
    } else {
        let t_end = runs
            .iter()
            .filter(|r| r.surviving)
            .map(|r| r.end_time)
            .fold(f64::INFINITY, f64::min);
        let grid: Vec<f64> = (0..=50)
            .map(|i| t_end / 2.0 + (t_end / 2.0) * i as f64 / 50.0)
            .collect();
        pooled_active_series(&survivors, &grid)
            .ok()
            .and_then(|s| estimate_alpha_series(&s).ok())
    };

    let k_out = spectral
        .pi_a
        .k_max()
        .max(pooled_active.k_max())
        .max(pooled_isolated.k_max());
    let geometric = geometric_pmf(params.rates().iso_success, k_out)?;
    let mut table = Table::new(vec![
        "k",
        "empirical_active",
        "empirical_isolated",
        "pi_a",
        "pi_i",
        "geometric_reference",
    ]);
    for k in 1..=k_out {
        table.push(vec![
            Cell::U(k as u64),
            Cell::F(pooled_active.weight(k)),
            Cell::F(pooled_isolated.weight(k)),
            Cell::F(spectral.pi_a.get(k)),
            Cell::F(spectral.pi_i.get(k)),
            Cell::F(geometric.get(k)),
        ]);
    }
    write_table(&config.out, "comparison", config.format, &manifest, &table)?;

    let conclusive = n_surviving > 0 && !pooled_isolated.is_empty();
    let (tv_a, tv_i, tv_geo, bias_visible) = if conclusive {
        let tv_a = tv_distance(&pooled_active.weights(), spectral.pi_a.masses());
        let tv_i = tv_distance(&pooled_isolated.weights(), spectral.pi_i.masses());
        let tv_geo = tv_distance(&pooled_isolated.weights(), geometric.masses());
        (Some(tv_a), Some(tv_i), Some(tv_geo), Some(tv_geo > tv_i))
    } else {
        (None, None, None, None)
    };
    let alpha_rel_err = alpha_hat.map(|h| (h - spectral.alpha).abs() / spectral.alpha);
    let pass = conclusive
        && tv_i.is_some_and(|tv| tv < tv_threshold)
        && bias_visible == Some(true)
        && alpha_rel_err.is_some_and(|e| e < alpha_band);

    let verdict = Verdict {
        manifest,
        n_replicates: config.replicates,
        n_surviving,
        pooled_active_clusters: pooled_active.total(),
        pooled_isolated_clusters: pooled_isolated.total(),
        alpha: spectral.alpha,
        alpha_hat,
        alpha_rel_err,
        alpha_band,
        tv_active_vs_pi_a: tv_a,
        tv_isolated_vs_pi_i: tv_i,
        tv_isolated_vs_geometric: tv_geo,
        tv_threshold,
        detection_bias_visible: bias_visible,
        conclusive,
        pass,
    };
    write_json(&config.out, "verdict.json", &verdict)?;

    if !conclusive {
        return Err(CliError::verdict(
            "no surviving replicates; comparison inconclusive",
        ));
    }
    if !pass {
        return Err(CliError::verdict(format!(
            "comparison failed: tv_isolated_vs_pi_i = {:?}, alpha_rel_err = {:?}",
            tv_i, alpha_rel_err
        )));
    }
    Ok(())
}
