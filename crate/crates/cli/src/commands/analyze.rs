//! `analyze`: spectral quantities and limiting profiles as files.

use serde::Serialize;

use isoclust_core::malthus::{geometric_pmf, m_active, m_isolated, solve_spectral};
use isoclust_core::model::{extinction_probability, Regime};

use crate::config::RunConfig;
use crate::output::{ensure_dir, write_json, write_table, Cell, Manifest, Table};
use crate::CliError;

#[derive(Serialize)]
struct SpectralReport {
    manifest: Manifest,
    regime: Regime,
    extinction_probability: f64,
    alpha: Option<f64>,
    beta: Option<f64>,
    c_a: Option<f64>,
    c_i: Option<f64>,
    solver_tol: f64,
    trunc_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub fn run(config: &RunConfig, require_alpha: bool) -> Result<(), CliError> {
    let params = &config.params;
    if params.detection_free() {
        return Err(CliError::runtime(
            "delta = 0 has no isolated-cluster profile; use the `yule` subcommand",
        ));
    }
    ensure_dir(&config.out)?;
    let manifest = Manifest::new("analyze", config);
    let regime = params.regime();

    if regime != Regime::Supercritical {
        let error = "no positive growth exponent outside the supercritical regime".to_string();
        let report = SpectralReport {
            manifest: manifest.clone(),
            regime,
            extinction_probability: 1.0,
            alpha: None,
            beta: None,
            c_a: None,
            c_i: None,
            solver_tol: config.tol,
            trunc_k: config.trunc_k,
            error: require_alpha.then(|| error.clone()),
        };
        write_json(&config.out, "spectral.json", &report)?;
        if require_alpha {
            return Err(CliError::runtime(error));
        }
        return Ok(());
    }

    let spectral = solve_spectral(params, config.trunc_k, config.tol)?;
    let k_max = spectral.pi_a.k_max();
    let report = SpectralReport {
        manifest: manifest.clone(),
        regime,
        extinction_probability: extinction_probability(params),
        alpha: Some(spectral.alpha),
        beta: Some(spectral.beta),
        c_a: Some(spectral.c_a),
        c_i: Some(spectral.c_i),
        solver_tol: spectral.solver_tol,
        trunc_k: Some(k_max),
        error: None,
    };
    write_json(&config.out, "spectral.json", &report)?;

    let geometric = geometric_pmf(params.rates().iso_success, k_max)?;
    let mut table = Table::new(vec!["k", "pi_a", "pi_i", "geometric_reference", "m_a", "m_i"]);
    for k in 1..=k_max {
        table.push(vec![
            Cell::U(k as u64),
            Cell::F(spectral.pi_a.get(k)),
            Cell::F(spectral.pi_i.get(k)),
            Cell::F(geometric.get(k)),
            Cell::F(m_active(params, spectral.alpha, k)?),
            Cell::F(m_isolated(params, spectral.alpha, k)?),
        ]);
    }
    write_table(&config.out, "dist", config.format, &manifest, &table)?;
    Ok(())
}
