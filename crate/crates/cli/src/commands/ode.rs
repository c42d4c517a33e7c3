//! `ode`: forward integration of the expected-count hierarchy and a
//! growth-rate verdict against the transform root.

use serde::Serialize;

use isoclust_core::malthus::{integrate_nu, malthusian_parameter, StepControl};

use crate::config::RunConfig;
use crate::output::{ensure_dir, write_json, write_table, Cell, Manifest, Table};
use crate::CliError;

#[derive(Serialize)]
struct GrowthReport {
    manifest: Manifest,
    k_max: usize,
    horizon: f64,
    slope: f64,
    alpha: f64,
    abs_diff: f64,
    slope_tol: f64,
    leaked_mass: f64,
    final_total_mass: f64,
    pass: bool,
}

pub fn run(
    config: &RunConfig,
    k_max: usize,
    horizon: f64,
    dt: Option<f64>,
    slope_tol: f64,
) -> Result<(), CliError> {
    ensure_dir(&config.out)?;
    let manifest = Manifest::new("ode", config);
    let alpha = malthusian_parameter(&config.params, config.tol)?;
    let control = StepControl {
        dt,
        ..StepControl::default()
    };
    let traj = integrate_nu(&config.params, k_max, horizon, control)?;

    let mut table = Table::new(vec!["t", "total_mass", "log_total_mass", "leaked_mass"]);
    for i in 0..traj.times.len() {
        let total = traj.total(i);
        table.push(vec![
            Cell::F(traj.times[i]),
            Cell::F(total),
            Cell::F(total.ln()),
            Cell::F(traj.leaked[i]),
        ]);
    }
    write_table(&config.out, "trajectory", config.format, &manifest, &table)?;

    let slope = traj.log_slope(0.25)?;
    let abs_diff = (slope - alpha).abs();
    let pass = abs_diff < slope_tol;
    let report = GrowthReport {
        manifest,
        k_max,
        horizon,
        slope,
        alpha,
        abs_diff,
        slope_tol,
        leaked_mass: *traj.leaked.last().unwrap(),
        final_total_mass: traj.total(traj.times.len() - 1),
        pass,
    };
    write_json(&config.out, "growth.json", &report)?;
    if !pass {
        return Err(CliError::verdict(format!(
            "ODE growth rate {slope} differs from alpha {alpha} by {abs_diff:e}"
        )));
    }
    Ok(())
}
