//! `simulate`: event logs, genealogies and snapshot grids, one set of files
//! per replicate.

use isoclust_core::rng::derive_seed;
use isoclust_core::sim::{simulate, snapshot, Trace};

use crate::config::RunConfig;
use crate::output::{ensure_dir, write_bytes, write_json, write_table, Cell, Manifest, Table};
use crate::CliError;

pub fn run(config: &RunConfig, grid_points: usize) -> Result<(), CliError> {
    if grid_points < 2 {
        return Err(CliError::usage("grid-points must be >= 2"));
    }
    ensure_dir(&config.out)?;
    let manifest = Manifest::new("simulate", config);
    write_json(&config.out, "manifest.json", &manifest)?;

    // replicates are cheap to regenerate; running them sequentially keeps
    // file writing trivially ordered
    for index in 0..config.replicates {
        let seed = derive_seed(config.seed, index);
        let trace = simulate(&config.params, seed, config.stop)?;
        write_events(config, &manifest, index, &trace)?;
        write_clusters(config, &manifest, index, &trace)?;
        write_snapshots(config, &manifest, index, &trace, grid_points)?;
    }
    Ok(())
}

fn write_events(
    config: &RunConfig,
    manifest: &Manifest,
    index: u64,
    trace: &Trace,
) -> Result<(), CliError> {
    let mut body = String::new();
    let head = serde_json::json!({
        "manifest": manifest,
        "replicate": index,
        "replicate_seed": trace.seed,
        "stop_reason": trace.stop_reason,
        "end_time": trace.end_time,
        "n_events": trace.events.len(),
    });
    body.push_str(&serde_json::to_string(&head).map_err(CliError::runtime_from)?);
    body.push('\n');
    for event in &trace.events {
        body.push_str(&serde_json::to_string(event).map_err(CliError::runtime_from)?);
        body.push('\n');
    }
    write_bytes(
        &config.out.join(format!("events_r{index:03}.jsonl")),
        &body,
    )
}

fn write_clusters(
    config: &RunConfig,
    manifest: &Manifest,
    index: u64,
    trace: &Trace,
) -> Result<(), CliError> {
    let mut table = Table::new(vec![
        "id",
        "parent_id",
        "birth_time",
        "isolation_time",
        "final_size",
        "n_children",
    ]);
    for c in &trace.clusters {
        table.push(vec![
            Cell::U(c.id as u64),
            Cell::OptU(c.parent_id.map(u64::from)),
            Cell::F(c.birth_time),
            Cell::OptF(c.isolation_age.map(|z| c.birth_time + z)),
            Cell::OptU(c.final_size.map(u64::from)),
            Cell::U(c.child_birth_ages.len() as u64),
        ]);
    }
    write_table(
        &config.out,
        &format!("clusters_r{index:03}"),
        config.format,
        manifest,
        &table,
    )?;
    Ok(())
}

fn write_snapshots(
    config: &RunConfig,
    manifest: &Manifest,
    index: u64,
    trace: &Trace,
    grid_points: usize,
) -> Result<(), CliError> {
    let mut table = Table::new(vec![
        "t",
        "n_active_clusters",
        "n_isolated_clusters",
        "n_contagious",
        "n_isolated_individuals",
    ]);
    let end = trace.end_time;
    for i in 0..grid_points {
        // pin the last grid point to the exact end time; the product form
        // can overshoot it by one ulp
        let t = if i + 1 == grid_points {
            end
        } else {
            end * i as f64 / (grid_points - 1) as f64
        };
        let snap = snapshot(trace, t)?;
        table.push(vec![
            Cell::F(t),
            Cell::U(snap.totals.active_clusters),
            Cell::U(snap.totals.isolated_clusters),
            Cell::U(snap.totals.contagious),
            Cell::U(snap.totals.isolated_individuals),
        ]);
    }
    write_table(
        &config.out,
        &format!("snapshots_r{index:03}"),
        config.format,
        manifest,
        &table,
    )?;
    Ok(())
}
