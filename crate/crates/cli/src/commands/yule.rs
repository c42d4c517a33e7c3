//! `yule`: the detection-free mode. Grows the epidemic to a target number
//! of clusters and compares the cluster-size profile to the Yule-Simon law
//! with parameter `1/p`.

use serde::Serialize;

use isoclust_core::malthus::yule_simon_dist;
use isoclust_core::model::validate;
use isoclust_core::sim::{simulate, snapshot, EventKind, StopCondition};
use isoclust_core::stats::{tv_distance, EmpiricalDist};

use crate::config::RunConfig;
use crate::output::{ensure_dir, write_json, write_table, Cell, Manifest, Table};
use crate::CliError;

#[derive(Serialize)]
struct YuleVerdict {
    manifest: Manifest,
    target_clusters: u64,
    n_clusters: u64,
    observation_time: f64,
    tv_vs_yule_simon: f64,
    tv_threshold: f64,
    pass: bool,
}

pub fn run(config: &RunConfig, clusters: u64, tv_threshold: f64) -> Result<(), CliError> {
    if clusters < 10 {
        return Err(CliError::usage("need at least 10 clusters"));
    }
    let p = config.params.p();
    if !(0.0 < p && p < 1.0) {
        return Err(CliError::usage(
            "the detection-free profile needs p strictly inside (0, 1)",
        ));
    }
    // force delta = 0 regardless of the configured delta: this subcommand
    // is the detection-free mode
    let params = validate(config.params.gamma(), p, 0.0).map_err(CliError::usage_from)?;
    ensure_dir(&config.out)?;
    let manifest = Manifest::new("yule", config);

    // every event adds one individual and founds a cluster with probability
    // 1 - p; this cap leaves the target count essentially surely reachable
    let mean_events = clusters as f64 / (1.0 - p);
    let cap = (mean_events + 20.0 * mean_events.sqrt()) as u64 + 10;
    if cap > 20_000_000 {
        return Err(CliError::usage(format!(
            "the run would need about {cap} individuals; lower --clusters or p"
        )));
    }
    let stop = StopCondition::default().with_max_individuals(cap);
    let trace = simulate(&params, config.seed, stop)?;

    // observation time of the target-th cluster birth: "grown to N clusters"
    let mut seen = 1u64; // ancestral cluster
    let mut t_obs = None;
    for ev in &trace.events {
        if let EventKind::UntraceableBirth { .. } = ev.kind {
            seen += 1;
            if seen == clusters {
                t_obs = Some(ev.time);
                break;
            }
        }
    }
    let t_obs = t_obs.ok_or_else(|| {
        CliError::runtime(format!(
            "only {seen} clusters grew under the event budget; raise --clusters margin"
        ))
    })?;

    let snap = snapshot(&trace, t_obs)?;
    let empirical = EmpiricalDist::from_sizes(snap.active_sizes.iter().map(|&(_, s)| s));
    debug_assert_eq!(empirical.total(), clusters);

    let reference = yule_simon_dist(p, empirical.k_max().max(100))?;
    let tv = tv_distance(&empirical.weights(), reference.masses());

    let mut table = Table::new(vec!["k", "empirical", "sigma_p"]);
    for k in 1..=empirical.k_max().max(100) {
        table.push(vec![
            Cell::U(k as u64),
            Cell::F(empirical.weight(k)),
            Cell::F(reference.get(k)),
        ]);
    }
    write_table(&config.out, "yule", config.format, &manifest, &table)?;

    let pass = tv < tv_threshold;
    let verdict = YuleVerdict {
        manifest,
        target_clusters: clusters,
        n_clusters: empirical.total(),
        observation_time: t_obs,
        tv_vs_yule_simon: tv,
        tv_threshold,
        pass,
    };
    write_json(&config.out, "yule_verdict.json", &verdict)?;
    if !pass {
        return Err(CliError::verdict(format!(
            "TV against the Yule-Simon law is {tv}, above {tv_threshold}"
        )));
    }
    Ok(())
}
