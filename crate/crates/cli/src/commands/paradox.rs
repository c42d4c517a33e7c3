//! `paradox`: dead-cohort lifespan means over a grid of observation times,
//! against the tilted and untilted expectations.

use std::path::Path;

use isoclust_core::paradox::{
    dead_mean, lambda1_expectation, lambda_expectation, sample_cohort, IntensityKind,
    LifespanSpec,
};

use crate::config::RunConfig;
use crate::output::{ensure_dir, write_table, Cell, Manifest, Table};
use crate::CliError;

fn parse_lifespan(text: &str) -> Result<LifespanSpec, CliError> {
    let spec = if let Some(rate) = text.strip_prefix("exp:") {
        LifespanSpec::Exponential {
            rate: rate
                .parse()
                .map_err(|_| CliError::usage(format!("bad rate in '{text}'")))?,
        }
    } else if let Some(value) = text.strip_prefix("point:") {
        LifespanSpec::PointMass(
            value
                .parse()
                .map_err(|_| CliError::usage(format!("bad value in '{text}'")))?,
        )
    } else if let Some(path) = text.strip_prefix("table:") {
        load_quantile_table(Path::new(path))?
    } else {
        return Err(CliError::usage(format!(
            "lifespan must be 'exp:RATE', 'point:VALUE' or 'table:FILE', got '{text}'"
        )));
    };
    spec.validate().map_err(CliError::usage_from)?;
    Ok(spec)
}

/// Reads `u,ell` quantile pairs, one per line, `#` comments allowed.
fn load_quantile_table(path: &Path) -> Result<LifespanSpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut u = Vec::new();
    let mut ell = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == "u,ell" {
            continue;
        }
        let mut parts = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64, CliError> {
            s.ok_or_else(|| CliError::usage(format!("{}:{}: missing field", path.display(), lineno + 1)))?
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("{}:{}: bad number", path.display(), lineno + 1)))
        };
        u.push(parse(parts.next())?);
        ell.push(parse(parts.next())?);
    }
    Ok(LifespanSpec::Tabulated { u, ell })
}

fn parse_intensity(text: &str) -> Result<IntensityKind, CliError> {
    if text == "exp" {
        return Ok(IntensityKind::Exponential);
    }
    if let Some(r) = text.strip_prefix("poly:") {
        return Ok(IntensityKind::Polynomial {
            exponent: r
                .parse()
                .map_err(|_| CliError::usage(format!("bad exponent in '{text}'")))?,
        });
    }
    Err(CliError::usage(format!(
        "intensity must be 'exp' or 'poly:R', got '{text}'"
    )))
}

pub fn run(
    config: &RunConfig,
    lifespan: &str,
    intensity: &str,
    horizon: f64,
    obs_points: usize,
) -> Result<(), CliError> {
    if obs_points < 1 {
        return Err(CliError::usage("obs-points must be >= 1"));
    }
    let spec = parse_lifespan(lifespan)?;
    let intensity = parse_intensity(intensity)?;
    ensure_dir(&config.out)?;
    let manifest = Manifest::new("paradox", config);

    let cohort = sample_cohort(&spec, intensity, horizon, config.seed)?;
    let tilted = lambda1_expectation(&spec, |l| l)?;
    let plain = lambda_expectation(&spec, |l| l)?;

    let mut table = Table::new(vec![
        "t",
        "n_dead",
        "dead_mean",
        "lambda1_expectation",
        "lambda_expectation",
    ]);
    for i in 1..=obs_points {
        let t = horizon * i as f64 / obs_points as f64;
        let dead = dead_mean(&cohort, t, |l| l);
        table.push(vec![
            Cell::F(t),
            Cell::U(dead.n_dead as u64),
            Cell::OptF(dead.mean),
            Cell::F(tilted),
            Cell::F(plain),
        ]);
    }
    write_table(&config.out, "paradox", config.format, &manifest, &table)?;
    Ok(())
}
