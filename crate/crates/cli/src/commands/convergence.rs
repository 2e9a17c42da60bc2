//! Error-vs-resolution study. Two refinement designs, one per identity:
//!
//! - occupation ladder: the kernel follows the step (`eps = 4 sqrt(dt)`),
//!   measuring the estimator's consistency against the sharp occupation
//!   count;
//! - quadrature ladder: the kernel (and with it the target functional) is
//!   held fixed while `dt` refines, measuring the stochastic-integral
//!   discretization of the Tanaka identity.
//!
//! A third column tracks the bias of the profile mean in the classical
//! driftless configuration, where the exact value is the initial mass.

use std::io::Write;

use serde::Serialize;

use rayknight::ensemble::run_ordered;
use rayknight::exploration::{self, ExplorationConfig};
use rayknight::stats::summarize;
use rayknight::{LevelGrid, ModelParams, RngStream};

use crate::config::Config;
use crate::report::{self, Manifest};
use crate::CliError;

const PROBE_LEVEL: f64 = 0.5;
const CEILING: f64 = 1.0;
/// Default-resolution magnitude gates reproduced by the study.
const OCCUPATION_REL_MAX: f64 = 0.01;
const TANAKA_REL_MAX: f64 = 0.05;
/// Every fitted order must reach the Euler-scheme floor.
const MIN_ORDER: f64 = 0.5;

#[derive(Debug, Serialize)]
struct Row {
    metric: &'static str,
    dt: f64,
    dy: f64,
    epsilon: f64,
    median_abs_error: f64,
    signed_mean_error: f64,
    median_relative_error: f64,
}

#[derive(Debug, Serialize)]
struct StudyReport {
    rows: Vec<Row>,
    occupation_order: f64,
    tanaka_order: f64,
    profile_mean_order: f64,
    default_resolution: DefaultResolution,
}

#[derive(Debug, Serialize)]
struct DefaultResolution {
    dt: f64,
    occupation_relative: f64,
    tanaka_relative: f64,
}

struct RungStats {
    median_abs: f64,
    signed_mean: f64,
    median_rel: f64,
}

fn identity_rung(
    cfg: &Config,
    dt: f64,
    dy: f64,
    epsilon: f64,
    occupation: bool,
    seed: u64,
) -> Result<RungStats, CliError> {
    let mut explo = ExplorationConfig::new(ModelParams::critical(), Some(CEILING), dt)?
        .with_s_max(2_000.0);
    explo.epsilon = epsilon;
    explo.levels = LevelGrid::for_ceiling(CEILING, dy)?;
    let rows = run_ordered(cfg.convergence.n_paths, |i| {
        let r = exploration::simulate(&explo, 1.0, RngStream::new(seed, i))?;
        let profile = r.profile().expect("stopped run");
        if occupation {
            let err = r.occupation_time(PROBE_LEVEL, r.s_x().unwrap())?
                - profile.integral_up_to(PROBE_LEVEL);
            let denom = r.occupation_time(PROBE_LEVEL, r.s_x().unwrap())?.max(1e-9);
            Ok((err, err.abs() / denom))
        } else {
            let err = profile.value_at(PROBE_LEVEL)
                - exploration::smoothed_tanaka_integral(
                    r.path(),
                    PROBE_LEVEL,
                    profile.epsilon(),
                    profile.dy(),
                    dt,
                );
            Ok((err, err.abs() / profile.value_at(PROBE_LEVEL).max(1e-9)))
        }
    })?;
    let abs: Vec<f64> = rows.iter().map(|r| r.0.abs()).collect();
    let signed: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let rel: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Ok(RungStats {
        median_abs: super::median(&abs),
        signed_mean: summarize(&signed).mean,
        median_rel: super::median(&rel),
    })
}

fn profile_mean_rung(cfg: &Config, dt: f64, seed: u64) -> Result<f64, CliError> {
    let explo = ExplorationConfig::new(ModelParams::critical(), Some(CEILING), dt)?
        .with_s_max(2_000.0);
    let n = cfg.convergence.n_paths * 125;
    let vals = run_ordered(n, |i| {
        let r = exploration::simulate(&explo, 1.0, RngStream::new(seed, i))?;
        Ok(r.profile().expect("stopped run").value_at(PROBE_LEVEL))
    })?;
    // The exact mean of the profile at any level is the initial mass.
    Ok((summarize(&vals).mean - 1.0).abs())
}

pub fn run(cfg: &Config) -> Result<(), CliError> {
    let conv = &cfg.convergence;
    for (name, ladder) in [
        ("occupation_ladder", &conv.occupation_ladder),
        ("tanaka_ladder", &conv.tanaka_ladder),
    ] {
        if ladder.len() < 3 {
            return Err(CliError::usage(format!(
                "{name} needs at least 3 rungs, got {}",
                ladder.len()
            )));
        }
    }
    if conv.profile_rungs.len() < 3 {
        return Err(CliError::usage(format!(
            "profile_rungs needs at least 3 rungs, got {}",
            conv.profile_rungs.len()
        )));
    }

    let mut rows = Vec::new();
    let mut occ_points = Vec::new();
    for (k, &[dt, dy, epsilon]) in conv.occupation_ladder.iter().enumerate() {
        let s = identity_rung(cfg, dt, dy, epsilon, true, cfg.master_seed + 10 + k as u64)?;
        occ_points.push((dt, s.median_abs));
        rows.push(Row {
            metric: "occupation",
            dt,
            dy,
            epsilon,
            median_abs_error: s.median_abs,
            signed_mean_error: s.signed_mean,
            median_relative_error: s.median_rel,
        });
    }
    let mut tan_points = Vec::new();
    for (k, &[dt, dy, epsilon]) in conv.tanaka_ladder.iter().enumerate() {
        let s = identity_rung(cfg, dt, dy, epsilon, false, cfg.master_seed + 40 + k as u64)?;
        tan_points.push((dt, s.median_abs));
        rows.push(Row {
            metric: "tanaka",
            dt,
            dy,
            epsilon,
            median_abs_error: s.median_abs,
            signed_mean_error: s.signed_mean,
            median_relative_error: s.median_rel,
        });
    }
    let mut prof_points = Vec::new();
    for (k, &dt) in conv.profile_rungs.iter().enumerate() {
        let bias = profile_mean_rung(cfg, dt, cfg.master_seed + 70 + k as u64)?;
        prof_points.push((dt, bias));
        rows.push(Row {
            metric: "profile_mean_bias",
            dt,
            dy: exploration::default_spacing(dt),
            epsilon: exploration::default_epsilon(dt),
            median_abs_error: bias,
            signed_mean_error: bias,
            median_relative_error: bias,
        });
    }

    // The default resolution must reproduce the documented tolerances.
    let dt0 = cfg.dt;
    let occ0 = identity_rung(
        cfg,
        dt0,
        exploration::default_spacing(dt0),
        exploration::default_epsilon(dt0),
        true,
        cfg.master_seed + 100,
    )?;
    let tan0 = identity_rung(
        cfg,
        dt0,
        exploration::default_spacing(dt0),
        exploration::default_epsilon(dt0),
        false,
        cfg.master_seed + 101,
    )?;

    let report = StudyReport {
        occupation_order: super::fitted_order(&occ_points),
        tanaka_order: super::fitted_order(&tan_points),
        profile_mean_order: super::fitted_order(&prof_points),
        default_resolution: DefaultResolution {
            dt: dt0,
            occupation_relative: occ0.median_rel,
            tanaka_relative: tan0.median_rel,
        },
        rows,
    };

    // CSV table of every rung.
    let meta = report::metadata(cfg);
    let mut out = report::create(cfg, "convergence.csv")?;
    out.write_all(
        format!(
            "# version={} config_hash={}\n",
            meta.version, meta.config_hash
        )
        .as_bytes(),
    )?;
    out.write_all(
        b"metric,dt,dy,epsilon,median_abs_error,signed_mean_error,median_relative_error\n",
    )?;
    for r in &report.rows {
        out.write_all(
            format!(
                "{},{},{},{},{},{},{}\n",
                r.metric,
                r.dt,
                r.dy,
                r.epsilon,
                r.median_abs_error,
                r.signed_mean_error,
                r.median_relative_error
            )
            .as_bytes(),
        )?;
    }
    drop(out);
    report::write_json(cfg, "convergence.json", &report)?;

    let mut failed = Vec::new();
    for (name, order) in [
        ("occupation", report.occupation_order),
        ("tanaka", report.tanaka_order),
        ("profile_mean_bias", report.profile_mean_order),
    ] {
        if order < MIN_ORDER {
            failed.push(format!("{name} fitted order {order:.3} below {MIN_ORDER}"));
        }
    }
    if report.default_resolution.occupation_relative >= OCCUPATION_REL_MAX {
        failed.push(format!(
            "occupation relative error {:.4} at default resolution",
            report.default_resolution.occupation_relative
        ));
    }
    if report.default_resolution.tanaka_relative >= TANAKA_REL_MAX {
        failed.push(format!(
            "tanaka relative error {:.4} at default resolution",
            report.default_resolution.tanaka_relative
        ));
    }
    for (metric, points) in [("occupation", &occ_points), ("tanaka", &tan_points)] {
        println!(
            "convergence {metric}: {}",
            points
                .iter()
                .map(|(dt, e)| format!("dt={dt:.2e} err={e:.5}"))
                .collect::<Vec<_>>()
                .join("  ")
        );
    }
    report::finish(cfg, Manifest::new("convergence-study", failed))
}
