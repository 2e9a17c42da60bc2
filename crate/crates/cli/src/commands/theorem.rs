//! The full pipeline: local-time profiles of the exploration process
//! against the coupled mass field, marginal by marginal, plus the
//! stopping-time/total-mass identity.

use serde::Serialize;

use rayknight::ensemble::run_ordered;
use rayknight::export;
use rayknight::stats::{self, SampleSet};
use rayknight::{exploration, feller, ModelParams, RngStream, TimeGrid};

use crate::config::Config;
use crate::report::{self, Manifest};
use crate::{svg, CliError};

/// KS distance accepted for the stopping-time identity.
const SX_DISTANCE_MAX: f64 = 0.05;
/// Holm-corrected p-value each marginal must exceed.
const P_THRESHOLD: f64 = 0.01;

#[derive(Debug, Serialize)]
struct MarginalEntry {
    x: f64,
    t: f64,
    d_stat: f64,
    p_value: f64,
    holm_p: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct KsReportFile {
    threshold: f64,
    marginals: Vec<MarginalEntry>,
    sx_identity: SxEntry,
}

#[derive(Debug, Serialize)]
struct SxEntry {
    x: f64,
    d_stat: f64,
    p_value: f64,
    max_distance: f64,
    mean_stopping_time: f64,
    mean_total_mass: f64,
    pass: bool,
}

pub fn run(cfg: &Config) -> Result<(), CliError> {
    let n = cfg.n_paths;
    let seed = cfg.master_seed;
    let meta = report::metadata(cfg);

    // Exploration side: one profile family per path, every (x, t) marginal
    // plus the stopping times read from the same runs.
    let explo_cfg = super::exploration_config(cfg, cfg.theta, cfg.gamma)?;
    let xs = cfg.x.clone();
    let ts = cfg.t.clone();
    let profiles = run_ordered(n, |i| {
        let fam = exploration::simulate_profile_family(&explo_cfg, &xs, RngStream::new(seed, i))?;
        let values: Vec<Vec<f64>> = fam
            .iter()
            .map(|snap| ts.iter().map(|&t| snap.profile.value_at(t)).collect())
            .collect();
        let stops: Vec<f64> = fam.iter().map(|s| s.s_x).collect();
        Ok((values, stops))
    })
    .map_err(CliError::from)?;

    // Mass side: coupled field over the same mass levels; the competition
    // rate may deliberately differ (negative control).
    let mass_params = ModelParams::new(cfg.theta, cfg.gamma_mass)?;
    let horizon = ts.iter().cloned().fold(0.0, f64::max);
    let grid = TimeGrid::from_horizon(horizon, cfg.dt)?;
    let masses = run_ordered(n, |i| {
        let field = feller::simulate_field(&mass_params, &xs, &grid, RngStream::new(seed + 1, i * xs.len() as u64))?;
        let values: Vec<Vec<f64>> = field
            .paths()
            .iter()
            .map(|p| ts.iter().map(|&t| p.at(t)).collect())
            .collect();
        Ok(values)
    })
    .map_err(CliError::from)?;

    // Marginal KS tests with the Holm correction over the family.
    let mut raw = Vec::new();
    let mut moment_reports = Vec::new();
    for (a, &x) in xs.iter().enumerate() {
        for (b, &t) in ts.iter().enumerate() {
            let sa = SampleSet::new(
                format!("profile x={x} t={t}"),
                profiles.iter().map(|p| p.0[a][b]).collect(),
            )?;
            let sb = SampleSet::new(
                format!("mass x={x} t={t}"),
                masses.iter().map(|m| m[a][b]).collect(),
            )?;
            let ks = stats::ks_two_sample(&sa, &sb)?;
            moment_reports.push(stats::moment_compare(&sa, &sb)?);

            let qq = stats::qq_points(&sa, &sb, 128);
            let name = report::file_name(&["qq", &format!("x{}", report::tag(x)), &format!("t{}", report::tag(t))]);
            export::write_qq_csv(report::create(cfg, &format!("{name}.csv"))?, &meta, &qq)?;
            if cfg.plots {
                svg::cdf_overlay(
                    report::create(cfg, &format!("cdf_x{}_t{}.svg", report::tag(x), report::tag(t)))?,
                    &format!("profile vs mass, x={x} t={t}"),
                    sa.values(),
                    sb.values(),
                )?;
                svg::qq_plot(
                    report::create(cfg, &format!("{name}.svg"))?,
                    &format!("QQ x={x} t={t}"),
                    &qq,
                )?;
            }
            raw.push((x, t, ks));
        }
    }
    let ps: Vec<f64> = raw.iter().map(|r| r.2.p_value).collect();
    let holm = stats::holm_adjust(&ps);
    let marginals: Vec<MarginalEntry> = raw
        .iter()
        .zip(holm.iter())
        .map(|((x, t, ks), &hp)| MarginalEntry {
            x: *x,
            t: *t,
            d_stat: ks.d_stat,
            p_value: ks.p_value,
            holm_p: hp,
            pass: hp > P_THRESHOLD,
        })
        .collect();

    // Stopping-time identity at the middle mass level: S_x against the
    // total area under independent extinct mass paths.
    let mid = xs.len() / 2;
    let x_mid = xs[mid];
    let sx_samples: Vec<f64> = profiles.iter().map(|p| p.1[mid]).collect();
    let areas = run_ordered(n, |i| {
        let p = feller::simulate_until_extinct(
            &mass_params,
            x_mid,
            cfg.dt,
            cfg.t_max,
            RngStream::new(seed + 2, i),
        )?;
        feller::total_mass(&p)
    })
    .map_err(CliError::from)?;
    let sa = SampleSet::new(format!("S_x x={x_mid}"), sx_samples)?;
    let sb = SampleSet::new(format!("total mass x={x_mid}"), areas)?;
    let sx_ks = stats::ks_two_sample(&sa, &sb)?;
    let sx_entry = SxEntry {
        x: x_mid,
        d_stat: sx_ks.d_stat,
        p_value: sx_ks.p_value,
        max_distance: SX_DISTANCE_MAX,
        mean_stopping_time: sa.summary().mean,
        mean_total_mass: sb.summary().mean,
        pass: sx_ks.d_stat < SX_DISTANCE_MAX,
    };

    let mut failed: Vec<String> = marginals
        .iter()
        .filter(|m| !m.pass)
        .map(|m| format!("marginal x={} t={} (holm_p={:.4})", m.x, m.t, m.holm_p))
        .collect();
    if !sx_entry.pass {
        failed.push(format!(
            "sx-identity x={} (d={:.4})",
            sx_entry.x, sx_entry.d_stat
        ));
    }

    report::write_json(
        cfg,
        "ks_report.json",
        &KsReportFile {
            threshold: P_THRESHOLD,
            marginals,
            sx_identity: sx_entry,
        },
    )?;
    report::write_json(cfg, "moments.json", &moment_reports)?;
    report::finish(cfg, Manifest::new("verify-theorem", failed))
}
