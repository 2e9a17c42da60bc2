pub mod convergence;
pub mod lemma;
pub mod theorem;

use rayknight::exploration::ExplorationConfig;
use rayknight::ModelParams;

use crate::config::Config;
use crate::CliError;

/// Exploration setup matching the resolved experiment configuration.
pub fn exploration_config(cfg: &Config, theta: f64, gamma: f64) -> Result<ExplorationConfig, CliError> {
    let params = ModelParams::new(theta, gamma)?;
    let mut out = ExplorationConfig::new(params, cfg.ceiling, cfg.dt)?.with_s_max(cfg.s_max);
    out.epsilon = cfg.epsilon();
    Ok(out)
}

/// Ordinary least squares slope of `ln(err)` against `ln(dt)`.
pub fn fitted_order(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|(dt, e)| (dt.ln(), e.ln()))
        .collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}
