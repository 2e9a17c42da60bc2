//! Experiment configuration: a TOML file with nested sections, every key
//! overridable by a command-line flag of the same name, resolved against
//! per-command defaults and validated before any simulation starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Default master seed for reproducible runs.
const DEFAULT_SEED: u64 = 20260809;

/// Raw file/flag layer: everything optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub model: RawModel,
    #[serde(default)]
    pub experiment: RawExperiment,
    #[serde(default)]
    pub grids: RawGrids,
    #[serde(default)]
    pub output: RawOutput,
    #[serde(default)]
    pub convergence: RawConvergence,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModel {
    pub theta: Option<f64>,
    pub gamma: Option<f64>,
    /// Competition rate used by the mass side only; set differently from
    /// `gamma` to run a deliberate negative control.
    pub gamma_mass: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawExperiment {
    pub x: Option<Vec<f64>>,
    pub t: Option<Vec<f64>>,
    pub n_paths: Option<usize>,
    pub master_seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGrids {
    pub dt: Option<f64>,
    /// Kernel width over sqrt(dt).
    pub epsilon_factor: Option<f64>,
    pub s_max: Option<f64>,
    pub t_max: Option<f64>,
    /// Upper reflection level; omitted = unbounded exploration.
    pub ceiling: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    pub dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub plots: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConvergence {
    /// `[dt, dy, epsilon]` triples for the kernel-consistency study.
    pub occupation_ladder: Option<Vec<[f64; 3]>>,
    /// `[dt, dy, epsilon]` triples for the quadrature study (fixed target).
    pub tanaka_ladder: Option<Vec<[f64; 3]>>,
    /// dt rungs for the profile-mean bias column.
    pub profile_rungs: Option<Vec<f64>>,
    pub n_paths: Option<usize>,
}

impl RawConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))
    }
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, Serialize)]
pub struct Config {
    pub theta: f64,
    pub gamma: f64,
    pub gamma_mass: f64,
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub n_paths: usize,
    pub master_seed: u64,
    pub dt: f64,
    pub epsilon_factor: f64,
    pub s_max: f64,
    pub t_max: f64,
    pub ceiling: Option<f64>,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub plots: bool,
    pub convergence: ConvergenceConfig,
    /// Which grid keys were given explicitly (file or flag); the lemma
    /// runner falls back to per-check presets for the rest.
    #[serde(skip)]
    pub provided: Provided,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Provided {
    pub dt: bool,
    pub s_max: bool,
    pub n_paths: bool,
    pub ceiling: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceConfig {
    pub occupation_ladder: Vec<[f64; 3]>,
    pub tanaka_ladder: Vec<[f64; 3]>,
    pub profile_rungs: Vec<f64>,
    pub n_paths: usize,
}

fn default_occupation_ladder() -> Vec<[f64; 3]> {
    // Kernel coupled to the step: eps = 4 sqrt(dt), dy = eps / 4.
    [6, 8, 10]
        .iter()
        .map(|p| {
            let dt = 2f64.powi(-p);
            [dt, dt.sqrt(), 4.0 * dt.sqrt()]
        })
        .collect()
}

fn default_tanaka_ladder() -> Vec<[f64; 3]> {
    // Fixed target functional: the kernel stays put while dt refines.
    [8, 10, 12]
        .iter()
        .map(|p| [2f64.powi(-p), 0.03125, 0.125])
        .collect()
}

impl Config {
    /// Merge file values and flag overrides over the defaults.
    pub fn resolve(raw: &RawConfig, overrides: &crate::Overrides) -> Result<Self, CliError> {
        let out_dir = overrides
            .out_dir
            .clone()
            .or_else(|| std::env::var_os("RAYKNIGHT_OUT_DIR").map(PathBuf::from))
            .or_else(|| raw.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        let workers = overrides
            .workers
            .or_else(|| {
                std::env::var("RAYKNIGHT_WORKERS")
                    .ok()
                    .and_then(|v| v.parse().ok())
            })
            .or(raw.output.workers)
            .unwrap_or(0);
        let cfg = Config {
            theta: overrides.theta.or(raw.model.theta).unwrap_or(1.0),
            gamma: overrides.gamma.or(raw.model.gamma).unwrap_or(1.0),
            gamma_mass: overrides
                .gamma_mass
                .or(raw.model.gamma_mass)
                .or(overrides.gamma)
                .or(raw.model.gamma)
                .unwrap_or(1.0),
            x: overrides
                .x
                .clone()
                .or_else(|| raw.experiment.x.clone())
                .unwrap_or_else(|| vec![0.5, 1.0, 2.0]),
            t: overrides
                .t
                .clone()
                .or_else(|| raw.experiment.t.clone())
                .unwrap_or_else(|| vec![0.25, 0.5, 1.0]),
            n_paths: overrides
                .n_paths
                .or(raw.experiment.n_paths)
                .unwrap_or(10_000),
            master_seed: overrides
                .master_seed
                .or(raw.experiment.master_seed)
                .unwrap_or(DEFAULT_SEED),
            dt: overrides
                .dt
                .or(raw.grids.dt)
                .unwrap_or(2f64.powi(-14)),
            epsilon_factor: overrides
                .epsilon_factor
                .or(raw.grids.epsilon_factor)
                .unwrap_or(4.0),
            s_max: overrides.s_max.or(raw.grids.s_max).unwrap_or(400.0),
            t_max: overrides.t_max.or(raw.grids.t_max).unwrap_or(500.0),
            ceiling: overrides.ceiling.or(raw.grids.ceiling),
            out_dir,
            workers,
            plots: overrides.plots || raw.output.plots.unwrap_or(false),
            convergence: ConvergenceConfig {
                occupation_ladder: raw
                    .convergence
                    .occupation_ladder
                    .clone()
                    .unwrap_or_else(default_occupation_ladder),
                tanaka_ladder: raw
                    .convergence
                    .tanaka_ladder
                    .clone()
                    .unwrap_or_else(default_tanaka_ladder),
                profile_rungs: raw
                    .convergence
                    .profile_rungs
                    .clone()
                    .unwrap_or_else(|| vec![2f64.powi(-6), 2f64.powi(-8), 2f64.powi(-10)]),
                n_paths: raw.convergence.n_paths.unwrap_or(400),
            },
            provided: Provided {
                dt: overrides.dt.is_some() || raw.grids.dt.is_some(),
                s_max: overrides.s_max.is_some() || raw.grids.s_max.is_some(),
                n_paths: overrides.n_paths.is_some() || raw.experiment.n_paths.is_some(),
                ceiling: overrides.ceiling.is_some() || raw.grids.ceiling.is_some(),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::usage(msg));
        if !(self.theta >= 0.0) || !(self.gamma >= 0.0) || !(self.gamma_mass >= 0.0) {
            return bad("theta and gamma must be nonnegative".into());
        }
        if self.x.is_empty() || self.x[0] <= 0.0 || self.x.windows(2).any(|w| w[1] <= w[0]) {
            return bad("x must be strictly increasing positive mass levels".into());
        }
        if self.t.is_empty() || self.t.iter().any(|t| *t <= 0.0) {
            return bad("t must be positive probe times".into());
        }
        if self.n_paths < 10 {
            return bad(format!(
                "insufficient samples: n_paths = {} is below the minimum of 10",
                self.n_paths
            ));
        }
        if !(self.dt > 0.0 && self.dt < 0.5) {
            return bad(format!("dt must be in (0, 0.5), got {}", self.dt));
        }
        if !(self.epsilon_factor >= 1.0) {
            return bad("epsilon_factor must be at least 1".into());
        }
        if !(self.s_max > 0.0) || !(self.t_max > 0.0) {
            return bad("s_max and t_max must be positive".into());
        }
        if let Some(k) = self.ceiling {
            if !(k > 0.0) {
                return bad("ceiling must be positive".into());
            }
        }
        Ok(())
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon_factor * self.dt.sqrt()
    }

    /// Hex digest of the resolved configuration (seed included), so any
    /// two byte-identical outputs really came from the same experiment.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
