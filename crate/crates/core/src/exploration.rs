//! The exploration process: reflected Brownian motion whose drift depends
//! on its own local time at the current level.
//!
//! ```text
//! H_s = B_s + L_s(0)/2 + (theta/2) s
//!       - gamma * int_0^s { z(H_r) + L_r(H_r) } dr,        H in [0, K],
//! ```
//!
//! stepped by explicit Euler with the drift frozen over each step, Skorokhod
//! clamping at the boundaries, and the local-time field updated on-line.
//! The local time at 0 is read off exactly from the accumulated lower
//! pushes; the stopping level `S_x` (first time that local time exceeds
//! `x`) is refined by linear interpolation inside the crossing step, and
//! the level profile `t -> L_{S_x}(t)` is snapshotted there.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::LevelGrid;
use crate::local_time::LocalTimeField;
use crate::model::{EnvironmentPath, ModelParams};
use crate::rng::RngStream;
use crate::sde::step_reflected;

/// Kernel width over sqrt(dt): `epsilon = 4 sqrt(dt)` balances the bias
/// and variance of the occupation-density estimate.
pub const DEFAULT_EPSILON_FACTOR: f64 = 4.0;

/// Default path-time budget for stopping-time searches.
pub const DEFAULT_S_MAX: f64 = 200.0;

pub fn default_epsilon(dt: f64) -> f64 {
    DEFAULT_EPSILON_FACTOR * dt.sqrt()
}

/// Default level spacing: a quarter of the kernel width.
pub fn default_spacing(dt: f64) -> f64 {
    0.25 * default_epsilon(dt)
}

/// Static description of one exploration run.
#[derive(Debug, Clone)]
pub struct ExplorationConfig {
    pub params: ModelParams,
    /// Environment entering the drift at the current level.
    pub env: EnvironmentPath,
    /// Upper reflection level; `None` runs unbounded with a growing grid.
    pub ceiling: Option<f64>,
    pub dt: f64,
    pub epsilon: f64,
    pub levels: LevelGrid,
    /// Path-time budget for stopping-time searches.
    pub s_max: f64,
    /// Keep per-step `(level, local time, dB)` records for reweighting.
    pub record_steps: bool,
}

impl ExplorationConfig {
    /// Derive grids from `dt`: `epsilon = 4 sqrt(dt)`, `dy = sqrt(dt)`,
    /// the level grid tiling `[0, K]` (or an initial window that grows).
    pub fn new(params: ModelParams, ceiling: Option<f64>, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        let dy = default_spacing(dt);
        let levels = match ceiling {
            Some(k) => LevelGrid::for_ceiling(k, dy)?,
            None => LevelGrid::new(dy, ((4.0 / dy).ceil() as usize).max(8))?,
        };
        Ok(ExplorationConfig {
            params,
            env: EnvironmentPath::null(),
            ceiling,
            dt,
            epsilon: default_epsilon(dt),
            levels,
            s_max: DEFAULT_S_MAX,
            record_steps: false,
        })
    }

    pub fn with_env(mut self, env: EnvironmentPath) -> Self {
        self.env = env;
        self
    }

    pub fn with_s_max(mut self, s_max: f64) -> Self {
        self.s_max = s_max;
        self
    }

    pub fn with_records(mut self) -> Self {
        self.record_steps = true;
        self
    }
}

/// Per-step record kept for exponential reweighting: the level before the
/// step, the field value used in the drift, and the raw Brownian increment.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StepRecord {
    pub level: f64,
    pub local_at_level: f64,
    pub db: f64,
}

/// Field snapshot at one stopping level.
#[derive(Debug, Clone)]
pub struct ProfileSnapshot {
    pub x: f64,
    pub s_x: f64,
    pub profile: LocalTimeField,
}

/// A simulated exploration path with its local-time field and, for stopped
/// runs, the stopping data.
#[derive(Debug, Clone)]
pub struct ExplorationResult {
    dt: f64,
    ceiling: Option<f64>,
    path: Vec<f64>,
    local_time: LocalTimeField,
    stop: Option<ProfileSnapshot>,
    records: Option<Vec<StepRecord>>,
}

impl ExplorationResult {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn ceiling(&self) -> Option<f64> {
        self.ceiling
    }

    /// Positions at grid times `0, dt, ..., elapsed`.
    pub fn path(&self) -> &[f64] {
        &self.path
    }

    pub fn elapsed(&self) -> f64 {
        (self.path.len() - 1) as f64 * self.dt
    }

    /// Field state at the end of the run (one full step past `S_x` for
    /// stopped runs; the snapshot in [`Self::profile`] is exact at `S_x`).
    pub fn local_time(&self) -> &LocalTimeField {
        &self.local_time
    }

    pub fn s_x(&self) -> Option<f64> {
        self.stop.as_ref().map(|s| s.s_x)
    }

    /// Level profile `t -> L_{S_x}(t)` for stopped runs.
    pub fn profile(&self) -> Option<&LocalTimeField> {
        self.stop.as_ref().map(|s| &s.profile)
    }

    pub fn records(&self) -> Option<&[StepRecord]> {
        self.records.as_deref()
    }

    pub fn max_level(&self) -> f64 {
        self.path.iter().cloned().fold(0.0, f64::max)
    }

    /// Occupation time `A(s, t)`: grid-time spent at or below level `t` up
    /// to path-time `s` (left-endpoint Riemann sum).
    pub fn occupation_time(&self, t: f64, s: f64) -> Result<f64> {
        if s < 0.0 || s > self.elapsed() + 1e-12 {
            return Err(Error::invalid(format!(
                "s={s} outside the simulated range [0, {}]",
                self.elapsed()
            )));
        }
        let full = ((s / self.dt) as usize).min(self.path.len() - 1);
        let mut total = 0.0;
        for &h in &self.path[..full] {
            if h <= t {
                total += self.dt;
            }
        }
        let partial = s - full as f64 * self.dt;
        if partial > 0.0 && full < self.path.len() && self.path[full] <= t {
            total += partial;
        }
        Ok(total)
    }

    /// Occupation identity error at level `t` for a stopped run:
    /// `|A(S_x, t) - int_0^t L_{S_x}(u) du|`.
    pub fn occupation_identity_error(&self, t: f64) -> Result<f64> {
        let stop = self
            .stop
            .as_ref()
            .ok_or(Error::MissingRecord("stopping data"))?;
        let occ = self.occupation_time(t, stop.s_x)?;
        Ok((occ - stop.profile.integral_up_to(t)).abs())
    }

    /// Tanaka residual `|L_{S_x}(t) - 2 int_0^{S_x} 1_{H <= t} dH|` with the
    /// stochastic integral discretized against the path increments
    /// (reflection pushes included, since positions are post-clamp) and the
    /// indicator mollified to the profile estimator's resolution.
    pub fn tanaka_residual(&self, t: f64) -> Result<f64> {
        let stop = self
            .stop
            .as_ref()
            .ok_or(Error::MissingRecord("stopping data"))?;
        let integral =
            smoothed_tanaka_integral(&self.path, t, stop.profile.epsilon(), stop.profile.dy(), self.dt);
        Ok((stop.profile.value_at(t) - integral).abs())
    }

    /// The martingale part `N_t = 2 int_0^{S_x} 1_{H <= t} dB`, available
    /// when step records were kept.
    pub fn brownian_integral(&self, t: f64) -> Result<f64> {
        let records = self
            .records
            .as_ref()
            .ok_or(Error::MissingRecord("per-step increments"))?;
        Ok(2.0
            * records
                .iter()
                .filter(|r| r.level <= t)
                .map(|r| r.db)
                .sum::<f64>())
    }
}

/// Discrete version of `2 int 1_{H <= t} dH` over a full path (the
/// indicator reads the left endpoint of each step).
pub fn tanaka_integral(path: &[f64], t: f64) -> f64 {
    2.0 * path
        .windows(2)
        .filter(|w| w[0] <= t)
        .map(|w| w[1] - w[0])
        .sum::<f64>()
}

/// Same integral with the indicator mollified to the exact resolution of
/// the field estimator at level `t`: the integrand is the adjoint of the
/// estimator pipeline (box kernel, cell binning, center interpolation), so
/// the sum is the Tanaka image of precisely the functional that
/// `LocalTimeField::value_at(t)` computes. The quadrature carries the Ito
/// correction `w'(H) ((dH)^2 - dt) / 2`, which removes the leading
/// discretization fluctuation. Valid for `t` away from the boundaries (no
/// fold terms).
pub fn smoothed_tanaka_integral(path: &[f64], t: f64, epsilon: f64, dy: f64, dt: f64) -> f64 {
    // value_at(t) interpolates the averages of cells i and i+1.
    let u = t / dy - 0.5;
    let i = u.floor().max(0.0);
    let frac = u - i;
    let cell_lo = i * dy;

    // Tail weight of one cell's contribution: the mass fraction of the
    // box kernel at level `h` that the estimator routes into the cell
    // `[a, a+dy)`, integrated over levels >= h.
    let tail = |a: f64, h: f64| -> f64 {
        let p = h - 0.5 * epsilon;
        let q = h + 0.5 * epsilon;
        let b = a + dy;
        let lo = a.max(p);
        let mid = b.min(q);
        let mut integral = 0.0;
        if mid > lo {
            integral += 0.5 * ((mid - p).powi(2) - (lo - p).powi(2));
        }
        if b > q {
            integral += epsilon * (b - a.max(q));
        }
        integral / (dy * epsilon)
    };

    // Density counterpart of the tail weight (its negative h-derivative),
    // for the Ito correction of the quadrature.
    let density = |a: f64, h: f64| -> f64 {
        let overlap = (a + dy).min(h + 0.5 * epsilon) - a.max(h - 0.5 * epsilon);
        overlap.max(0.0) / (dy * epsilon)
    };

    2.0 * path
        .windows(2)
        .map(|w| {
            let weight = (1.0 - frac) * tail(cell_lo, w[0]) + frac * tail(cell_lo + dy, w[0]);
            let slope = -((1.0 - frac) * density(cell_lo, w[0])
                + frac * density(cell_lo + dy, w[0]));
            let dh = w[1] - w[0];
            weight * dh + 0.5 * slope * (dh * dh - dt)
        })
        .sum::<f64>()
}

enum RunMode<'a> {
    /// Stop when the local time at 0 crosses each level in turn.
    UntilCrossings(&'a [f64]),
    /// Run a fixed number of steps.
    ToHorizon(f64),
}

struct EngineOutput {
    path: Vec<f64>,
    field: LocalTimeField,
    snapshots: Vec<ProfileSnapshot>,
    records: Option<Vec<StepRecord>>,
}

fn run_engine(
    cfg: &ExplorationConfig,
    drift: &dyn Fn(f64, f64) -> f64,
    mode: RunMode,
    increments: &mut dyn Iterator<Item = f64>,
) -> Result<EngineOutput> {
    let (x_levels, n_max): (&[f64], usize) = match mode {
        RunMode::UntilCrossings(xs) => {
            if xs.is_empty() {
                return Err(Error::invalid("need at least one stopping level"));
            }
            if xs[0] <= 0.0 || xs.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::invalid(
                    "stopping levels must be positive and strictly increasing",
                ));
            }
            (xs, (cfg.s_max / cfg.dt).ceil() as usize)
        }
        RunMode::ToHorizon(s) => {
            if !(s > 0.0) {
                return Err(Error::invalid("horizon must be positive"));
            }
            (&[], (s / cfg.dt).ceil() as usize)
        }
    };

    let mut field = LocalTimeField::new(&cfg.levels, cfg.epsilon, cfg.ceiling)?;
    let mut path = Vec::with_capacity(n_max.min(1 << 22) + 1);
    let mut records = cfg.record_steps.then(Vec::new);
    let mut snapshots: Vec<ProfileSnapshot> = Vec::new();
    let mut h = 0.0f64;
    let mut next_x = 0usize;
    path.push(h);

    for n in 0..n_max {
        let lhat = field.value_at(h);
        let mu = drift(h, lhat);
        let db = increments.next().unwrap();
        let step = step_reflected(h, mu, db, cfg.dt, cfg.ceiling)?;
        if let Some(rec) = records.as_mut() {
            rec.push(StepRecord {
                level: h,
                local_at_level: lhat,
                db,
            });
        }

        // Crossings of the stopping levels happen inside this step's push;
        // snapshot the field with the partial deposit before committing the
        // full step.
        let delta_b0 = 2.0 * step.push_lower;
        while next_x < x_levels.len() && field.boundary_zero() + delta_b0 > x_levels[next_x] {
            let x = x_levels[next_x];
            let frac = (x - field.boundary_zero()) / delta_b0;
            let mut snap = field.clone();
            snap.deposit(h, frac * cfg.dt);
            snap.set_boundary_zero(x);
            snapshots.push(ProfileSnapshot {
                x,
                s_x: (n as f64 + frac) * cfg.dt,
                profile: snap,
            });
            next_x += 1;
        }

        field.deposit(h, cfg.dt);
        field.add_pushes(step.push_lower, step.push_upper);
        h = step.position;
        path.push(h);

        if !x_levels.is_empty() && next_x == x_levels.len() {
            break;
        }
    }

    if next_x < x_levels.len() {
        return Err(Error::StoppingLevelNotReached {
            x: x_levels[next_x],
            s_max: cfg.s_max,
            reached: field.boundary_zero(),
        });
    }
    Ok(EngineOutput {
        path,
        field,
        snapshots,
        records,
    })
}

fn logistic_drift<'a>(cfg: &'a ExplorationConfig) -> impl Fn(f64, f64) -> f64 + 'a {
    let theta = cfg.params.theta;
    let gamma = cfg.params.gamma;
    move |h, lhat| 0.5 * theta - gamma * (cfg.env.at(h) + lhat)
}

/// Simulate until the local time at 0 first exceeds `x`; the result carries
/// the profile snapshot taken at `S_x`.
pub fn simulate(cfg: &ExplorationConfig, x: f64, stream: RngStream) -> Result<ExplorationResult> {
    let drift = logistic_drift(cfg);
    let mut incr = stream.gaussian_increments(cfg.dt);
    let out = run_engine(cfg, &drift, RunMode::UntilCrossings(&[x]), &mut incr)?;
    let mut snapshots = out.snapshots;
    Ok(ExplorationResult {
        dt: cfg.dt,
        ceiling: cfg.ceiling,
        path: out.path,
        local_time: out.field,
        stop: Some(snapshots.remove(0)),
        records: out.records,
    })
}

/// Simulate a fixed path-time horizon with no stopping.
pub fn simulate_to_horizon(
    cfg: &ExplorationConfig,
    horizon: f64,
    stream: RngStream,
) -> Result<ExplorationResult> {
    let drift = logistic_drift(cfg);
    let mut incr = stream.gaussian_increments(cfg.dt);
    let out = run_engine(cfg, &drift, RunMode::ToHorizon(horizon), &mut incr)?;
    Ok(ExplorationResult {
        dt: cfg.dt,
        ceiling: cfg.ceiling,
        path: out.path,
        local_time: out.field,
        stop: None,
        records: out.records,
    })
}

/// One run, profiles at several stopping levels: the field is snapshotted
/// each time the local time at 0 crosses the next level, so a whole family
/// `x -> L_{S_x}(.)` comes from a single path.
pub fn simulate_profile_family(
    cfg: &ExplorationConfig,
    x_levels: &[f64],
    stream: RngStream,
) -> Result<Vec<ProfileSnapshot>> {
    let drift = logistic_drift(cfg);
    let mut incr = stream.gaussian_increments(cfg.dt);
    let out = run_engine(cfg, &drift, RunMode::UntilCrossings(x_levels), &mut incr)?;
    Ok(out.snapshots)
}

/// General-drift hook: `H = B + L(0)/2 + int g(H_r, L_r(H_r)) dr` for an
/// arbitrary slope function `g(level, local time)`. The logistic case is
/// `g(h, ell) = theta/2 - gamma (z(h) + ell)`.
pub fn simulate_general(
    cfg: &ExplorationConfig,
    g: &dyn Fn(f64, f64) -> f64,
    x: f64,
    stream: RngStream,
) -> Result<ExplorationResult> {
    let mut incr = stream.gaussian_increments(cfg.dt);
    let out = run_engine(cfg, g, RunMode::UntilCrossings(&[x]), &mut incr)?;
    let mut snapshots = out.snapshots;
    Ok(ExplorationResult {
        dt: cfg.dt,
        ceiling: cfg.ceiling,
        path: out.path,
        local_time: out.field,
        stop: Some(snapshots.remove(0)),
        records: out.records,
    })
}

/// The comparison process: Brownian motion with constant drift `theta/2`
/// reflected in `[0, K]` (no local-time feedback). With `x` given, stops at
/// `S_x`; otherwise runs to `s_max`.
pub fn simulate_drifted_reflected(
    theta: f64,
    ceiling: f64,
    dt: f64,
    s_max: f64,
    x: Option<f64>,
    stream: RngStream,
) -> Result<ExplorationResult> {
    let params = ModelParams::new(theta, 0.0)?;
    let cfg = ExplorationConfig::new(params, Some(ceiling), dt)?.with_s_max(s_max);
    match x {
        Some(x) => simulate(&cfg, x, stream),
        None => simulate_to_horizon(&cfg, s_max, stream),
    }
}

/// Drive the full local-time-drift process and the constant-drift
/// comparison process with the *same* Brownian increments, both stopped at
/// `S_x` (or at `s_max` when `x` is `None`). Used for the exact pathwise
/// comparison checks.
pub fn simulate_comparison_pair(
    cfg: &ExplorationConfig,
    x: Option<f64>,
    stream: RngStream,
) -> Result<(ExplorationResult, ExplorationResult)> {
    if cfg.ceiling.is_none() {
        return Err(Error::invalid("comparison pair requires a ceiling"));
    }
    let n_max = (cfg.s_max / cfg.dt).ceil() as usize;
    let noise: Vec<f64> = stream.gaussian_increments(cfg.dt).take(n_max).collect();
    let stop_levels: Vec<f64> = x.into_iter().collect();

    let run = |theta: f64, gamma: f64| -> Result<ExplorationResult> {
        let params = ModelParams::new(theta, gamma)?;
        let sub = ExplorationConfig {
            params,
            env: if gamma > 0.0 {
                cfg.env.clone()
            } else {
                EnvironmentPath::null()
            },
            ..cfg.clone()
        };
        let drift = logistic_drift(&sub);
        let mut incr = noise.iter().copied();
        let mode = if stop_levels.is_empty() {
            RunMode::ToHorizon(cfg.s_max)
        } else {
            RunMode::UntilCrossings(&stop_levels)
        };
        let out = run_engine(&sub, &drift, mode, &mut incr)?;
        let mut snapshots = out.snapshots;
        Ok(ExplorationResult {
            dt: cfg.dt,
            ceiling: cfg.ceiling,
            path: out.path,
            local_time: out.field,
            stop: (!snapshots.is_empty()).then(|| snapshots.remove(0)),
            records: out.records,
        })
    };

    let drifted = run(cfg.params.theta, cfg.params.gamma)?;
    let comparison = run(cfg.params.theta, 0.0)?;
    Ok((drifted, comparison))
}

/// Path surgery: excise the grid steps spent strictly above `K` and
/// concatenate the remainder. Field cells below `K` are copied bit-exactly;
/// the result behaves like a run reflected below `K` (the exact ceiling
/// local time is not reconstructed).
pub fn chop_above(result: &ExplorationResult, k: f64) -> Result<ExplorationResult> {
    if result.ceiling.is_some() {
        return Err(Error::invalid("input must be an unceiled run"));
    }
    if !(k > 0.0) {
        return Err(Error::invalid("ceiling must be positive"));
    }
    let dy = result.local_time.dy();
    let cells = (k / dy).round();
    if (cells * dy - k).abs() > 1e-9 * k {
        return Err(Error::invalid(format!(
            "ceiling {k} must align with the level spacing {dy}"
        )));
    }
    if result.max_level() <= k {
        return Ok(result.clone());
    }
    let n_cells = cells as usize;
    let levels = LevelGrid::new(dy, n_cells)?;

    let path: Vec<f64> = result.path.iter().copied().filter(|h| *h <= k).collect();
    let removed_steps = result.path.len() - path.len();

    let restrict = |field: &LocalTimeField, boundary_zero: f64| -> Result<LocalTimeField> {
        let mut out = LocalTimeField::new(&levels, field.epsilon(), Some(k))?;
        out.copy_cells_from(field, n_cells);
        out.set_boundary_zero(boundary_zero);
        Ok(out)
    };

    let local_time = restrict(&result.local_time, result.local_time.boundary_zero())?;
    let stop = match &result.stop {
        None => None,
        Some(snap) => {
            let profile = restrict(&snap.profile, snap.profile.boundary_zero())?;
            Some(ProfileSnapshot {
                x: snap.x,
                s_x: snap.s_x - removed_steps as f64 * result.dt,
                profile,
            })
        }
    };
    Ok(ExplorationResult {
        dt: result.dt,
        ceiling: Some(k),
        path,
        local_time,
        stop,
        records: None,
    })
}

/// Ensemble of stopping times `S_x`, one stream per path. Needs either
/// competition (`gamma > 0`) or a ceiling for `S_x` to be integrable.
pub fn sample_stopping_times(
    cfg: &ExplorationConfig,
    x: f64,
    n_paths: usize,
    stream: RngStream,
) -> Result<Vec<f64>> {
    if cfg.params.gamma <= 0.0 && cfg.ceiling.is_none() {
        return Err(Error::invalid(
            "stopping-time sampling needs gamma > 0 or a finite ceiling",
        ));
    }
    crate::ensemble::run_ordered(n_paths, |i| {
        simulate(cfg, x, stream.offset(i)).map(|r| r.s_x().unwrap())
    })
}
