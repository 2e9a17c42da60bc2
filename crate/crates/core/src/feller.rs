//! Logistic branching diffusion: ensembles of the mass process, the
//! environment-conditioned variant, and the coupled field over initial
//! masses.
//!
//! The base SDE is
//!
//! ```text
//! dZ = [theta Z - gamma Z^2] dt + 2 sqrt(Z) dW,   Z_0 = x,
//! ```
//!
//! stepped by explicit Euler with full truncation; 0 is absorbing. The
//! conditioned variant adds competition from a given environment path `z`:
//! drift `Z (theta - gamma [Z + 2 z(t)])`. The field couples the masses
//! `x_1 < x_2 < ...` by simulating each increment against the previously
//! built path as its environment, which makes the paths pointwise ordered
//! by construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::model::{EnvironmentPath, ModelParams};
use crate::rng::RngStream;
use crate::sde::step_sqrt_diffusion;
use crate::stats::{ks_two_sample, KSReport, SampleSet};

/// One sampled mass trajectory with extinction metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FellerPath {
    /// Initial mass.
    pub x: f64,
    dt: f64,
    values: Vec<f64>,
    extinction_step: Option<usize>,
}

impl FellerPath {
    fn from_values(x: f64, dt: f64, values: Vec<f64>) -> Self {
        let extinction_step = values.iter().position(|v| *v == 0.0);
        FellerPath {
            x,
            dt,
            values,
            extinction_step,
        }
    }

    /// Build a path from explicit samples (used by tests and by callers
    /// that construct deterministic reference paths).
    pub fn from_samples(dt: f64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("path needs at least one sample"));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("path values must be finite and >= 0"));
        }
        let x = values[0];
        Ok(FellerPath::from_values(x, dt, values))
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> f64 {
        self.dt * (self.values.len() - 1) as f64
    }

    pub fn extinct(&self) -> bool {
        self.extinction_step.is_some()
    }

    pub fn extinction_time(&self) -> Option<f64> {
        self.extinction_step.map(|i| i as f64 * self.dt)
    }

    /// Value at time `t`, linearly interpolated; 0 beyond the horizon for
    /// extinct paths.
    pub fn at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.values[0];
        }
        let u = t / self.dt;
        let i = u as usize;
        if i + 1 >= self.values.len() {
            return if self.extinct() { 0.0 } else { *self.values.last().unwrap() };
        }
        let frac = u - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    pub fn as_environment(&self) -> EnvironmentPath {
        EnvironmentPath::from_samples(self.dt, self.values.clone())
            .expect("a simulated path is a valid environment")
    }
}

fn check_mass(x: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::invalid(format!(
            "initial mass must be finite and >= 0, got {x}"
        )));
    }
    Ok(())
}

/// Simulate the conditioned SDE
/// `dZ = Z (theta - gamma [Z + 2 z(t)]) dt + 2 sqrt(Z) dW` on the grid.
/// The null environment recovers the plain logistic diffusion. `x = 0`
/// returns the null path.
pub fn simulate(
    params: &ModelParams,
    x: f64,
    env: &EnvironmentPath,
    grid: &TimeGrid,
    stream: RngStream,
) -> Result<FellerPath> {
    let drift = |t: f64, z: f64| z * (params.theta - params.gamma * (z + 2.0 * env.at(t)));
    simulate_with_drift(&drift, x, grid, stream)
}

/// Simulate `dZ = f(t, Z) dt + 2 sqrt(Z) dW` for an arbitrary drift `f`
/// with `f(t, 0) >= 0`; 0 remains absorbing. Under the same stream and
/// grid, `f(t, z) = z (theta - gamma [z + 2 env(t)])` reproduces
/// [`simulate`] step for step.
pub fn simulate_general(
    f: &dyn Fn(f64, f64) -> f64,
    x: f64,
    grid: &TimeGrid,
    stream: RngStream,
) -> Result<FellerPath> {
    simulate_with_drift(&f, x, grid, stream)
}

fn simulate_with_drift(
    drift: &dyn Fn(f64, f64) -> f64,
    x: f64,
    grid: &TimeGrid,
    stream: RngStream,
) -> Result<FellerPath> {
    check_mass(x)?;
    let dt = grid.dt();
    let mut values = Vec::with_capacity(grid.n_steps() + 1);
    values.push(x);
    let mut z = x;
    let mut increments = stream.gaussian_increments(dt);
    for n in 0..grid.n_steps() {
        if z == 0.0 {
            // Absorbed: the tail of the path is identically zero.
            values.resize(grid.n_steps() + 1, 0.0);
            break;
        }
        let dw = increments.next().unwrap();
        z = step_sqrt_diffusion(z, drift(grid.time_at(n), z), dw, dt);
        values.push(z);
    }
    Ok(FellerPath::from_values(x, dt, values))
}

/// Step until absorption at 0, extending the grid as needed up to
/// `t_max`. Errors with `NotExtinct` when the budget runs out, in which
/// case the caller should extend the horizon.
pub fn simulate_until_extinct(
    params: &ModelParams,
    x: f64,
    dt: f64,
    t_max: f64,
    stream: RngStream,
) -> Result<FellerPath> {
    check_mass(x)?;
    if !(dt > 0.0) || !(t_max > 0.0) {
        return Err(Error::invalid("dt and t_max must be positive"));
    }
    let mut values = vec![x];
    let mut z = x;
    let mut increments = stream.gaussian_increments(dt);
    let max_steps = (t_max / dt).ceil() as usize;
    for _ in 0..max_steps {
        if z == 0.0 {
            return Ok(FellerPath::from_values(x, dt, values));
        }
        let dw = increments.next().unwrap();
        let drift = z * (params.theta - params.gamma * z);
        z = step_sqrt_diffusion(z, drift, dw, dt);
        values.push(z);
    }
    if z == 0.0 {
        return Ok(FellerPath::from_values(x, dt, values));
    }
    Err(Error::NotExtinct { horizon: t_max })
}

/// Trapezoidal area under an extinct path over `[0, extinction time]`.
pub fn total_mass(path: &FellerPath) -> Result<f64> {
    let stop = path
        .extinction_step
        .ok_or(Error::NotExtinct {
            horizon: path.horizon(),
        })?;
    let mut area = 0.0;
    for w in path.values[..=stop].windows(2) {
        area += 0.5 * (w[0] + w[1]) * path.dt;
    }
    Ok(area)
}

/// Coupled field of mass paths over strictly increasing initial masses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FellerField {
    x_grid: Vec<f64>,
    paths: Vec<FellerPath>,
}

impl FellerField {
    pub fn x_grid(&self) -> &[f64] {
        self.x_grid
            .as_slice()
    }

    pub fn paths(&self) -> &[FellerPath] {
        &self.paths
    }

    /// Build a field directly from paths (ordering is NOT enforced here;
    /// used by tests that audit the monotonicity checker).
    pub fn from_paths(x_grid: Vec<f64>, paths: Vec<FellerPath>) -> Result<Self> {
        if x_grid.len() != paths.len() || x_grid.is_empty() {
            return Err(Error::invalid("one path per mass level required"));
        }
        Ok(FellerField { x_grid, paths })
    }
}

/// Simulate the coupled field: the first path solves the plain SDE from
/// `x_1`; each subsequent level adds an independent conditioned path with
/// mass `x_{k+1} - x_k` and the running field as its environment. Uses one
/// stream per level, `stream, stream+1, ...`.
pub fn simulate_field(
    params: &ModelParams,
    x_grid: &[f64],
    grid: &TimeGrid,
    stream: RngStream,
) -> Result<FellerField> {
    if x_grid.is_empty() {
        return Err(Error::invalid("x_grid must be nonempty"));
    }
    if x_grid[0] <= 0.0 {
        return Err(Error::invalid("mass levels must be positive"));
    }
    if x_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("mass levels must be strictly increasing"));
    }
    let mut paths: Vec<FellerPath> = Vec::with_capacity(x_grid.len());
    for (k, &x) in x_grid.iter().enumerate() {
        let (mass, env) = match paths.last() {
            None => (x, EnvironmentPath::null()),
            Some(prev) => (x - x_grid[k - 1], prev.as_environment()),
        };
        let incr = simulate(params, mass, &env, grid, stream.offset(k as u64))?;
        let cumulative = match paths.last() {
            None => incr,
            Some(prev) => {
                let values: Vec<f64> = prev
                    .values
                    .iter()
                    .zip(incr.values.iter())
                    .map(|(a, b)| a + b)
                    .collect();
                FellerPath::from_values(x, grid.dt(), values)
            }
        };
        paths.push(cumulative);
    }
    Ok(FellerField {
        x_grid: x_grid.to_vec(),
        paths,
    })
}

/// Superposition check: the law of `Z^{x+y}_t` against `Z^x_t + V_t`, where
/// `V` is an independent conditioned path with mass `y` and environment
/// `Z^x`. One KS report per probe time. Uses three streams per path pair.
pub fn superposition_check(
    params: &ModelParams,
    x: f64,
    y: f64,
    t_probes: &[f64],
    grid: &TimeGrid,
    n_paths: usize,
    stream: RngStream,
) -> Result<Vec<KSReport>> {
    if x <= 0.0 || y < 0.0 {
        return Err(Error::invalid("need x > 0 and y >= 0"));
    }
    let null = EnvironmentPath::null();
    let mut direct: Vec<FellerPath> = Vec::with_capacity(n_paths);
    let mut composed: Vec<FellerPath> = Vec::with_capacity(n_paths);
    for i in 0..n_paths {
        let s = stream.offset(3 * i as u64);
        direct.push(simulate(params, x + y, &null, grid, s)?);
        let base = simulate(params, x, &null, grid, s.offset(1))?;
        if y == 0.0 {
            composed.push(base);
        } else {
            let v = simulate(params, y, &base.as_environment(), grid, s.offset(2))?;
            let values: Vec<f64> = base
                .values
                .iter()
                .zip(v.values.iter())
                .map(|(a, b)| a + b)
                .collect();
            composed.push(FellerPath::from_values(x + y, grid.dt(), values));
        }
    }
    t_probes
        .iter()
        .map(|&t| {
            let a = SampleSet::new(
                format!("direct x+y={} at t={t}", x + y),
                direct.iter().map(|p| p.at(t)).collect(),
            )?;
            let b = SampleSet::new(
                format!("superposed x={x} y={y} at t={t}"),
                composed.iter().map(|p| p.at(t)).collect(),
            )?;
            ks_two_sample(&a, &b)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble;

    fn grid(dt: f64, horizon: f64) -> TimeGrid {
        TimeGrid::from_horizon(horizon, dt).unwrap()
    }

    #[test]
    fn zero_mass_gives_null_path() {
        let p = simulate(
            &ModelParams::new(1.0, 1.0).unwrap(),
            0.0,
            &EnvironmentPath::null(),
            &grid(0.01, 1.0),
            RngStream::new(1, 0),
        )
        .unwrap();
        assert!(p.values().iter().all(|v| *v == 0.0));
        assert!(p.extinct());
        assert_eq!(p.extinction_time(), Some(0.0));
    }

    #[test]
    fn paths_stay_nonnegative_and_absorbed() {
        let p = simulate(
            &ModelParams::new(1.0, 2.0).unwrap(),
            0.5,
            &EnvironmentPath::null(),
            &grid(0.01, 5.0),
            RngStream::new(3, 7),
        )
        .unwrap();
        assert!(p.values().iter().all(|v| *v >= 0.0));
        if let Some(t) = p.extinction_time() {
            let from = (t / p.dt()).round() as usize;
            assert!(p.values()[from..].iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn driftless_mean_is_conserved() {
        // Martingale oracle: E[Z_1] = x.
        let g = grid(1.0 / 1024.0, 1.0);
        let vals = ensemble::run_ordered(10_000, |i| {
            simulate(
                &ModelParams::critical(),
                1.0,
                &EnvironmentPath::null(),
                &g,
                RngStream::new(11, i),
            )
            .map(|p| *p.values().last().unwrap())
        })
        .unwrap();
        let s = crate::stats::summarize(&vals);
        assert!(
            (s.mean - 1.0).abs() < 3.0 * s.stderr,
            "mean {} +- {}",
            s.mean,
            s.stderr
        );
    }

    #[test]
    fn supercritical_mean_solves_ode() {
        // Mean ODE oracle: dm/dt = theta m, so E[Z_1] = e.
        let g = grid(1.0 / 1024.0, 1.0);
        let vals = ensemble::run_ordered(10_000, |i| {
            simulate(
                &ModelParams::new(1.0, 0.0).unwrap(),
                1.0,
                &EnvironmentPath::null(),
                &g,
                RngStream::new(12, i),
            )
            .map(|p| *p.values().last().unwrap())
        })
        .unwrap();
        let s = crate::stats::summarize(&vals);
        let e = std::f64::consts::E;
        assert!(
            (s.mean - e).abs() < 3.0 * s.stderr + 0.01 * e,
            "mean {} +- {}",
            s.mean,
            s.stderr
        );
    }

    #[test]
    fn general_drift_matches_logistic_pathwise() {
        let params = ModelParams::new(1.3, 0.7).unwrap();
        let g = grid(0.01, 2.0);
        let s = RngStream::new(5, 9);
        let a = simulate(&params, 1.0, &EnvironmentPath::null(), &g, s).unwrap();
        let f = |_t: f64, z: f64| params.theta * z - params.gamma * z * z;
        let b = simulate_general(&f, 1.0, &g, s).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn general_negative_linear_drift_mean() {
        // Mean ODE oracle: dm/dt = -m, so E[Z_1] = 1/e.
        let g = grid(1.0 / 1024.0, 1.0);
        let f = |_t: f64, z: f64| -z;
        let vals = ensemble::run_ordered(10_000, |i| {
            simulate_general(&f, 1.0, &g, RngStream::new(13, i))
                .map(|p| *p.values().last().unwrap())
        })
        .unwrap();
        let s = crate::stats::summarize(&vals);
        let target = (-1.0f64).exp();
        assert!(
            (s.mean - target).abs() < 3.0 * s.stderr + 0.01 * target,
            "mean {} +- {}",
            s.mean,
            s.stderr
        );
    }

    #[test]
    fn total_mass_of_triangle_path() {
        // Z_t = max(1 - t, 0) on [0, 2]: area 1/2, trapezoid-exact.
        let dt = 0.01;
        let values: Vec<f64> = (0..=200).map(|i| (1.0 - i as f64 * dt).max(0.0)).collect();
        let p = FellerPath::from_samples(dt, values).unwrap();
        assert!((total_mass(&p).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn total_mass_of_null_path_is_zero() {
        let p = FellerPath::from_samples(0.1, vec![0.0; 11]).unwrap();
        assert_eq!(total_mass(&p).unwrap(), 0.0);
    }

    #[test]
    fn total_mass_requires_extinction() {
        let p = FellerPath::from_samples(0.1, vec![1.0; 11]).unwrap();
        assert!(matches!(total_mass(&p), Err(Error::NotExtinct { .. })));
    }

    #[test]
    fn field_is_pointwise_ordered() {
        let params = ModelParams::new(1.0, 1.0).unwrap();
        let g = grid(0.005, 2.0);
        let field =
            simulate_field(&params, &[0.5, 1.0, 2.0], &g, RngStream::new(21, 0)).unwrap();
        let report = crate::stats::monotonicity_check(&field);
        assert!(report.pass, "violation at {:?}", report.first_violation);
    }

    #[test]
    fn field_rejects_bad_mass_grids() {
        let params = ModelParams::critical();
        let g = grid(0.01, 1.0);
        let s = RngStream::new(1, 0);
        assert!(simulate_field(&params, &[], &g, s).is_err());
        assert!(simulate_field(&params, &[0.0, 1.0], &g, s).is_err());
        assert!(simulate_field(&params, &[1.0, 1.0], &g, s).is_err());
        assert!(simulate_field(&params, &[2.0, 1.0], &g, s).is_err());
    }

    #[test]
    fn single_level_field_reduces_to_plain_simulation() {
        let params = ModelParams::new(1.0, 1.0).unwrap();
        let g = grid(0.01, 1.0);
        let s = RngStream::new(33, 0);
        let field = simulate_field(&params, &[1.0], &g, s).unwrap();
        let direct = simulate(&params, 1.0, &EnvironmentPath::null(), &g, s).unwrap();
        assert_eq!(field.paths()[0].values(), direct.values());
    }

    #[test]
    fn branching_increments_when_gamma_zero() {
        // gamma = 0: the increment over [x, x+y] is an independent copy
        // started from y. Mean 1 and vanishing correlation with the base.
        let g = grid(1.0 / 512.0, 1.0);
        let n = 10_000;
        let pairs = ensemble::run_ordered(n, |i| {
            let f = simulate_field(
                &ModelParams::critical(),
                &[1.0, 2.0],
                &g,
                RngStream::new(40, 2 * i),
            )?;
            let z1 = *f.paths()[0].values().last().unwrap();
            let z2 = *f.paths()[1].values().last().unwrap();
            Ok((z1, z2 - z1))
        })
        .unwrap();
        let incr: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let base: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let si = crate::stats::summarize(&incr);
        assert!(
            (si.mean - 1.0).abs() < 3.0 * si.stderr,
            "increment mean {}",
            si.mean
        );
        let sb = crate::stats::summarize(&base);
        let cov = base
            .iter()
            .zip(incr.iter())
            .map(|(a, b)| (a - sb.mean) * (b - si.mean))
            .sum::<f64>()
            / (n - 1) as f64;
        let corr = cov / (sb.var * si.var).sqrt();
        assert!(corr.abs() < 3.0 / (n as f64).sqrt(), "corr {corr}");
    }

    #[test]
    fn superposition_degenerate_y_zero() {
        let params = ModelParams::new(1.0, 1.0).unwrap();
        let g = grid(0.01, 1.0);
        let reports = superposition_check(
            &params,
            1.0,
            0.0,
            &[0.5],
            &g,
            400,
            RngStream::new(55, 0),
        )
        .unwrap();
        assert!(reports[0].p_value > 0.01, "p = {}", reports[0].p_value);
    }

    #[test]
    fn superposition_mean_additivity_critical() {
        let g = grid(1.0 / 512.0, 1.0);
        let n = 4000;
        let null = EnvironmentPath::null();
        let direct = ensemble::run_ordered(n, |i| {
            simulate(
                &ModelParams::critical(),
                2.0,
                &null,
                &g,
                RngStream::new(60, i),
            )
            .map(|p| *p.values().last().unwrap())
        })
        .unwrap();
        let s = crate::stats::summarize(&direct);
        assert!((s.mean - 2.0).abs() < 3.0 * s.stderr, "mean {}", s.mean);
    }
}
