//! Model parameters and environment paths shared by both simulators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Growth/competition parameters `(theta, gamma)` of the logistic drift
/// `theta z - gamma z^2`. Both simulators read the same pair: the mass
/// process uses the drift above, the exploration process uses the matching
/// slope drift `theta/2 - gamma (z + ell)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub theta: f64,
    pub gamma: f64,
}

impl ModelParams {
    pub fn new(theta: f64, gamma: f64) -> Result<Self> {
        if !theta.is_finite() || !gamma.is_finite() {
            return Err(Error::invalid("theta and gamma must be finite"));
        }
        if theta < 0.0 || gamma < 0.0 {
            return Err(Error::invalid(format!(
                "theta and gamma must be nonnegative, got ({theta}, {gamma})"
            )));
        }
        Ok(ModelParams { theta, gamma })
    }

    /// Pure branching diffusion, no drift at all.
    pub fn critical() -> Self {
        ModelParams {
            theta: 0.0,
            gamma: 0.0,
        }
    }
}

/// Nonnegative continuous environment sampled on a uniform grid, evaluated
/// by linear interpolation and identically 0 beyond its last sample
/// (compact support). The null environment is the empty table.
///
/// The same object serves two roles: a mass path `t -> z(t)` acting as
/// extra competition pressure on the mass SDE, and a level profile
/// `h -> z(h)` entering the exploration drift at the current height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentPath {
    dt: f64,
    values: Vec<f64>,
}

impl EnvironmentPath {
    /// The environment that is identically zero.
    pub fn null() -> Self {
        EnvironmentPath {
            dt: 1.0,
            values: Vec::new(),
        }
    }

    /// Environment from samples at `0, dt, 2 dt, ...`.
    pub fn from_samples(dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("environment values must be finite and >= 0"));
        }
        Ok(EnvironmentPath { dt, values })
    }

    pub fn from_grid(grid: &TimeGrid, values: Vec<f64>) -> Result<Self> {
        EnvironmentPath::from_samples(grid.dt(), values)
    }

    pub fn is_null(&self) -> bool {
        self.values.is_empty()
    }

    /// Linear interpolation between samples, 0 outside the table.
    pub fn at(&self, t: f64) -> f64 {
        if self.values.is_empty() || t < 0.0 {
            return 0.0;
        }
        let u = t / self.dt;
        let i = u as usize;
        if i + 1 >= self.values.len() {
            // At or beyond the last sample: the support has ended.
            return if i + 1 == self.values.len() && u <= i as f64 {
                self.values[i]
            } else {
                0.0
            };
        }
        let frac = u - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}
