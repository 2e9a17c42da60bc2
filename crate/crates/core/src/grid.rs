//! Uniform discretization grids for path time and level space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform time grid starting at 0: points `0, dt, 2 dt, ..., n_steps * dt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        if n_steps == 0 {
            return Err(Error::invalid("n_steps must be at least 1"));
        }
        Ok(TimeGrid { dt, n_steps })
    }

    /// Grid covering `[0, horizon]` with steps of (at most) `dt`.
    pub fn from_horizon(horizon: f64, dt: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::invalid(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        TimeGrid::new(dt, (horizon / dt).ceil() as usize)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    pub fn time_at(&self, step: usize) -> f64 {
        self.dt * step as f64
    }

    /// Index of the last grid point at or before `t`, clamped to the grid.
    pub fn index_at(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        ((t / self.dt) as usize).min(self.n_steps)
    }
}

/// Uniform level grid: cell `i` covers `[i dy, (i+1) dy)`.
///
/// Level sweeps either cover a finite window `[0, K]` (ceiling runs) or act
/// as the initial allocation of a grid that grows with the path maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelGrid {
    dy: f64,
    n_levels: usize,
}

impl LevelGrid {
    pub fn new(dy: f64, n_levels: usize) -> Result<Self> {
        if !(dy > 0.0) || !dy.is_finite() {
            return Err(Error::invalid(format!("dy must be positive, got {dy}")));
        }
        if n_levels == 0 {
            return Err(Error::invalid("n_levels must be at least 1"));
        }
        Ok(LevelGrid { dy, n_levels })
    }

    /// Grid whose cells tile `[0, ceiling]` exactly, with spacing as close
    /// to `dy_target` as possible.
    pub fn for_ceiling(ceiling: f64, dy_target: f64) -> Result<Self> {
        if !(ceiling > 0.0) {
            return Err(Error::invalid(format!(
                "ceiling must be positive, got {ceiling}"
            )));
        }
        if !(dy_target > 0.0) {
            return Err(Error::invalid(format!(
                "dy must be positive, got {dy_target}"
            )));
        }
        let n = (ceiling / dy_target).round().max(1.0) as usize;
        LevelGrid::new(ceiling / n as f64, n)
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn top(&self) -> f64 {
        self.dy * self.n_levels as f64
    }
}
