use thiserror::Error;

/// Errors surfaced by the simulation and statistics layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates a precondition (non-positive step,
    /// empty grid, unordered mass levels, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A single reflected step tried to push the path across the whole
    /// interval, i.e. the free move over one `dt` exceeded the ceiling.
    /// The time step is too coarse relative to the ceiling.
    #[error("grid sanity violated: free step {free:.6} outside [-K, 2K] for ceiling K={ceiling:.6}; reduce dt")]
    GridSanity { free: f64, ceiling: f64 },

    /// The local time at zero never exceeded the requested mass level
    /// within the path-time budget.
    #[error("stopping level x={x} not reached by s_max={s_max} (local time at zero stopped at {reached:.6})")]
    StoppingLevelNotReached { x: f64, s_max: f64, reached: f64 },

    /// A mass path did not hit zero before the simulation horizon, so its
    /// total area is not yet defined. Extend the horizon.
    #[error("path not extinct by horizon {horizon}; extend the time grid")]
    NotExtinct { horizon: f64 },

    /// A statistical comparison was asked for with too few samples.
    #[error("insufficient samples: need at least {min}, got {got}")]
    InsufficientSamples { min: usize, got: usize },

    /// Data required by the requested computation was not recorded during
    /// the simulation (e.g. per-step increments for reweighting).
    #[error("missing record: {0}")]
    MissingRecord(&'static str),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
