//! Monte Carlo engine for a local-time representation of logistic branching
//! diffusions.
//!
//! The crate simulates two a priori unrelated stochastic processes:
//!
//! ```text
//! mass side:        dZ = [theta Z - gamma Z^2] dt + 2 sqrt(Z) dW,  Z_0 = x
//! exploration side: H  = B + L(0)/2 + (theta/2) s
//!                        - gamma * int_0^s { z(H_r) + L_r(H_r) } dr
//! ```
//!
//! where `L_s(t)` is the local time of `H` at level `t`, and checks — by
//! two-sample statistics on ensembles — that the level profile of `H`'s
//! local time, read off when the local time at 0 first exceeds `x`, has the
//! same law as the mass path `Z^x`. Supporting machinery covers coupled
//! mass fields over the initial mass, exponential reweighting between the
//! two drifts, Brownian-bridge local-time sampling, excursion chopping at a
//! ceiling, and the occupation/Tanaka identities used as internal oracles.

pub mod ensemble;
pub mod error;
pub mod exploration;
pub mod export;
pub mod feller;
pub mod girsanov;
pub mod grid;
pub mod local_time;
pub mod model;
pub mod rng;
pub mod sde;
pub mod stats;

pub use error::{Error, Result};
pub use grid::{LevelGrid, TimeGrid};
pub use model::{EnvironmentPath, ModelParams};
pub use rng::RngStream;
