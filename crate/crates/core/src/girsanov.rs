//! Exponential martingale reweighting between the plain reflected Brownian
//! motion and the local-time-drifted exploration process, plus
//! Brownian-bridge local-time sampling.
//!
//! With `a_r = theta/2 - gamma [z(H_r) + L_r(H_r)]` evaluated along an
//! *undrifted* reflected path, the weight
//!
//! ```text
//! G_s = exp( M_s - <M>_s / 2 ),   M_s = int_0^s a_r dB_r,
//! ```
//!
//! turns reflected-Brownian expectations into drifted ones. The discrete
//! product over Euler steps is itself exactly a positive martingale, so
//! `E[G_s] = 1` holds at every step size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exploration::ExplorationResult;
use crate::model::{EnvironmentPath, ModelParams};
use crate::rng::RngStream;

/// `exp` overflows near 709; weights are capped there and flagged.
const LOG_WEIGHT_CAP: f64 = 700.0;

/// Accumulated reweighting state at the evaluation time.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GirsanovWeight {
    /// Stochastic integral `M_s`.
    pub martingale: f64,
    /// Quadratic variation `<M>_s`.
    pub bracket: f64,
    /// `M_s - <M>_s / 2` before capping.
    pub log_weight: f64,
    /// `exp(log_weight)`, capped at `exp(700)`.
    pub weight: f64,
    /// Set when the cap was applied; the estimate is then unreliable.
    pub overflowed: bool,
}

fn accumulate(
    result: &ExplorationResult,
    params: &ModelParams,
    env: &EnvironmentPath,
    n_steps: usize,
) -> Result<GirsanovWeight> {
    let records = result
        .records()
        .ok_or(Error::MissingRecord("per-step increments; simulate with records"))?;
    if n_steps > records.len() {
        return Err(Error::invalid(format!(
            "horizon asks for {n_steps} steps but only {} were simulated",
            records.len()
        )));
    }
    let dt = result.dt();
    let mut m = 0.0;
    let mut bracket = 0.0;
    for rec in &records[..n_steps] {
        let a = 0.5 * params.theta - params.gamma * (env.at(rec.level) + rec.local_at_level);
        m += a * rec.db;
        bracket += a * a * dt;
    }
    let log_weight = m - 0.5 * bracket;
    let overflowed = log_weight > LOG_WEIGHT_CAP;
    Ok(GirsanovWeight {
        martingale: m,
        bracket,
        log_weight,
        weight: log_weight.min(LOG_WEIGHT_CAP).exp(),
        overflowed,
    })
}

/// Weight up to the fixed path-time `horizon`. The input must be an
/// undrifted run (`theta = gamma = 0`) simulated with step records.
pub fn weight_to_horizon(
    result: &ExplorationResult,
    params: &ModelParams,
    env: &EnvironmentPath,
    horizon: f64,
) -> Result<GirsanovWeight> {
    if !(horizon > 0.0) {
        return Err(Error::invalid("horizon must be positive"));
    }
    accumulate(result, params, env, (horizon / result.dt()).round() as usize)
}

/// Weight evaluated at the run's own stopping time `S_x` (the whole record
/// stream for a stopped run).
pub fn weight_at_stop(
    result: &ExplorationResult,
    params: &ModelParams,
    env: &EnvironmentPath,
) -> Result<GirsanovWeight> {
    if result.s_x().is_none() {
        return Err(Error::MissingRecord("stopping data"));
    }
    let n = result.records().map(|r| r.len()).unwrap_or(0);
    accumulate(result, params, env, n)
}

/// Self-normalized importance-sampling estimate with its effective sample
/// size.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WeightedEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Kish effective sample size `(sum w)^2 / sum w^2`.
    pub effective_sample_size: f64,
    pub n: usize,
}

pub fn reweighted_mean(values: &[f64], weights: &[GirsanovWeight]) -> Result<WeightedEstimate> {
    if values.len() != weights.len() || values.is_empty() {
        return Err(Error::invalid("need one weight per value"));
    }
    let w_sum: f64 = weights.iter().map(|w| w.weight).sum();
    let w_sq: f64 = weights.iter().map(|w| w.weight * w.weight).sum();
    let mean = values
        .iter()
        .zip(weights)
        .map(|(v, w)| v * w.weight)
        .sum::<f64>()
        / w_sum;
    let var_num: f64 = values
        .iter()
        .zip(weights)
        .map(|(v, w)| (w.weight * (v - mean)).powi(2))
        .sum();
    Ok(WeightedEstimate {
        mean,
        stderr: var_num.sqrt() / w_sum,
        effective_sample_size: w_sum * w_sum / w_sq,
        n: values.len(),
    })
}

/// Kernel-estimated local time of a standard Brownian bridge `0 -> y` on
/// `[0, 1]`, at the pinning level `y` and at `-y`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BridgeLocalTimeSample {
    pub y: f64,
    /// Local time accumulated at level `y` up to time 1.
    pub k1: f64,
    /// Local time accumulated at level `-y`.
    pub k1_neg: f64,
}

/// Simulate the bridge as a Brownian path plus the linear endpoint
/// correction and estimate its local time at `+-y` with a two-sided box
/// kernel of width `epsilon`.
pub fn sample_bridge_local_time(
    y: f64,
    dt: f64,
    epsilon: f64,
    stream: RngStream,
) -> Result<BridgeLocalTimeSample> {
    if y < 0.0 {
        return Err(Error::invalid("pinning level must be >= 0"));
    }
    if !(dt > 0.0 && dt < 1.0) || !(epsilon > 0.0) {
        return Err(Error::invalid("need 0 < dt < 1 and epsilon > 0"));
    }
    let n = (1.0 / dt).round() as usize;
    let dt = 1.0 / n as f64;
    let mut walk = Vec::with_capacity(n + 1);
    let mut b = 0.0;
    walk.push(b);
    for dw in stream.gaussian_increments(dt).take(n) {
        b += dw;
        walk.push(b);
    }
    let b1 = walk[n];
    let half = 0.5 * epsilon;
    let mut time_at = 0.0;
    let mut time_at_neg = 0.0;
    for (i, &w) in walk[..n].iter().enumerate() {
        let t = i as f64 * dt;
        let x = w - t * (b1 - y);
        if (x - y).abs() < half {
            time_at += dt;
        }
        if (x + y).abs() < half {
            time_at_neg += dt;
        }
    }
    Ok(BridgeLocalTimeSample {
        y,
        k1: time_at / epsilon,
        k1_neg: time_at_neg / epsilon,
    })
}

/// Empirical probe of `E[exp(alpha * L^2)]` over an ensemble of local-time
/// samples, with a heavy-tail diagnostic.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExpMomentProbe {
    pub alpha: f64,
    pub estimate: f64,
    /// Fraction of the estimate carried by the top percentile of samples.
    pub top_percentile_share: f64,
    /// Raised when the top 1% of samples carries more than half of the
    /// estimate: alpha is too large for a reliable empirical average.
    pub tail_dominated: bool,
}

pub fn exp_moment_probe(samples: &[f64], alpha: f64) -> Result<ExpMomentProbe> {
    if samples.is_empty() {
        return Err(Error::invalid("need at least one sample"));
    }
    if alpha < 0.0 {
        return Err(Error::invalid("alpha must be >= 0"));
    }
    let mut terms: Vec<f64> = samples
        .iter()
        .map(|s| (alpha * s * s).min(LOG_WEIGHT_CAP).exp())
        .collect();
    let total: f64 = terms.iter().sum();
    terms.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    let top_count = (samples.len() / 100).max(1);
    let top: f64 = terms[..top_count].iter().sum();
    let share = top / total;
    Ok(ExpMomentProbe {
        alpha,
        estimate: total / samples.len() as f64,
        top_percentile_share: share,
        tail_dominated: alpha > 0.0 && share > 0.5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exploration::{simulate_to_horizon, ExplorationConfig};

    #[test]
    fn zero_drift_weight_is_one() {
        let cfg = ExplorationConfig::new(ModelParams::critical(), None, 1.0 / 128.0)
            .unwrap()
            .with_records();
        let r = simulate_to_horizon(&cfg, 1.0, RngStream::new(3, 0)).unwrap();
        let w = weight_to_horizon(&r, &ModelParams::critical(), &EnvironmentPath::null(), 1.0)
            .unwrap();
        assert_eq!(w.weight, 1.0);
        assert_eq!(w.martingale, 0.0);
        assert_eq!(w.bracket, 0.0);
        assert!(!w.overflowed);
    }

    #[test]
    fn weight_requires_records() {
        let cfg = ExplorationConfig::new(ModelParams::critical(), None, 1.0 / 128.0).unwrap();
        let r = simulate_to_horizon(&cfg, 1.0, RngStream::new(3, 1)).unwrap();
        assert!(weight_to_horizon(
            &r,
            &ModelParams::new(1.0, 1.0).unwrap(),
            &EnvironmentPath::null(),
            1.0
        )
        .is_err());
    }

    #[test]
    fn unit_mean_small_ensemble() {
        // E[G_1] = 1 exactly in dt; here only Monte Carlo error enters.
        let cfg = ExplorationConfig::new(ModelParams::critical(), None, 1.0 / 256.0)
            .unwrap()
            .with_records();
        let target = ModelParams::new(1.0, 1.0).unwrap();
        let null = EnvironmentPath::null();
        let weights = crate::ensemble::run_ordered(4000, |i| {
            let r = simulate_to_horizon(&cfg, 1.0, RngStream::new(90, i))?;
            weight_to_horizon(&r, &target, &null, 1.0).map(|w| w.weight)
        })
        .unwrap();
        let s = crate::stats::summarize(&weights);
        assert!(
            (s.mean - 1.0).abs() < 3.0 * s.stderr,
            "mean {} +- {}",
            s.mean,
            s.stderr
        );
    }

    #[test]
    fn reweighted_mean_handles_uniform_weights() {
        let w = GirsanovWeight {
            martingale: 0.0,
            bracket: 0.0,
            log_weight: 0.0,
            weight: 1.0,
            overflowed: false,
        };
        let est = reweighted_mean(&[1.0, 2.0, 3.0], &[w, w, w]).unwrap();
        assert!((est.mean - 2.0).abs() < 1e-12);
        assert!((est.effective_sample_size - 3.0).abs() < 1e-12);
    }

    #[test]
    fn bridge_pinned_at_zero_has_positive_local_time() {
        for i in 0..50 {
            let s = sample_bridge_local_time(0.0, 1.0 / 512.0, 0.05, RngStream::new(7, i)).unwrap();
            assert!(s.k1 > 0.0);
            assert_eq!(s.k1, s.k1_neg);
        }
    }

    #[test]
    fn high_pinning_level_has_less_local_time_than_zero() {
        let n = 2000;
        let at0: f64 = (0..n)
            .map(|i| {
                sample_bridge_local_time(0.0, 1.0 / 256.0, 0.0625, RngStream::new(8, i))
                    .unwrap()
                    .k1
            })
            .sum::<f64>()
            / n as f64;
        let at3: f64 = (0..n)
            .map(|i| {
                sample_bridge_local_time(3.0, 1.0 / 256.0, 0.0625, RngStream::new(9, i))
                    .unwrap()
                    .k1
            })
            .sum::<f64>()
            / n as f64;
        assert!(at3 < at0, "mean at y=3 {at3} should be below y=0 {at0}");
    }

    #[test]
    fn exp_moment_alpha_zero_is_exactly_one() {
        let p = exp_moment_probe(&[0.3, 1.2, 5.0], 0.0).unwrap();
        assert_eq!(p.estimate, 1.0);
        assert!(!p.tail_dominated);
    }

    #[test]
    fn exp_moment_flags_divergent_alpha() {
        // Rayleigh-like samples: alpha = 2 dominates through the tail.
        let samples: Vec<f64> = (0..2000)
            .map(|i| {
                let u = (i as f64 + 0.5) / 2000.0;
                (-2.0 * (1.0 - u).ln()).sqrt()
            })
            .collect();
        let p = exp_moment_probe(&samples, 2.0).unwrap();
        assert!(p.tail_dominated, "share {}", p.top_percentile_share);
        let mild = exp_moment_probe(&samples, 0.05).unwrap();
        assert!(!mild.tail_dominated, "share {}", mild.top_percentile_share);
    }
}
