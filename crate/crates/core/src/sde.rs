//! One-step numeric kernels: square-root diffusion stepping and Skorokhod
//! reflection with exact push bookkeeping.
//!
//! ```text
//! square-root diffusion:  dZ = drift dt + 2 sqrt(Z) dW     (full truncation)
//! reflected step:         H' = clamp(H + drift dt + dB)    onto [0, K]
//! ```
//!
//! The reflected step records how much the clamp pushed at each boundary.
//! Twice the accumulated lower push discretizes the semimartingale local
//! time at 0, which is exactly the `L(0)/2` term of the reflected SDEs this
//! crate simulates; the upper push plays the same role at the ceiling.

use crate::error::{Error, Result};

/// Outcome of one reflected Euler step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectedStep {
    /// Position after clamping, in `[0, K]`.
    pub position: f64,
    /// Amount added at the lower boundary (0 if the free step stayed inside).
    pub push_lower: f64,
    /// Amount subtracted at the ceiling.
    pub push_upper: f64,
}

/// One explicit Euler step of `dZ = drift dt + 2 sqrt(Z) dW` with full
/// truncation: the square root reads the positive part and the result is
/// clipped at 0, so 0 is absorbing whenever the drift vanishes there.
#[inline]
pub fn step_sqrt_diffusion(z: f64, drift: f64, dw: f64, dt: f64) -> f64 {
    debug_assert!(z >= 0.0);
    (z + drift * dt + 2.0 * z.max(0.0).sqrt() * dw).max(0.0)
}

/// One reflected Euler step: clamp the free move `h + drift dt + db` onto
/// `[0, ceiling]` (or `[0, inf)` when no ceiling), recording the pushes.
///
/// Fails with `GridSanity` when the free move would need a push larger than
/// the ceiling itself, which signals that `dt` is too coarse for `K`.
#[inline]
pub fn step_reflected(
    h: f64,
    drift: f64,
    db: f64,
    dt: f64,
    ceiling: Option<f64>,
) -> Result<ReflectedStep> {
    let free = h + drift * dt + db;
    match ceiling {
        None => {
            let push_lower = (-free).max(0.0);
            Ok(ReflectedStep {
                position: free.max(0.0),
                push_lower,
                push_upper: 0.0,
            })
        }
        Some(k) => {
            debug_assert!(h >= 0.0 && h <= k);
            if free < -k || free > 2.0 * k {
                return Err(Error::GridSanity { free, ceiling: k });
            }
            // Iterated clamp; a push at one boundary lands inside the
            // interval, so at most one push is nonzero per step.
            let push_lower = (-free).max(0.0);
            let after_lower = free + push_lower;
            let push_upper = (after_lower - k).max(0.0);
            Ok(ReflectedStep {
                position: after_lower - push_upper,
                push_lower,
                push_upper,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_step_zero_is_absorbing() {
        assert_eq!(step_sqrt_diffusion(0.0, 0.0, 0.5, 0.01), 0.0);
        assert_eq!(step_sqrt_diffusion(0.0, 0.0, -0.5, 0.01), 0.0);
    }

    #[test]
    fn sqrt_step_no_noise_no_drift() {
        assert_eq!(step_sqrt_diffusion(1.0, 0.0, 0.0, 0.01), 1.0);
    }

    #[test]
    fn sqrt_step_clips_at_zero() {
        // 0.0001 - 0.1 - 0.001 < 0, truncated.
        assert_eq!(step_sqrt_diffusion(1e-4, -10.0, -0.05, 0.01), 0.0);
    }

    #[test]
    fn reflected_interior_step() {
        let r = step_reflected(0.5, 0.0, 0.2, 0.01, None).unwrap();
        assert_eq!(r.position, 0.7);
        assert_eq!(r.push_lower, 0.0);
        assert_eq!(r.push_upper, 0.0);
    }

    #[test]
    fn reflected_lower_push() {
        // Free step 0.1 - 0.3 = -0.2: clamped to 0 with push 0.2.
        let r = step_reflected(0.1, 0.0, -0.3, 0.01, None).unwrap();
        assert_eq!(r.position, 0.0);
        assert!((r.push_lower - 0.2).abs() < 1e-15);
        assert_eq!(r.push_upper, 0.0);
    }

    #[test]
    fn reflected_upper_push() {
        // Free step 0.9 + 0.3 = 1.2 above K=1: clamped to K with push 0.2.
        let r = step_reflected(0.9, 0.0, 0.3, 0.01, Some(1.0)).unwrap();
        assert!((r.position - 1.0).abs() < 1e-15);
        assert_eq!(r.push_lower, 0.0);
        assert!((r.push_upper - 0.2).abs() < 1e-15);
    }

    #[test]
    fn reflected_grid_sanity() {
        assert!(step_reflected(0.5, 0.0, -2.0, 0.01, Some(1.0)).is_err());
        assert!(step_reflected(0.5, 0.0, 2.0, 0.01, Some(1.0)).is_err());
        // No ceiling: any move is fine.
        assert!(step_reflected(0.5, 0.0, -2.0, 0.01, None).is_ok());
    }

    #[test]
    fn skorokhod_identity() {
        // position = free + push_lower - push_upper, exactly in floats.
        for &(h, db) in &[(0.2, -0.7), (0.2, 0.3), (0.95, 0.4), (0.0, 0.0)] {
            let r = step_reflected(h, 0.1, db, 0.01, Some(1.0)).unwrap();
            let free = h + 0.1 * 0.01 + db;
            assert_eq!(r.position, free + r.push_lower - r.push_upper);
        }
    }
}
