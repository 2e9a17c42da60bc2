//! On-line local-time field estimation.
//!
//! The field tracks, for one path, the occupation density over a uniform
//! level grid (cell `i` covers `[i dy, (i+1) dy)`) plus the exact boundary
//! local times obtained from the reflection pushes:
//!
//! ```text
//! interior:  ell(y) += dt/eps  over the box |h - y| < eps/2   (per step)
//! level 0:   boundary_zero    = 2 * accumulated lower pushes  (exact)
//! level K:   boundary_ceiling = 2 * accumulated upper pushes  (exact)
//! ```
//!
//! Box mass falling outside `[0, U]` (U = ceiling, or the path's running
//! maximum when unbounded) is folded back by reflection. This keeps the
//! occupation identity `sum ell(y) dy = elapsed time` exact to roundoff and
//! keeps the field supported inside the visited range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::LevelGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeField {
    dy: f64,
    epsilon: f64,
    /// Fixed upper reflection level, if the path is ceiled.
    ceiling: Option<f64>,
    /// Occupation density per cell.
    values: Vec<f64>,
    /// Exact local time at 0: twice the accumulated lower pushing.
    boundary_zero: f64,
    /// Exact local time at the ceiling: twice the accumulated upper pushing.
    boundary_ceiling: f64,
    /// Total time mass deposited so far.
    deposited: f64,
}

impl LocalTimeField {
    pub fn new(levels: &LevelGrid, epsilon: f64, ceiling: Option<f64>) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::invalid(format!(
                "kernel width must be positive, got {epsilon}"
            )));
        }
        if epsilon < levels.dy() {
            return Err(Error::invalid(format!(
                "kernel width {} below level spacing {}",
                epsilon,
                levels.dy()
            )));
        }
        if let Some(k) = ceiling {
            if (levels.top() - k).abs() > 1e-9 * k.max(1.0) {
                return Err(Error::invalid(format!(
                    "level grid top {} does not tile the ceiling {k}",
                    levels.top()
                )));
            }
            if k < epsilon {
                return Err(Error::invalid(format!(
                    "ceiling {k} smaller than kernel width {epsilon}"
                )));
            }
        }
        Ok(LocalTimeField {
            dy: levels.dy(),
            epsilon,
            ceiling,
            values: vec![0.0; levels.n_levels()],
            boundary_zero: 0.0,
            boundary_ceiling: 0.0,
            deposited: 0.0,
        })
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn ceiling(&self) -> Option<f64> {
        self.ceiling
    }

    pub fn boundary_zero(&self) -> f64 {
        self.boundary_zero
    }

    pub fn boundary_ceiling(&self) -> f64 {
        self.boundary_ceiling
    }

    /// Total time mass deposited so far.
    pub fn deposited(&self) -> f64 {
        self.deposited
    }

    /// Raw per-cell densities.
    pub fn cells(&self) -> &[f64] {
        &self.values
    }

    pub fn top(&self) -> f64 {
        self.dy * self.values.len() as f64
    }

    /// Record the reflection pushes of one step.
    pub fn add_pushes(&mut self, push_lower: f64, push_upper: f64) {
        self.boundary_zero += 2.0 * push_lower;
        self.boundary_ceiling += 2.0 * push_upper;
    }

    /// Deposit `mass` units of occupation time as a box kernel centered at
    /// `h`. Kernel mass crossing a reflecting boundary (0, and the ceiling
    /// when present) is folded back, which conserves occupation exactly and
    /// matches the reflected process's density there. Free fields keep the
    /// symmetric kernel near the path's running maximum: the support may
    /// extend up to half a kernel width above it, never further.
    pub fn deposit(&mut self, h: f64, mass: f64) {
        debug_assert!(h >= 0.0);
        self.deposited += mass;
        let half = 0.5 * self.epsilon;
        let density = mass / self.epsilon;
        match self.ceiling {
            Some(k) => self.add_folded_segment(h - half, h + half, density, k),
            None => {
                self.grow_to(h + half);
                let (a, b) = (h - half, h + half);
                if a < 0.0 {
                    self.add_plain_segment(0.0, -a, density);
                    self.add_plain_segment(0.0, b, density);
                } else {
                    self.add_plain_segment(a, b, density);
                }
            }
        }
    }

    /// Add `density` over `[a, b]` reflected into `[0, upper]`.
    fn add_folded_segment(&mut self, a: f64, b: f64, density: f64, upper: f64) {
        // Split [a, b] at multiples of `upper`; each piece maps affinely
        // (with alternating orientation) into [0, upper].
        let mut lo = a;
        while lo < b - 1e-300 {
            let k = (lo / upper).floor();
            let cell_end = (k + 1.0) * upper;
            let hi = b.min(cell_end);
            let (m_lo, m_hi) = if (k as i64).rem_euclid(2) == 0 {
                (lo - k * upper, hi - k * upper)
            } else {
                (cell_end - hi, cell_end - lo)
            };
            self.add_plain_segment(m_lo.max(0.0), m_hi.min(upper), density);
            lo = hi;
        }
    }

    /// Add `density` over `[lo, hi]` already inside the grid.
    fn add_plain_segment(&mut self, lo: f64, hi: f64, density: f64) {
        if hi <= lo {
            return;
        }
        let i_lo = (lo / self.dy) as usize;
        let i_hi = (((hi / self.dy).ceil() as usize).max(i_lo + 1)).min(self.values.len());
        for i in i_lo..i_hi {
            let cell_lo = i as f64 * self.dy;
            let cell_hi = cell_lo + self.dy;
            let overlap = hi.min(cell_hi) - lo.max(cell_lo);
            if overlap > 0.0 {
                self.values[i] += density * overlap / self.dy;
            }
        }
    }

    /// Make sure cells cover `[0, y]`; only meaningful for free fields.
    fn grow_to(&mut self, y: f64) {
        if self.ceiling.is_some() {
            return;
        }
        while self.top() < y + self.epsilon {
            let n = self.values.len();
            self.values.resize(n * 2, 0.0);
        }
    }

    /// Field value at level `y`: linear interpolation between cell centers,
    /// anchored at the exact boundary local times at 0 and at the ceiling.
    pub fn value_at(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 0.0;
        }
        let half = 0.5 * self.dy;
        if y <= half {
            // Blend from the exact boundary value to the first cell center.
            let frac = y / half;
            return self.boundary_zero * (1.0 - frac) + self.values[0] * frac;
        }
        if let Some(k) = self.ceiling {
            let last_center = k - half;
            if y >= last_center {
                if y > k {
                    return 0.0;
                }
                let frac = (y - last_center) / half;
                let v = self.values[self.values.len() - 1];
                return v * (1.0 - frac) + self.boundary_ceiling * frac;
            }
        }
        let u = y / self.dy - 0.5;
        let i = u as usize;
        if i + 1 >= self.values.len() {
            return if i < self.values.len() { self.values[i] } else { 0.0 };
        }
        let frac = u - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// Integral of the cell densities over `[0, t]`.
    pub fn integral_up_to(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let mut total = 0.0;
        let full = ((t / self.dy) as usize).min(self.values.len());
        for v in &self.values[..full] {
            total += v * self.dy;
        }
        if full < self.values.len() {
            let partial = t - full as f64 * self.dy;
            if partial > 0.0 {
                total += self.values[full] * partial;
            }
        }
        total
    }

    /// Integral of the cell densities over all levels; equals the deposited
    /// time up to roundoff.
    pub fn total_time(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dy
    }

    /// Smallest level above which every cell is exactly zero.
    pub fn support_top(&self) -> f64 {
        match self.values.iter().rposition(|v| *v != 0.0) {
            Some(i) => (i + 1) as f64 * self.dy,
            None => 0.0,
        }
    }

    /// Pin the exact boundary local time (crossing refinement, chop).
    pub(crate) fn set_boundary_zero(&mut self, v: f64) {
        self.boundary_zero = v;
    }

    /// Verbatim copy of the first `n` cells of another field.
    pub(crate) fn copy_cells_from(&mut self, other: &LocalTimeField, n: usize) {
        let n = n.min(other.values.len()).min(self.values.len());
        self.values[..n].copy_from_slice(&other.values[..n]);
        self.deposited = self.total_time();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(dy: f64, n: usize, eps: f64, ceiling: Option<f64>) -> LocalTimeField {
        let levels = LevelGrid::new(dy, n).unwrap();
        LocalTimeField::new(&levels, eps, ceiling).unwrap()
    }

    #[test]
    fn interior_deposit_conserves_mass() {
        let mut f = field(0.01, 100, 0.04, None);
        f.deposit(0.5, 0.125);
        assert!((f.total_time() - 0.125).abs() < 1e-12);
        assert!((f.deposited() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn boundary_deposit_folds_at_zero() {
        let mut f = field(0.01, 100, 0.04, None);
        f.deposit(0.0, 1.0);
        // All mass lands in [0, eps/2], at doubled density.
        assert!((f.total_time() - 1.0).abs() < 1e-12);
        assert!((f.integral_up_to(0.02) - 1.0).abs() < 1e-12);
        assert_eq!(f.integral_up_to(0.02), f.integral_up_to(0.5));
    }

    #[test]
    fn ceiling_deposit_folds_at_k() {
        let mut f = field(0.01, 100, 0.04, Some(1.0));
        f.deposit(1.0, 1.0);
        assert!((f.total_time() - 1.0).abs() < 1e-12);
        // All mass folded into [K - eps/2, K].
        let in_band = f.integral_up_to(1.0) - f.integral_up_to(0.98);
        assert!((in_band - 1.0).abs() < 1e-12, "band mass {in_band}");
    }

    #[test]
    fn both_boundaries_fold_in_narrow_interval() {
        let mut f = field(0.01, 50, 0.4, Some(0.5));
        f.deposit(0.05, 1.0);
        f.deposit(0.45, 1.0);
        assert!((f.total_time() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn free_deposit_keeps_symmetric_kernel() {
        let mut f = field(0.01, 100, 0.04, None);
        f.deposit(0.30, 1.0);
        // Support reaches at most eps/2 above the deposit level.
        assert!(f.support_top() <= 0.32 + 1e-12);
        assert!(f.value_at(0.31) > 0.0);
        assert_eq!(f.value_at(0.35), 0.0);
    }

    #[test]
    fn pushes_accumulate_exactly() {
        let mut f = field(0.01, 100, 0.04, Some(1.0));
        f.add_pushes(0.125, 0.0);
        f.add_pushes(0.25, 0.5);
        assert_eq!(f.boundary_zero(), 0.75);
        assert_eq!(f.boundary_ceiling(), 1.0);
    }

    #[test]
    fn boundary_anchor_wins_at_zero() {
        let mut f = field(0.01, 100, 0.04, None);
        f.add_pushes(2.0, 0.0);
        assert_eq!(f.value_at(0.0), 4.0);
    }

    #[test]
    fn grows_when_unceiled() {
        let mut f = field(0.01, 8, 0.04, None);
        f.deposit(5.0, 1.0);
        assert!(f.top() >= 5.0);
        assert!((f.total_time() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_width_below_spacing_rejected() {
        let levels = LevelGrid::new(0.1, 10).unwrap();
        assert!(LocalTimeField::new(&levels, 0.05, None).is_err());
    }
}
