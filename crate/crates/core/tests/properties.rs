//! Property tests for the structural invariants.

use proptest::prelude::*;

use rayknight::exploration::{self, ExplorationConfig};
use rayknight::sde::{step_reflected, step_sqrt_diffusion};
use rayknight::stats::{ks_two_sample, SampleSet};
use rayknight::{feller, EnvironmentPath, LevelGrid, ModelParams, RngStream, TimeGrid};

proptest! {
    #[test]
    fn sqrt_diffusion_step_stays_nonnegative(
        z in 0.0..10.0f64,
        drift in -50.0..50.0f64,
        dw in -1.0..1.0f64,
    ) {
        let out = step_sqrt_diffusion(z, drift, dw, 0.01);
        prop_assert!(out >= 0.0);
    }

    #[test]
    fn reflected_step_satisfies_skorokhod_identity(
        h in 0.0..1.0f64,
        drift in -20.0..20.0f64,
        db in -0.4..0.4f64,
    ) {
        let r = step_reflected(h, drift, db, 0.01, Some(1.0)).unwrap();
        prop_assert!(r.position >= 0.0 && r.position <= 1.0);
        prop_assert!(r.push_lower >= 0.0 && r.push_upper >= 0.0);
        // At most one boundary acts per step.
        prop_assert!(r.push_lower == 0.0 || r.push_upper == 0.0);
        // position = free + push_lower - push_upper, exactly.
        let free = h + drift * 0.01 + db;
        prop_assert_eq!(r.position, free + r.push_lower - r.push_upper);
    }

    #[test]
    fn rng_streams_are_reproducible(seed in any::<u64>(), id in 0u64..1000) {
        let a: Vec<f64> = RngStream::new(seed, id).gaussian_increments(0.5).take(16).collect();
        let b: Vec<f64> = RngStream::new(seed, id).gaussian_increments(0.5).take(16).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn mass_paths_are_nonnegative_and_absorbed(
        theta in 0.0..2.0f64,
        gamma in 0.0..2.0f64,
        x in 0.0..3.0f64,
        seed in any::<u64>(),
    ) {
        let params = ModelParams::new(theta, gamma).unwrap();
        let grid = TimeGrid::new(0.01, 300).unwrap();
        let p = feller::simulate(&params, x, &EnvironmentPath::null(), &grid, RngStream::new(seed, 0)).unwrap();
        prop_assert!(p.values().iter().all(|v| *v >= 0.0));
        if let Some(hit) = p.values().iter().position(|v| *v == 0.0) {
            prop_assert!(p.values()[hit..].iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn coupled_fields_are_monotone(
        seed in any::<u64>(),
        x0 in 0.1..1.0f64,
        dx1 in 0.1..1.0f64,
        dx2 in 0.1..1.0f64,
    ) {
        let params = ModelParams::new(1.0, 1.0).unwrap();
        let grid = TimeGrid::new(0.01, 100).unwrap();
        let xs = [x0, x0 + dx1, x0 + dx1 + dx2];
        let field = feller::simulate_field(&params, &xs, &grid, RngStream::new(seed, 0)).unwrap();
        prop_assert!(rayknight::stats::monotonicity_check(&field).pass);
    }

    #[test]
    fn ks_statistic_is_symmetric_and_permutation_invariant(
        mut a in prop::collection::vec(-5.0..5.0f64, 10..60),
        b in prop::collection::vec(-5.0..5.0f64, 10..60),
    ) {
        let sa = SampleSet::new("a", a.clone()).unwrap();
        let sb = SampleSet::new("b", b.clone()).unwrap();
        let d_ab = ks_two_sample(&sa, &sb).unwrap().d_stat;
        let d_ba = ks_two_sample(&sb, &sa).unwrap().d_stat;
        prop_assert!((d_ab - d_ba).abs() < 1e-15);
        a.reverse();
        let shuffled = SampleSet::new("a2", a).unwrap();
        let d_shuffled = ks_two_sample(&shuffled, &sb).unwrap().d_stat;
        prop_assert!((d_ab - d_shuffled).abs() < 1e-15);
    }

    #[test]
    fn occupation_mass_matches_elapsed_time(seed in any::<u64>(), x in 0.05..0.8f64) {
        let cfg = ExplorationConfig::new(ModelParams::critical(), Some(1.0), 1.0 / 512.0)
            .unwrap()
            .with_s_max(500.0);
        let r = exploration::simulate(&cfg, x, RngStream::new(seed, 0)).unwrap();
        let p = r.profile().unwrap();
        // The field integrates to the (refined) stopping time, to roundoff
        // plus the partial-step resolution.
        let total = p.total_time();
        let s = r.s_x().unwrap();
        prop_assert!((total - s).abs() <= 1e-9 * s.max(1.0), "{total} vs {s}");
    }

    #[test]
    fn chopping_preserves_cells_below_ceiling(seed in any::<u64>()) {
        let cfg = ExplorationConfig::new(ModelParams::critical(), None, 1.0 / 256.0)
            .unwrap()
            .with_s_max(5_000.0);
        let r = exploration::simulate(&cfg, 0.7, RngStream::new(seed, 0)).unwrap();
        let dy = r.local_time().dy();
        let k = (r.max_level() * 0.7 / dy).ceil().max(4.0) * dy;
        let c = exploration::chop_above(&r, k).unwrap();
        let n = c.local_time().cells().len().min(r.local_time().cells().len());
        prop_assert_eq!(&r.local_time().cells()[..n], &c.local_time().cells()[..n]);
        prop_assert!(c.path().iter().all(|h| *h <= k));
    }

    #[test]
    fn comparison_pair_is_ordered_for_any_parameters(
        seed in any::<u64>(),
        theta in 0.0..2.0f64,
        gamma in 0.0..1.5f64,
    ) {
        let cfg = ExplorationConfig::new(
            ModelParams::new(theta, gamma).unwrap(),
            Some(1.0),
            1.0 / 1024.0,
        )
        .unwrap()
        .with_s_max(2.0);
        let (drifted, dominating) =
            exploration::simulate_comparison_pair(&cfg, None, RngStream::new(seed, 0)).unwrap();
        for (a, b) in drifted.path().iter().zip(dominating.path().iter()) {
            prop_assert!(a <= b);
        }
    }
}

#[test]
fn level_grid_tiles_arbitrary_ceilings() {
    for k in [0.3, 1.0, 2.7, 10.0] {
        let g = LevelGrid::for_ceiling(k, 0.013).unwrap();
        assert!((g.top() - k).abs() < 1e-9 * k);
    }
}
