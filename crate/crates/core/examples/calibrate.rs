//! Dev calibration runs (removed before release).

use rayknight::ensemble::run_ordered;
use rayknight::exploration::{self, ExplorationConfig};
use rayknight::girsanov;
use rayknight::stats::summarize;
use rayknight::{ModelParams, RngStream};

fn classical_rk(dt: f64, n: usize, ceiling: f64, seed: u64) {
    let cfg = ExplorationConfig::new(ModelParams::critical(), Some(ceiling), dt)
        .unwrap()
        .with_s_max(2000.0);
    let probes = [0.25, 0.5];
    let t0 = std::time::Instant::now();
    let rows = run_ordered(n, |i| {
        let r = exploration::simulate(&cfg, 1.0, RngStream::new(seed, i))?;
        let p = r.profile().unwrap();
        Ok([p.value_at(probes[0]), p.value_at(probes[1])])
    })
    .unwrap();
    let secs = t0.elapsed().as_secs_f64();
    for (k, t) in probes.iter().enumerate() {
        let vals: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        let s = summarize(&vals);
        println!(
            "RK dt=2^{:>3} t={t}: mean={:.5} (bias {:+.5}, se {:.5}) var={:.4} (target {:.2})  [{secs:.1}s]",
            dt.log2().round(),
            s.mean,
            s.mean - 1.0,
            s.stderr,
            s.var,
            4.0 * t
        );
    }
}

fn identities(dt: f64, n: usize, seed: u64) {
    identities_eps(dt, rayknight::exploration::default_epsilon(dt), n, seed)
}

fn identities_eps(dt: f64, eps: f64, n: usize, seed: u64) {
    let mut cfg = ExplorationConfig::new(ModelParams::critical(), Some(1.0), dt)
        .unwrap()
        .with_s_max(2000.0);
    cfg.epsilon = eps;
    cfg.levels = rayknight::LevelGrid::for_ceiling(1.0, eps / 4.0).unwrap();
    let t = 0.5;
    let rows = run_ordered(n, |i| {
        let r = exploration::simulate(&cfg, 1.0, RngStream::new(seed, i))?;
        let p = r.profile().unwrap();
        let occ = r.occupation_time(t, r.s_x().unwrap())?;
        let occ_int = p.integral_up_to(t);
        let tanaka_signed =
            p.value_at(t) - exploration::smoothed_tanaka_integral(r.path(), t, eps, eps / 4.0, dt);
        Ok((occ - occ_int, tanaka_signed, p.value_at(t), occ))
    })
    .unwrap();
    let occ_signed: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let occ_abs: Vec<f64> = rows.iter().map(|r| r.0.abs()).collect();
    let tan_signed: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let tan_abs: Vec<f64> = rows.iter().map(|r| r.1.abs()).collect();
    let mags: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let occs: Vec<f64> = rows.iter().map(|r| r.3).collect();
    let med = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s[s.len() / 2]
    };
    println!(
        "ID dt=2^{:>3}: occ |signed-mean|={:.5} med|.|={:.5} rel={:.4}  tanaka |signed-mean|={:.5} med|.|={:.5} rel={:.4}",
        dt.log2().round(),
        summarize(&occ_signed).mean.abs(),
        med(&occ_abs),
        med(&occ_abs) / med(&occs),
        summarize(&tan_signed).mean.abs(),
        med(&tan_abs),
        med(&tan_abs) / med(&mags),
    );
}

fn rayleigh(dt: f64, eps_factor: f64, n: usize, seed: u64) {
    let eps = eps_factor * dt.sqrt();
    let vals = run_ordered(n, |i| {
        girsanov::sample_bridge_local_time(0.0, dt, eps, RngStream::new(seed, i)).map(|s| s.k1)
    })
    .unwrap();
    let p_gt_1 = vals.iter().filter(|v| **v > 1.0).count() as f64 / n as f64;
    // log-tail slope over l in [0.5, 2.0] against l^2.
    let mut pts = Vec::new();
    for k in 0..=12 {
        let l = 0.5 + 1.5 * k as f64 / 12.0;
        let p = vals.iter().filter(|v| **v > l).count() as f64 / n as f64;
        if p > 0.0 {
            pts.push((l * l, p.ln()));
        }
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    println!(
        "RAYLEIGH dt=2^{:>3} eps={eps_factor}*sqrt(dt): P(k1>1)={p_gt_1:.4} (target {:.4}) slope={slope:.4} (target -0.5)",
        dt.log2().round(),
        (-0.5f64).exp()
    );
}

fn theorem(dt: f64, n: usize, gamma_mass: f64, seed: u64) {
    use rayknight::{feller, stats, EnvironmentPath, TimeGrid};
    let xs = [0.5, 1.0, 2.0];
    let ts = [0.25, 0.5, 1.0];
    let t0 = std::time::Instant::now();

    let cfg = ExplorationConfig::new(ModelParams::new(1.0, 1.0).unwrap(), None, dt)
        .unwrap()
        .with_s_max(400.0);
    let profiles = run_ordered(n, |i| {
        let fam = exploration::simulate_profile_family(&cfg, &xs, RngStream::new(seed, i))?;
        let mut vals = [[0.0; 3]; 3];
        for (a, snap) in fam.iter().enumerate() {
            for (b, &t) in ts.iter().enumerate() {
                vals[a][b] = snap.profile.value_at(t);
            }
        }
        Ok(vals)
    })
    .unwrap();
    let explo_secs = t0.elapsed().as_secs_f64();

    let t0 = std::time::Instant::now();
    let params = ModelParams::new(1.0, gamma_mass).unwrap();
    let grid = TimeGrid::from_horizon(1.0, dt).unwrap();
    let masses = run_ordered(n, |i| {
        let field = feller::simulate_field(&params, &xs, &grid, RngStream::new(seed + 1, 4 * i))?;
        let mut vals = [[0.0; 3]; 3];
        for (a, path) in field.paths().iter().enumerate() {
            for (b, &t) in ts.iter().enumerate() {
                vals[a][b] = path.at(t);
            }
        }
        Ok(vals)
    })
    .unwrap();
    let mass_secs = t0.elapsed().as_secs_f64();

    let mut ps = Vec::new();
    for (a, &x) in xs.iter().enumerate() {
        for (b, &t) in ts.iter().enumerate() {
            let sa = stats::SampleSet::new(
                format!("profile x={x} t={t}"),
                profiles.iter().map(|v| v[a][b]).collect(),
            )
            .unwrap();
            let sb = stats::SampleSet::new(
                format!("mass x={x} t={t}"),
                masses.iter().map(|v| v[a][b]).collect(),
            )
            .unwrap();
            let r = stats::ks_two_sample(&sa, &sb).unwrap();
            println!(
                "THEOREM x={x} t={t}: d={:.4} p={:.4}  (means {:.4} vs {:.4})",
                r.d_stat,
                r.p_value,
                sa.summary().mean,
                sb.summary().mean
            );
            ps.push(r.p_value);
        }
    }
    let adj = stats::holm_adjust(&ps);
    let min_adj = adj.iter().cloned().fold(f64::INFINITY, f64::min);
    println!(
        "THEOREM dt=2^{} n={n} gamma_mass={gamma_mass}: min Holm-adjusted p = {min_adj:.4}  [explo {explo_secs:.0}s, mass {mass_secs:.0}s]",
        dt.log2().round()
    );
}

fn sx_identity(dt: f64, n: usize, seed: u64) {
    use rayknight::{feller, stats};
    let params = ModelParams::new(1.0, 1.0).unwrap();
    let cfg = ExplorationConfig::new(params, None, dt).unwrap().with_s_max(400.0);
    let t0 = std::time::Instant::now();
    let sx = exploration::sample_stopping_times(&cfg, 1.0, n, RngStream::new(seed, 0)).unwrap();
    let areas = run_ordered(n, |i| {
        let p = feller::simulate_until_extinct(&params, 1.0, dt, 500.0, RngStream::new(seed + 1, i))?;
        feller::total_mass(&p)
    })
    .unwrap();
    let a = stats::SampleSet::new("S_x", sx).unwrap();
    let b = stats::SampleSet::new("area", areas).unwrap();
    let r = stats::ks_two_sample(&a, &b).unwrap();
    println!(
        "SX dt=2^{} n={n}: d={:.4} p={:.4} meanS={:.4} meanA={:.4}  [{:.0}s]",
        dt.log2().round(),
        r.d_stat,
        r.p_value,
        a.summary().mean,
        b.summary().mean,
        t0.elapsed().as_secs_f64()
    );
}

fn chop_check(dt: f64, n: usize, s_max_free: f64, seed: u64) {
    use rayknight::stats;
    let k = 1.0;
    let t = 0.5;
    let t0 = std::time::Instant::now();
    let free_cfg = ExplorationConfig::new(ModelParams::critical(), None, dt)
        .unwrap()
        .with_s_max(s_max_free);
    let mut failures = 0usize;
    let chopped: Vec<f64> = (0..n)
        .filter_map(|i| {
            match exploration::simulate(&free_cfg, 1.0, RngStream::new(seed, i as u64)) {
                Ok(r) => {
                    let c = exploration::chop_above(&r, k).unwrap();
                    Some(c.profile().unwrap().value_at(t))
                }
                Err(_) => {
                    failures += 1;
                    None
                }
            }
        })
        .collect();
    let direct_cfg = ExplorationConfig::new(ModelParams::critical(), Some(k), dt)
        .unwrap()
        .with_s_max(2000.0);
    let direct = run_ordered(n, |i| {
        exploration::simulate(&direct_cfg, 1.0, RngStream::new(seed + 1, i))
            .map(|r| r.profile().unwrap().value_at(t))
    })
    .unwrap();
    let a = stats::SampleSet::new("chopped", chopped).unwrap();
    let b = stats::SampleSet::new("direct", direct).unwrap();
    let r = stats::ks_two_sample(&a, &b).unwrap();
    println!(
        "CHOP dt=2^{} n={n} s_max={s_max_free}: failures={failures} d={:.4} p={:.4}  [{:.0}s]",
        dt.log2().round(),
        r.d_stat,
        r.p_value,
        t0.elapsed().as_secs_f64()
    );
}

fn chop_diag(dt: f64, n: usize, s_max_free: f64, seed: u64) {
    let k = 1.0;
    let free_cfg = ExplorationConfig::new(ModelParams::critical(), None, dt)
        .unwrap()
        .with_s_max(s_max_free);
    let rows = run_ordered(n, |i| {
        match exploration::simulate(&free_cfg, 1.0, RngStream::new(seed, i)) {
            Ok(r) => {
                let p = r.profile().unwrap();
                Ok(Some((p.value_at(0.25), p.value_at(0.5), r.s_x().unwrap())))
            }
            Err(_) => Ok(None),
        }
    })
    .unwrap();
    let failures = rows.iter().filter(|r| r.is_none()).count();
    let free: Vec<(f64, f64, f64)> = rows.into_iter().flatten().collect();
    let direct_cfg = ExplorationConfig::new(ModelParams::critical(), Some(k), dt)
        .unwrap()
        .with_s_max(2000.0);
    let direct = run_ordered(n, |i| {
        let r = exploration::simulate(&direct_cfg, 1.0, RngStream::new(seed + 1, i))?;
        let p = r.profile().unwrap();
        Ok((p.value_at(0.25), p.value_at(0.5), r.s_x().unwrap()))
    })
    .unwrap();
    let m = |v: &[f64]| summarize(v).mean;
    let col = |rows: &[(f64, f64, f64)], idx: usize| -> Vec<f64> {
        rows.iter()
            .map(|r| [r.0, r.1, r.2][idx])
            .collect()
    };
    let short: Vec<(f64, f64, f64)> = free.iter().cloned().filter(|r| r.2 <= 2000.0).collect();
    println!(
        "CHOPDIAG dt=2^{} n={n} failures={failures}: free t25={:.4} t50={:.4} sx={:.3} | free(S<=2e3) t50={:.4} ({}) | direct t25={:.4} t50={:.4} sx={:.3}",
        dt.log2().round(),
        m(&col(&free, 0)),
        m(&col(&free, 1)),
        m(&col(&free, 2)),
        m(&col(&short, 1)),
        short.len(),
        m(&col(&direct, 0)),
        m(&col(&direct, 1)),
        m(&col(&direct, 2)),
    );
}

fn chop_cdf(dt: f64, n: usize, seed: u64) {
    let k = 1.0;
    let t = 0.5;
    let free_cfg = ExplorationConfig::new(ModelParams::critical(), None, dt)
        .unwrap()
        .with_s_max(20_000.0);
    let chopped: Vec<f64> = run_ordered(n, |i| {
        match exploration::simulate(&free_cfg, 1.0, RngStream::new(seed, i)) {
            Ok(r) => {
                let c = exploration::chop_above(&r, k).unwrap();
                Ok(Some(c.profile().unwrap().value_at(t)))
            }
            Err(_) => Ok(None),
        }
    })
    .unwrap()
    .into_iter()
    .flatten()
    .collect();
    let direct_cfg = ExplorationConfig::new(ModelParams::critical(), Some(k), dt)
        .unwrap()
        .with_s_max(2000.0);
    let direct: Vec<f64> = run_ordered(n, |i| {
        exploration::simulate(&direct_cfg, 1.0, RngStream::new(seed + 1, i))
            .map(|r| r.profile().unwrap().value_at(t))
    })
    .unwrap();
    let frac_below = |v: &[f64], q: f64| v.iter().filter(|x| **x <= q).count() as f64 / v.len() as f64;
    print!("CHOPCDF dt=2^{}:", dt.log2().round());
    for q in [0.0, 0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0] {
        print!(
            " F({q})={:.4}/{:.4}",
            frac_below(&chopped, q),
            frac_below(&direct, q)
        );
    }
    println!();
}

fn girsanov_unit_mean(dt: f64, n: usize, seed: u64) {
    use rayknight::EnvironmentPath;
    let cfg = ExplorationConfig::new(ModelParams::critical(), None, dt)
        .unwrap()
        .with_records();
    let target = ModelParams::new(1.0, 1.0).unwrap();
    let null = EnvironmentPath::null();
    let t0 = std::time::Instant::now();
    let weights = run_ordered(n, |i| {
        let r = exploration::simulate_to_horizon(&cfg, 1.0, RngStream::new(seed, i))?;
        girsanov::weight_to_horizon(&r, &target, &null, 1.0).map(|w| w.weight)
    })
    .unwrap();
    let s = summarize(&weights);
    println!(
        "GIRSANOV dt=2^{} n={n}: mean={:.5} se={:.5} |dev|/se={:.2}  [{:.0}s]",
        dt.log2().round(),
        s.mean,
        s.stderr,
        (s.mean - 1.0).abs() / s.stderr,
        t0.elapsed().as_secs_f64()
    );
}

fn reweight_check(dt: f64, n: usize, seed: u64) {
    use rayknight::EnvironmentPath;
    let k = 1.0;
    let t = 0.25;
    let x = 1.0;
    let target = ModelParams::new(1.0, 0.5).unwrap();
    let null = EnvironmentPath::null();
    let t0 = std::time::Instant::now();
    // Reference: undrifted runs reflected in [0, K], reweighted at S_x.
    let ref_cfg = ExplorationConfig::new(ModelParams::critical(), Some(k), dt)
        .unwrap()
        .with_s_max(2000.0)
        .with_records();
    let pairs = run_ordered(n, |i| {
        let r = exploration::simulate(&ref_cfg, x, RngStream::new(seed, i))?;
        let w = girsanov::weight_at_stop(&r, &target, &null)?;
        Ok((r.profile().unwrap().value_at(t), w))
    })
    .unwrap();
    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let weights: Vec<girsanov::GirsanovWeight> = pairs.iter().map(|p| p.1).collect();
    let est = girsanov::reweighted_mean(&values, &weights).unwrap();
    // Direct simulation under the target drift.
    let direct_cfg = ExplorationConfig::new(target, Some(k), dt)
        .unwrap()
        .with_s_max(2000.0);
    let direct = run_ordered(n, |i| {
        exploration::simulate(&direct_cfg, x, RngStream::new(seed + 1, i))
            .map(|r| r.profile().unwrap().value_at(t))
    })
    .unwrap();
    let d = summarize(&direct);
    let combined = (est.stderr.powi(2) + d.stderr.powi(2)).sqrt();
    println!(
        "REWEIGHT dt=2^{} n={n}: reweighted={:.4}±{:.4} (ess {:.0}) direct={:.4}±{:.4} |z|={:.2}  [{:.0}s]",
        dt.log2().round(),
        est.mean,
        est.stderr,
        est.effective_sample_size,
        d.mean,
        d.stderr,
        (est.mean - d.mean).abs() / combined,
        t0.elapsed().as_secs_f64()
    );
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(String::as_str).unwrap_or("all");
    if which == "rk" || which == "all" {
        classical_rk(1.0 / 256.0, 20_000, 1.0, 1000);
        classical_rk(1.0 / 1024.0, 20_000, 1.0, 1001);
        classical_rk(1.0 / 4096.0, 20_000, 1.0, 1002);
        classical_rk(1.0 / 16384.0, 10_000, 1.0, 1003);
    }
    if which == "id" || which == "all" {
        identities(1.0 / 64.0, 400, 2000);
        identities(1.0 / 256.0, 400, 2001);
        identities(1.0 / 1024.0, 400, 2002);
        identities(1.0 / 16384.0, 100, 2003);
    }
    if which == "idfix" || which == "all" {
        // Fixed kernel width across the dt ladder.
        for (k, dt_pow) in [6, 8, 10].iter().enumerate() {
            identities_eps(2f64.powi(-dt_pow), 0.125, 400, 2100 + k as u64);
        }
    }
    if which == "rayleigh" || which == "all" {
        rayleigh(1.0 / 4096.0, 4.0, 10_000, 3000);
        rayleigh(1.0 / 4096.0, 2.0, 10_000, 3001);
        rayleigh(1.0 / 16384.0, 4.0, 10_000, 3002);
    }
    if which == "rayleigh-big" {
        rayleigh(1.0 / 8192.0, 2.0, 100_000, 3100);
        rayleigh(1.0 / 8192.0, 4.0, 100_000, 3101);
    }
    if which == "theorem" {
        theorem(1.0 / 16384.0, 10_000, 1.0, 5000);
    }
    if which == "theorem-neg" {
        theorem(1.0 / 16384.0, 10_000, 2.5, 5100);
    }
    if which == "theorem-small" {
        theorem(1.0 / 4096.0, 4_000, 1.0, 5200);
    }
    if which == "sx" {
        sx_identity(1.0 / 8192.0, 10_000, 6000);
    }
    if which == "chop" {
        chop_check(1.0 / 1024.0, 10_000, 20_000.0, 7000);
    }
    if which == "chopcdf" {
        chop_cdf(1.0 / 1024.0, 10_000, 7300);
    }
    if which == "chopdiag" {
        chop_diag(1.0 / 1024.0, 30_000, 20_000.0, 7100);
        chop_diag(1.0 / 4096.0, 10_000, 20_000.0, 7101);
    }
    if which == "girsanov" {
        girsanov_unit_mean(1.0 / 4096.0, 100_000, 8000);
    }
    if which == "reweight" {
        reweight_check(1.0 / 4096.0, 20_000, 9000);
    }
}
