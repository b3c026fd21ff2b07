use std::time::{Duration, Instant};

use leo_sg::channel::ShadowedRicianParams;
use leo_sg::distributions::{case_probs, case_probs_for, nearest_dist};
use leo_sg::geometry::{max_slant_range, threshold_polar_angle};
use leo_sg::montecarlo::{estimate_outage_multi, sample_nearest_distances, TrialConfig};
use leo_sg::optimizer::{optimize_exhaustive, optimize_iterative, visibility};
use leo_sg::outage::{
    outage, outage_approx, outage_approx_alpha2, outage_approx_truncated, outage_asymptotic, outage_exact,
    outage_exact_closed_form, series_increment, ClosedFormLimits,
};
use leo_sg::{EarthGeometry, Error, Model, OptConstraints, SeriesControl, SystemConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_611;

fn report(n: &str, ok: bool, elapsed: Duration, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("criterion {n}: {tag} ({:.2} s) {detail}", elapsed.as_secs_f64());
}

fn ctl() -> SeriesControl {
    SeriesControl::default()
}

fn geo(a_km: f64) -> EarthGeometry {
    EarthGeometry::new(6378e3, a_km * 1e3).unwrap()
}

fn with_fading(cfg: &SystemConfig, name: &str) -> SystemConfig {
    SystemConfig { fading: ShadowedRicianParams::preset(name).unwrap(), fading_name: Some(name.into()), ..cfg.clone() }
}

/// The fading × terminal × S matrix shared by the outage criteria.
fn outage_matrix() -> Vec<(String, SystemConfig)> {
    let mut out = Vec::new();
    for fading in ["fhs-canonical", "as", "ils"] {
        for (tname, base) in [("vsat", SystemConfig::vsat_table1()), ("handheld", SystemConfig::handheld_table1())] {
            for s in [20, 100] {
                out.push((format!("{fading}/{tname}/S={s}"), with_fading(&base, fading).with_s(s)));
            }
        }
    }
    out
}

#[test]
fn criterion_1_case_probability_identity() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 50 {
        let s = rng.random_range(1..=5000u64);
        let g = geo(rng.random_range(200.0..2000.0));
        let theta = rng.random_range(0.0..80f64).to_radians();
        let omega = rng.random_range(0.0..60f64).to_radians();
        if threshold_polar_angle(omega, &g).is_err() {
            continue;
        }
        for model in [Model::Exact, Model::Approx] {
            let c = case_probs(s, &g, theta, omega, model).unwrap();
            worst = worst.max((c.p_ml + c.p_sl + c.p_inv - 1.0).abs());
        }
        checked += 1;
    }
    let el = t0.elapsed();
    let ok = worst <= 1e-12 && el < Duration::from_secs(1);
    report("1", ok, el, &format!("max |sum - 1| = {worst:e}"));
    assert!(ok);
}

#[test]
fn criterion_2_visibility() {
    let t0 = Instant::now();
    let p_vis = |a_km: f64, theta_deg: f64| {
        case_probs(100, &geo(a_km), theta_deg.to_radians(), 20f64.to_radians(), Model::Exact).unwrap().p_vis()
    };
    let p600 = p_vis(600.0, 7.7);
    let p1200 = p_vis(1200.0, 20.7);
    // visibility is largest at theta_min = 0; scan as well
    let best300 = (0..=900).map(|i| p_vis(300.0, i as f64 * 0.1)).fold(0.0f64, f64::max);
    let el = t0.elapsed();
    let ok = (p600 - 0.9).abs() <= 0.015 && (p1200 - 0.9).abs() <= 0.015 && best300 < 0.9 && el < Duration::from_secs(1);
    report("2", ok, el, &format!("P_vis(600 km, 7.7) = {p600:.4}, P_vis(1200 km, 20.7) = {p1200:.4}, max P_vis(300 km) = {best300:.4}"));
    assert!(ok);
}

#[test]
fn criterion_3_distance_law() {
    let t0 = Instant::now();
    let g = geo(600.0);
    let mut d = sample_nearest_distances(10, &g, 100_000, SEED);
    d.sort_by(f64::total_cmp);
    let n = d.len() as f64;
    let mut sup_mc = 0.0f64;
    for (i, &x) in d.iter().enumerate() {
        let f = nearest_dist(x, 10, &g, Model::Exact).unwrap().0;
        sup_mc = sup_mc.max((f - i as f64 / n).abs()).max((f - (i + 1) as f64 / n).abs());
    }
    let d_max = max_slant_range(10f64.to_radians(), &g).unwrap();
    let mut sup_model = 0.0f64;
    for i in 0..=2000 {
        let x = g.a + (d_max - g.a) * i as f64 / 2000.0;
        let e = nearest_dist(x, 100, &g, Model::Exact).unwrap().0;
        let p = nearest_dist(x, 100, &g, Model::Approx).unwrap().0;
        sup_model = sup_model.max((e - p).abs());
    }
    let el = t0.elapsed();
    let ok = sup_mc < 0.01 && sup_model < 0.01 && el < Duration::from_secs(30);
    report("3", ok, el, &format!("KS distance vs samples = {sup_mc:.5}, sup |exact - approx| = {sup_model:.2e}"));
    assert!(ok);
}

#[test]
fn criterion_4_outage_vs_monte_carlo() {
    let t0 = Instant::now();
    let rates = [0.5, 1.0, 2.0];
    let mut ok = true;
    let mut worst_z = 0.0f64;
    let mut worst_gap = 0.0f64;
    for (name, cfg) in outage_matrix() {
        // enough raw trials that at least 10^6 land in the visible region
        let p_vis = case_probs_for(cfg.s, &cfg.derived().unwrap(), Model::Exact).unwrap().p_vis();
        let trials = (1.0e6 / p_vis * 1.01 + 1000.0).ceil() as u64;
        let mc = estimate_outage_multi(&cfg, &rates, &TrialConfig::new(trials, SEED)).unwrap();
        for (&r, est) in rates.iter().zip(&mc) {
            let ex = outage_exact(&cfg, r, &ctl()).unwrap().p_out;
            let ap = outage_approx(&cfg, r, &ctl()).unwrap().p_out;
            let diff = (ex - est.mean).abs();
            let z = if est.stderr > 0.0 { diff / est.stderr } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
            let pass = est.trials_used >= 1_000_000 && diff <= 3.0 * est.stderr && (ap - ex).abs() < 0.01;
            if !pass {
                println!(
                    "  {name} R={r}: exact {ex:.6e} mc {:.6e} +- {:.2e} ({} used) approx {ap:.6e}",
                    est.mean, est.stderr, est.trials_used
                );
            }
            ok &= pass;
            worst_z = worst_z.max(z);
            worst_gap = worst_gap.max((ap - ex).abs());
        }
    }
    let el = t0.elapsed();
    ok &= el < Duration::from_secs(600);
    report("4", ok, el, &format!("max |exact - mc|/stderr = {worst_z:.2}, max |approx - exact| = {worst_gap:.2e}"));
    assert!(ok);
}

#[test]
fn criterion_5_alpha2_equivalence() {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for (_, cfg) in outage_matrix() {
        for r in [0.5, 1.0, 2.0] {
            let a = outage_approx(&cfg, r, &ctl()).unwrap();
            let b = outage_approx_alpha2(&cfg, r, &ctl()).unwrap();
            worst = worst.max((a.p_out - b.p_out).abs());
        }
    }
    let el = t0.elapsed();
    let ok = worst <= 1e-10 && el < Duration::from_secs(60);
    report("5", ok, el, &format!("max |generic - alpha2| = {worst:e}"));
    assert!(ok);
}

#[test]
fn criterion_6_asymptotic_limit() {
    let t0 = Instant::now();
    let cfg = with_fading(&SystemConfig::handheld_table1(), "ils").with_s(10_000);
    let p = outage_approx(&cfg, 1.0, &ctl()).unwrap().p_out;
    let lim = outage_asymptotic(&cfg, 1.0, &ctl()).unwrap();
    let el = t0.elapsed();
    let ok = (p - lim).abs() < 1e-3 && el < Duration::from_secs(60);
    report("6", ok, el, &format!("handheld: P_out(S = 10^4) = {p:.6e}, asymptote = {lim:.6e}"));
    assert!(ok);
}

#[test]
fn criterion_7_series_convergence() {
    let t0 = Instant::now();
    let cfg = with_fading(&SystemConfig::vsat_table1(), "as").with_s(100).with_model(Model::Approx);
    let mut worst_inc = 0.0f64;
    let mut worst_change = 0.0f64;
    for r in [0.5, 1.0, 2.0] {
        for n in 40..=200 {
            worst_inc = worst_inc.max(series_increment(n, &cfg, r).unwrap().delta.abs());
        }
        let p40 = outage_approx_truncated(&cfg, r, 40).unwrap().p_out;
        let p200 = outage_approx_truncated(&cfg, r, 200).unwrap().p_out;
        worst_change = worst_change.max((p200 - p40).abs());
    }
    let el = t0.elapsed();
    let ok = worst_inc < 1e-6 && worst_change < 1e-5 && el < Duration::from_secs(60);
    report("7", ok, el, &format!("max |increment| for N in 40..=200 = {worst_inc:e}, |P[200] - P[40]| = {worst_change:e}"));
    assert!(ok);
}

#[test]
fn criterion_8_dual_path_exact() {
    let t0 = Instant::now();
    let limits = ClosedFormLimits::default();
    let mut worst = 0.0f64;
    for base in [SystemConfig::vsat_table1(), SystemConfig::handheld_table1()] {
        for fading in ["fhs-canonical", "as", "ils"] {
            for s in [1, 5, 10, 20] {
                let cfg = with_fading(&base, fading).with_s(s);
                for r in [0.5, 1.0, 2.0] {
                    let q = outage_exact(&cfg, r, &ctl()).unwrap().p_out;
                    let c = outage_exact_closed_form(&cfg, r, &ctl(), &limits).unwrap().p_out;
                    worst = worst.max((q - c).abs());
                }
            }
        }
    }
    let big = SystemConfig::vsat_table1().with_s(100);
    let rejected = matches!(outage_exact_closed_form(&big, 1.0, &ctl(), &limits), Err(Error::CancellationOverflow { .. }));
    let el = t0.elapsed();
    let ok = worst <= 1e-8 && rejected && el < Duration::from_secs(60);
    report("8", ok, el, &format!("max |closed form - quadrature| = {worst:e}, S = 100 rejected: {rejected}"));
    assert!(ok);
}

fn vsat_case(s: u64, g_db: f64, omega_e: f64) -> SystemConfig {
    SystemConfig { rain_g: 10f64.powf(g_db / 10.0), omega_e, ..SystemConfig::vsat_table1() }
        .with_s(s)
        .with_model(Model::Approx)
}

/// Returns pass/fail, a summary line and the exhaustive optimum.
fn parity_case(s: u64, g_db: f64, omega_e: f64) -> (bool, String, Option<f64>) {
    let cfg = vsat_case(s, g_db, omega_e);
    let cons = OptConstraints::new(0.9, 0.1);
    let label = format!("S={s} g={g_db} dB omega_e={omega_e} deg");
    let it = optimize_iterative(&cfg, &cons, &ctl(), Model::Approx);
    let ex = optimize_exhaustive(&cfg, &cons, &ctl(), Model::Approx);
    match (it, ex) {
        (Ok(it), Ok(ex)) => {
            let feasible = |r: f64, th: f64| {
                visibility(th, &cfg, Model::Approx).unwrap() >= cons.eta - 1e-9
                    && outage(&cfg.with_theta(th), r, &ctl()).unwrap().p_out <= cons.epsilon + 1e-6
            };
            let ok = it.throughput >= 0.99 * ex.throughput
                && feasible(it.r_star, it.theta_star)
                && feasible(ex.r_star, ex.theta_star);
            let line = format!(
                "{label}: T_it = {:.5} (R {:.3}, theta {:.3} deg, {} iters), T_ex = {:.5} (R {:.3}, theta {:.3} deg)",
                it.throughput,
                it.r_star,
                it.theta_star.to_degrees(),
                it.iterations,
                ex.throughput,
                ex.r_star,
                ex.theta_star.to_degrees()
            );
            (ok, line, Some(ex.throughput))
        }
        (it, ex) => (false, format!("{label}: iterative {:?}, exhaustive {:?}", it.err(), ex.err()), None),
    }
}

/// Runs every case for the given sizes; also checks that the exhaustive
/// optimum does not decrease with S for each (g, omega_e) pair.
fn parity_matrix(sizes: &[u64]) -> bool {
    let mut ok = true;
    for g_db in [0.0, -3.0] {
        for omega_e in [0.0, 1.0] {
            let mut prev: Option<f64> = None;
            for &s in sizes {
                let (pass, line, t) = parity_case(s, g_db, omega_e);
                println!("  {} {line}", if pass { "ok  " } else { "FAIL" });
                ok &= pass;
                if let (Some(p), Some(t)) = (prev, t) {
                    if t < p {
                        println!("  FAIL T* decreased from {p:.5} to {t:.5} at S={s}");
                        ok = false;
                    }
                }
                prev = t;
            }
        }
    }
    ok
}

/// Full matrix. At S = 50 no elevation threshold gives P_vis >= 0.9 at 600 km,
/// so this cannot pass.
#[test]
#[ignore = "S = 50 cannot meet the visibility floor at a = 600 km"]
fn criterion_9_optimizer_parity() {
    let t0 = Instant::now();
    let mut ok = parity_matrix(&[50, 100, 200]);
    let el = t0.elapsed();
    ok &= el < Duration::from_secs(1200);
    report("9", ok, el, "S in {50, 100, 200}");
    assert!(ok);
}

#[test]
fn criterion_9_optimizer_parity_feasible_sizes() {
    let t0 = Instant::now();
    let mut ok = parity_matrix(&[100, 200]);
    // the excluded size is rejected, not answered
    let small = SystemConfig::vsat_table1().with_s(50);
    let max_vis = visibility(0.0, &small, Model::Approx).unwrap();
    let rejected = matches!(
        optimize_iterative(&small, &OptConstraints::new(0.9, 0.1), &ctl(), Model::Approx),
        Err(Error::InfeasibleVisibility { .. })
    );
    ok &= rejected && max_vis < 0.9;
    let el = t0.elapsed();
    report("9 (S in {100, 200})", ok, el, &format!("S = 50 max P_vis = {max_vis:.6}, rejected: {rejected}"));
    assert!(ok);
}

#[test]
fn criterion_10_monotonicity() {
    let t0 = Instant::now();
    let base = with_fading(&SystemConfig::handheld_table1(), "ils");
    let rates: Vec<f64> = (1..=20).map(|i| 0.25 * i as f64).collect();
    let thetas: Vec<f64> = (0..10).map(|j| (5.0 + 5.0 * j as f64).to_radians()).collect();
    let grid: Vec<Vec<f64>> = thetas
        .iter()
        .map(|&th| rates.iter().map(|&r| outage(&base.with_theta(th), r, &ctl()).unwrap().p_out).collect())
        .collect();
    let tol = 1e-12;
    let mut ok = true;
    for row in &grid {
        ok &= row.windows(2).all(|w| w[1] >= w[0] - tol);
    }
    for j in 0..rates.len() {
        ok &= grid.windows(2).all(|w| w[1][j] <= w[0][j] + tol);
    }
    let g = geo(600.0);
    let ranges: Vec<f64> = (0..=900).map(|i| max_slant_range((i as f64 * 0.1).to_radians(), &g).unwrap()).collect();
    ok &= ranges.windows(2).all(|w| w[1] < w[0]);
    let psis: Vec<f64> = (0..=600).map(|i| threshold_polar_angle((i as f64 * 0.1).to_radians(), &g).unwrap()).collect();
    ok &= psis.windows(2).all(|w| w[1] > w[0]);
    let el = t0.elapsed();
    ok &= el < Duration::from_secs(60);
    report("10", ok, el, "P_out grid 20 x 10, slant range, threshold polar angle");
    assert!(ok);
}
