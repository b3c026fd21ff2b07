use leo_sg::channel::{snr_coefficients, sr_cdf, SrSampler};
use leo_sg::distributions::Model;
use leo_sg::montecarlo::{estimate_case_probs, estimate_outage, estimate_throughput, estimate_visibility, TrialConfig};
use leo_sg::optimizer::{rmax_given_theta, throughput};
use leo_sg::outage::{outage_exact, series_increment};
use leo_sg::{GeometryDerived, SeriesControl, ShadowedRicianParams, SystemConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn ctl() -> SeriesControl {
    SeriesControl::default()
}

fn handheld_ils() -> SystemConfig {
    let mut c = SystemConfig::handheld_table1();
    c.set("fading", "ils").unwrap();
    c.with_model(Model::Exact)
}

fn sorted_samples(n: usize, seed: u64, mut draw: impl FnMut(&mut ChaCha8Rng) -> f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
    v.sort_by(f64::total_cmp);
    v
}

fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn large_shape_reduces_to_rician() {
    let p = ShadowedRicianParams::new(0.126, 1e6, 0.835).unwrap();
    let sr = SrSampler::new(&p);
    let n = 200_000;
    let a = sorted_samples(n, 11, |r| sr.sample(r));
    let z = Normal::new(0.0, p.b.sqrt()).unwrap();
    let b = sorted_samples(n, 12, |r| {
        let phi = r.random::<f64>() * std::f64::consts::TAU;
        let re = p.omega.sqrt() * phi.cos() + z.sample(r);
        let im = p.omega.sqrt() * phi.sin() + z.sample(r);
        re * re + im * im
    });
    let crit = 1.628 * (2.0 / n as f64).sqrt();
    let d = ks_two_sample(&a, &b);
    assert!(d < crit, "KS {d} vs {crit}");
}

#[test]
fn fhs_cdf_matches_ten_million_draws() {
    let p = ShadowedRicianParams::preset("fhs-canonical").unwrap();
    let sr = SrSampler::new(&p);
    let h = sorted_samples(10_000_000, 13, |r| sr.sample(r));
    let n = h.len();
    let mut sup = 0.0f64;
    for k in 1..400 {
        let x = h[k * n / 400];
        let emp = h.partition_point(|&v| v <= x) as f64 / n as f64;
        sup = sup.max((emp - sr_cdf(x, &p, &ctl()).unwrap()).abs());
    }
    assert!(sup < 4e-3, "sup distance {sup}");
}

#[test]
fn zero_width_beam_never_serves_from_main_lobe() {
    let c = SystemConfig::vsat_table1();
    let gd = GeometryDerived::new(c.theta_min, 0.0, &c.geometry()).unwrap();
    let [ml, sl, inv] = estimate_case_probs(20, &gd, &TrialConfig::new(100_000, 3)).unwrap();
    assert_eq!(ml.mean, 0.0);
    assert!((sl.mean + inv.mean - 1.0).abs() < 1e-12);
}

#[test]
fn gain_ratio_sets_threshold_ratio() {
    let lb = SystemConfig::vsat_table1().link_budget().unwrap();
    let (w1, w2) = snr_coefficients(1.5, &lb).unwrap();
    assert!((w2 / w1 - 10.0).abs() < 1e-9);
}

#[test]
fn throughput_matches_sampling_and_decomposes() {
    let c = handheld_ils();
    let theta = c.theta_min;
    let tc = TrialConfig::new(400_000, 17);
    let vis = estimate_visibility(&c, &tc).unwrap();
    for rate in [0.5, 1.0, 2.0, 3.0] {
        let t = throughput(rate, theta, &c, &ctl(), Model::Exact).unwrap();
        let mc = estimate_throughput(&c, rate, theta, &tc).unwrap();
        assert!((t - mc.mean).abs() < 3.0 * mc.stderr, "R={rate}: {t} vs {} ± {}", mc.mean, mc.stderr);
        let cond = estimate_outage(&c, rate, &tc).unwrap();
        let combined = vis.mean * (1.0 - cond.mean) * rate;
        let err = rate * (vis.stderr.powi(2) + cond.stderr.powi(2)).sqrt();
        assert!((combined - mc.mean).abs() < 3.0 * (err + mc.stderr), "R={rate}: {combined} vs {}", mc.mean);
    }
}

#[test]
fn outage_at_rmax_is_calibrated() {
    let c = handheld_ils();
    let eps = 0.1;
    for deg in [5.0f64, 20.0] {
        let cd = c.with_theta(deg.to_radians());
        let r = rmax_given_theta(cd.theta_min, &cd, eps, &ctl()).unwrap();
        assert!((outage_exact(&cd, r, &ctl()).unwrap().p_out - eps).abs() < 1e-6);
        let mc = estimate_outage(&cd, r, &TrialConfig::new(300_000, 19)).unwrap();
        assert!((mc.mean - eps).abs() < 3.0 * mc.stderr, "θ={deg}: {} ± {}", mc.mean, mc.stderr);
    }
}

#[test]
fn throughput_is_unimodal_in_rate() {
    let c = handheld_ils();
    let t: Vec<f64> =
        (1..=60).map(|i| throughput(0.1 * i as f64, c.theta_min, &c, &ctl(), Model::Exact).unwrap()).collect();
    let peak = t.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert!(peak > 0 && peak < t.len() - 1);
    assert!(t[..=peak].windows(2).all(|w| w[1] >= w[0]));
    assert!(t[peak..].windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn zenith_only_visibility_gives_no_throughput() {
    let c = handheld_ils().with_s(3);
    let t = throughput(1.0, 90f64.to_radians() - 1e-9, &c, &ctl(), Model::Exact).unwrap();
    assert!(t.abs() < 1e-6, "{t}");
    assert_eq!(throughput(0.0, c.theta_min, &c, &ctl(), Model::Exact).unwrap(), 0.0);
}

#[test]
fn series_increments_decay() {
    let mut c = SystemConfig::vsat_table1();
    c.set("fading", "as").unwrap();
    for rate in [0.5, 1.0, 2.0] {
        let d: Vec<f64> = (20..=80).map(|n| series_increment(n, &c, rate).unwrap().delta.abs()).collect();
        for n in 0..d.len() - 5 {
            if d[n] > 0.0 {
                assert!(d[n + 5] < d[n], "R={rate} N={}: {} !< {}", n + 20, d[n + 5], d[n]);
            }
        }
    }
}
