//! Outage probability conditioned on at least one visible satellite.
//!
//! With the fading CDF written as `F_h(x) = Σ π_n P(1+n, x/2b)`, every outage
//! quantity is a mixture `Σ π_n J_n` where `J_n` is the expectation of
//! `P(1+n, w Y^α / 2b)` over the serving distance `Y`. The evaluators below
//! differ only in how `J_n` is obtained.

use serde::Serialize;

use crate::channel::{mixture_sum, snr_coefficients, sr_cdf_terms, SeriesControl, ShadowedRicianParams};
use crate::config::SystemConfig;
use crate::distributions::{case_probs_for, hit_probability, void_probability, CaseProbabilities, Model};
use crate::error::{Error, Result};
use crate::geometry::{cap_fraction_unchecked, GeometryDerived};
use crate::quadrature::{integrate, QuadOptions};
use crate::special::{gamma_p, gamma_p_diff, ln_gamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutageMethod {
    ExactClosed,
    ExactQuadrature,
    Approx,
    ApproxAlpha2,
    Asymptotic,
}

impl std::fmt::Display for OutageMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OutageMethod::ExactClosed => "exact_closed",
            OutageMethod::ExactQuadrature => "exact_quadrature",
            OutageMethod::Approx => "approx",
            OutageMethod::ApproxAlpha2 => "approx_alpha2",
            OutageMethod::Asymptotic => "asymptotic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutageResult {
    pub p_out: f64,
    pub p_out_ml: f64,
    pub p_out_sl: f64,
    pub n_used: usize,
    pub method: OutageMethod,
    pub cases: CaseProbabilities,
}

/// Validity limits of the closed-form exact evaluator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormLimits {
    /// Largest constellation size accepted.
    pub s_cap: u64,
    /// Largest tolerated `log10(max |term| / |sum|)`.
    pub max_cancellation_decades: f64,
}

impl Default for ClosedFormLimits {
    fn default() -> Self {
        ClosedFormLimits { s_cap: 30, max_cancellation_decades: 12.0 }
    }
}

fn quad_opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 4000 }
}

/// Everything an evaluator needs for one `(cfg, R)` pair.
#[derive(Debug, Clone)]
struct Setup {
    gd: GeometryDerived,
    fading: ShadowedRicianParams,
    s: u64,
    alpha: f64,
    w1: f64,
    w2: f64,
    cases: CaseProbabilities,
}

impl Setup {
    fn new(cfg: &SystemConfig, rate: f64, model: Model) -> Result<Self> {
        cfg.validate()?;
        let gd = cfg.derived()?;
        let lb = cfg.link_budget()?;
        let (w1, w2) = snr_coefficients(rate, &lb)?;
        let cases = case_probs_for(cfg.s, &gd, model)?;
        if !(cases.p_ml > 0.0 || cases.p_sl > 0.0) {
            return Err(Error::DegenerateConditioning("no satellite can be visible".into()));
        }
        Ok(Setup { gd, fading: cfg.fading, s: cfg.s, alpha: cfg.alpha, w1, w2, cases })
    }

    fn z(&self, w: f64, x: f64) -> f64 {
        w * x.powf(self.alpha) / (2.0 * self.fading.b)
    }

    fn combine(&self, ml: f64, sl: f64) -> f64 {
        let c = &self.cases;
        let mut acc = 0.0;
        if c.p_ml > 0.0 {
            acc += c.p_ml * ml;
        }
        if c.p_sl > 0.0 {
            acc += c.p_sl * sl;
        }
        (acc / (c.p_ml + c.p_sl)).clamp(0.0, 1.0)
    }

    fn zero(&self, method: OutageMethod) -> OutageResult {
        OutageResult { p_out: 0.0, p_out_ml: 0.0, p_out_sl: 0.0, n_used: 0, method, cases: self.cases }
    }
}

/// Per-lobe mixture sums; a lobe with zero serving probability is skipped.
fn lobes<F>(st: &Setup, ctl: &SeriesControl, method: OutageMethod, mut j: F) -> Result<OutageResult>
where
    F: FnMut(Lobe, usize) -> Result<f64>,
{
    let mut n_used = 0;
    let mut p = [0.0; 2];
    for (i, lobe) in [Lobe::Main, Lobe::Side].into_iter().enumerate() {
        let weight = if lobe == Lobe::Main { st.cases.p_ml } else { st.cases.p_sl };
        if weight > 0.0 {
            let (v, n) = mixture_sum(&st.fading, ctl, |n| Ok(j(lobe, n)?.clamp(0.0, 1.0)))?;
            p[i] = v.clamp(0.0, 1.0);
            n_used = n_used.max(n);
        }
    }
    Ok(OutageResult { p_out: st.combine(p[0], p[1]), p_out_ml: p[0], p_out_sl: p[1], n_used, method, cases: st.cases })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Lobe {
    Main,
    Side,
}

/// Exact outage by per-term adaptive quadrature over the serving distance.
pub fn outage_exact(cfg: &SystemConfig, rate: f64, ctl: &SeriesControl) -> Result<OutageResult> {
    let st = Setup::new(cfg, rate, Model::Exact)?;
    if rate == 0.0 {
        return Ok(st.zero(OutageMethod::ExactQuadrature));
    }
    let geo = st.gd.geo;
    let s = st.s;
    let lead = 2.0 * s as f64 / geo.cap_norm();
    let mass_ml = hit_probability(st.gd.q_ml(), s, Model::Exact);
    let mass_sl = void_probability(st.gd.q_ml(), s, Model::Exact) - void_probability(st.gd.q_vis(), s, Model::Exact);
    lobes(&st, ctl, OutageMethod::ExactQuadrature, |lobe, n| {
        let (lo, hi, w, mass) = match lobe {
            Lobe::Main => (geo.a, st.gd.d_th, st.w1, mass_ml),
            Lobe::Side => (st.gd.d_th, st.gd.d_max, st.w2, mass_sl),
        };
        let shape = 1.0 + n as f64;
        // integrate in u = x − lo so the nodes resolve the region next to the lower edge
        let f = |u: f64| {
            let x = lo + u;
            let k = cap_fraction_unchecked(x, &geo);
            let dens = lead * x * ((s - 1) as f64 * (-k).ln_1p()).exp();
            gamma_p(shape, st.z(w, x)).unwrap_or(f64::NAN) * dens
        };
        Ok(integrate(f, 0.0, hi - lo, &quad_opts())?.value / mass)
    })
}

/// Signed compensated summation of terms given as `(sign, ln |value|)`.
#[derive(Debug, Default)]
struct LogSum {
    sum: f64,
    comp: f64,
    max_ln: f64,
    any: bool,
}

impl LogSum {
    fn add(&mut self, sign: f64, ln_mag: f64) {
        if ln_mag == f64::NEG_INFINITY || sign == 0.0 {
            return;
        }
        if !self.any || ln_mag > self.max_ln {
            self.max_ln = ln_mag;
        }
        self.any = true;
        let v = sign * ln_mag.exp();
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// `log10(max |term| / |sum|)`.
    fn cancellation_decades(&self) -> f64 {
        let v = self.value().abs();
        if !self.any {
            return 0.0;
        }
        if v == 0.0 {
            return f64::INFINITY;
        }
        (self.max_ln - v.ln()) / std::f64::consts::LN_10
    }
}

fn ln_abs(x: f64) -> (f64, f64) {
    if x == 0.0 {
        (0.0, f64::NEG_INFINITY)
    } else {
        (x.signum(), x.abs().ln())
    }
}

fn ln_binom(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Exact outage from the binomial expansion of `(1 − κ)^{S−1}`.
///
/// Only accepted for `S ≤ limits.s_cap`, and rejected whenever the alternating
/// sum loses more than `limits.max_cancellation_decades` decades.
pub fn outage_exact_closed_form(
    cfg: &SystemConfig,
    rate: f64,
    ctl: &SeriesControl,
    limits: &ClosedFormLimits,
) -> Result<OutageResult> {
    if cfg.s > limits.s_cap {
        return Err(Error::CancellationOverflow {
            reason: format!(
                "S = {} exceeds the closed-form cap of {}; the alternating binomial sum is not reliable in f64",
                cfg.s, limits.s_cap
            ),
        });
    }
    let st = Setup::new(cfg, rate, Model::Exact)?;
    if rate == 0.0 {
        return Ok(st.zero(OutageMethod::ExactClosed));
    }
    let geo = st.gd.geo;
    let s = st.s;
    let big_b = geo.antipodal_range();
    // 2S (B²/L)^S, with B² = L + a²
    let ln_pref = (2.0 * s as f64).ln() + s as f64 * (geo.a * geo.a / geo.cap_norm()).ln_1p();
    let mass_ml = hit_probability(st.gd.q_ml(), s, Model::Exact);
    let mass_sl = void_probability(st.gd.q_ml(), s, Model::Exact) - void_probability(st.gd.q_vis(), s, Model::Exact);
    lobes(&st, ctl, OutageMethod::ExactClosed, |lobe, n| {
        let (lo, hi, w, mass) = match lobe {
            Lobe::Main => (geo.a, st.gd.d_th, st.w1, mass_ml),
            Lobe::Side => (st.gd.d_th, st.gd.d_max, st.w2, mass_sl),
        };
        let nf = n as f64;
        let (xi_lo, xi_hi) = (lo / big_b, hi / big_b);
        let (z_lo, z_hi) = (st.z(w, lo), st.z(w, hi));
        let ln_c = (w * big_b.powf(st.alpha) / (2.0 * st.fading.b)).ln();
        let p_lo = gamma_p(1.0 + nf, z_lo)?;
        let p_hi = gamma_p(1.0 + nf, z_hi)?;
        let mut sum = LogSum::default();
        for k in 0..s {
            let kk = 2.0 * (k as f64 + 1.0);
            let j = kk / st.alpha;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let ln_bin = ln_binom(s - 1, k) + ln_pref - kk.ln();
            sum.add(sign, ln_bin + kk * xi_hi.ln() + p_hi.ln());
            sum.add(-sign, ln_bin + kk * xi_lo.ln() + p_lo.ln());
            let (dsign, ln_d) = ln_abs(gamma_p_diff(1.0 + nf + j, z_lo, z_hi)?);
            let ln_g = -j * ln_c + ln_gamma(1.0 + nf + j) - ln_gamma(1.0 + nf);
            sum.add(-sign * dsign, ln_bin + ln_g + ln_d);
        }
        let decades = sum.cancellation_decades();
        let v = sum.value() / mass;
        if decades > limits.max_cancellation_decades && v.abs() > ctl.tol {
            return Err(Error::CancellationOverflow {
                reason: format!("term n = {n} loses {decades:.1} decades to cancellation"),
            });
        }
        Ok(v)
    })
}

/// Integration-by-parts form of the Poisson-law expectation of `P(1+n, w x^α/2b)`
/// over `[lo, hi]`, before normalisation:
///
/// `∫_{z_lo}^{z_hi} g_{1+n}(t) e^{−Sκ(x(t))} dt + e^{−Sκ(lo)} P(1+n, z_lo) − e^{−Sκ(hi)} P(1+n, z_hi)`
///
/// with `g_{1+n}` the Gamma(1+n) density and `x(t) = (2bt/w)^{1/α}`.
fn approx_bracket(st: &Setup, n: usize, lo: f64, hi: f64, w: f64) -> Result<f64> {
    let geo = st.gd.geo;
    let sf = st.s as f64;
    let nf = n as f64;
    let (z_lo, z_hi) = (st.z(w, lo), st.z(w, hi));
    let ln_nfact = ln_gamma(1.0 + nf);
    let two_b_over_w = 2.0 * st.fading.b / w;
    let f = |u: f64| {
        let t = z_lo + u;
        if t <= 0.0 {
            return if n == 0 { (-sf * cap_fraction_unchecked(lo, &geo)).exp() } else { 0.0 };
        }
        let x = (two_b_over_w * t).powf(1.0 / st.alpha);
        let k = (x - geo.a) * (x + geo.a) / geo.cap_norm();
        (nf * t.ln() - t - ln_nfact - sf * k).exp()
    };
    let integral = integrate(f, 0.0, z_hi - z_lo, &quad_opts())?.value;
    let v_lo = (-sf * cap_fraction_unchecked(lo, &geo)).exp();
    let v_hi = (-sf * cap_fraction_unchecked(hi, &geo)).exp();
    Ok(integral + v_lo * gamma_p(1.0 + nf, z_lo)? - v_hi * gamma_p(1.0 + nf, z_hi)?)
}

/// Closed form of [`approx_bracket`] for `α = 2`, where the integral is a
/// Gamma-CDF difference with scaled argument.
fn alpha2_bracket(st: &Setup, n: usize, lo: f64, hi: f64, w: f64) -> Result<f64> {
    let geo = st.gd.geo;
    let sf = st.s as f64;
    let nf = n as f64;
    let l = geo.cap_norm();
    let (z_lo, z_hi) = (st.z(w, lo), st.z(w, hi));
    let w3 = 1.0 + sf * 2.0 * st.fading.b / (w * l);
    let ln_scale = sf * geo.a * geo.a / l - (1.0 + nf) * w3.ln();
    let integral = ln_scale.exp() * gamma_p_diff(1.0 + nf, w3 * z_lo, w3 * z_hi)?;
    let v_lo = (-sf * cap_fraction_unchecked(lo, &geo)).exp();
    let v_hi = (-sf * cap_fraction_unchecked(hi, &geo)).exp();
    Ok(integral + v_lo * gamma_p(1.0 + nf, z_lo)? - v_hi * gamma_p(1.0 + nf, z_hi)?)
}

fn approx_with<F>(st: &Setup, ctl: &SeriesControl, method: OutageMethod, bracket: F) -> Result<OutageResult>
where
    F: Fn(&Setup, usize, f64, f64, f64) -> Result<f64>,
{
    let geo = st.gd.geo;
    let s = st.s;
    let mass_ml = hit_probability(st.gd.q_ml(), s, Model::Approx);
    let mass_sl = void_probability(st.gd.q_ml(), s, Model::Approx) - void_probability(st.gd.q_vis(), s, Model::Approx);
    lobes(st, ctl, method, |lobe, n| match lobe {
        Lobe::Main => Ok(bracket(st, n, geo.a, st.gd.d_th, st.w1)? / mass_ml),
        Lobe::Side => Ok(bracket(st, n, st.gd.d_th, st.gd.d_max, st.w2)? / mass_sl),
    })
}

/// Approximate (Poisson) outage with the `t`-integrals evaluated by quadrature.
pub fn outage_approx(cfg: &SystemConfig, rate: f64, ctl: &SeriesControl) -> Result<OutageResult> {
    let st = Setup::new(cfg, rate, Model::Approx)?;
    if rate == 0.0 {
        return Ok(st.zero(OutageMethod::Approx));
    }
    approx_with(&st, ctl, OutageMethod::Approx, approx_bracket)
}

/// Approximate outage for free-space propagation (`α = 2`), fully closed form.
pub fn outage_approx_alpha2(cfg: &SystemConfig, rate: f64, ctl: &SeriesControl) -> Result<OutageResult> {
    if cfg.alpha != 2.0 {
        return Err(Error::domain(format!("closed-form approximation requires alpha = 2, got {}", cfg.alpha)));
    }
    let st = Setup::new(cfg, rate, Model::Approx)?;
    if rate == 0.0 {
        return Ok(st.zero(OutageMethod::ApproxAlpha2));
    }
    approx_with(&st, ctl, OutageMethod::ApproxAlpha2, alpha2_bracket)
}

/// Large-constellation limit: the serving satellite sits at the nadir distance `a`.
pub fn outage_asymptotic(cfg: &SystemConfig, rate: f64, ctl: &SeriesControl) -> Result<f64> {
    cfg.validate()?;
    let (w1, _) = snr_coefficients(rate, &cfg.link_budget()?)?;
    Ok(sr_cdf_terms(w1 * cfg.a.powf(cfg.alpha), &cfg.fading, ctl)?.0)
}

/// Outage under the configured model, choosing the fastest faithful path.
pub fn outage(cfg: &SystemConfig, rate: f64, ctl: &SeriesControl) -> Result<OutageResult> {
    match cfg.model {
        Model::Exact => outage_exact(cfg, rate, ctl),
        Model::Approx if cfg.alpha == 2.0 => outage_approx_alpha2(cfg, rate, ctl),
        Model::Approx => outage_approx(cfg, rate, ctl),
    }
}

/// `N`-th term of the approximate outage series, per lobe and combined with
/// the approximate case weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesIncrement {
    pub n: usize,
    pub delta_ml: f64,
    pub delta_sl: f64,
    pub delta: f64,
}

fn approx_term(st: &Setup, lobe: Lobe, n: usize) -> Result<f64> {
    let geo = st.gd.geo;
    let s = st.s;
    let bracket = |lo, hi, w| if st.alpha == 2.0 { alpha2_bracket(st, n, lo, hi, w) } else { approx_bracket(st, n, lo, hi, w) };
    let j = match lobe {
        Lobe::Main => {
            if st.cases.p_ml == 0.0 {
                return Ok(0.0);
            }
            bracket(geo.a, st.gd.d_th, st.w1)? / hit_probability(st.gd.q_ml(), s, Model::Approx)
        }
        Lobe::Side => {
            if st.cases.p_sl == 0.0 {
                return Ok(0.0);
            }
            let mass = void_probability(st.gd.q_ml(), s, Model::Approx) - void_probability(st.gd.q_vis(), s, Model::Approx);
            bracket(st.gd.d_th, st.gd.d_max, st.w2)? / mass
        }
    };
    let ln_w = st.fading.log_weights().nth(n).expect("infinite iterator");
    Ok(ln_w.exp() * j.clamp(0.0, 1.0))
}

/// Increment `P̄_out[N] − P̄_out[N−1]` of the truncated approximate outage.
pub fn series_increment(n: usize, cfg: &SystemConfig, rate: f64) -> Result<SeriesIncrement> {
    if n < 1 {
        return Err(Error::domain("series index N must be >= 1"));
    }
    let st = Setup::new(cfg, rate, Model::Approx)?;
    if rate == 0.0 {
        return Ok(SeriesIncrement { n, delta_ml: 0.0, delta_sl: 0.0, delta: 0.0 });
    }
    let delta_ml = approx_term(&st, Lobe::Main, n)?;
    let delta_sl = approx_term(&st, Lobe::Side, n)?;
    let c = &st.cases;
    let delta = (c.p_ml * delta_ml + c.p_sl * delta_sl) / (c.p_ml + c.p_sl);
    Ok(SeriesIncrement { n, delta_ml, delta_sl, delta })
}

/// Approximate outage truncated to series terms `0..=n_last`.
pub fn outage_approx_truncated(cfg: &SystemConfig, rate: f64, n_last: usize) -> Result<OutageResult> {
    let st = Setup::new(cfg, rate, Model::Approx)?;
    let method = if cfg.alpha == 2.0 { OutageMethod::ApproxAlpha2 } else { OutageMethod::Approx };
    if rate == 0.0 {
        return Ok(st.zero(method));
    }
    let mut ml = 0.0;
    let mut sl = 0.0;
    for n in 0..=n_last {
        ml += approx_term(&st, Lobe::Main, n)?;
        sl += approx_term(&st, Lobe::Side, n)?;
    }
    Ok(OutageResult { p_out: st.combine(ml, sl), p_out_ml: ml, p_out_sl: sl, n_used: n_last + 1, method, cases: st.cases })
}
