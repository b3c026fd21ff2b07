//! Shadowed-Rician fading, antenna gains, path loss and SNR thresholds.
//!
//! The fading CDF is evaluated as a negative-binomial mixture of Gamma CDFs:
//!
//! `F_h(x) = Σ_n π_n · P(1+n, x/2b)`, `π_n = (m)_n/n! · p^n (1−p)^m`, `p = 2bδ`,
//!
//! which is term-by-term identical to `K Σ (m)_n δ^n (2b)^{1+n}/(n!)² · γ(1+n, x/2b)`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{gamma_p, ln_gamma};

pub use crate::special::lower_inc_gamma;

/// Speed of light (m/s), as used throughout the link budget.
pub const SPEED_OF_LIGHT: f64 = 3e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowedRicianParams {
    pub b: f64,
    pub m: f64,
    pub omega: f64,
    pub k_const: f64,
    pub delta: f64,
}

impl ShadowedRicianParams {
    pub fn new(b: f64, m: f64, omega: f64) -> Result<Self> {
        for (key, v) in [("fading.b", b), ("fading.m", m), ("fading.omega", omega)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(key, format!("must be a positive finite number, got {v}")));
            }
        }
        let denom = 2.0 * b * m + omega;
        let k_const = (2.0 * b * m / denom).powf(m) / (2.0 * b);
        let delta = omega / denom / (2.0 * b);
        Ok(ShadowedRicianParams { b, m, omega, k_const, delta })
    }

    /// Named presets: `fhs-paper`, `fhs-canonical`, `as`, `ils`.
    pub fn preset(name: &str) -> Result<Self> {
        let (b, m, omega) = match name.to_ascii_lowercase().as_str() {
            "fhs-paper" => (0.063, 0.739, 8.97e4),
            "fhs-canonical" | "fhs" => (0.063, 0.739, 8.97e-4),
            "as" => (0.126, 10.1, 0.835),
            "ils" => (0.158, 19.4, 1.29),
            other => {
                return Err(Error::validation(
                    "fading",
                    format!("unknown preset `{other}` (expected fhs-paper, fhs-canonical, as, ils)"),
                ))
            }
        };
        Self::new(b, m, omega)
    }

    pub const PRESETS: [&'static str; 4] = ["fhs-paper", "fhs-canonical", "as", "ils"];

    /// Success parameter `p = 2bδ = Ω/(2bm + Ω)` of the mixing law; always in (0, 1).
    pub fn mix_p(&self) -> f64 {
        self.omega / (2.0 * self.b * self.m + self.omega)
    }

    /// `ln(1 − p) = ln(2bm/(2bm + Ω))`.
    fn ln_1m_p(&self) -> f64 {
        let two_bm = 2.0 * self.b * self.m;
        -(self.omega / two_bm).ln_1p()
    }

    /// Mean channel power `E[h] = 2b + Ω`.
    pub fn mean_power(&self) -> f64 {
        2.0 * self.b + self.omega
    }

    /// Log mixture weights `ln π_n`, produced lazily.
    pub fn log_weights(&self) -> LogWeights {
        LogWeights { m: self.m, ln_p: self.mix_p().ln(), n: 0, cur: self.m * self.ln_1m_p() }
    }
}

/// Iterator over `ln π_n` using `π_{n+1} = π_n (m+n) p/(n+1)`.
#[derive(Debug, Clone)]
pub struct LogWeights {
    m: f64,
    ln_p: f64,
    n: usize,
    cur: f64,
}

impl Iterator for LogWeights {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let out = self.cur;
        let n = self.n as f64;
        self.cur += ((self.m + n) / (n + 1.0)).ln() + self.ln_p;
        self.n += 1;
        Some(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControl {
    pub n_max: usize,
    pub tol: f64,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl { n_max: 2000, tol: 1e-12 }
    }
}

impl SeriesControl {
    pub fn validate(&self) -> Result<()> {
        if self.n_max < 1 {
            return Err(Error::validation("series.n_max", "must be >= 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::validation("series.tol", "must be > 0"));
        }
        Ok(())
    }
}

/// Sums `Σ π_n · c_n` where `c_n ∈ [0, 1]` is nonincreasing in `n`.
///
/// Stops at the first `n` where the term is below `ctl.tol` and the remaining
/// mass bound `c_n · (1 − Σ_{k≤n} π_k)` is too. Returns the sum and the number
/// of terms used.
pub(crate) fn mixture_sum<F>(p: &ShadowedRicianParams, ctl: &SeriesControl, mut coef: F) -> Result<(f64, usize)>
where
    F: FnMut(usize) -> Result<f64>,
{
    ctl.validate()?;
    let mut sum = 0.0;
    let mut cum = 0.0;
    let mut last = f64::INFINITY;
    for (n, lw) in p.log_weights().enumerate().take(ctl.n_max) {
        let w = lw.exp();
        let c = coef(n)?;
        let term = w * c;
        sum += term;
        cum += w;
        last = term;
        let tail = c * (1.0 - cum).max(0.0);
        if term < ctl.tol && tail < ctl.tol {
            return Ok((sum, n + 1));
        }
    }
    Err(Error::ConvergenceNotReached { n_max: ctl.n_max, last_term: last, tol: ctl.tol })
}

/// Shadowed-Rician CDF with adaptive truncation.
pub fn sr_cdf(x: f64, p: &ShadowedRicianParams, ctl: &SeriesControl) -> Result<f64> {
    sr_cdf_terms(x, p, ctl).map(|(v, _)| v)
}

/// Same as [`sr_cdf`], also returning the number of series terms used.
pub fn sr_cdf_terms(x: f64, p: &ShadowedRicianParams, ctl: &SeriesControl) -> Result<(f64, usize)> {
    if !(x >= 0.0) {
        return Err(Error::domain(format!("channel gain must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok((0.0, 1));
    }
    let z = x / (2.0 * p.b);
    let (v, n) = mixture_sum(p, ctl, |n| gamma_p(1.0 + n as f64, z))?;
    Ok((v.clamp(0.0, 1.0), n))
}

/// Truncated CDF using exactly terms `0..=n_last`, written in the literal
/// `K (m)_n δ^n (2b)^{1+n}/(n!)² γ(1+n, x/2b)` form.
pub fn sr_cdf_fixed(x: f64, p: &ShadowedRicianParams, n_last: usize) -> Result<f64> {
    let z = x / (2.0 * p.b);
    let ln_k = p.k_const.ln();
    let mut sum = 0.0;
    for n in 0..=n_last {
        let nf = n as f64;
        let ln_coef = ln_k + ln_gamma(p.m + nf) - ln_gamma(p.m) + nf * p.delta.ln() + (1.0 + nf) * (2.0 * p.b).ln()
            - 2.0 * ln_gamma(nf + 1.0);
        // γ(1+n, z) = n! P(1+n, z)
        let g = gamma_p(1.0 + nf, z)?;
        sum += (ln_coef + ln_gamma(nf + 1.0)).exp() * g;
    }
    Ok(sum)
}

/// Draws one channel power gain `h = |A e^{iφ} + Z|²`.
pub fn sr_sample<R: Rng + ?Sized>(p: &ShadowedRicianParams, rng: &mut R) -> f64 {
    SrSampler::new(p).sample(rng)
}

/// Reusable sampler holding the prepared component distributions.
#[derive(Debug, Clone, Copy)]
pub struct SrSampler {
    los: Gamma<f64>,
    scatter: Normal<f64>,
}

impl SrSampler {
    pub fn new(p: &ShadowedRicianParams) -> Self {
        SrSampler {
            los: Gamma::new(p.m, p.omega / p.m).expect("validated shape/scale"),
            scatter: Normal::new(0.0, p.b.sqrt()).expect("validated variance"),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let amp = self.los.sample(rng).sqrt();
        let phi = rng.random::<f64>() * 2.0 * PI;
        let re = amp * phi.cos() + self.scatter.sample(rng);
        let im = amp * phi.sin() + self.scatter.sample(rng);
        re * re + im * im
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// Satellite transmit power P (W).
    pub tx_power: f64,
    /// Carrier frequency (Hz).
    pub f_c: f64,
    /// Bandwidth W (Hz).
    pub bandwidth: f64,
    /// Noise spectral density N0 (W/Hz).
    pub noise_density: f64,
    /// Rain attenuation g (linear, ≤ 1).
    pub rain_gain: f64,
    pub alpha: f64,
    pub g_t_ml: f64,
    pub g_t_sl: f64,
    /// Effective receive gain, pointing loss included.
    pub g_r: f64,
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("link.tx_power", self.tx_power),
            ("band.f_c", self.f_c),
            ("band.W", self.bandwidth),
            ("band.N0", self.noise_density),
            ("antennas.g_t_sl", self.g_t_sl),
            ("antennas.g_r", self.g_r),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(key, format!("must be > 0, got {v}")));
            }
        }
        if !(self.rain_gain > 0.0 && self.rain_gain <= 1.0) {
            return Err(Error::validation("link.rain_g", format!("must lie in (0, 1], got {}", self.rain_gain)));
        }
        if !(self.alpha >= 2.0 && self.alpha.is_finite()) {
            return Err(Error::validation("band.alpha", format!("must be >= 2, got {}", self.alpha)));
        }
        if !(self.g_t_ml >= self.g_t_sl) {
            return Err(Error::validation("antennas.g_t_ml", "must be >= antennas.g_t_sl"));
        }
        Ok(())
    }
}

/// Sectorized transmit gain; the main-lobe boundary is inclusive.
pub fn tx_gain(omega_s: f64, lb: &LinkBudget, omega_th: f64) -> f64 {
    if omega_s.abs() <= omega_th {
        lb.g_t_ml
    } else {
        lb.g_t_sl
    }
}

/// VSAT receive gain under a pointing error of `omega_e_deg` degrees.
pub fn vsat_rx_gain(omega_e_deg: f64, g_max: f64) -> Result<f64> {
    if !(0.0..180.0).contains(&omega_e_deg) {
        return Err(Error::domain(format!("pointing error {omega_e_deg} deg outside [0, 180)")));
    }
    Ok(if omega_e_deg < 1.0 {
        g_max
    } else if omega_e_deg < 48.0 {
        10f64.powf(3.2 - 2.5 * omega_e_deg.log10())
    } else {
        0.1
    })
}

/// Path gain `(c/(4π f_c))² d^{−α}`.
pub fn path_loss(d: f64, lb: &LinkBudget) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::domain(format!("distance must be > 0, got {d}")));
    }
    let k = SPEED_OF_LIGHT / (4.0 * PI * lb.f_c);
    Ok(k * k * d.powf(-lb.alpha))
}

/// Outage thresholds `(w1, w2)`: a link at distance `d` is in outage iff
/// `h < w·d^α`, with `w1` for main-lobe and `w2` for side-lobe service.
pub fn snr_coefficients(rate: f64, lb: &LinkBudget) -> Result<(f64, f64)> {
    if !(rate >= 0.0) {
        return Err(Error::domain(format!("rate must be >= 0, got {rate}")));
    }
    let num = 16.0 * PI * PI * lb.f_c * lb.f_c * lb.noise_density * lb.bandwidth * (rate.exp2() - 1.0);
    let den = lb.tx_power * lb.rain_gain * SPEED_OF_LIGHT * SPEED_OF_LIGHT * lb.g_r;
    Ok((num / (den * lb.g_t_ml), num / (den * lb.g_t_sl)))
}
