//! Monte-Carlo oracle: uniform constellations on the sphere, nearest-visible
//! association and shadowed-Rician draws.
//!
//! Trials are split into fixed-size chunks; chunk `i` draws from the ChaCha8
//! stream `i` of the seed, so results do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{snr_coefficients, SrSampler};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::geometry::{EarthGeometry, GeometryDerived};

/// Seed used when neither a flag nor `LEO_MC_SEED` provides one.
pub const DEFAULT_SEED: u64 = 0x5EED_2024;

/// Environment variable overriding the default seed.
pub const SEED_ENV: &str = "LEO_MC_SEED";

/// Seed from `LEO_MC_SEED` if set, else [`DEFAULT_SEED`].
pub fn seed_from_env() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::validation(SEED_ENV, format!("`{v}` is not a decimal 64-bit integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Conditioning {
    Unconditional,
    VisibleOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialConfig {
    pub trials: u64,
    pub seed: u64,
    pub chunk_size: u64,
    pub conditioning: Conditioning,
}

impl TrialConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        TrialConfig { trials, seed, chunk_size: 65_536, conditioning: Conditioning::VisibleOnly }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::validation("trials", "must be >= 1"));
        }
        if self.chunk_size < 1 {
            return Err(Error::validation("chunk_size", "must be >= 1"));
        }
        Ok(())
    }

    fn chunks(&self) -> Vec<(u64, u64)> {
        let n = self.trials.div_ceil(self.chunk_size);
        (0..n).map(|i| (i, self.chunk_size.min(self.trials - i * self.chunk_size))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials_used: u64,
    pub trials_discarded: u64,
}

impl McEstimate {
    /// Proportion estimate `k/n` with binomial standard error.
    pub fn proportion(hits: u64, used: u64, discarded: u64) -> Self {
        if used == 0 {
            return McEstimate { mean: f64::NAN, stderr: f64::NAN, trials_used: 0, trials_discarded: discarded };
        }
        let p = hits as f64 / used as f64;
        McEstimate { mean: p, stderr: (p * (1.0 - p) / used as f64).sqrt(), trials_used: used, trials_discarded: discarded }
    }

    fn scaled(self, k: f64) -> Self {
        McEstimate { mean: self.mean * k, stderr: self.stderr * k, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ServingCase {
    Ml,
    Sl,
    Invisible,
}

fn stream(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Runs `f` over each chunk's stream and sums the per-chunk results in chunk order.
fn run_chunks<const K: usize, F>(tc: &TrialConfig, f: F) -> Result<[u64; K]>
where
    F: Fn(&mut ChaCha8Rng, u64) -> [u64; K] + Sync,
{
    tc.validate()?;
    let parts: Vec<[u64; K]> = tc.chunks().into_par_iter().map(|(i, n)| f(&mut stream(tc.seed, i), n)).collect();
    let mut acc = [0u64; K];
    for p in parts {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    Ok(acc)
}

/// Cap fraction `κ = (1 − cos ψ)/2` of the nearest of `s` uniform satellites.
fn nearest_fraction<R: Rng + ?Sized>(s: u64, rng: &mut R) -> f64 {
    let mut best = f64::INFINITY;
    for _ in 0..s {
        // cos ψ = 1 − 2u with u uniform ⇒ κ = u
        let cos_psi = 1.0 - 2.0 * rng.random::<f64>();
        let k = 0.5 * (1.0 - cos_psi);
        if k < best {
            best = k;
        }
    }
    best
}

/// Polar angles of `s` satellites placed uniformly on the sphere.
pub fn sample_constellation<R: Rng + ?Sized>(s: u64, rng: &mut R) -> Vec<f64> {
    (0..s).map(|_| (1.0 - 2.0 * rng.random::<f64>()).acos()).collect()
}

/// Slant range of a satellite at polar angle `psi`.
pub fn polar_to_range(psi: f64, geo: &EarthGeometry) -> f64 {
    geo.range_at_polar(psi)
}

/// Case of the nearest satellite and its slant range, if any is visible.
pub fn classify_case(constellation: &[f64], gd: &GeometryDerived) -> (ServingCase, Option<f64>) {
    let Some(psi) = constellation.iter().copied().min_by(f64::total_cmp) else {
        return (ServingCase::Invisible, None);
    };
    if psi > gd.psi_max {
        return (ServingCase::Invisible, None);
    }
    let d = gd.geo.range_at_polar(psi);
    if psi <= gd.psi_th && gd.psi_th > 0.0 {
        (ServingCase::Ml, Some(d))
    } else {
        (ServingCase::Sl, Some(d))
    }
}

/// Empirical nearest-satellite distances of `n` independent constellations.
pub fn sample_nearest_distances(s: u64, geo: &EarthGeometry, n: u64, seed: u64) -> Vec<f64> {
    let tc = TrialConfig { trials: n, seed, chunk_size: 65_536, conditioning: Conditioning::Unconditional };
    let parts: Vec<Vec<f64>> = tc
        .chunks()
        .into_par_iter()
        .map(|(i, m)| {
            let mut rng = stream(seed, i);
            (0..m).map(|_| (geo.a * geo.a + geo.cap_norm() * nearest_fraction(s, &mut rng)).sqrt()).collect()
        })
        .collect();
    parts.concat()
}

/// Frequencies of the three serving cases: `[ml, sl, invisible]`.
pub fn estimate_case_probs(s: u64, gd: &GeometryDerived, tc: &TrialConfig) -> Result<[McEstimate; 3]> {
    let (q_ml, q_vis) = (gd.q_ml(), gd.q_vis());
    let [ml, sl, inv] = run_chunks::<3, _>(tc, |rng, n| {
        let mut c = [0u64; 3];
        for _ in 0..n {
            let k = nearest_fraction(s, rng);
            let idx = if k > q_vis {
                2
            } else if k <= q_ml && q_ml > 0.0 {
                0
            } else {
                1
            };
            c[idx] += 1;
        }
        c
    })?;
    Ok([ml, sl, inv].map(|h| McEstimate::proportion(h, tc.trials, 0)))
}

/// Probability that at least one satellite is visible.
pub fn estimate_visibility(cfg: &SystemConfig, tc: &TrialConfig) -> Result<McEstimate> {
    let gd = cfg.derived()?;
    let inv = estimate_case_probs(cfg.s, &gd, tc)?[2];
    Ok(McEstimate { mean: 1.0 - inv.mean, ..inv })
}

/// Outage frequencies for several rates from the same trials.
///
/// With `VisibleOnly` conditioning, trials without a visible satellite are
/// discarded; otherwise they count as outages.
pub fn estimate_outage_multi(cfg: &SystemConfig, rates: &[f64], tc: &TrialConfig) -> Result<Vec<McEstimate>> {
    cfg.validate()?;
    let gd = cfg.derived()?;
    let lb = cfg.link_budget()?;
    let ws = rates.iter().map(|&r| snr_coefficients(r, &lb)).collect::<Result<Vec<_>>>()?;
    let sampler = SrSampler::new(&cfg.fading);
    let (q_ml, q_vis) = (gd.q_ml(), gd.q_vis());
    let (a, l, alpha, s) = (gd.geo.a, gd.geo.cap_norm(), cfg.alpha, cfg.s);
    let nr = rates.len();
    let conditioning = tc.conditioning;
    // counts: [discarded, hits for rate 0, hits for rate 1, ...]
    let counts: Vec<Vec<u64>> = {
        tc.validate()?;
        tc.chunks()
            .into_par_iter()
            .map(|(i, n)| {
                let mut rng = stream(tc.seed, i);
                let mut c = vec![0u64; nr + 1];
                for _ in 0..n {
                    let k = nearest_fraction(s, &mut rng);
                    if k > q_vis {
                        match conditioning {
                            Conditioning::VisibleOnly => c[0] += 1,
                            Conditioning::Unconditional => c[1..].iter_mut().for_each(|v| *v += 1),
                        }
                        continue;
                    }
                    let ml = k <= q_ml && q_ml > 0.0;
                    let d_pow = (a * a + l * k).powf(0.5 * alpha);
                    let h = sampler.sample(&mut rng);
                    for (j, &(w1, w2)) in ws.iter().enumerate() {
                        let w = if ml { w1 } else { w2 };
                        if h < w * d_pow {
                            c[j + 1] += 1;
                        }
                    }
                }
                c
            })
            .collect()
    };
    let mut tot = vec![0u64; nr + 1];
    for c in counts {
        for (t, v) in tot.iter_mut().zip(c) {
            *t += v;
        }
    }
    let discarded = tot[0];
    let used = tc.trials - discarded;
    Ok(tot[1..].iter().map(|&h| McEstimate::proportion(h, used, discarded)).collect())
}

pub fn estimate_outage(cfg: &SystemConfig, rate: f64, tc: &TrialConfig) -> Result<McEstimate> {
    Ok(estimate_outage_multi(cfg, &[rate], tc)?[0])
}

/// Throughput `R · P[visible ∧ no outage]` over unconditional trials.
pub fn estimate_throughput(cfg: &SystemConfig, rate: f64, theta: f64, tc: &TrialConfig) -> Result<McEstimate> {
    let c = cfg.with_theta(theta);
    let tc = TrialConfig { conditioning: Conditioning::Unconditional, ..*tc };
    let fail = estimate_outage_multi(&c, &[rate], &tc)?[0];
    let ok = McEstimate { mean: 1.0 - fail.mean, ..fail };
    Ok(ok.scaled(rate))
}
