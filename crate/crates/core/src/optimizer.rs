//! Throughput `T = P_vis (1 − P_out) R` and its maximization over the rate `R`
//! and the minimum elevation angle `θ_min`, subject to `P_vis ≥ η` and
//! `P_out ≤ ε`.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::SeriesControl;
use crate::config::SystemConfig;
use crate::distributions::{case_probs_for, Model};
use crate::error::{Error, Result};
use crate::geometry::{cap_fraction_inverse, min_elevation_from_range};
use crate::outage::outage;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptConstraints {
    pub eta: f64,
    pub epsilon: f64,
    /// Rate step (bps/Hz).
    pub delta_r: f64,
    /// Elevation step (rad).
    pub delta_theta: f64,
    /// Upper rate bound of the exhaustive grid (bps/Hz).
    pub r_hat: f64,
    pub max_iters: usize,
}

impl OptConstraints {
    pub fn new(eta: f64, epsilon: f64) -> Self {
        OptConstraints { eta, epsilon, delta_r: 0.01, delta_theta: 0.1f64.to_radians(), r_hat: 10.0, max_iters: 200 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::validation("eta", "must lie in (0, 1)"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::validation("eps", "must lie in (0, 1)"));
        }
        if !(self.delta_r > 0.0) || !(self.delta_theta > 0.0) {
            return Err(Error::validation("delta", "grid steps must be > 0"));
        }
        if !(self.r_hat > 0.0) {
            return Err(Error::validation("r_hat", "must be > 0"));
        }
        if self.max_iters < 1 {
            return Err(Error::validation("max_iters", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub r: f64,
    pub theta: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptResult {
    pub r_star: f64,
    pub theta_star: f64,
    pub throughput: f64,
    pub iterations: usize,
    pub trace: Vec<TracePoint>,
}

/// Visibility probability at `theta_min` under `model`.
pub fn visibility(theta_min: f64, cfg: &SystemConfig, model: Model) -> Result<f64> {
    let c = cfg.with_theta(theta_min);
    Ok(case_probs_for(c.s, &c.derived()?, model)?.p_vis())
}

fn p_out(rate: f64, theta: f64, cfg: &SystemConfig, ctl: &SeriesControl) -> Result<f64> {
    Ok(outage(&cfg.with_theta(theta), rate, ctl)?.p_out)
}

/// System throughput with both factors taken from `model`.
pub fn throughput(rate: f64, theta_min: f64, cfg: &SystemConfig, ctl: &SeriesControl, model: Model) -> Result<f64> {
    if !(rate >= 0.0) {
        return Err(Error::domain(format!("rate must be >= 0, got {rate}")));
    }
    if rate == 0.0 {
        return Ok(0.0);
    }
    let c = cfg.with_theta(theta_min).with_model(model);
    let gd = c.derived()?;
    let p_vis = case_probs_for(c.s, &gd, model)?.p_vis();
    if p_vis == 0.0 {
        return Ok(0.0);
    }
    Ok(p_vis * (1.0 - outage(&c, rate, ctl)?.p_out) * rate)
}

/// Largest `θ_min` meeting `P_vis ≥ η` under the configured model.
pub fn theta_upper_bound(cfg: &SystemConfig, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::validation("eta", "must lie in (0, 1)"));
    }
    let geo = cfg.geometry();
    let s = cfg.s as f64;
    // single-satellite cap fraction needed for P_vis = η
    let q = match cfg.model {
        Model::Exact => -((-eta).ln_1p() / s).exp_m1(),
        Model::Approx => -(-eta).ln_1p() / s,
    };
    if q > 1.0 {
        return Err(Error::InfeasibleVisibility { eta });
    }
    let d_req = cap_fraction_inverse(q, &geo)?;
    if d_req > geo.horizon_range() {
        return Err(Error::InfeasibleVisibility { eta });
    }
    Ok(min_elevation_from_range(d_req.max(geo.a), &geo)?.min(FRAC_PI_2))
}

const RATE_CAP: f64 = 1024.0;

/// Largest rate with `P_out(R, θ) ≤ ε`, to within `1e−6` of `ε`.
pub fn rmax_given_theta(theta: f64, cfg: &SystemConfig, epsilon: f64, ctl: &SeriesControl) -> Result<f64> {
    let f = |r: f64| p_out(r, theta, cfg, ctl);
    if f(1e-12)? > epsilon {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi)? <= epsilon {
        lo = hi;
        if hi >= RATE_CAP {
            return Ok(hi);
        }
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let p = f(mid)?;
        if p <= epsilon {
            lo = mid;
            if epsilon - p < 1e-6 {
                break;
            }
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Smallest `θ_min ∈ [0, theta_hi]` with `P_out(R, θ) ≤ ε`, to within `1e−8` rad.
pub fn theta0_given_r(rate: f64, cfg: &SystemConfig, epsilon: f64, ctl: &SeriesControl, theta_hi: f64) -> Result<f64> {
    let f = |t: f64| p_out(rate, t, cfg, ctl);
    if rate == 0.0 || f(0.0)? <= epsilon {
        return Ok(0.0);
    }
    if f(theta_hi)? > epsilon {
        return Err(Error::InfeasibleRate { rate, epsilon, theta_max_deg: theta_hi.to_degrees() });
    }
    let (mut lo, mut hi) = (0.0, theta_hi);
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? <= epsilon {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes `g` on `[lo, hi]`: grid of step `step`, then golden-section
/// refinement on the cells adjacent to the best grid point.
fn grid_golden<G>(g: G, lo: f64, hi: f64, step: f64) -> Result<(f64, f64)>
where
    G: Fn(f64) -> Result<f64>,
{
    if hi <= lo {
        return Ok((lo, g(lo)?));
    }
    let cells = ((hi - lo) / step).ceil().max(1.0) as usize;
    let mut pts: Vec<f64> = (0..=cells).map(|i| (lo + i as f64 * step).min(hi)).collect();
    pts.dedup();
    let mut best = (pts[0], g(pts[0])?);
    let mut best_i = 0;
    for (i, &x) in pts.iter().enumerate().skip(1) {
        let v = g(x)?;
        if v > best.1 {
            best = (x, v);
            best_i = i;
        }
    }
    let mut a = pts[best_i.saturating_sub(1)];
    let mut b = pts[(best_i + 1).min(pts.len() - 1)];
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = g(c)?;
    let mut fd = g(d)?;
    while (b - a) > 1e-9 * (1.0 + b.abs()) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = g(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = g(d)?;
        }
    }
    for (x, v) in [(c, fc), (d, fd)] {
        if v > best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

/// Alternating maximization over `R` (given `θ`) and `θ` (given `R`), started
/// at the visibility bound and continued while the throughput improves.
pub fn optimize_iterative(cfg: &SystemConfig, cons: &OptConstraints, ctl: &SeriesControl, model: Model) -> Result<OptResult> {
    cons.validate()?;
    let cfg = cfg.with_model(model);
    let mu = theta_upper_bound(&cfg, cons.eta)?;
    let t = |r: f64, th: f64| throughput(r, th, &cfg, ctl, model);
    let mut theta = mu;
    let mut trace: Vec<TracePoint> = Vec::new();
    let mut best: Option<TracePoint> = None;
    let mut t_hat = 0.0;
    for i in 0..cons.max_iters {
        let t_max = t_hat;
        let r_max = rmax_given_theta(theta, &cfg, cons.epsilon, ctl)?;
        let (r, _) = grid_golden(|r| t(r, theta), 0.0, r_max, cons.delta_r)?;
        let theta0 = theta0_given_r(r, &cfg, cons.epsilon, ctl, mu)?;
        let (th, v) = grid_golden(|th| t(r, th), theta0, mu, cons.delta_theta)?;
        theta = th;
        t_hat = v;
        let pt = TracePoint { r, theta: th, t: v };
        // a final non-improving iterate is reported only through the iteration count
        if best.is_none_or(|b| v >= b.t) {
            trace.push(pt);
        }
        if best.is_none_or(|b| v > b.t) {
            best = Some(pt);
        }
        if t_hat <= t_max + 1e-9 {
            let b = best.expect("at least one iterate");
            return Ok(OptResult { r_star: b.r, theta_star: b.theta, throughput: b.t, iterations: i + 1, trace });
        }
    }
    let b = best.expect("max_iters >= 1");
    Err(Error::IterationCapReached {
        best: Box::new(OptResult { r_star: b.r, theta_star: b.theta, throughput: b.t, iterations: cons.max_iters, trace }),
    })
}

/// Grid search over `θ_j = jΔθ ≤ 90°` and `R_i = iΔR ≤ R̂`, checking both
/// constraints at every cell.
pub fn optimize_exhaustive(cfg: &SystemConfig, cons: &OptConstraints, ctl: &SeriesControl, model: Model) -> Result<OptResult> {
    cons.validate()?;
    let cfg = cfg.with_model(model);
    let n_theta = (FRAC_PI_2 / cons.delta_theta + 1e-9).floor() as usize;
    let n_r = (cons.r_hat / cons.delta_r + 1e-9).floor() as usize;
    let rows: Vec<Option<TracePoint>> = (0..=n_theta)
        .into_par_iter()
        .map(|j| -> Result<Option<TracePoint>> {
            let theta = (j as f64 * cons.delta_theta).min(FRAC_PI_2);
            let c = cfg.with_theta(theta);
            let p_vis = case_probs_for(c.s, &c.derived()?, model)?.p_vis();
            if p_vis < cons.eta {
                return Ok(None);
            }
            let mut best: Option<TracePoint> = None;
            for i in 1..=n_r {
                let r = i as f64 * cons.delta_r;
                let p = outage(&c, r, ctl)?.p_out;
                if p > cons.epsilon {
                    continue;
                }
                let v = p_vis * (1.0 - p) * r;
                if best.is_none_or(|b| v > b.t) {
                    best = Some(TracePoint { r, theta, t: v });
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<TracePoint> = None;
    // rows are in increasing θ; strict comparison keeps the smallest θ, then R
    for pt in rows.into_iter().flatten() {
        if best.is_none_or(|b| pt.t > b.t) {
            best = Some(pt);
        }
    }
    let b = best.ok_or(Error::NoFeasiblePoint)?;
    Ok(OptResult { r_star: b.r, theta_star: b.theta, throughput: b.t, iterations: 1, trace: vec![b] })
}
