//! Distance laws of the nearest and serving satellite, and the probabilities
//! of the three serving cases (main lobe, side lobe, none visible).
//!
//! The exact model treats the constellation as a binomial point process with
//! void probability `(1 − κ)^S`; the approximate model replaces it with the
//! Poisson limit `exp(−Sκ)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cap_fraction_unchecked, EarthGeometry, GeometryDerived};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Binomial point process.
    Exact,
    /// Poisson approximation.
    Approx,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Exact => "exact",
            Model::Approx => "approx",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" | "exact_bpp" | "bpp" => Ok(Model::Exact),
            "approx" | "approx_ppp" | "ppp" => Ok(Model::Approx),
            _ => Err(Error::validation("model", format!("expected `exact` or `approx`, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    Nearest,
    ServingMl,
    ServingSl,
}

impl FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "nearest" => Ok(DistanceKind::Nearest),
            "serving_ml" | "ml" => Ok(DistanceKind::ServingMl),
            "serving_sl" | "sl" => Ok(DistanceKind::ServingSl),
            _ => Err(Error::validation("kind", format!("expected nearest, serving_ml or serving_sl, got `{s}`"))),
        }
    }
}

/// Support of a distance law together with its kind and model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceLaw {
    pub kind: DistanceKind,
    pub model: Model,
    pub lo: f64,
    pub hi: f64,
}

impl DistanceLaw {
    pub fn new(kind: DistanceKind, model: Model, gd: &GeometryDerived) -> Self {
        let (lo, hi) = match kind {
            DistanceKind::Nearest => (gd.geo.a, gd.geo.antipodal_range()),
            DistanceKind::ServingMl => (gd.geo.a, gd.d_th),
            DistanceKind::ServingSl => (gd.d_th, gd.d_max),
        };
        DistanceLaw { kind, model, lo, hi }
    }

    pub fn eval(&self, x: f64, s: u64, gd: &GeometryDerived) -> Result<(f64, f64)> {
        match self.kind {
            DistanceKind::Nearest => nearest_dist(x, s, &gd.geo, self.model),
            DistanceKind::ServingMl => serving_ml_dist(x, s, gd, self.model),
            DistanceKind::ServingSl => serving_sl_dist(x, s, gd, self.model),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaseProbabilities {
    pub p_ml: f64,
    pub p_sl: f64,
    pub p_inv: f64,
    pub model: Model,
}

impl CaseProbabilities {
    pub fn p_vis(&self) -> f64 {
        1.0 - self.p_inv
    }
}

/// Probability that none of `s` satellites falls in a cap of fraction `q`.
pub fn void_probability(q: f64, s: u64, model: Model) -> f64 {
    let s = s as f64;
    match model {
        Model::Exact => (s * (-q).ln_1p()).exp(),
        Model::Approx => (-s * q).exp(),
    }
}

/// `1 − void_probability`, without cancellation for small caps.
pub fn hit_probability(q: f64, s: u64, model: Model) -> f64 {
    let s = s as f64;
    match model {
        Model::Exact => -(s * (-q).ln_1p()).exp_m1(),
        Model::Approx => -(-s * q).exp_m1(),
    }
}

fn check_s(s: u64) -> Result<()> {
    if s == 0 {
        return Err(Error::validation("constellation.S", "must be >= 1"));
    }
    Ok(())
}

/// Density factor `S x / (2 r_e (r_e + a))` times the void probability of the
/// cap within `x` (with exponent `S − 1` in the exact model).
fn nearest_pdf(x: f64, s: u64, geo: &EarthGeometry, model: Model) -> f64 {
    let k = cap_fraction_unchecked(x, geo);
    let lead = s as f64 * x / (2.0 * geo.r_e * geo.orbit_radius());
    match model {
        Model::Exact => lead * ((s - 1) as f64 * (-k).ln_1p()).exp(),
        Model::Approx => lead * (-(s as f64) * k).exp(),
    }
}

/// CDF and PDF of the nearest-satellite distance.
pub fn nearest_dist(x: f64, s: u64, geo: &EarthGeometry, model: Model) -> Result<(f64, f64)> {
    check_s(s)?;
    if x.is_nan() {
        return Err(Error::domain("distance is NaN"));
    }
    if x < geo.a {
        return Ok((0.0, 0.0));
    }
    if x > geo.antipodal_range() {
        let cdf = match model {
            Model::Exact => 1.0,
            Model::Approx => hit_probability(1.0, s, model),
        };
        return Ok((cdf, 0.0));
    }
    let k = cap_fraction_unchecked(x, geo);
    Ok((hit_probability(k, s, model), nearest_pdf(x, s, geo, model)))
}

/// `F_D(d_th)`, the probability that the nearest satellite is main-lobe.
fn mass_ml(s: u64, gd: &GeometryDerived, model: Model) -> f64 {
    hit_probability(gd.q_ml(), s, model)
}

fn mass_sl(s: u64, gd: &GeometryDerived, model: Model) -> f64 {
    void_probability(gd.q_ml(), s, model) - void_probability(gd.q_vis(), s, model)
}

/// Normaliser of the main-lobe serving law; errors when it vanishes.
pub fn serving_ml_mass(s: u64, gd: &GeometryDerived, model: Model) -> Result<f64> {
    check_s(s)?;
    let m = mass_ml(s, gd, model);
    if !(m > 0.0) || gd.d_th <= gd.geo.a {
        return Err(Error::DegenerateConditioning("main-lobe region is empty (F_D(d_th) = 0)".into()));
    }
    Ok(m)
}

/// Normaliser of the side-lobe serving law; errors when it vanishes.
pub fn serving_sl_mass(s: u64, gd: &GeometryDerived, model: Model) -> Result<f64> {
    check_s(s)?;
    let m = mass_sl(s, gd, model);
    if !(m > 0.0) || gd.d_th >= gd.d_max {
        return Err(Error::DegenerateConditioning("side-lobe region is empty (F_D(d_max) <= F_D(d_th))".into()));
    }
    Ok(m)
}

/// Law of the serving distance given the serving satellite is main-lobe.
pub fn serving_ml_dist(x: f64, s: u64, gd: &GeometryDerived, model: Model) -> Result<(f64, f64)> {
    let norm = serving_ml_mass(s, gd, model)?;
    if x < gd.geo.a {
        return Ok((0.0, 0.0));
    }
    if x >= gd.d_th {
        let pdf = if x == gd.d_th { nearest_pdf(x, s, &gd.geo, model) / norm } else { 0.0 };
        return Ok((1.0, pdf));
    }
    let (cdf, pdf) = nearest_dist(x, s, &gd.geo, model)?;
    Ok(((cdf / norm).min(1.0), pdf / norm))
}

/// Law of the serving distance given the serving satellite is side-lobe.
pub fn serving_sl_dist(x: f64, s: u64, gd: &GeometryDerived, model: Model) -> Result<(f64, f64)> {
    let norm = serving_sl_mass(s, gd, model)?;
    if x < gd.d_th {
        return Ok((0.0, 0.0));
    }
    if x > gd.d_max {
        return Ok((1.0, 0.0));
    }
    let v_th = void_probability(gd.q_ml(), s, model);
    let v_x = void_probability(cap_fraction_unchecked(x, &gd.geo), s, model);
    let cdf = ((v_th - v_x) / norm).clamp(0.0, 1.0);
    Ok((cdf, nearest_pdf(x, s, &gd.geo, model) / norm))
}

/// Probabilities of the three serving cases for a derived geometry.
pub fn case_probs_for(s: u64, gd: &GeometryDerived, model: Model) -> Result<CaseProbabilities> {
    check_s(s)?;
    let p_ml = mass_ml(s, gd, model);
    let v_ml = void_probability(gd.q_ml(), s, model);
    let p_inv = void_probability(gd.q_vis(), s, model);
    Ok(CaseProbabilities { p_ml, p_sl: (v_ml - p_inv).max(0.0), p_inv, model })
}

pub fn case_probs(s: u64, geo: &EarthGeometry, theta_min: f64, omega_th: f64, model: Model) -> Result<CaseProbabilities> {
    let gd = GeometryDerived::new(theta_min, omega_th, geo)?;
    case_probs_for(s, &gd, model)
}
