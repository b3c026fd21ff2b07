//! Spherical geometry of a terminal on the Earth's surface and satellites on a
//! concentric sphere at altitude `a`.
//!
//! The terminal sits at the pole. A satellite at polar angle `ψ` has slant range
//! `d(ψ) = sqrt(r_e² + (r_e+a)² − 2 r_e (r_e+a) cos ψ)`, and the spherical cap of
//! satellites closer than `x` covers the fraction `κ(x)` of the sphere.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on inverse-trig arguments before they are treated as errors.
const TRIG_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarthGeometry {
    /// Earth radius (m).
    pub r_e: f64,
    /// Satellite altitude (m).
    pub a: f64,
}

impl EarthGeometry {
    pub fn new(r_e: f64, a: f64) -> Result<Self> {
        if !(r_e > 0.0 && r_e.is_finite()) {
            return Err(Error::validation("earth.r_e", format!("must be > 0, got {r_e}")));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::validation("constellation.a", format!("must be > 0, got {a}")));
        }
        Ok(EarthGeometry { r_e, a })
    }

    /// Radius of the satellite sphere.
    pub fn orbit_radius(&self) -> f64 {
        self.r_e + self.a
    }

    /// `4 r_e (r_e + a)`, the normaliser of `κ`.
    pub fn cap_norm(&self) -> f64 {
        4.0 * self.r_e * (self.r_e + self.a)
    }

    /// Horizon slant range `sqrt(a² + 2 r_e a)`.
    pub fn horizon_range(&self) -> f64 {
        (self.a * self.a + 2.0 * self.r_e * self.a).sqrt()
    }

    /// Farthest possible satellite, `2 r_e + a`.
    pub fn antipodal_range(&self) -> f64 {
        2.0 * self.r_e + self.a
    }

    /// Slant range of a satellite at polar angle `psi`.
    pub fn range_at_polar(&self, psi: f64) -> f64 {
        let rs = self.orbit_radius();
        // r_e² + rs² − 2 r_e rs cos ψ = a² + 4 r_e rs sin²(ψ/2)
        let h = (0.5 * psi).sin();
        (self.a * self.a + 4.0 * self.r_e * rs * h * h).sqrt()
    }
}

/// Cached geometry for one `(θ_min, ω_th)` configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometryDerived {
    pub geo: EarthGeometry,
    pub d_max: f64,
    pub psi_max: f64,
    /// Main/side-lobe boundary, clamped to `psi_max`.
    pub psi_th: f64,
    pub d_th: f64,
    pub area_total: f64,
    pub area_vis: f64,
    pub area_ml: f64,
    pub area_sl: f64,
}

fn clamp_unit(v: f64, what: &str) -> Result<f64> {
    if v > 1.0 + TRIG_SLACK || v < -1.0 - TRIG_SLACK || v.is_nan() {
        return Err(Error::domain(format!("{what} argument {v} outside [-1, 1]")));
    }
    Ok(v.clamp(-1.0, 1.0))
}

fn check_range(d: f64, geo: &EarthGeometry) -> Result<()> {
    let hi = geo.horizon_range();
    let tol = 1e-9 * hi;
    if !(d >= geo.a - tol && d <= hi + tol) {
        return Err(Error::domain(format!("slant range {d} m outside [a, sqrt(a^2 + 2 r_e a)] = [{}, {hi}]", geo.a)));
    }
    Ok(())
}

/// Maximum slant range to a satellite seen at elevation `theta_min`.
pub fn max_slant_range(theta_min: f64, geo: &EarthGeometry) -> Result<f64> {
    if !(0.0..=FRAC_PI_2).contains(&theta_min) {
        return Err(Error::domain(format!("theta_min = {theta_min} rad outside [0, pi/2]")));
    }
    let s = theta_min.sin();
    let rs = geo.r_e * s;
    let rad = (rs * rs + geo.a * geo.a + 2.0 * geo.r_e * geo.a).sqrt();
    // rad − rs rewritten to avoid cancellation at high elevation
    Ok((geo.a * geo.a + 2.0 * geo.r_e * geo.a) / (rad + rs))
}

/// Elevation angle at which the slant range reaches `d_max`; inverse of
/// [`max_slant_range`].
pub fn min_elevation_from_range(d_max: f64, geo: &EarthGeometry) -> Result<f64> {
    check_range(d_max, geo)?;
    let d = d_max.clamp(geo.a, geo.horizon_range());
    let num = (geo.a * geo.a + 2.0 * geo.r_e * geo.a) - d * d;
    Ok(clamp_unit(num / (2.0 * d * geo.r_e), "arcsin")?.asin())
}

/// Polar angle of the visibility cap edge.
pub fn max_polar_angle(d_max: f64, geo: &EarthGeometry) -> Result<f64> {
    check_range(d_max, geo)?;
    polar_angle_of_range(d_max, geo)
}

fn polar_angle_of_range(d: f64, geo: &EarthGeometry) -> Result<f64> {
    let rs = geo.orbit_radius();
    // 1 − cos ψ = (d² − a²) / (2 r_e rs); the half-angle form keeps precision near ψ = 0.
    let h2 = (d * d - geo.a * geo.a) / (4.0 * geo.r_e * rs);
    let h2 = clamp_unit(h2, "arccos")?.max(0.0);
    Ok(2.0 * h2.sqrt().asin())
}

/// Polar angle separating main-lobe and side-lobe coverage for a beam of
/// half-width `omega_th` pointed at the sub-satellite point.
pub fn threshold_polar_angle(omega_th: f64, geo: &EarthGeometry) -> Result<f64> {
    if !(omega_th >= 0.0) || omega_th > PI {
        return Err(Error::domain(format!("omega_th = {omega_th} rad must lie in [0, pi]")));
    }
    let lhs = geo.orbit_radius() * omega_th.sin();
    if lhs > geo.r_e || omega_th >= FRAC_PI_2 {
        return Err(Error::BeamMissesEarth { lhs, r_e: geo.r_e });
    }
    Ok((lhs / geo.r_e).asin() - omega_th)
}

/// Slant range of a satellite on the main/side-lobe boundary.
pub fn threshold_distance(psi_th: f64, geo: &EarthGeometry) -> Result<f64> {
    if !(0.0..=PI).contains(&psi_th) {
        return Err(Error::domain(format!("psi_th = {psi_th} rad outside [0, pi]")));
    }
    Ok(geo.range_at_polar(psi_th))
}

/// Fraction `κ(x)` of the satellite sphere within slant range `x`.
pub fn cap_fraction(x: f64, geo: &EarthGeometry) -> Result<f64> {
    let hi = geo.antipodal_range();
    if !(x >= geo.a && x <= hi) {
        return Err(Error::domain(format!("x = {x} m outside [a, 2 r_e + a] = [{}, {hi}]", geo.a)));
    }
    Ok(cap_fraction_unchecked(x, geo))
}

pub(crate) fn cap_fraction_unchecked(x: f64, geo: &EarthGeometry) -> f64 {
    ((x - geo.a) * (x + geo.a) / geo.cap_norm()).clamp(0.0, 1.0)
}

/// Inverse of [`cap_fraction`] on `[0, 1]`.
pub fn cap_fraction_inverse(y: f64, geo: &EarthGeometry) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::domain(format!("cap fraction {y} outside [0, 1]")));
    }
    Ok((geo.a * geo.a + geo.cap_norm() * y).sqrt())
}

/// Surface areas of the whole sphere, visible cap, and its main/side-lobe parts.
///
/// A beam whose main-lobe edge misses the Earth, or whose boundary lies beyond
/// the visibility cap, makes the whole visible cap main-lobe.
pub fn surface_areas(theta_min: f64, omega_th: f64, geo: &EarthGeometry) -> Result<GeometryDerived> {
    let d_max = max_slant_range(theta_min, geo)?;
    let psi_max = max_polar_angle(d_max, geo)?;
    let psi_th = match threshold_polar_angle(omega_th, geo) {
        Ok(p) => p.min(psi_max),
        Err(Error::BeamMissesEarth { .. }) => psi_max,
        Err(e) => return Err(e),
    };
    let d_th = if psi_th >= psi_max { d_max } else { threshold_distance(psi_th, geo)? };
    let rs = geo.orbit_radius();
    let area_total = 4.0 * PI * rs * rs;
    let area_vis = PI * rs * (d_max - geo.a) * (d_max + geo.a) / geo.r_e;
    let h = (0.5 * psi_th).sin();
    let area_ml = if psi_th >= psi_max { area_vis } else { (4.0 * PI * rs * rs * h * h).min(area_vis) };
    let area_sl = (area_vis - area_ml).max(0.0);
    Ok(GeometryDerived { geo: *geo, d_max, psi_max, psi_th, d_th, area_total, area_vis, area_ml, area_sl })
}

impl GeometryDerived {
    pub fn new(theta_min: f64, omega_th: f64, geo: &EarthGeometry) -> Result<Self> {
        surface_areas(theta_min, omega_th, geo)
    }

    /// `κ(d_max)`, the single-satellite visibility probability.
    pub fn q_vis(&self) -> f64 {
        cap_fraction_unchecked(self.d_max, &self.geo)
    }

    /// `κ(d_th) = (1 − cos ψ_th)/2`, the single-satellite main-lobe probability.
    pub fn q_ml(&self) -> f64 {
        if self.psi_th >= self.psi_max {
            return self.q_vis();
        }
        let h = (0.5 * self.psi_th).sin();
        h * h
    }
}
