//! Scenario configuration, built-in presets and the flat `key = value` file format.
//!
//! ```text
//! # VSAT at 600 km
//! preset = vsat-table1
//! constellation.S = 100
//! constellation.a = 600km
//! link.rain_g = -3dB
//! fading = as
//! ```
//!
//! A JSON document whose `config` member is an object of the same keys is
//! accepted too.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{vsat_rx_gain, LinkBudget, ShadowedRicianParams};
use crate::distributions::Model;
use crate::error::{Error, Result};
use crate::geometry::{EarthGeometry, GeometryDerived};
use crate::units::{fmt_f64, parse_quantity, Quantity};

pub const EARTH_RADIUS: f64 = 6_378e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    Vsat,
    Handheld,
}

impl FromStr for Terminal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vsat" => Ok(Terminal::Vsat),
            "handheld" => Ok(Terminal::Handheld),
            _ => Err(Error::validation("terminal", format!("expected vsat or handheld, got `{s}`"))),
        }
    }
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Terminal::Vsat => "vsat",
            Terminal::Handheld => "handheld",
        })
    }
}

/// How the satellite transmit power is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerSpec {
    /// EIRP density `P G_t^ml / W` (W/Hz).
    EirpDensity(f64),
    /// Transmit power P (W).
    TxPower(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub terminal: Terminal,
    pub s: u64,
    /// Altitude (m).
    pub a: f64,
    /// Earth radius (m).
    pub r_e: f64,
    pub f_c: f64,
    pub bandwidth: f64,
    pub alpha: f64,
    pub noise_density: f64,
    pub g_t_ml: f64,
    pub g_t_sl: f64,
    /// Main/side-lobe threshold angle (rad).
    pub omega_th: f64,
    /// Maximum (VSAT) or fixed (handheld) receive gain.
    pub g_r_max: f64,
    /// VSAT pointing error (deg).
    pub omega_e: f64,
    pub power: PowerSpec,
    pub rain_g: f64,
    /// Preset name, when the fading triple came from one.
    pub fading_name: Option<String>,
    pub fading: ShadowedRicianParams,
    /// Minimum elevation angle (rad).
    pub theta_min: f64,
    pub model: Model,
}

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

impl SystemConfig {
    pub fn vsat_table1() -> Self {
        SystemConfig {
            terminal: Terminal::Vsat,
            s: 100,
            a: 600e3,
            r_e: EARTH_RADIUS,
            f_c: 20e9,
            bandwidth: 100e6,
            alpha: 2.0,
            noise_density: db(-174.0) * 1e-3,
            g_t_ml: db(38.5),
            g_t_sl: db(28.5),
            omega_th: 20f64.to_radians(),
            g_r_max: db(39.7),
            omega_e: 0.0,
            power: PowerSpec::EirpDensity(db(4.0) / 1e6),
            rain_g: 1.0,
            fading_name: Some("as".into()),
            fading: ShadowedRicianParams::preset("as").expect("builtin preset"),
            theta_min: 10f64.to_radians(),
            model: Model::Exact,
        }
    }

    pub fn handheld_table1() -> Self {
        SystemConfig {
            terminal: Terminal::Handheld,
            f_c: 2e9,
            bandwidth: 10e6,
            g_t_ml: db(30.0),
            g_t_sl: db(20.0),
            g_r_max: 1.0,
            power: PowerSpec::EirpDensity(db(34.0) / 1e6),
            ..Self::vsat_table1()
        }
    }

    pub const PRESETS: [&'static str; 2] = ["vsat-table1", "handheld-table1"];

    pub fn preset(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "vsat-table1" | "vsat" => Ok(Self::vsat_table1()),
            "handheld-table1" | "handheld" => Ok(Self::handheld_table1()),
            _ => Err(Error::validation("preset", format!("unknown preset `{name}` (expected vsat-table1 or handheld-table1)"))),
        }
    }

    pub fn geometry(&self) -> EarthGeometry {
        EarthGeometry { r_e: self.r_e, a: self.a }
    }

    pub fn derived(&self) -> Result<GeometryDerived> {
        GeometryDerived::new(self.theta_min, self.omega_th, &self.geometry())
    }

    /// Satellite transmit power (W).
    pub fn tx_power(&self) -> f64 {
        match self.power {
            PowerSpec::EirpDensity(e) => e * self.bandwidth / self.g_t_ml,
            PowerSpec::TxPower(p) => p,
        }
    }

    /// Effective receive gain, including VSAT pointing loss.
    pub fn rx_gain(&self) -> Result<f64> {
        match self.terminal {
            Terminal::Vsat => vsat_rx_gain(self.omega_e, self.g_r_max),
            Terminal::Handheld => Ok(self.g_r_max),
        }
    }

    pub fn link_budget(&self) -> Result<LinkBudget> {
        let lb = LinkBudget {
            tx_power: self.tx_power(),
            f_c: self.f_c,
            bandwidth: self.bandwidth,
            noise_density: self.noise_density,
            rain_gain: self.rain_g,
            alpha: self.alpha,
            g_t_ml: self.g_t_ml,
            g_t_sl: self.g_t_sl,
            g_r: self.rx_gain()?,
        };
        lb.validate()?;
        Ok(lb)
    }

    pub fn with_theta(&self, theta_min: f64) -> Self {
        SystemConfig { theta_min, ..self.clone() }
    }

    pub fn with_model(&self, model: Model) -> Self {
        SystemConfig { model, ..self.clone() }
    }

    pub fn with_s(&self, s: u64) -> Self {
        SystemConfig { s, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s < 1 {
            return Err(Error::validation("constellation.S", "must be >= 1"));
        }
        EarthGeometry::new(self.r_e, self.a)?;
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&self.theta_min) {
            return Err(Error::validation("theta_min", "must lie in [0deg, 90deg]"));
        }
        if !(self.omega_th >= 0.0 && self.omega_th < std::f64::consts::FRAC_PI_2) {
            return Err(Error::validation("antennas.omega_th", "must lie in [0deg, 90deg)"));
        }
        if !(0.0..180.0).contains(&self.omega_e) {
            return Err(Error::validation("antennas.omega_e", "must lie in [0deg, 180deg)"));
        }
        if !(self.g_r_max > 0.0) {
            return Err(Error::validation("antennas.g_r_max", "must be > 0"));
        }
        match self.power {
            PowerSpec::EirpDensity(v) if !(v > 0.0) => {
                return Err(Error::validation("link.eirp_density", "must be > 0"));
            }
            PowerSpec::TxPower(v) if !(v > 0.0) => return Err(Error::validation("link.tx_power", "must be > 0")),
            _ => {}
        }
        ShadowedRicianParams::new(self.fading.b, self.fading.m, self.fading.omega)?;
        self.link_budget()?;
        Ok(())
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "preset" => {
                let base = Self::preset(v)?;
                *self = base;
            }
            "terminal" => self.terminal = v.parse()?,
            "model" => self.model = v.parse()?,
            "theta_min" => self.theta_min = parse_quantity(key, v, Quantity::Angle)?,
            "constellation.S" => {
                self.s = v.parse::<u64>().map_err(|_| Error::validation(key, format!("`{v}` is not a non-negative integer")))?;
                if self.s < 1 {
                    return Err(Error::validation(key, "must be >= 1"));
                }
            }
            "constellation.a" => self.a = parse_quantity(key, v, Quantity::Length)?,
            "earth.r_e" => self.r_e = parse_quantity(key, v, Quantity::Length)?,
            "band.f_c" => self.f_c = parse_quantity(key, v, Quantity::Frequency)?,
            "band.W" => self.bandwidth = parse_quantity(key, v, Quantity::Frequency)?,
            "band.alpha" => self.alpha = parse_quantity(key, v, Quantity::Real)?,
            "band.N0" => self.noise_density = parse_quantity(key, v, Quantity::Density)?,
            "antennas.g_t_ml" => self.g_t_ml = parse_quantity(key, v, Quantity::Gain)?,
            "antennas.g_t_sl" => self.g_t_sl = parse_quantity(key, v, Quantity::Gain)?,
            "antennas.omega_th" => self.omega_th = parse_quantity(key, v, Quantity::Angle)?,
            "antennas.g_r_max" => self.g_r_max = parse_quantity(key, v, Quantity::Gain)?,
            "antennas.omega_e" => self.omega_e = parse_quantity(key, v, Quantity::AngleDeg)?,
            "link.eirp_density" => self.power = PowerSpec::EirpDensity(parse_quantity(key, v, Quantity::Density)?),
            "link.tx_power" => self.power = PowerSpec::TxPower(parse_quantity(key, v, Quantity::Power)?),
            "link.rain_g" => self.rain_g = parse_quantity(key, v, Quantity::Gain)?,
            "fading" => {
                self.fading = ShadowedRicianParams::preset(v)?;
                self.fading_name = Some(v.to_ascii_lowercase());
            }
            "fading.b" | "fading.m" | "fading.omega" => {
                let x = parse_quantity(key, v, Quantity::Real)?;
                let (mut b, mut m, mut o) = (self.fading.b, self.fading.m, self.fading.omega);
                match key {
                    "fading.b" => b = x,
                    "fading.m" => m = x,
                    _ => o = x,
                }
                self.fading = ShadowedRicianParams::new(b, m, o)?;
                self.fading_name = None;
            }
            _ => return Err(Error::validation(key, "unknown configuration key")),
        }
        Ok(())
    }

    /// Flat `key = value` pairs that reproduce this configuration through [`SystemConfig::set`].
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = vec![
            ("terminal".into(), self.terminal.to_string()),
            ("model".into(), self.model.to_string()),
            ("theta_min".into(), format!("{}rad", fmt_f64(self.theta_min))),
            ("constellation.S".into(), self.s.to_string()),
            ("constellation.a".into(), format!("{}m", fmt_f64(self.a))),
            ("earth.r_e".into(), format!("{}m", fmt_f64(self.r_e))),
            ("band.f_c".into(), format!("{}Hz", fmt_f64(self.f_c))),
            ("band.W".into(), format!("{}Hz", fmt_f64(self.bandwidth))),
            ("band.alpha".into(), fmt_f64(self.alpha)),
            ("band.N0".into(), format!("{}W/Hz", fmt_f64(self.noise_density))),
            ("antennas.g_t_ml".into(), fmt_f64(self.g_t_ml)),
            ("antennas.g_t_sl".into(), fmt_f64(self.g_t_sl)),
            ("antennas.omega_th".into(), format!("{}rad", fmt_f64(self.omega_th))),
            ("antennas.g_r_max".into(), fmt_f64(self.g_r_max)),
            ("antennas.omega_e".into(), format!("{}deg", fmt_f64(self.omega_e))),
        ];
        out.push(match self.power {
            PowerSpec::EirpDensity(e) => ("link.eirp_density".into(), format!("{}W/Hz", fmt_f64(e))),
            PowerSpec::TxPower(p) => ("link.tx_power".into(), format!("{}W", fmt_f64(p))),
        });
        out.push(("link.rain_g".into(), fmt_f64(self.rain_g)));
        match &self.fading_name {
            Some(name) => out.push(("fading".into(), name.clone())),
            None => {
                out.push(("fading.b".into(), fmt_f64(self.fading.b)));
                out.push(("fading.m".into(), fmt_f64(self.fading.m)));
                out.push(("fading.omega".into(), fmt_f64(self.fading.omega)));
            }
        }
        out
    }
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self::vsat_table1()
    }
}

/// Parses configuration text on top of `base`.
pub fn parse_config(text: &str, base: SystemConfig) -> Result<SystemConfig> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        return parse_json_overlay(trimmed, base);
    }
    let mut cfg = base;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Parse { line: line_no, message: format!("expected `key = value`, got `{line}`") });
        };
        let key = key.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(Error::Parse { line: line_no, message: format!("invalid key `{key}`") });
        }
        let value = value.trim().trim_matches('"');
        if value.is_empty() {
            return Err(Error::Parse { line: line_no, message: format!("missing value for `{key}`") });
        }
        cfg.set(key, value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_json_overlay(text: &str, base: SystemConfig) -> Result<SystemConfig> {
    let doc: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?;
    let obj = doc
        .get("config")
        .and_then(|c| c.as_object())
        .ok_or_else(|| Error::Parse { line: 1, message: "JSON config needs an object member `config`".into() })?;
    let mut cfg = base;
    // `preset` resets everything, so apply it first.
    if let Some(p) = obj.get("preset") {
        cfg.set("preset", &json_scalar("preset", p)?)?;
    }
    for (k, v) in obj.iter().filter(|(k, _)| k.as_str() != "preset") {
        cfg.set(k, &json_scalar(k, v)?)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn json_scalar(key: &str, v: &serde_json::Value) -> Result<String> {
    match v {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        _ => Err(Error::validation(key, "expected a string or number")),
    }
}

/// Loads a configuration file, starting from the VSAT Table 1 defaults.
pub fn load_config(path: &Path) -> Result<SystemConfig> {
    load_config_over(path, SystemConfig::default())
}

pub fn load_config_over(path: &Path, base: SystemConfig) -> Result<SystemConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::validation("config", format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, base)
}
