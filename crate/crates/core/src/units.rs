//! Parsing of quantities with unit suffixes.
//!
//! Angles and lengths must carry a unit. Gains and other ratios are linear
//! unless suffixed with `dB`/`dBi`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// Returned in radians; accepts `deg`, `rad`.
    Angle,
    /// Returned in degrees; accepts `deg`, `rad`.
    AngleDeg,
    /// Returned in meters; accepts `m`, `km`.
    Length,
    /// Returned in Hz; accepts `Hz`, `kHz`, `MHz`, `GHz`.
    Frequency,
    /// Linear ratio; accepts bare numbers or `dB`/`dBi`.
    Gain,
    /// W/Hz; accepts `W/Hz`, `W/MHz`, `dBW/Hz`, `dBW/MHz`, `dBm/Hz`, `dBm/MHz`.
    Density,
    /// W; accepts `W`, `mW`, `dBW`, `dBm`.
    Power,
    /// Bare real number.
    Real,
}

fn split_number(s: &str) -> (&str, &str) {
    let s = s.trim();
    let mut end = 0;
    let bytes = s.as_bytes();
    while end < bytes.len() {
        let c = bytes[end] as char;
        let exp_sign = (c == '+' || c == '-') && end > 0 && matches!(bytes[end - 1] as char, 'e' | 'E');
        let exp = (c == 'e' || c == 'E') && end > 0 && bytes.get(end + 1).is_some_and(|n| (*n as char).is_ascii_digit() || *n == b'-' || *n == b'+');
        if c.is_ascii_digit() || c == '.' || ((c == '-' || c == '+') && end == 0) || exp_sign || exp {
            end += 1;
        } else {
            break;
        }
    }
    (&s[..end], s[end..].trim())
}

/// Parses `text` as the given quantity, reporting errors against `key`.
pub fn parse_quantity(key: &str, text: &str, kind: Quantity) -> Result<f64> {
    let (num, unit) = split_number(text);
    let v: f64 = num
        .parse()
        .map_err(|_| Error::validation(key, format!("`{text}` is not a number with an optional unit")))?;
    if !v.is_finite() {
        return Err(Error::validation(key, format!("`{text}` is not finite")));
    }
    let bad_unit = |expected: &str| {
        if unit.is_empty() {
            Error::validation(key, format!("`{text}` needs a unit ({expected})"))
        } else {
            Error::validation(key, format!("unknown unit `{unit}` (expected {expected})"))
        }
    };
    let db = |x: f64| 10f64.powf(x / 10.0);
    let out = match kind {
        Quantity::Angle | Quantity::AngleDeg => {
            let rad = match unit {
                "deg" | "°" => v.to_radians(),
                "rad" => v,
                _ => return Err(bad_unit("deg or rad")),
            };
            if kind == Quantity::AngleDeg {
                if unit == "deg" || unit == "°" {
                    v
                } else {
                    rad.to_degrees()
                }
            } else {
                rad
            }
        }
        Quantity::Length => match unit {
            "m" => v,
            "km" => v * 1e3,
            _ => return Err(bad_unit("m or km")),
        },
        Quantity::Frequency => match unit {
            "Hz" => v,
            "kHz" => v * 1e3,
            "MHz" => v * 1e6,
            "GHz" => v * 1e9,
            _ => return Err(bad_unit("Hz, kHz, MHz or GHz")),
        },
        Quantity::Gain => match unit {
            "" => v,
            "dB" | "dBi" => db(v),
            _ => return Err(bad_unit("dB, dBi, or none for linear")),
        },
        Quantity::Density => match unit {
            "W/Hz" => v,
            "W/MHz" => v / 1e6,
            "dBW/Hz" => db(v),
            "dBW/MHz" => db(v) / 1e6,
            "dBm/Hz" => db(v) * 1e-3,
            "dBm/MHz" => db(v) * 1e-3 / 1e6,
            _ => return Err(bad_unit("W/Hz, W/MHz, dBW/Hz, dBW/MHz, dBm/Hz or dBm/MHz")),
        },
        Quantity::Power => match unit {
            "W" => v,
            "mW" => v * 1e-3,
            "dBW" => db(v),
            "dBm" => db(v) * 1e-3,
            _ => return Err(bad_unit("W, mW, dBW or dBm")),
        },
        Quantity::Real => {
            if !unit.is_empty() {
                return Err(Error::validation(key, format!("`{text}` takes no unit")));
            }
            v
        }
    };
    Ok(out)
}

/// Formats a value with full round-trip precision.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles_and_lengths_need_units() {
        assert!((parse_quantity("k", "10deg", Quantity::Angle).unwrap() - 10f64.to_radians()).abs() < 1e-16);
        assert_eq!(parse_quantity("k", "0.5rad", Quantity::Angle).unwrap(), 0.5);
        assert!((parse_quantity("k", "0.5rad", Quantity::AngleDeg).unwrap() - 0.5f64.to_degrees()).abs() < 1e-12);
        assert_eq!(parse_quantity("k", "600km", Quantity::Length).unwrap(), 600e3);
        assert_eq!(parse_quantity("k", "6.0e5m", Quantity::Length).unwrap(), 600e3);
        let err = parse_quantity("theta_min", "10", Quantity::Angle).unwrap_err();
        assert!(matches!(err, Error::Validation { ref key, .. } if key == "theta_min"));
        assert!(parse_quantity("a", "600", Quantity::Length).is_err());
        assert!(parse_quantity("a", "600 miles", Quantity::Length).is_err());
    }

    #[test]
    fn decibel_conversions() {
        assert!((parse_quantity("g", "30dBi", Quantity::Gain).unwrap() - 1000.0).abs() < 1e-9);
        assert_eq!(parse_quantity("g", "1000", Quantity::Gain).unwrap(), 1000.0);
        let n0 = parse_quantity("n0", "-174dBm/Hz", Quantity::Density).unwrap();
        assert!((n0 / 10f64.powf(-20.4) - 1.0).abs() < 1e-12);
        let e = parse_quantity("e", "4dBW/MHz", Quantity::Density).unwrap();
        assert!((e * 1e6 - 10f64.powf(0.4)).abs() < 1e-12);
        assert!((parse_quantity("p", "30dBm", Quantity::Power).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(parse_quantity("f", "20GHz", Quantity::Frequency).unwrap(), 20e9);
        assert_eq!(parse_quantity("x", "-3.5e-2", Quantity::Real).unwrap(), -0.035);
    }

    #[test]
    fn round_trip_format() {
        for v in [0.1, 1e-21, 6378e3, std::f64::consts::PI] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }
}
