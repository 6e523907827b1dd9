//! Natural units (ħ = c = 1, energies in eV) and unit-suffixed quantities.
//!
//! Conversion factors follow from ħ = 6.582119569e-16 eV·s and
//! ħc = 1.973269804e-7 eV·m.

use crate::error::{PevError, Result};

/// 1 s expressed in eV⁻¹.
pub const SECOND: f64 = 1.519_267_447e15;
/// 1 m expressed in eV⁻¹.
pub const METER: f64 = 5.067_730_716e6;

/// Physical dimension of a config quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    /// Natural unit eV⁻¹.
    Time,
    /// Natural unit eV⁻¹.
    Length,
    /// Natural unit eV.
    Energy,
}

impl Dimension {
    pub fn natural_suffix(self) -> &'static str {
        match self {
            Dimension::Time | Dimension::Length => "eV^-1",
            Dimension::Energy => "eV",
        }
    }

    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dimension::Time => &[
                ("eV^-1", 1.0),
                ("fs", 1e-15 * SECOND),
                ("ps", 1e-12 * SECOND),
                ("ns", 1e-9 * SECOND),
                ("us", 1e-6 * SECOND),
                ("ms", 1e-3 * SECOND),
                ("s", SECOND),
            ],
            Dimension::Length => &[
                ("eV^-1", 1.0),
                ("nm", 1e-9 * METER),
                ("um", 1e-6 * METER),
                ("mm", 1e-3 * METER),
                ("m", METER),
            ],
            Dimension::Energy => &[("keV", 1e3), ("MeV", 1e6), ("GeV", 1e9), ("eV", 1.0)],
        }
    }
}

/// Summary of conversion factors, written into run manifests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitConversions {
    pub second_to_inv_ev: f64,
    pub meter_to_inv_ev: f64,
}

impl Default for UnitConversions {
    fn default() -> Self {
        Self {
            second_to_inv_ev: SECOND,
            meter_to_inv_ev: METER,
        }
    }
}

/// Parses `"<number> <unit>"` (space optional) into natural units. A missing
/// or foreign suffix is an error.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64> {
    let t = text.trim();
    // Longer suffixes are listed before their tails ("ms" before "s").
    for &(suffix, factor) in dim.units() {
        if let Some(num) = t.strip_suffix(suffix) {
            let num = num.trim_end();
            if num.is_empty() {
                continue;
            }
            if let Ok(v) = num.parse::<f64>() {
                if !v.is_finite() {
                    break;
                }
                return Ok(if factor == 1.0 { v } else { v * factor });
            }
        }
    }
    Err(PevError::InvalidConfig(format!(
        "'{text}' is not a {dim:?} quantity with a unit suffix ({})",
        dim.units()
            .iter()
            .map(|u| u.0)
            .collect::<Vec<_>>()
            .join(", ")
    )))
}

/// Shortest round-trip text of a natural-unit value.
pub fn format_quantity(value: f64, dim: Dimension) -> String {
    format!("{value:?} {}", dim.natural_suffix())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes() {
        assert_eq!(
            parse_quantity("1e-7s", Dimension::Time).unwrap(),
            1e-7 * SECOND
        );
        assert_eq!(
            parse_quantity("2 ms", Dimension::Time).unwrap(),
            2.0 * (1e-3 * SECOND)
        );
        assert_eq!(
            parse_quantity("0.01 mm", Dimension::Length).unwrap(),
            0.01 * (1e-3 * METER)
        );
        assert_eq!(parse_quantity("139 MeV", Dimension::Energy).unwrap(), 139e6);
        assert_eq!(
            parse_quantity("2.5e-8 eV", Dimension::Energy).unwrap(),
            2.5e-8
        );
        assert_eq!(parse_quantity("3 eV^-1", Dimension::Length).unwrap(), 3.0);
    }

    #[test]
    fn rejects_bare_and_wrong_units() {
        assert!(parse_quantity("0.01", Dimension::Length).is_err());
        assert!(parse_quantity("1 s", Dimension::Length).is_err());
        assert!(parse_quantity("1 mm", Dimension::Energy).is_err());
        assert!(parse_quantity("mm", Dimension::Length).is_err());
        assert!(parse_quantity("inf s", Dimension::Time).is_err());
    }

    #[test]
    fn format_round_trips() {
        for v in [1.0 / 3.0, 1.519267447e5, 6.02e-17] {
            let s = format_quantity(v, Dimension::Time);
            assert_eq!(parse_quantity(&s, Dimension::Time).unwrap(), v);
        }
    }
}
