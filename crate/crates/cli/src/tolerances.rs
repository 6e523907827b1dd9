//! Named tolerance overrides, from the `[tolerances]` table and repeated
//! `--tolerance NAME=VALUE` flags (flags win).

use std::collections::BTreeMap;

use pev::evolution::{FamilyDiagnostics, FAMILY_TOL};
use pev::hilbert::{Tolerances, DEFAULT_CLUSTER_TOL};
use pev::{PevError, Result};

/// Names of individual family checks; each may be overridden on its own.
pub const CHECK_NAMES: &[&str] = &[
    "hermiticity",
    "idempotency",
    "orthogonality",
    "completeness",
    "unitarity",
    "finite_trace",
    "probability_conserving",
];

/// Density (`herm`, `pos`, `trace`), family-wide (`family`), spectral
/// (`cluster`, `reconstruction`) and per-check names.
pub const NAMES: &[&str] = &[
    "herm",
    "pos",
    "trace",
    "family",
    "cluster",
    "reconstruction",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Tols {
    pub density: Tolerances,
    pub family: f64,
    pub cluster: f64,
    pub reconstruction: f64,
    pub per_check: BTreeMap<String, f64>,
}

impl Default for Tols {
    fn default() -> Self {
        Self {
            density: Tolerances::default(),
            family: FAMILY_TOL,
            cluster: DEFAULT_CLUSTER_TOL,
            reconstruction: 1e-10,
            per_check: BTreeMap::new(),
        }
    }
}

pub fn parse_override(s: &str) -> Result<(String, f64)> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| PevError::InvalidConfig(format!("tolerance '{s}' is not NAME=VALUE")))?;
    let v: f64 = value.trim().parse().map_err(|_| {
        PevError::InvalidConfig(format!("tolerance value '{value}' is not a number"))
    })?;
    Ok((name.trim().to_string(), v))
}

impl Tols {
    pub fn from_map(map: &BTreeMap<String, f64>) -> Result<Self> {
        let mut t = Self::default();
        for (name, &v) in map {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(PevError::InvalidConfig(format!(
                    "tolerance {name} = {v} must be finite and non-negative"
                )));
            }
            match name.as_str() {
                "herm" => t.density.herm = v,
                "pos" => t.density.pos = v,
                "trace" => t.density.trace = v,
                "family" => t.family = v,
                "cluster" => t.cluster = v,
                "reconstruction" => t.reconstruction = v,
                n if CHECK_NAMES.contains(&n) => {
                    t.per_check.insert(n.to_string(), v);
                }
                _ => {
                    return Err(PevError::InvalidConfig(format!(
                        "unknown tolerance '{name}' (known: {}, {})",
                        NAMES.join(", "),
                        CHECK_NAMES.join(", ")
                    )))
                }
            }
        }
        Ok(t)
    }

    /// Re-judges each check against its per-check override, if any.
    pub fn apply(&self, diag: &mut FamilyDiagnostics) {
        for c in &mut diag.checks {
            if let Some(&tol) = self.per_check.get(c.name.as_str()) {
                c.tolerance = tol;
                c.passed = c.residual <= tol;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides() {
        let mut m = BTreeMap::new();
        m.insert("completeness".to_string(), 1e-2);
        m.insert("herm".to_string(), 1e-6);
        let t = Tols::from_map(&m).unwrap();
        assert_eq!(t.density.herm, 1e-6);
        assert_eq!(t.per_check["completeness"], 1e-2);
        assert_eq!(
            parse_override("family=1e-3").unwrap(),
            ("family".into(), 1e-3)
        );
        assert!(parse_override("family").is_err());
        m.insert("nonsense".to_string(), 1.0);
        assert!(Tols::from_map(&m).is_err());
    }
}
