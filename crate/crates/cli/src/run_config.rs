//! The run configuration shared by every subcommand. One TOML file with a
//! section per subcommand; physical quantities carry unit suffixes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pev::config::{parse_toml, quantity, to_toml};
use pev::doubleslit::DoubleSlitSpec;
use pev::units::Dimension;
use pev::Result;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    /// Tolerance overrides by name (see [`crate::tolerances`]).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doubleslit: Option<DoubleSlitSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<UncertaintySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub causality: Option<CausalitySection>,
}

/// Channel families and initial state for `validate` and `evolve`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    /// Family file (relative to the config file).
    pub families: String,
    /// Inline `[re,im ...; ...]` rows or an operator file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<String>,
    /// Hermitian operators for the spectral suite.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observables: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_cap: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Energy, e.g. `"0.1 eV"`; defaults to the ε_T-scaled span.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_span: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub which: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintySection {
    pub n_t: usize,
    pub dt: String,
    pub sigma_min: String,
    pub sigma_max: String,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<MassPacketSection>,
}

/// A 2D packet for the mass-operator uncertainty relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassPacketSection {
    pub n_t: usize,
    pub n_x: usize,
    pub dt: String,
    pub dx: String,
    pub sigma_t: String,
    pub sigma_x: String,
    pub k0: String,
    pub k1: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CausalitySection {
    pub n_t: usize,
    pub n_x: usize,
    pub dt: String,
    pub dx: String,
    pub t0: String,
    pub x0: String,
    pub vertex_t: String,
    #[serde(default)]
    pub packet: Vec<PacketSection>,
}

/// A width of `"0 eV^-1"` puts the packet on the single nearest node along
/// that axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSection {
    pub name: String,
    pub center_t: String,
    pub center_x: String,
    pub sigma_t: String,
    pub sigma_x: String,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        parse_toml(text)
    }

    pub fn to_text(&self) -> Result<String> {
        to_toml(self)
    }
}

/// A loaded config file together with the directory relative paths refer to.
pub struct Loaded {
    pub config: RunConfig,
    pub base_dir: PathBuf,
    /// Raw bytes of the file, for the manifest hash.
    pub source: Option<Vec<u8>>,
}

pub fn load(path: Option<&Path>) -> Result<Loaded> {
    let Some(path) = path else {
        return Ok(Loaded {
            config: RunConfig::default(),
            base_dir: PathBuf::from("."),
            source: None,
        });
    };
    let bytes =
        std::fs::read(path).map_err(|e| pev::PevError::Io(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8_lossy(&bytes);
    let config = RunConfig::parse(&text)?;
    let base_dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(Loaded {
        config,
        base_dir,
        source: Some(bytes),
    })
}

pub fn time(key: &str, v: &str) -> Result<f64> {
    quantity(key, v, Dimension::Time)
}

pub fn length(key: &str, v: &str) -> Result<f64> {
    quantity(key, v, Dimension::Length)
}

pub fn energy(key: &str, v: &str) -> Result<f64> {
    quantity(key, v, Dimension::Energy)
}
