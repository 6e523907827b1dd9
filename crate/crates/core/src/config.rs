//! Shared TOML config pieces. Physical quantities are strings carrying a unit
//! suffix (see [`crate::units`]); bare numbers for them are rejected.

use serde::{Deserialize, Serialize};

use crate::error::{PevError, Result};
use crate::units::{parse_quantity, Dimension};

/// One `[[family]]` table of a channel-family file.
///
/// ```toml
/// [[family]]
/// tau = 1
/// kind = "orthogonal-resolution"   # or "unitary", "general"
///
/// [[family.channel]]
/// label = "0"
/// branches = ["[1,0 0,0; 0,0 0,0]"]   # inline rows, or a path to an operator file
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<i64>,
    #[serde(default = "default_kind")]
    pub kind: String,
    /// General families only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability_conserving: Option<bool>,
    /// Repeat the family this many times at consecutive steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeat: Option<usize>,
    #[serde(default)]
    pub channel: Vec<ChannelSpec>,
}

fn default_kind() -> String {
    "general".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub branches: Vec<String>,
}

/// Top-level file holding only families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyFile {
    #[serde(default)]
    pub family: Vec<FamilySpec>,
}

pub fn parse_toml<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        PevError::Parse {
            line,
            message: e.message().to_string(),
        }
    })
}

pub fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| PevError::InvalidConfig(e.to_string()))
}

/// Parses an optional unit-suffixed field, naming the key on failure.
pub fn quantity(key: &str, value: &str, dim: Dimension) -> Result<f64> {
    parse_quantity(value, dim).map_err(|e| match e {
        PevError::InvalidConfig(m) => PevError::InvalidConfig(format!("{key}: {m}")),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_file_round_trip() {
        let text = r#"
[[family]]
tau = 1
kind = "orthogonal-resolution"

[[family.channel]]
label = "up"
branches = ["[1,0 0,0; 0,0 0,0]"]

[[family.channel]]
branches = ["p1.txt"]
"#;
        let f: FamilyFile = parse_toml(text).unwrap();
        assert_eq!(f.family.len(), 1);
        assert_eq!(f.family[0].channel.len(), 2);
        let again: FamilyFile = parse_toml(&to_toml(&f).unwrap()).unwrap();
        assert_eq!(f, again);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let err = parse_toml::<FamilyFile>("[[family]]\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, PevError::Parse { line: 2, .. }), "{err:?}");
    }
}
