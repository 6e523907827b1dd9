//! `key=value` run manifests. Entries keep insertion order and carry no
//! timestamps, so a rerun with the same config and seed writes the same bytes.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use pev::io::write_atomic;
use pev::units::UnitConversions;
use pev::Result;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::new(), |mut s, b| {
            write!(s, "{b:02x}").unwrap();
            s
        })
}

#[derive(Debug, Default)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, effective_config: &str, source: Option<&[u8]>) -> Self {
        let mut m = Self::default();
        let units = UnitConversions::default();
        m.set("command", command);
        m.set("version", env!("CARGO_PKG_VERSION"));
        m.set("seed", seed);
        m.set("config_file", "config.toml");
        m.set("config_sha256", sha256_hex(effective_config.as_bytes()));
        if let Some(src) = source {
            m.set("source_config_sha256", sha256_hex(src));
        }
        m.set(
            "unit_second_in_inv_eV",
            format!("{:?}", units.second_to_inv_ev),
        );
        m.set(
            "unit_meter_in_inv_eV",
            format!("{:?}", units.meter_to_inv_ev),
        );
        m
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    /// Records an output file name and the hash of its contents.
    pub fn output(&mut self, name: &str, bytes: &[u8]) {
        self.set(&format!("output.{name}"), sha256_hex(bytes));
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            writeln!(s, "{k}={v}").unwrap();
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join("manifest.txt"), self.to_text().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
