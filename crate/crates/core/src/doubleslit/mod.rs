//! Temporal double slit: a particle passes one spatial slit that opens twice,
//! at t₁ = T_s − ε_T/2 and t₂ = T_s + ε_T/2, each time for δ_T.
//!
//! Everything is in natural units (ħ = c = 1): energies and momenta in eV,
//! times and lengths in eV⁻¹ (see [`crate::units`]). Four-vectors are arrays
//! of covariant components `[κ₀, κ₁, κ₂, κ₃]`, paired with coordinates as
//! `Σ_μ q_μ x^μ`. The source momentum is along z with covariant component
//! `k₃ = −k_z`, so the forward detector direction is `κ₃ = −k_z`.

mod chain;
mod prob;
mod scan;
mod window;

use serde::{Deserialize, Serialize};

use crate::config::quantity;
use crate::error::{PevError, Result};
use crate::units::{format_quantity, Dimension, METER, SECOND};

pub use chain::{pev_chain_demo, ChainReport};
pub use prob::{
    approx_factors, exact_temporal_factor, mean_value_weight, pion_dispersion, pion_factors,
    prob_approx, prob_exact, prob_exact_normalized, prob_pion, Factors, MassProfile,
};
pub use scan::{
    default_half_span, grid_scan, local_maxima, normalize_grid, symmetric_axis, Factor,
    ProbabilityGrid, Which,
};
pub use window::{double_window_amplitude, slit_window_integral, SlitWindow};

/// Physical parameters of the setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleSlitConfig {
    /// m̄₀ (eV).
    pub mean_mass: f64,
    /// Γ, full width of the mass band (eV).
    pub width: f64,
    /// k_z (eV).
    pub kz: f64,
    /// Spatial slit widths δ₁, δ₂, δ₃ (eV⁻¹).
    pub delta: [f64; 3],
    /// Opening duration δ_T (eV⁻¹).
    pub delta_t: f64,
    /// Separation of the openings ε_T (eV⁻¹).
    pub epsilon_t: f64,
    /// Mean opening time T_s (eV⁻¹).
    pub t_s: f64,
    /// Slit location (eV⁻¹).
    pub x_s: [f64; 3],
    /// Use the dispersion √(m² − k_z² + κ⊥²) in [`prob_pion`] instead of
    /// √(m² + k_z² + κ⊥²).
    pub minus_kz_dispersion: bool,
}

impl DoubleSlitConfig {
    /// π⁺ defaults: m = 139 MeV, Γ = 2.5e-8 eV, k_z = 200 MeV, 0.01 mm slits,
    /// ε_T = 1e-10 s, δ_T = ε_T/3, slit at the origin opening around T_s = 0.
    pub fn pion() -> Self {
        let d = 0.01e-3 * METER;
        let eps = 1e-10 * SECOND;
        Self {
            mean_mass: 139e6,
            width: 2.5e-8,
            kz: 200e6,
            delta: [d, d, d],
            delta_t: eps / 3.0,
            epsilon_t: eps,
            t_s: 0.0,
            x_s: [0.0; 3],
            minus_kz_dispersion: false,
        }
    }

    /// Sets ε_T and δ_T = ε_T/3.
    pub fn with_epsilon_t(mut self, epsilon_t: f64) -> Self {
        self.epsilon_t = epsilon_t;
        self.delta_t = epsilon_t / 3.0;
        self
    }

    /// Sets δ₁ = δ₂ = d.
    pub fn with_transverse_width(mut self, d: f64) -> Self {
        self.delta[0] = d;
        self.delta[1] = d;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.mean_mass,
            self.width,
            self.kz,
            self.delta[0],
            self.delta[1],
            self.delta[2],
            self.delta_t,
            self.epsilon_t,
            self.t_s,
            self.x_s[0],
            self.x_s[1],
            self.x_s[2],
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(PevError::InvalidConfig("non-finite parameter".into()));
        }
        if !(self.width >= 0.0) || !(self.width / 2.0 < self.mean_mass) {
            return Err(PevError::InvalidWidth {
                half_width: self.width / 2.0,
                mean_mass: self.mean_mass,
            });
        }
        if self.delta.iter().any(|&d| !(d > 0.0)) || !(self.delta_t > 0.0) {
            return Err(PevError::InvalidConfig("widths must be positive".into()));
        }
        if !(self.delta_t < self.epsilon_t) {
            return Err(PevError::InvalidConfig(format!(
                "openings overlap: delta_t = {} is not below epsilon_t = {}",
                self.delta_t, self.epsilon_t
            )));
        }
        if self.minus_kz_dispersion && !(self.kz < self.mean_mass) {
            return Err(PevError::InvalidConfig(
                "the m² − k_z² dispersion needs k_z below the mass".into(),
            ));
        }
        Ok(())
    }

    /// Ē = √(m̄₀² + k_z²).
    pub fn mean_energy(&self) -> f64 {
        self.mean_mass.hypot(self.kz)
    }

    /// Opening times (t₁, t₂).
    pub fn opening_times(&self) -> (f64, f64) {
        (
            self.t_s - self.epsilon_t / 2.0,
            self.t_s + self.epsilon_t / 2.0,
        )
    }

    pub fn from_spec(spec: &DoubleSlitSpec) -> Result<Self> {
        let d = Self::pion();
        let q = |key: &str, v: &Option<String>, dim, default: f64| -> Result<f64> {
            match v {
                Some(s) => quantity(key, s, dim),
                None => Ok(default),
            }
        };
        let epsilon_t = q("epsilon_t", &spec.epsilon_t, Dimension::Time, d.epsilon_t)?;
        let x_s = match &spec.x_s {
            Some(v) => [
                quantity("x_s", &v[0], Dimension::Length)?,
                quantity("x_s", &v[1], Dimension::Length)?,
                quantity("x_s", &v[2], Dimension::Length)?,
            ],
            None => d.x_s,
        };
        let cfg = Self {
            mean_mass: q("mass", &spec.mass, Dimension::Energy, d.mean_mass)?,
            width: q("width", &spec.width, Dimension::Energy, d.width)?,
            kz: q("kz", &spec.kz, Dimension::Energy, d.kz)?,
            delta: [
                q("delta1", &spec.delta1, Dimension::Length, d.delta[0])?,
                q("delta2", &spec.delta2, Dimension::Length, d.delta[1])?,
                q("delta3", &spec.delta3, Dimension::Length, d.delta[2])?,
            ],
            delta_t: q("delta_t", &spec.delta_t, Dimension::Time, epsilon_t / 3.0)?,
            epsilon_t,
            t_s: q("t_s", &spec.t_s, Dimension::Time, d.t_s)?,
            x_s,
            minus_kz_dispersion: spec.minus_kz_dispersion.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Spec with every field written in natural units; parsing it back gives
    /// an identical config.
    pub fn to_spec(&self) -> DoubleSlitSpec {
        let e = |v| Some(format_quantity(v, Dimension::Energy));
        let t = |v| Some(format_quantity(v, Dimension::Time));
        let l = |v| Some(format_quantity(v, Dimension::Length));
        DoubleSlitSpec {
            mass: e(self.mean_mass),
            width: e(self.width),
            kz: e(self.kz),
            delta1: l(self.delta[0]),
            delta2: l(self.delta[1]),
            delta3: l(self.delta[2]),
            delta_t: t(self.delta_t),
            epsilon_t: t(self.epsilon_t),
            t_s: t(self.t_s),
            x_s: Some(self.x_s.map(|v| format_quantity(v, Dimension::Length))),
            minus_kz_dispersion: Some(self.minus_kz_dispersion),
        }
    }
}

impl Default for DoubleSlitConfig {
    fn default() -> Self {
        Self::pion()
    }
}

/// Config-file form of [`DoubleSlitConfig`]; every value carries a unit
/// suffix. Omitted fields take the pion defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoubleSlitSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kz: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta1: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta2: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta3: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_t: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_t: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_s: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_s: Option<[String; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minus_kz_dispersion: Option<bool>,
}

/// Detector four-momentum κ with the two derived quantities kept separately
/// for precision: the energy detuning D = Ē − κ₀ and the mass-shell offset
/// κ_μκ^μ − m̄₀². Near the pion shell both are many orders of magnitude
/// below κ₀, so forming them from κ₀ directly would lose every digit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorMomentum {
    pub kappa: [f64; 4],
    pub energy_detuning: f64,
    pub mass_sq_offset: f64,
}

impl DetectorMomentum {
    /// From explicit components (no cancellation protection).
    pub fn from_four_vector(cfg: &DoubleSlitConfig, kappa: [f64; 4]) -> Self {
        let m = cfg.mean_mass;
        let k2 =
            kappa[0] * kappa[0] - kappa[1] * kappa[1] - kappa[2] * kappa[2] - kappa[3] * kappa[3];
        Self {
            kappa,
            energy_detuning: cfg.mean_energy() - kappa[0],
            mass_sq_offset: k2 - m * m,
        }
    }

    /// κ₀ on the mean mass shell for the given spatial components.
    pub fn on_shell(cfg: &DoubleSlitConfig, k1: f64, k2: f64, k3: f64) -> Self {
        let m = cfg.mean_mass;
        let perp = k1 * k1 + k2 * k2;
        let k0 = (m * m + perp + k3 * k3).sqrt();
        let e = cfg.mean_energy();
        let d = ((cfg.kz - k3) * (cfg.kz + k3) - perp) / (e + k0);
        Self {
            kappa: [k0, k1, k2, k3],
            energy_detuning: d,
            mass_sq_offset: 0.0,
        }
    }

    /// Forward direction κ₃ = −k_z on the shell.
    pub fn forward(cfg: &DoubleSlitConfig, k1: f64, k2: f64) -> Self {
        Self::on_shell(cfg, k1, k2, -cfg.kz)
    }

    /// κ₀ = Ē − D for a given detuning D.
    pub fn with_detuning(cfg: &DoubleSlitConfig, k1: f64, k2: f64, k3: f64, d: f64) -> Self {
        let e = cfg.mean_energy();
        let perp = k1 * k1 + k2 * k2;
        Self {
            kappa: [e - d, k1, k2, k3],
            energy_detuning: d,
            mass_sq_offset: (cfg.kz - k3) * (cfg.kz + k3) - perp - d * (2.0 * e - d),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_toml, to_toml};

    #[test]
    fn defaults_validate() {
        let c = DoubleSlitConfig::pion();
        c.validate().unwrap();
        assert!((c.delta[0] - 50.677_307_16).abs() < 1e-8);
        assert!((c.epsilon_t - 1.519_267_447e5).abs() < 1e-6);
    }

    #[test]
    fn invalid_configs() {
        let mut c = DoubleSlitConfig::pion();
        c.width = 3e8;
        assert!(matches!(c.validate(), Err(PevError::InvalidWidth { .. })));
        let mut c = DoubleSlitConfig::pion();
        c.delta_t = c.epsilon_t;
        assert!(c.validate().is_err());
        let mut c = DoubleSlitConfig::pion();
        c.minus_kz_dispersion = true;
        assert!(c.validate().is_err());
    }

    #[test]
    fn spec_round_trip() {
        let text = r#"
mass = "139 MeV"
width = "2.5e-8 eV"
kz = "200 MeV"
delta1 = "0.01 mm"
delta2 = "0.01 mm"
delta3 = "0.01 mm"
epsilon_t = "1e-10 s"
x_s = ["0 m", "1 um", "0 m"]
"#;
        let spec: DoubleSlitSpec = parse_toml(text).unwrap();
        let c = DoubleSlitConfig::from_spec(&spec).unwrap();
        assert_eq!(c.delta_t, c.epsilon_t / 3.0);
        let again: DoubleSlitSpec = parse_toml(&to_toml(&c.to_spec()).unwrap()).unwrap();
        assert_eq!(DoubleSlitConfig::from_spec(&again).unwrap(), c);
    }

    #[test]
    fn bare_numbers_rejected() {
        let spec: DoubleSlitSpec = parse_toml("delta1 = \"0.01\"\n").unwrap();
        assert!(matches!(
            DoubleSlitConfig::from_spec(&spec),
            Err(PevError::InvalidConfig(_))
        ));
    }

    #[test]
    fn detector_constructors_agree() {
        let c = DoubleSlitConfig::pion();
        let a = DetectorMomentum::on_shell(&c, 3.0, -2.0, -c.kz + 1e3);
        let b = DetectorMomentum::from_four_vector(&c, a.kappa);
        assert!((a.energy_detuning - b.energy_detuning).abs() < 1e-7);
        let w = DetectorMomentum::with_detuning(&c, 3.0, -2.0, -c.kz + 1e3, a.energy_detuning);
        assert!(w.mass_sq_offset.abs() < 1e-6 * c.mean_mass);
        let f = DetectorMomentum::forward(&c, 0.0, 0.0);
        assert_eq!(f.energy_detuning, 0.0);
    }
}
