use std::fmt;
use std::sync::Arc;

use crate::error::Result;
use crate::generators::MassShellBand;
use crate::hilbert::C64;
use crate::quadrature::{integrate, QuadOptions};
use crate::special::j0;

use super::{DetectorMomentum, DoubleSlitConfig};

/// Mass-squared profile ã across the band, as a function of the mass
/// offset u = m − m̄₀ ∈ [−Γ/2, Γ/2].
#[derive(Clone, Default)]
pub enum MassProfile {
    /// ã constant in m².
    #[default]
    Uniform,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl MassProfile {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            MassProfile::Uniform => 1.0,
            MassProfile::Custom(f) => f(u),
        }
    }
}

impl fmt::Debug for MassProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MassProfile::Uniform => f.write_str("Uniform"),
            MassProfile::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Spatial envelope, band indicator and temporal factor of a probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factors {
    pub spatial: f64,
    pub band: f64,
    pub temporal: f64,
}

impl Factors {
    pub fn product(&self) -> f64 {
        self.spatial * self.band * self.temporal
    }
}

fn temporal(cfg: &DoubleSlitConfig, d: f64) -> f64 {
    let a = (d * cfg.epsilon_t / 2.0).cos() * j0(d * cfg.delta_t / 2.0);
    a * a
}

/// Δ(κ⊥) = √(E² + κ⊥²) − E with E² = m² + k_z², or m² − k_z² with
/// `minus_kz_dispersion`. Written in a cancellation-free form.
pub fn pion_dispersion(cfg: &DoubleSlitConfig, perp_sq: f64) -> f64 {
    let e2 = if cfg.minus_kz_dispersion {
        (cfg.mean_mass - cfg.kz) * (cfg.mean_mass + cfg.kz)
    } else {
        cfg.mean_mass * cfg.mean_mass + cfg.kz * cfg.kz
    };
    let e = e2.sqrt();
    perp_sq / ((e2 + perp_sq).sqrt() + e)
}

pub fn pion_factors(cfg: &DoubleSlitConfig, k1: f64, k2: f64) -> Factors {
    let s = j0(k1 * cfg.delta[0] / 2.0) * j0(k2 * cfg.delta[1] / 2.0);
    Factors {
        spatial: s * s,
        band: 1.0,
        temporal: temporal(cfg, pion_dispersion(cfg, k1 * k1 + k2 * k2)),
    }
}

/// On-shell forward detection probability as a function of (κ₁, κ₂);
/// equal to 1 at the origin.
pub fn prob_pion(cfg: &DoubleSlitConfig, k1: f64, k2: f64) -> f64 {
    pion_factors(cfg, k1, k2).product()
}

pub fn approx_factors(cfg: &DoubleSlitConfig, det: &DetectorMomentum) -> Factors {
    let k = det.kappa;
    let s = j0(k[1] * cfg.delta[0] / 2.0)
        * j0(k[2] * cfg.delta[1] / 2.0)
        * j0((cfg.kz + k[3]) * cfg.delta[2] / 2.0);
    let band = MassShellBand {
        mean_mass: cfg.mean_mass,
        width: cfg.width,
    };
    Factors {
        spatial: s * s,
        band: if band.contains_offset(det.mass_sq_offset) {
            1.0
        } else {
            0.0
        },
        temporal: temporal(cfg, det.energy_detuning),
    }
}

/// Mean-value (narrow band) approximation, unnormalized.
pub fn prob_approx(cfg: &DoubleSlitConfig, det: &DetectorMomentum) -> f64 {
    approx_factors(cfg, det).product()
}

/// |∫ d(m²) ã/(2E) e^{−iδE·T_s} cos((E−κ₀)ε_T/2) j₀((E−κ₀)δ_T/2)|² over the
/// band, with E = √(m² + k_z²) and δE = E − Ē (the constant phase e^{−iĒT_s}
/// is dropped).
pub fn exact_temporal_factor(
    cfg: &DoubleSlitConfig,
    det: &DetectorMomentum,
    profile: &MassProfile,
    opts: &QuadOptions,
) -> Result<f64> {
    let (m, kz) = (cfg.mean_mass, cfg.kz);
    let eb = cfg.mean_energy();
    let d = det.energy_detuning;
    let f = |u: f64| {
        let mu = m + u;
        let e = mu.hypot(kz);
        let de = u * (2.0 * m + u) / (e + eb);
        let q = de + d;
        // d(m²) = 2(m̄ + u) du, divided by 2E.
        let w = profile.eval(u) * mu / e;
        let a = (q * cfg.epsilon_t / 2.0).cos() * j0(q * cfg.delta_t / 2.0);
        C64::from_polar(w * a, -de * cfg.t_s)
    };
    let h = cfg.width / 2.0;
    let r = integrate(f, -h, h, opts)?;
    Ok(r.value.norm_sqr())
}

/// (∫ d(m²) ã / (2Ē))², the weight pulled out by the mean-value theorem.
pub fn mean_value_weight(cfg: &DoubleSlitConfig, profile: &MassProfile) -> Result<f64> {
    let (m, h) = (cfg.mean_mass, cfg.width / 2.0);
    let eb = cfg.mean_energy();
    let w = match profile {
        MassProfile::Uniform => m * cfg.width / eb,
        MassProfile::Custom(_) => {
            let r = integrate(
                |u| C64::new(profile.eval(u) * (m + u) / eb, 0.0),
                -h,
                h,
                &QuadOptions::default(),
            )?;
            r.value.re
        }
    };
    Ok(w * w)
}

/// Band-integrated probability (unnormalized). A zero-width band returns
/// [`prob_approx`].
pub fn prob_exact(
    cfg: &DoubleSlitConfig,
    det: &DetectorMomentum,
    profile: &MassProfile,
) -> Result<f64> {
    let f = approx_factors(cfg, det);
    if cfg.width == 0.0 {
        return Ok(f.product());
    }
    if f.spatial * f.band == 0.0 {
        return Ok(0.0);
    }
    let t = exact_temporal_factor(cfg, det, profile, &QuadOptions::default())?;
    Ok(f.spatial * f.band * t)
}

/// [`prob_exact`] divided by [`mean_value_weight`], directly comparable with
/// [`prob_approx`].
pub fn prob_exact_normalized(
    cfg: &DoubleSlitConfig,
    det: &DetectorMomentum,
    profile: &MassProfile,
) -> Result<f64> {
    if cfg.width == 0.0 {
        return Ok(prob_approx(cfg, det));
    }
    Ok(prob_exact(cfg, det, profile)? / mean_value_weight(cfg, profile)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pion_origin_is_one() {
        let c = DoubleSlitConfig::pion();
        assert_eq!(prob_pion(&c, 0.0, 0.0), 1.0);
    }

    #[test]
    fn pion_spatial_zero() {
        let c = DoubleSlitConfig::pion();
        let k1 = 2.0 * PI / c.delta[0];
        assert!(prob_pion(&c, k1, 0.0) < 1e-30);
    }

    #[test]
    fn pion_temporal_dark_ring() {
        let c = DoubleSlitConfig::pion();
        // Δ = π/ε_T, inverted for κ⊥.
        let dl = PI / c.epsilon_t;
        let e = c.mean_energy();
        let perp = (dl * (dl + 2.0 * e)).sqrt();
        assert!(pion_factors(&c, perp, 0.0).temporal < 1e-18);
    }

    #[test]
    fn approx_center_and_next_fringe() {
        let c = DoubleSlitConfig::pion();
        let center = DetectorMomentum::forward(&c, 0.0, 0.0);
        assert_eq!(prob_approx(&c, &center), 1.0);
        let d = 2.0 * PI / c.epsilon_t;
        let next = DetectorMomentum::with_detuning(&c, 0.0, 0.0, -c.kz, d);
        let f = approx_factors(&c, &next);
        assert!((f.temporal / j0(d * c.delta_t / 2.0).powi(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn off_shell_is_cut() {
        let c = DoubleSlitConfig::pion();
        let far = DetectorMomentum::with_detuning(&c, 0.0, 0.0, -c.kz, 1.0);
        assert_eq!(prob_approx(&c, &far), 0.0);
        assert_eq!(prob_exact(&c, &far, &MassProfile::Uniform).unwrap(), 0.0);
    }

    #[test]
    fn exact_matches_approx_for_narrow_band() {
        let c = DoubleSlitConfig::pion();
        for (k1, k2) in [(0.0, 0.0), (0.05, 0.02), (-0.3, 0.11)] {
            let det = DetectorMomentum::forward(&c, k1, k2);
            let a = prob_approx(&c, &det);
            let e = prob_exact_normalized(&c, &det, &MassProfile::Uniform).unwrap();
            assert!((e / a - 1.0).abs() < 1e-6, "{k1} {k2}: {e} vs {a}");
        }
    }

    #[test]
    fn custom_profile_constant_equals_uniform() {
        let c = DoubleSlitConfig::pion();
        let det = DetectorMomentum::forward(&c, 0.02, 0.0);
        let u = prob_exact_normalized(&c, &det, &MassProfile::Uniform).unwrap();
        let k = prob_exact_normalized(&c, &det, &MassProfile::Custom(Arc::new(|_| 3.0))).unwrap();
        assert!((u / k - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cosine_zero_for_sharp_band() {
        let mut c = DoubleSlitConfig::pion();
        c.width = 0.0;
        let d = PI / c.epsilon_t;
        let det = DetectorMomentum::with_detuning(&c, 0.0, 0.0, -c.kz, d);
        assert!(approx_factors(&c, &det).temporal < 1e-30);
    }
}
