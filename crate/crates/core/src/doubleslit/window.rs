use crate::error::{PevError, Result};
use crate::hilbert::C64;
use crate::special::j0;

use super::DoubleSlitConfig;

/// Box Δ = Π_μ [c^μ − δ_μ/2, c^μ + δ_μ/2] in (t, x¹, x², x³).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitWindow {
    pub center: [f64; 4],
    pub widths: [f64; 4],
}

impl SlitWindow {
    pub fn new(center: [f64; 4], widths: [f64; 4]) -> Result<Self> {
        if widths.iter().any(|&w| !(w > 0.0 && w.is_finite()))
            || center.iter().any(|c| !c.is_finite())
        {
            return Err(PevError::InvalidConfig(
                "window widths must be positive".into(),
            ));
        }
        Ok(Self { center, widths })
    }

    /// The two openings of the configured slit.
    pub fn openings(cfg: &DoubleSlitConfig) -> [SlitWindow; 2] {
        let (t1, t2) = cfg.opening_times();
        let widths = [cfg.delta_t, cfg.delta[0], cfg.delta[1], cfg.delta[2]];
        let at = |t| SlitWindow {
            center: [t, cfg.x_s[0], cfg.x_s[1], cfg.x_s[2]],
            widths,
        };
        [at(t1), at(t2)]
    }

    pub fn volume(&self) -> f64 {
        self.widths.iter().product()
    }
}

/// ∫_Δ d⁴x e^{−i Σ_μ (k_μ − κ_μ) x^μ}
/// = δ_Tδ₁δ₂δ₃ · e^{−i Σ_μ q_μ c^μ} · Π_μ j₀(q_μ δ_μ / 2), q = k − κ.
pub fn slit_window_integral(w: &SlitWindow, k: [f64; 4], kappa: [f64; 4]) -> C64 {
    let mut phase = 0.0;
    let mut env = w.volume();
    for mu in 0..4 {
        let q = k[mu] - kappa[mu];
        phase += q * w.center[mu];
        env *= j0(q * w.widths[mu] / 2.0);
    }
    C64::from_polar(env, -phase)
}

/// Sum over both openings.
pub fn double_window_amplitude(cfg: &DoubleSlitConfig, k: [f64; 4], kappa: [f64; 4]) -> C64 {
    SlitWindow::openings(cfg)
        .iter()
        .map(|w| slit_window_integral(w, k, kappa))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn coincident_momenta_give_volume() {
        let w = SlitWindow::new([0.3, -1.0, 2.0, 0.5], [0.2, 0.3, 0.4, 0.5]).unwrap();
        let k = [1.0, 2.0, 3.0, 4.0];
        let v = slit_window_integral(&w, k, k);
        assert!((v - C64::new(w.volume(), 0.0)).norm() < 1e-16);
    }

    #[test]
    fn bessel_zero() {
        let w = SlitWindow::new([0.0; 4], [0.5, 1.0, 1.0, 1.0]).unwrap();
        let q0 = 2.0 * PI / 0.5;
        let v = slit_window_integral(&w, [q0, 0.0, 0.0, 0.0], [0.0; 4]);
        assert!(v.norm() < 1e-15);
    }

    #[test]
    fn interference_factor() {
        let cfg = DoubleSlitConfig::pion();
        let e = cfg.mean_energy();
        let k = [e, 0.0, 0.0, -cfg.kz];
        let kap = [e - 1e-5, 0.0, 0.0, -cfg.kz];
        let single = slit_window_integral(&SlitWindow::openings(&cfg)[0], k, kap).norm();
        let both = double_window_amplitude(&cfg, k, kap).norm();
        let q = k[0] - kap[0];
        let expect = 2.0 * (q * cfg.epsilon_t / 2.0).cos().abs() * single;
        assert!((both - expect).abs() < 1e-9 * expect);
    }
}
