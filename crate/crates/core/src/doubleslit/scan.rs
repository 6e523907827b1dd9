use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{PevError, Result};
use crate::units::SECOND;

use super::prob::{
    approx_factors, exact_temporal_factor, mean_value_weight, pion_factors, Factors, MassProfile,
};
use super::{DetectorMomentum, DoubleSlitConfig};
use crate::quadrature::QuadOptions;

/// Probability formula used by a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Pion,
    Approx,
    Exact,
}

/// Which factors of the probability to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    Full,
    /// Interference and opening-duration factor only.
    Temporal,
    /// Slit-width envelope (times the band indicator) only.
    Spatial,
}

impl FromStr for Which {
    type Err = PevError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pion" => Ok(Which::Pion),
            "approx" => Ok(Which::Approx),
            "exact" => Ok(Which::Exact),
            _ => Err(PevError::InvalidConfig(format!("unknown formula '{s}'"))),
        }
    }
}

impl FromStr for Factor {
    type Err = PevError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Factor::Full),
            "temporal" => Ok(Factor::Temporal),
            "spatial" => Ok(Factor::Spatial),
            _ => Err(PevError::InvalidConfig(format!("unknown factor '{s}'"))),
        }
    }
}

impl Which {
    pub fn as_str(&self) -> &'static str {
        match self {
            Which::Pion => "pion",
            Which::Approx => "approx",
            Which::Exact => "exact",
        }
    }
}

impl Factor {
    pub fn as_str(&self) -> &'static str {
        match self {
            Factor::Full => "full",
            Factor::Temporal => "temporal",
            Factor::Spatial => "spatial",
        }
    }
}

/// Values over a (κ₁, κ₂) grid, stored row-major with κ₁ as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityGrid {
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    pub values: Vec<f64>,
    pub normalized: bool,
}

impl ProbabilityGrid {
    pub fn get(&self, i1: usize, i2: usize) -> f64 {
        self.values[i1 * self.k2.len() + i2]
    }

    fn spacing(axis: &[f64]) -> Result<f64> {
        if axis.len() < 2 {
            return Err(PevError::InvalidGrid(
                "axes need at least two points".into(),
            ));
        }
        let d = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
        if !(d > 0.0) {
            return Err(PevError::InvalidGrid("axes must increase".into()));
        }
        Ok(d)
    }

    /// (dκ₁, dκ₂).
    pub fn cell(&self) -> Result<(f64, f64)> {
        Ok((Self::spacing(&self.k1)?, Self::spacing(&self.k2)?))
    }

    /// Σ values·dκ₁·dκ₂.
    pub fn resum(&self) -> Result<f64> {
        let (a, b) = self.cell()?;
        Ok(self.values.iter().sum::<f64>() * a * b)
    }

    /// Values along κ₁ at the κ₂ node closest to zero.
    pub fn k1_profile(&self) -> Vec<f64> {
        let j = nearest(&self.k2, 0.0);
        (0..self.k1.len()).map(|i| self.get(i, j)).collect()
    }

    /// Values along κ₂ at the κ₁ node closest to zero.
    pub fn k2_profile(&self) -> Vec<f64> {
        let i = nearest(&self.k1, 0.0);
        (0..self.k2.len()).map(|j| self.get(i, j)).collect()
    }

    /// `kappa1_eV,kappa2_eV,prob` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 72 + 32);
        s.push_str("kappa1_eV,kappa2_eV,prob\n");
        for (i, a) in self.k1.iter().enumerate() {
            for (j, b) in self.k2.iter().enumerate() {
                writeln!(s, "{a:.16e},{b:.16e},{:.16e}", self.get(i, j)).unwrap();
            }
        }
        s
    }
}

fn nearest(axis: &[f64], x: f64) -> usize {
    axis.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
        .map(|p| p.0)
        .unwrap_or(0)
}

/// `n` points (i − (n−1)/2)·step spanning [−half, half]; mirror nodes are
/// exact negatives of each other.
pub fn symmetric_axis(n: usize, half_span: f64) -> Result<Vec<f64>> {
    if n < 2 || !(half_span > 0.0 && half_span.is_finite()) {
        return Err(PevError::InvalidGrid(
            "need n ≥ 2 and a positive span".into(),
        ));
    }
    let step = 2.0 * half_span / (n - 1) as f64;
    let mid = (n - 1) as f64 / 2.0;
    Ok((0..n).map(|i| (i as f64 - mid) * step).collect())
}

/// Half-span of the default (κ₁, κ₂) window: 0.1 eV at ε_T = 1e-7 s,
/// widening as 1/√ε_T for shorter separations.
pub fn default_half_span(epsilon_t: f64) -> f64 {
    0.1 * (1e-7 * SECOND / epsilon_t).sqrt()
}

fn select(f: Factors, factor: Factor) -> f64 {
    match factor {
        Factor::Full => f.product(),
        Factor::Temporal => f.temporal,
        Factor::Spatial => f.spatial * f.band,
    }
}

/// Evaluates the chosen formula at every node (forward direction
/// κ₃ = −k_z, κ₀ on the mean shell). Nodes are computed in parallel and
/// stored in row-major order, independent of scheduling. `Exact` uses the
/// mean-value-normalized form so it is comparable with `Approx`.
pub fn grid_scan(
    cfg: &DoubleSlitConfig,
    k1: &[f64],
    k2: &[f64],
    which: Which,
    factor: Factor,
) -> Result<ProbabilityGrid> {
    cfg.validate()?;
    if k1.is_empty() || k2.is_empty() {
        return Err(PevError::InvalidGrid("empty axis".into()));
    }
    let profile = MassProfile::Uniform;
    let weight = match which {
        Which::Exact if cfg.width > 0.0 => mean_value_weight(cfg, &profile)?,
        _ => 1.0,
    };
    let n2 = k2.len();
    let values = (0..k1.len() * n2)
        .into_par_iter()
        .map(|idx| {
            let (a, b) = (k1[idx / n2], k2[idx % n2]);
            let f = match which {
                Which::Pion => pion_factors(cfg, a, b),
                Which::Approx => approx_factors(cfg, &DetectorMomentum::forward(cfg, a, b)),
                Which::Exact => {
                    let det = DetectorMomentum::forward(cfg, a, b);
                    let mut f = approx_factors(cfg, &det);
                    if cfg.width > 0.0 && (factor == Factor::Temporal || f.spatial * f.band != 0.0)
                    {
                        f.temporal =
                            exact_temporal_factor(cfg, &det, &profile, &QuadOptions::default())?
                                / weight;
                    }
                    f
                }
            };
            Ok(select(f, factor))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ProbabilityGrid {
        k1: k1.to_vec(),
        k2: k2.to_vec(),
        values,
        normalized: false,
    })
}

/// Scales values so that Σ values·dκ₁·dκ₂ = 1.
pub fn normalize_grid(grid: &ProbabilityGrid) -> Result<ProbabilityGrid> {
    if grid.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(PevError::InvalidGrid(
            "values must be finite and non-negative".into(),
        ));
    }
    let total = grid.resum()?;
    if !(total > 0.0) {
        return Err(PevError::DegenerateGrid);
    }
    let mut out = grid.clone();
    out.values.iter_mut().for_each(|v| *v /= total);
    out.normalized = true;
    Ok(out)
}

/// Indices of strict interior local maxima of a sampled line.
pub fn local_maxima(line: &[f64]) -> Vec<usize> {
    (1..line.len().saturating_sub(1))
        .filter(|&i| line[i] > line[i - 1] && line[i] > line[i + 1])
        .collect()
}
