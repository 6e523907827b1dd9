//! Time as an observable: the time operator, uncertainty relations and the
//! light-cone causality measure on grid wavefunctions.
//!
//! Wavefunctions use the continuum normalization Σ|ψ|²·dt·dx = 1. Operator
//! algebra acts on the unit vector v = ψ·√(dt·dx).

use std::fmt::Write as _;

use crate::error::{PevError, Result};
use crate::generators::{mass_operator, p_mu_operator, x_mu_operator, SpacetimeGrid};
use crate::hilbert::{Operator, C64};

const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GridWavefunction {
    grid: SpacetimeGrid,
    amps: Vec<C64>,
}

impl GridWavefunction {
    /// Normalizes the amplitudes (row-major, `idx = it·n_x + ix`).
    pub fn new(grid: SpacetimeGrid, mut amps: Vec<C64>) -> Result<Self> {
        if amps.len() != grid.dim() {
            return Err(PevError::DimensionMismatch {
                expected: grid.dim(),
                found: amps.len(),
            });
        }
        if let Some(i) = amps
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(PevError::NonFinite { row: i, col: 0 });
        }
        let n2: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.cell();
        if !(n2 > 0.0) {
            return Err(PevError::InvalidGrid(
                "wavefunction is identically zero".into(),
            ));
        }
        let s = 1.0 / n2.sqrt();
        amps.iter_mut().for_each(|z| *z *= s);
        Ok(Self { grid, amps })
    }

    pub fn from_fn(grid: SpacetimeGrid, f: impl Fn(f64, f64) -> C64) -> Result<Self> {
        let mut amps = Vec::with_capacity(grid.dim());
        for it in 0..grid.n_t {
            for ix in 0..grid.n_x {
                amps.push(f(grid.t(it), grid.x(ix)));
            }
        }
        Self::new(grid, amps)
    }

    /// Gaussian packet with |ψ|² widths σ_t, σ_x around (t̄, x̄); `k` are the
    /// mean eigenvalues of p̂₀ and p̂₁ (phase e^{−i(k₀t + k₁x)}).
    pub fn gaussian(
        grid: SpacetimeGrid,
        center: [f64; 2],
        sigma: [f64; 2],
        k: [f64; 2],
    ) -> Result<Self> {
        if !(sigma[0] > 0.0 && sigma[1] > 0.0) {
            return Err(PevError::InvalidGrid(
                "packet widths must be positive".into(),
            ));
        }
        Self::from_fn(grid, |t, x| {
            let a = -(t - center[0]).powi(2) / (4.0 * sigma[0] * sigma[0])
                - (x - center[1]).powi(2) / (4.0 * sigma[1] * sigma[1]);
            C64::from_polar(a.exp(), -(k[0] * t + k[1] * x))
        })
    }

    /// All weight on one node.
    pub fn point(grid: SpacetimeGrid, it: usize, ix: usize) -> Result<Self> {
        let mut amps = vec![C64::new(0.0, 0.0); grid.dim()];
        amps[grid.index(it, ix)] = C64::new(1.0, 0.0);
        Self::new(grid, amps)
    }

    pub fn grid(&self) -> &SpacetimeGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// Σ|ψ|²·dt·dx.
    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell()
    }

    /// Unit-norm grid vector.
    pub fn vector(&self) -> Vec<C64> {
        let s = self.grid.cell().sqrt();
        self.amps.iter().map(|z| z * s).collect()
    }

    pub fn with_phase(&self, theta: f64) -> Self {
        let p = C64::from_polar(1.0, theta);
        Self {
            grid: self.grid,
            amps: self.amps.iter().map(|z| z * p).collect(),
        }
    }

    /// CSV with columns `t,x,re,im` in row-major order.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x,re,im\n");
        for it in 0..self.grid.n_t {
            for ix in 0..self.grid.n_x {
                let z = self.amps[self.grid.index(it, ix)];
                writeln!(
                    s,
                    "{:?},{:?},{:?},{:?}",
                    self.grid.t(it),
                    self.grid.x(ix),
                    z.re,
                    z.im
                )
                .unwrap();
            }
        }
        s
    }

    /// Reads the CSV layout of [`Self::to_csv`], inferring the grid from the
    /// coordinate columns.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<[f64; 4]> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with('t')) {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(PevError::Parse {
                    line: i + 1,
                    message: format!("expected 4 columns, found {}", f.len()),
                });
            }
            let mut r = [0.0; 4];
            for (slot, s) in r.iter_mut().zip(&f) {
                *slot = s.parse().map_err(|_| PevError::Parse {
                    line: i + 1,
                    message: format!("'{s}' is not a number"),
                })?;
            }
            rows.push(r);
        }
        if rows.is_empty() {
            return Err(PevError::Parse {
                line: 1,
                message: "no data rows".into(),
            });
        }
        let n_x = rows.iter().take_while(|r| r[0] == rows[0][0]).count();
        if rows.len() % n_x != 0 {
            return Err(PevError::InvalidGrid("rows do not form a full grid".into()));
        }
        let n_t = rows.len() / n_x;
        let dt = if n_t > 1 {
            rows[n_x][0] - rows[0][0]
        } else {
            1.0
        };
        let dx = if n_x > 1 {
            rows[1][1] - rows[0][1]
        } else {
            1.0
        };
        let grid = SpacetimeGrid::with_origin(n_t, n_x, dt, dx, rows[0][0], rows[0][1])?;
        let amps = rows.iter().map(|r| C64::new(r[2], r[3])).collect();
        Self::new(grid, amps)
    }
}

fn check_op(a: &Operator, psi: &GridWavefunction) -> Result<()> {
    if a.dim() != psi.grid.dim() {
        return Err(PevError::DimensionMismatch {
            expected: psi.grid.dim(),
            found: a.dim(),
        });
    }
    let r = a.hermiticity_residual();
    if r > 1e-10 * a.max_abs().max(1.0) {
        return Err(PevError::NotHermitian { residual: r });
    }
    Ok(())
}

/// Multiplication by x⁰ at every node.
pub fn time_operator(grid: &SpacetimeGrid) -> Operator {
    x_mu_operator(grid, 0).expect("mu = 0")
}

/// ⟨ψ|A|ψ⟩ for hermitian A.
pub fn expectation(a: &Operator, psi: &GridWavefunction) -> Result<f64> {
    check_op(a, psi)?;
    Ok(a.expectation_in(&psi.vector()).re)
}

/// ⟨A²⟩ − ⟨A⟩², evaluated as ‖Aψ‖² − ⟨A⟩².
pub fn variance(a: &Operator, psi: &GridWavefunction) -> Result<f64> {
    check_op(a, psi)?;
    let v = psi.vector();
    Ok(variance_of(a, &v))
}

fn variance_of(a: &Operator, v: &[C64]) -> f64 {
    let av = a.apply(v);
    let mean: f64 = v.iter().zip(&av).map(|(x, y)| (x.conj() * y).re).sum();
    let sq: f64 = av.iter().map(|z| z.norm_sqr()).sum();
    sq - mean * mean
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobertsonReport {
    pub var_a: f64,
    pub var_b: f64,
    pub product: f64,
    /// ⟨i[A,B]⟩ (real for hermitian A, B).
    pub commutator: f64,
    /// ¼|⟨i[A,B]⟩|².
    pub bound: f64,
    /// |⟨i[A,B]⟩|², the form without the ¼ factor, reported for comparison.
    pub unquartered: f64,
    pub satisfied: bool,
}

impl RobertsonReport {
    /// product / bound.
    pub fn ratio(&self) -> f64 {
        self.product / self.bound
    }
}

/// Var(A)·Var(B) against ¼|⟨i[A,B]⟩|².
pub fn robertson_check(
    a: &Operator,
    b: &Operator,
    psi: &GridWavefunction,
) -> Result<RobertsonReport> {
    check_op(a, psi)?;
    check_op(b, psi)?;
    let v = psi.vector();
    let var_a = variance_of(a, &v);
    let var_b = variance_of(b, &v);
    // ⟨i[A,B]⟩ = i(⟨Aψ|Bψ⟩ − ⟨Bψ|Aψ⟩) = −2 Im⟨Aψ|Bψ⟩.
    let av = a.apply(&v);
    let bv = b.apply(&v);
    let ab: C64 = av.iter().zip(&bv).map(|(x, y)| x.conj() * y).sum();
    let commutator = -2.0 * ab.im;
    let bound = 0.25 * commutator * commutator;
    let product = var_a * var_b;
    Ok(RobertsonReport {
        var_a,
        var_b,
        product,
        commutator,
        bound,
        unquartered: commutator * commutator,
        satisfied: product >= bound - 1e-10,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassUncertaintyReport {
    pub nu: usize,
    pub var_mass_sq: f64,
    pub var_x: f64,
    pub product: f64,
    /// ⟨p̂_ν⟩².
    pub momentum_sq: f64,
    /// ¼|⟨i[m̂², x̂^ν]⟩|² with the grid operators.
    pub grid_bound: f64,
    /// product − ⟨p̂_ν⟩².
    pub slack: f64,
    pub satisfied: bool,
}

/// Var(m̂²)·Var(x̂^ν) ≥ ⟨p̂_ν⟩² for ν = 0, 1, with m̂² = p̂₀² − p̂₁².
pub fn mass_uncertainty_check(psi: &GridWavefunction) -> Result<Vec<MassUncertaintyReport>> {
    let grid = psi.grid;
    let m2 = mass_operator(&grid)?;
    let mut out = Vec::with_capacity(2);
    for nu in 0..2 {
        let x = x_mu_operator(&grid, nu)?;
        let p = p_mu_operator(&grid, nu)?;
        let r = robertson_check(&m2, &x, psi)?;
        let pm = expectation(&p, psi)?;
        let momentum_sq = pm * pm;
        out.push(MassUncertaintyReport {
            nu,
            var_mass_sq: r.var_a,
            var_x: r.var_b,
            product: r.product,
            momentum_sq,
            grid_bound: r.bound,
            slack: r.product - momentum_sq,
            satisfied: r.product >= momentum_sq - 1e-9 * momentum_sq.max(1.0),
        });
    }
    Ok(out)
}

/// Probability of the light-cone region (t − t_v)² − x² ≥ 0 with vertex at
/// (t_v, 0).
pub fn causality_probability(psi: &GridWavefunction, vertex_t: f64) -> f64 {
    let g = psi.grid;
    let mut p = 0.0;
    for it in 0..g.n_t {
        let dt = g.t(it) - vertex_t;
        for ix in 0..g.n_x {
            let x = g.x(ix);
            if dt * dt - x * x >= 0.0 {
                p += psi.amps[g.index(it, ix)].norm_sqr();
            }
        }
    }
    p * g.cell()
}

/// One row of a temporal Gaussian sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub sigma_t: f64,
    pub report: RobertsonReport,
}

/// t̂/p̂₀ Robertson check on minimal Gaussians of each width, centred on a
/// purely temporal grid (n_x = 1).
pub fn temporal_uncertainty_sweep(n_t: usize, dt: f64, sigmas: &[f64]) -> Result<Vec<SweepPoint>> {
    let grid = SpacetimeGrid::centered(n_t, 1, dt, 1.0)?;
    let t = time_operator(&grid);
    let p0 = p_mu_operator(&grid, 0)?;
    sigmas
        .iter()
        .map(|&s| {
            let psi = GridWavefunction::gaussian(grid, [0.0, 0.0], [s, 1.0], [0.0, 0.0])?;
            Ok(SweepPoint {
                sigma_t: s,
                report: robertson_check(&t, &p0, &psi)?,
            })
        })
        .collect()
}

/// Checks that the normalization invariant holds.
pub fn is_normalized(psi: &GridWavefunction) -> bool {
    (psi.norm_sq() - 1.0).abs() <= NORM_TOL
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SpacetimeGrid {
        SpacetimeGrid::centered(64, 1, 1.0, 1.0).unwrap()
    }

    #[test]
    fn point_mass_time() {
        let g = SpacetimeGrid::with_origin(5, 3, 1.0, 1.0, 0.0, -1.0).unwrap();
        let psi = GridWavefunction::point(g, 2, 1).unwrap();
        assert!(is_normalized(&psi));
        assert!((expectation(&time_operator(&g), &psi).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_packet_has_zero_mean_time() {
        let g = grid();
        let psi = GridWavefunction::gaussian(g, [0.0, 0.0], [4.0, 1.0], [0.0, 0.0]).unwrap();
        assert!(expectation(&time_operator(&g), &psi).unwrap().abs() < 1e-12);
    }

    #[test]
    fn gaussian_moments() {
        let g = SpacetimeGrid::centered(256, 1, 1.0, 1.0).unwrap();
        let psi = GridWavefunction::gaussian(g, [3.0, 0.0], [9.0, 1.0], [0.0, 0.0]).unwrap();
        let t = time_operator(&g);
        assert!((expectation(&t, &psi).unwrap() - 3.0).abs() < 1e-9);
        let v = variance(&t, &psi).unwrap();
        assert!((v / 81.0 - 1.0).abs() < 1e-3, "{v}");
    }

    #[test]
    fn variance_examples() {
        let g = SpacetimeGrid::new(2, 1, 1.0, 1.0).unwrap();
        let z = Operator::pauli_z();
        let e = GridWavefunction::point(g, 0, 0).unwrap();
        assert!(variance(&z, &e).unwrap().abs() < 1e-15);
        let plus = GridWavefunction::new(g, vec![C64::new(1.0, 0.0); 2]).unwrap();
        assert!((variance(&z, &plus).unwrap() - 1.0).abs() < 1e-15);
        let bad = Operator::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            variance(&bad, &plus),
            Err(PevError::NotHermitian { .. })
        ));
    }

    #[test]
    fn robertson_self_pair_and_gaussian() {
        let g = grid();
        let psi = GridWavefunction::gaussian(g, [0.0, 0.0], [5.0, 1.0], [0.0, 0.0]).unwrap();
        let t = time_operator(&g);
        let r = robertson_check(&t, &t, &psi).unwrap();
        assert!(r.bound.abs() < 1e-20 && r.satisfied);
        let p0 = p_mu_operator(&g, 0).unwrap();
        let r = robertson_check(&t, &p0, &psi).unwrap();
        assert!(r.satisfied);
        assert!((r.product / 0.25 - 1.0).abs() < 1e-2, "{r:?}");
        assert!((r.unquartered / r.bound - 4.0).abs() < 1e-12);
    }

    #[test]
    fn global_phase_invariance() {
        let g = grid();
        let psi = GridWavefunction::gaussian(g, [1.0, 0.0], [5.0, 1.0], [0.3, 0.0]).unwrap();
        let rot = psi.with_phase(0.7);
        let p0 = p_mu_operator(&g, 0).unwrap();
        for a in [&time_operator(&g), &p0] {
            assert!((expectation(a, &psi).unwrap() - expectation(a, &rot).unwrap()).abs() < 1e-14);
            assert!((variance(a, &psi).unwrap() - variance(a, &rot).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn causality_examples() {
        let g = SpacetimeGrid::centered(16, 9, 1.0, 1.0).unwrap();
        let axis =
            GridWavefunction::from_fn(g, |_, x| C64::new(if x == 0.0 { 1.0 } else { 0.0 }, 0.0))
                .unwrap();
        assert!((causality_probability(&axis, 0.0) - 1.0).abs() < 1e-12);
        let space = GridWavefunction::point(g, 8, 8).unwrap();
        assert_eq!(g.t(8), 0.0);
        assert_eq!(causality_probability(&space, 0.0), 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let g = SpacetimeGrid::with_origin(4, 3, 0.5, 0.25, -1.0, 2.0).unwrap();
        let psi = GridWavefunction::gaussian(g, [0.0, 2.2], [1.0, 0.5], [0.4, -0.2]).unwrap();
        let back = GridWavefunction::from_csv(&psi.to_csv()).unwrap();
        assert_eq!(back.grid(), psi.grid());
        for (a, b) in back.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn mass_uncertainty_symmetric_packet() {
        let g = SpacetimeGrid::centered(32, 32, 1.0, 1.0).unwrap();
        let psi = GridWavefunction::gaussian(g, [0.0, 0.0], [3.0, 3.0], [0.4, 0.0]).unwrap();
        let reps = mass_uncertainty_check(&psi).unwrap();
        assert!(reps.iter().all(|r| r.satisfied), "{reps:?}");
        assert!(reps[1].momentum_sq < 1e-12, "{reps:?}");
    }
}
