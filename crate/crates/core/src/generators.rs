//! Hermitian generators on a discretized 1+1D spacetime and the channel
//! families obtained from their spectral decompositions.
//!
//! # Grid conventions
//!
//! Nodes are `t_j = t₀ + j·dt`, `x_l = x₀ + l·dx` with periodic boundaries in
//! both directions. Grid vectors are indexed row-major, `idx = j·n_x + l`, so
//! an operator on the grid is `A_t ⊗ A_x`.
//!
//! Momentum operators represent `i ∂/∂x^μ` through the discrete Fourier
//! transform: `P = Σ_m k_m u_m u_m†` with `u_m(j) = e^{−i k_m t_j}/√N` and
//! `k_m = 2πm/(N·d)` for `m = −⌊N/2⌋, …, ⌈N/2⌉−1`. Grid plane waves are
//! therefore exact eigenvectors. Continuum delta-normalized states become
//! unit-norm grid vectors.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{PevError, Result};
use crate::evolution::{Branch, Channel, ChannelFamily, FamilyKind};
use crate::hilbert::{spectral_decompose, Operator, C64};

/// Uniform periodic grid over (x⁰, x¹).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimeGrid {
    pub n_t: usize,
    pub n_x: usize,
    pub dt: f64,
    pub dx: f64,
    pub t0: f64,
    pub x0: f64,
}

impl SpacetimeGrid {
    pub fn new(n_t: usize, n_x: usize, dt: f64, dx: f64) -> Result<Self> {
        Self::with_origin(n_t, n_x, dt, dx, 0.0, 0.0)
    }

    pub fn with_origin(n_t: usize, n_x: usize, dt: f64, dx: f64, t0: f64, x0: f64) -> Result<Self> {
        if n_t == 0 || n_x == 0 {
            return Err(PevError::InvalidGrid("grid sizes must be positive".into()));
        }
        if !(dt > 0.0 && dx > 0.0 && dt.is_finite() && dx.is_finite()) {
            return Err(PevError::InvalidGrid(
                "spacings must be positive and finite".into(),
            ));
        }
        if !(t0.is_finite() && x0.is_finite()) {
            return Err(PevError::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self {
            n_t,
            n_x,
            dt,
            dx,
            t0,
            x0,
        })
    }

    /// Grid centred on the origin in both coordinates.
    pub fn centered(n_t: usize, n_x: usize, dt: f64, dx: f64) -> Result<Self> {
        let t0 = -((n_t / 2) as f64) * dt;
        let x0 = -((n_x / 2) as f64) * dx;
        Self::with_origin(n_t, n_x, dt, dx, t0, x0)
    }

    pub fn dim(&self) -> usize {
        self.n_t * self.n_x
    }

    pub fn index(&self, it: usize, ix: usize) -> usize {
        it * self.n_x + ix
    }

    pub fn t(&self, it: usize) -> f64 {
        self.t0 + it as f64 * self.dt
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x0 + ix as f64 * self.dx
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_t).map(|i| self.t(i)).collect()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_x).map(|i| self.x(i)).collect()
    }

    /// Cell volume dt·dx.
    pub fn cell(&self) -> f64 {
        self.dt * self.dx
    }

    /// Temporal and spatial periods N·d.
    pub fn periods(&self) -> (f64, f64) {
        (self.n_t as f64 * self.dt, self.n_x as f64 * self.dx)
    }
}

/// Fourier wavenumbers `k_m` of an `n`-point periodic axis, ascending.
pub fn fourier_modes(n: usize, d: f64) -> Vec<f64> {
    let lo = -((n / 2) as i64);
    (0..n as i64)
        .map(|i| 2.0 * PI * (lo + i) as f64 / (n as f64 * d))
        .collect()
}

/// Unit-norm grid plane wave `e^{−ik(o + j·d)}/√n`.
pub fn plane_wave(n: usize, d: f64, origin: f64, k: f64) -> Vec<C64> {
    let s = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|j| C64::from_polar(s, -k * (origin + j as f64 * d)))
        .collect()
}

/// Spectral representation of `i d/dx` on an `n`-point periodic axis.
pub fn momentum_1d(n: usize, d: f64) -> Operator {
    let ks = fourier_modes(n, d);
    // Circulant: entry (j, l) depends on j − l only.
    let col: Vec<C64> = (0..n)
        .map(|r| {
            ks.iter()
                .map(|&k| C64::from_polar(k, -k * r as f64 * d))
                .sum::<C64>()
                / n as f64
        })
        .collect();
    Operator::from_fn(n, |j, l| {
        let r = (j + n - l) % n;
        col[r]
    })
}

/// Diagonal multiplication by the axis coordinate.
pub fn position_1d(n: usize, d: f64, origin: f64) -> Operator {
    let v: Vec<f64> = (0..n).map(|j| origin + j as f64 * d).collect();
    Operator::diag_real(&v)
}

/// p̂_μ on the grid: `P_t ⊗ 1` for μ = 0 and `1 ⊗ P_x` for μ = 1.
pub fn p_mu_operator(grid: &SpacetimeGrid, mu: usize) -> Result<Operator> {
    match mu {
        0 => Ok(momentum_1d(grid.n_t, grid.dt).kron(&Operator::identity(grid.n_x))),
        1 => Ok(Operator::identity(grid.n_t).kron(&momentum_1d(grid.n_x, grid.dx))),
        _ => Err(PevError::InvalidGrid(format!("mu = {mu} on a 1+1D grid"))),
    }
}

/// Multiplication by x^μ at every node.
pub fn x_mu_operator(grid: &SpacetimeGrid, mu: usize) -> Result<Operator> {
    match mu {
        0 => Ok(position_1d(grid.n_t, grid.dt, grid.t0).kron(&Operator::identity(grid.n_x))),
        1 => Ok(Operator::identity(grid.n_t).kron(&position_1d(grid.n_x, grid.dx, grid.x0))),
        _ => Err(PevError::InvalidGrid(format!("mu = {mu} on a 1+1D grid"))),
    }
}

/// Product grid vector `a ⊗ b` (temporal factor first).
pub fn product_vector(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut v = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            v.push(x * y);
        }
    }
    v
}

fn require_hermitian(h: &Operator) -> Result<()> {
    let r = h.hermiticity_residual();
    if r > 1e-10 * h.max_abs().max(1.0) {
        return Err(PevError::NotHermitian { residual: r });
    }
    Ok(())
}

fn check_spatial(grid: &SpacetimeGrid, h: &Operator) -> Result<()> {
    if h.dim() != grid.n_x {
        return Err(PevError::DimensionMismatch {
            expected: grid.n_x,
            found: h.dim(),
        });
    }
    require_hermitian(h)
}

/// W_S = p̂₀ ⊗ 1 − 1 ⊗ H.
pub fn schrodinger_generator(grid: &SpacetimeGrid, h: &Operator) -> Result<Operator> {
    check_spatial(grid, h)?;
    let p0 = p_mu_operator(grid, 0)?;
    Ok(&p0 - &Operator::identity(grid.n_t).kron(h))
}

/// Coefficients of the second-order generators.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub a0: f64,
    pub a00: f64,
    /// Spatial kinetic coefficient; the particle mass is m = 1/(2B).
    pub b: f64,
    /// Spatial Hamiltonian (n_x × n_x); zero when absent.
    pub hamiltonian: Option<Operator>,
    /// Temporal inertia B_T⁻¹ ≥ 0.
    pub b_t_inv: f64,
    /// Temporal potential sampled at the n_t time nodes.
    pub v_t: Option<Vec<f64>>,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            a0: 1.0,
            a00: 0.0,
            b: 0.0,
            hamiltonian: None,
            b_t_inv: 0.0,
            v_t: None,
        }
    }
}

impl GeneratorSpec {
    pub fn mass(&self) -> Result<f64> {
        if !(self.b > 0.0) {
            return Err(PevError::InvalidConfig(format!(
                "B = {} must be positive for a finite mass",
                self.b
            )));
        }
        Ok(1.0 / (2.0 * self.b))
    }
}

/// W = a⁰ p̂₀ + a⁰⁰ p̂₀² − B p̂₁².
///
/// With `p̂₁ = i∂₁`, the Schrödinger kinetic term `−∇²/2m` is `+p̂₁²/2m`, so
/// the generator `p̂₀ − Ĥ` carries `−B p̂₁²` with m = 1/(2B) and B > 0.
pub fn free_particle_generator(grid: &SpacetimeGrid, spec: &GeneratorSpec) -> Result<Operator> {
    spec.mass()?;
    let p0 = p_mu_operator(grid, 0)?;
    let p1 = p_mu_operator(grid, 1)?;
    let w = &(&p0.scale_real(spec.a0) + &(&p0 * &p0).scale_real(spec.a00))
        - &(&p1 * &p1).scale_real(spec.b);
    Ok(w.hermitian_part())
}

/// W_GS = p̂₀ − H + ½ B_T⁻¹ p̂₀² + V_T(x⁰).
pub fn extended_schrodinger_generator(
    grid: &SpacetimeGrid,
    spec: &GeneratorSpec,
) -> Result<Operator> {
    if !(spec.b_t_inv >= 0.0) {
        return Err(PevError::InvalidConfig(
            "B_T^-1 must be non-negative".into(),
        ));
    }
    let h = spec
        .hamiltonian
        .clone()
        .unwrap_or_else(|| Operator::zeros(grid.n_x));
    let mut w = schrodinger_generator(grid, &h)?;
    if spec.b_t_inv != 0.0 {
        let pt = momentum_1d(grid.n_t, grid.dt);
        let kin = (&pt * &pt).scale_real(0.5 * spec.b_t_inv);
        w = &w + &kin.kron(&Operator::identity(grid.n_x));
    }
    if let Some(v) = &spec.v_t {
        if v.len() != grid.n_t {
            return Err(PevError::DimensionMismatch {
                expected: grid.n_t,
                found: v.len(),
            });
        }
        w = &w + &Operator::diag_real(v).kron(&Operator::identity(grid.n_x));
    }
    Ok(w)
}

/// Samples `V_T(t)` at the grid's time nodes.
pub fn sample_temporal(grid: &SpacetimeGrid, f: impl Fn(f64) -> f64) -> Vec<f64> {
    grid.times().into_iter().map(f).collect()
}

/// Orthogonal-resolution family from the clustered eigenprojectors of W, one
/// channel per distinct eigenvalue (labelled 0, 1, … in ascending order).
pub fn channels_from_generator(w: &Operator, cluster_tol: f64) -> Result<ChannelFamily> {
    let sd = spectral_decompose(w, cluster_tol)?;
    let chans = sd
        .eigenvalues
        .iter()
        .zip(sd.projectors)
        .enumerate()
        .map(|(i, (&v, p))| {
            Channel::new(i as i64, vec![Branch::Projector(p)])
                .expect("one branch")
                .with_value(v)
        })
        .collect();
    ChannelFamily::new(1, FamilyKind::OrthogonalResolution, chans)
}

/// Mass operator m̂² = p̂₀² − p̂₁².
pub fn mass_operator(grid: &SpacetimeGrid) -> Result<Operator> {
    klein_gordon_generator(grid, None)
}

/// (p̂₀ − A₀)² − (p̂₁ − A₁)² with sampled potentials (one value per node,
/// row-major); without potentials this is the free Klein-Gordon generator.
pub fn klein_gordon_generator(
    grid: &SpacetimeGrid,
    potential: Option<(&[f64], &[f64])>,
) -> Result<Operator> {
    let Some((a0, a1)) = potential else {
        // Squares of the 1D factors: avoids products of full grid matrices.
        let pt = momentum_1d(grid.n_t, grid.dt);
        let px = momentum_1d(grid.n_x, grid.dx);
        let t2 = (&pt * &pt).kron(&Operator::identity(grid.n_x));
        let x2 = Operator::identity(grid.n_t).kron(&(&px * &px));
        return Ok(&t2 - &x2);
    };
    for a in [a0, a1] {
        if a.len() != grid.dim() {
            return Err(PevError::DimensionMismatch {
                expected: grid.dim(),
                found: a.len(),
            });
        }
    }
    let p0 = &p_mu_operator(grid, 0)? - &Operator::diag_real(a0);
    let p1 = &p_mu_operator(grid, 1)? - &Operator::diag_real(a1);
    Ok(&(&p0 * &p0) - &(&p1 * &p1))
}

/// 2×2 gamma matrices γ⁰ = σ_z, γ¹ = iσ_y (metric diag(+1, −1)).
pub fn gamma_matrices() -> [Operator; 2] {
    let i = C64::new(0.0, 1.0);
    [Operator::pauli_z(), Operator::pauli_y().scale(i)]
}

/// W_D = γ⁰ ⊗ p̂₀ + γ¹ ⊗ p̂₁ on C² ⊗ grid (dimension 2·n_t·n_x).
pub fn dirac_generator(grid: &SpacetimeGrid) -> Result<Operator> {
    let [g0, g1] = gamma_matrices();
    let p0 = p_mu_operator(grid, 0)?;
    let p1 = p_mu_operator(grid, 1)?;
    Ok(&g0.kron(&p0) + &g1.kron(&p1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiracSelfTest {
    /// max |{γ^μ, γ^ν} − 2g^{μν}|.
    pub anticommutator_residual: f64,
    /// Hermiticity residual of W_D itself (non-zero: γ¹ is anti-hermitian).
    pub generator_hermiticity: f64,
    /// Hermiticity residual of γ⁰ W_D.
    pub gamma0_generator_hermiticity: f64,
}

pub fn dirac_self_test(grid: &SpacetimeGrid) -> Result<DiracSelfTest> {
    let g = gamma_matrices();
    let metric = [1.0, -1.0];
    let mut anti = 0.0_f64;
    for mu in 0..2 {
        for nu in 0..2 {
            let expect = if mu == nu {
                Operator::identity(2).scale_real(2.0 * metric[mu])
            } else {
                Operator::zeros(2)
            };
            anti = anti.max(g[mu].anticommutator(&g[nu]).max_abs_diff(&expect));
        }
    }
    let w = dirac_generator(grid)?;
    let g0w = g[0].kron(&Operator::identity(grid.dim())) * &w;
    Ok(DiracSelfTest {
        anticommutator_residual: anti,
        generator_hermiticity: w.hermiticity_residual(),
        gamma0_generator_hermiticity: g0w.hermiticity_residual(),
    })
}

/// Mass band B_m̄ = {k : (m̄ − Γ/2)² ≤ k_μk^μ ≤ (m̄ + Γ/2)²}, closed at both
/// edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassShellBand {
    pub mean_mass: f64,
    pub width: f64,
}

impl MassShellBand {
    pub fn new(mean_mass: f64, width: f64) -> Result<Self> {
        if !(width >= 0.0) || !(width / 2.0 < mean_mass) || !mean_mass.is_finite() {
            return Err(PevError::InvalidWidth {
                half_width: width / 2.0,
                mean_mass,
            });
        }
        Ok(Self { mean_mass, width })
    }

    pub fn lower_sq(&self) -> f64 {
        (self.mean_mass - self.width / 2.0).powi(2)
    }

    pub fn upper_sq(&self) -> f64 {
        (self.mean_mass + self.width / 2.0).powi(2)
    }

    /// Membership of k = (k⁰, k¹, k², k³) with k_μk^μ = k₀² − |k|².
    pub fn contains(&self, k: [f64; 4]) -> bool {
        let k2 = k[0] * k[0] - k[1] * k[1] - k[2] * k[2] - k[3] * k[3];
        // Rounding slack so that points built on an edge stay inside.
        let slack = 8.0 * f64::EPSILON * (k[0] * k[0]).max(self.upper_sq());
        k2 >= self.lower_sq() - slack && k2 <= self.upper_sq() + slack
    }

    /// Membership given k_μk^μ − m̄² directly, which avoids cancellation
    /// when the band is narrow compared with the momenta.
    pub fn contains_offset(&self, mass_sq_offset: f64) -> bool {
        let (m, g) = (self.mean_mass, self.width);
        let lo = -m * g + g * g / 4.0;
        let hi = m * g + g * g / 4.0;
        let slack = 8.0 * f64::EPSILON * (m * g).max(f64::MIN_POSITIVE);
        mass_sq_offset >= lo - slack && mass_sq_offset <= hi + slack
    }
}

pub fn klein_gordon_shell(mean_mass: f64, width: f64) -> Result<MassShellBand> {
    MassShellBand::new(mean_mass, width)
}

/// Dense matrix whose columns are the grid plane waves of one axis, in the
/// order of [`fourier_modes`].
pub fn fourier_basis(n: usize, d: f64, origin: f64) -> DMatrix<C64> {
    let ks = fourier_modes(n, d);
    let mut m = DMatrix::<C64>::zeros(n, n);
    for (c, &k) in ks.iter().enumerate() {
        let v = plane_wave(n, d, origin, k);
        for (r, z) in v.into_iter().enumerate() {
            m[(r, c)] = z;
        }
    }
    m
}
