//! Finite-dimensional complex operator algebra.
//!
//! [`Operator`] is a dense square complex matrix. [`DensityOperator`] is an
//! operator that has passed the hermitian / positive / unit-trace checks.
//! [`spectral_decompose`] clusters the eigenvalues of a hermitian operator and
//! returns one orthogonal projector per cluster, stored in factored form
//! (an orthonormal basis of the eigenspace) so that large nondegenerate
//! spectra do not materialise one dense matrix per eigenvalue.

use std::fmt::Write as _;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{PevError, Result};

pub type C64 = Complex64;

/// Cap on operator dimension for operators read from files or configs.
pub const DEFAULT_DIM_CAP: usize = 64;

/// Default eigenvalue clustering tolerance, relative to the spectral range.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-9;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Validation tolerances for density operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub herm: f64,
    pub pos: f64,
    pub trace: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: 1e-10,
            pos: 1e-10,
            trace: 1e-10,
        }
    }
}

/// Dense square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    m: DMatrix<C64>,
}

impl Operator {
    /// Wraps a matrix, rejecting non-square shapes and non-finite entries.
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(PevError::Shape(format!("{}x{}", m.nrows(), m.ncols())));
        }
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let z = m[(i, j)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(PevError::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(Self { m })
    }

    /// Internal constructor for results of algebra on already-valid operators.
    pub(crate) fn from_matrix_unchecked(m: DMatrix<C64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self { m }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(PevError::Shape(format!(
                "{} rows with lengths {:?}",
                n,
                rows.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self::from_matrix_unchecked(DMatrix::from_fn(dim, dim, f))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix_unchecked(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_matrix_unchecked(DMatrix::zeros(dim, dim))
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    /// |ψ⟩⟨ψ| for the given (not necessarily normalized) ket.
    pub fn outer(ket: &[C64]) -> Self {
        let n = ket.len();
        Self::from_fn(n, |i, j| ket[i] * ket[j].conj())
    }

    /// |i⟩⟨i| in the computational basis.
    pub fn basis_projector(dim: usize, i: usize) -> Self {
        Self::from_fn(dim, |r, c| if r == i && c == i { ONE } else { ZERO })
    }

    pub fn pauli_x() -> Self {
        Self::from_fn(2, |i, j| if i != j { ONE } else { ZERO })
    }

    pub fn pauli_y() -> Self {
        Self::from_fn(2, |i, j| match (i, j) {
            (0, 1) => C64::new(0.0, -1.0),
            (1, 0) => C64::new(0.0, 1.0),
            _ => ZERO,
        })
    }

    pub fn pauli_z() -> Self {
        Self::diag_real(&[1.0, -1.0])
    }

    pub fn hadamard() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_real_rows(&[vec![s, s], vec![s, -s]]).expect("2x2")
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn check_cap(&self, cap: usize) -> Result<()> {
        if self.dim() > cap {
            return Err(PevError::DimensionCap {
                dim: self.dim(),
                cap,
            });
        }
        Ok(())
    }

    pub fn check_same_dim(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(PevError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn adjoint(&self) -> Operator {
        Self::from_matrix_unchecked(self.m.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn scale(&self, s: C64) -> Operator {
        Self::from_matrix_unchecked(&self.m * s)
    }

    pub fn scale_real(&self, s: f64) -> Operator {
        self.scale(C64::new(s, 0.0))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
    }

    /// ‖A − A†‖_max.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut r = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                r = r.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        r
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol
    }

    /// ‖U†U − 1‖_max.
    pub fn unitarity_residual(&self) -> f64 {
        let g = self.m.adjoint() * &self.m;
        max_abs_diff_identity(&g)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_residual() <= tol
    }

    /// ‖A − B‖_max; panics on dimension mismatch.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.m
            .iter()
            .zip(other.m.iter())
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).norm()))
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        Self::from_matrix_unchecked(&self.m * &other.m - &other.m * &self.m)
    }

    pub fn anticommutator(&self, other: &Operator) -> Operator {
        Self::from_matrix_unchecked(&self.m * &other.m + &other.m * &self.m)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Operator) -> Operator {
        Self::from_matrix_unchecked(self.m.kronecker(&other.m))
    }

    /// A ρ A†.
    pub fn sandwich(&self, rho: &Operator) -> Operator {
        Self::from_matrix_unchecked(&self.m * &rho.m * self.m.adjoint())
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let x = DVector::from_column_slice(v);
        (&self.m * x).iter().copied().collect()
    }

    /// ⟨v|A|v⟩ for a ket `v`.
    pub fn expectation_in(&self, v: &[C64]) -> C64 {
        let av = self.apply(v);
        v.iter().zip(av.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    /// Tr(A ρ).
    pub fn expectation(&self, rho: &Operator) -> C64 {
        assert_eq!(self.dim(), rho.dim(), "dimension mismatch");
        // Tr(AB) = Σ_ij A_ij B_ji
        let n = self.dim();
        let mut s = ZERO;
        for i in 0..n {
            for j in 0..n {
                s += self.m[(i, j)] * rho.m[(j, i)];
            }
        }
        s
    }

    /// Hermitian part (A + A†)/2.
    pub fn hermitian_part(&self) -> Operator {
        Self::from_matrix_unchecked((&self.m + self.m.adjoint()) * C64::new(0.5, 0.0))
    }

    /// Eigenvalues of the hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let e = SymmetricEigen::new(self.hermitian_part().m);
        let mut v: Vec<f64> = e.eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// f(A) for hermitian A via its eigendecomposition.
    pub fn hermitian_function(&self, f: impl Fn(f64) -> C64) -> Result<Operator> {
        let r = self.hermiticity_residual();
        if r > Tolerances::default().herm * self.max_abs().max(1.0) {
            return Err(PevError::NotHermitian { residual: r });
        }
        let e = SymmetricEigen::new(self.hermitian_part().m);
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            e.eigenvalues.iter().map(|&l| f(l)),
        ));
        let v = e.eigenvectors;
        Ok(Self::from_matrix_unchecked(&v * d * v.adjoint()))
    }

    /// e^{iθA} for hermitian A.
    pub fn exp_i(&self, theta: f64) -> Result<Operator> {
        self.hermitian_function(|l| C64::from_polar(1.0, theta * l))
    }

    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }

    /// von Neumann entropy −Σ λ ln λ of the hermitian part (natural log).
    pub fn von_neumann_entropy(&self) -> f64 {
        self.hermitian_eigenvalues()
            .into_iter()
            .filter(|&l| l > 1e-15)
            .map(|l| -l * l.ln())
            .sum::<f64>()
            // Pure states would otherwise report −0.
            .max(0.0)
            + 0.0
    }

    /// Plain-text matrix format: `dim`, then `dim` rows of `re,im` pairs.
    pub fn to_text(&self) -> String {
        let n = self.dim();
        let mut s = String::new();
        writeln!(s, "{n}").unwrap();
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| {
                    let z = self.m[(i, j)];
                    format!("{:?},{:?}", z.re, z.im)
                })
                .collect();
            writeln!(s, "{}", row.join(" ")).unwrap();
        }
        s
    }

    /// Parses [`Operator::to_text`] output, enforcing `cap` on the dimension.
    pub fn parse_text(text: &str, cap: usize) -> Result<Operator> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, first) = lines.next().ok_or(PevError::Parse {
            line: 1,
            message: "empty operator file".into(),
        })?;
        let dim: usize = first.parse().map_err(|_| PevError::Parse {
            line: ln,
            message: format!("expected dimension, found '{first}'"),
        })?;
        if dim == 0 {
            return Err(PevError::Parse {
                line: ln,
                message: "dimension must be positive".into(),
            });
        }
        if dim > cap {
            return Err(PevError::DimensionCap { dim, cap });
        }
        let mut rows = Vec::with_capacity(dim);
        for (ln, line) in lines.by_ref().take(dim) {
            let row = parse_complex_row(line, ln)?;
            if row.len() != dim {
                return Err(PevError::Parse {
                    line: ln,
                    message: format!("expected {dim} entries, found {}", row.len()),
                });
            }
            rows.push(row);
        }
        if rows.len() != dim {
            return Err(PevError::Parse {
                line: ln,
                message: format!("expected {dim} rows, found {}", rows.len()),
            });
        }
        if let Some((ln, _)) = lines.next() {
            return Err(PevError::Parse {
                line: ln,
                message: "trailing data after matrix".into(),
            });
        }
        Self::from_rows(&rows)
    }
}

/// Parses whitespace-separated `re,im` pairs (a bare real is accepted too).
pub fn parse_complex_row(line: &str, line_no: usize) -> Result<Vec<C64>> {
    line.split_whitespace()
        .map(|tok| {
            parse_complex(tok).ok_or_else(|| PevError::Parse {
                line: line_no,
                message: format!("bad complex entry '{tok}'"),
            })
        })
        .collect()
}

fn parse_complex(tok: &str) -> Option<C64> {
    match tok.split_once(',') {
        Some((re, im)) => Some(C64::new(re.trim().parse().ok()?, im.trim().parse().ok()?)),
        None => Some(C64::new(tok.parse().ok()?, 0.0)),
    }
}

pub(crate) fn max_abs_diff_identity(m: &DMatrix<C64>) -> f64 {
    let mut r = 0.0_f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let target = if i == j { ONE } else { ZERO };
            r = r.max((m[(i, j)] - target).norm());
        }
    }
    r
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        Operator::from_matrix_unchecked(&self.m * &rhs.m)
    }
}

impl Mul<&Operator> for Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        &self * rhs
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        Operator::from_matrix_unchecked(&self.m + &rhs.m)
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        Operator::from_matrix_unchecked(&self.m - &rhs.m)
    }
}

/// Which density-operator conditions hold and by how much they are violated.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityDiagnostics {
    pub valid: bool,
    pub hermiticity_residual: f64,
    pub min_eigenvalue: f64,
    pub trace_error: f64,
    pub hermitian_ok: bool,
    pub positive_ok: bool,
    pub trace_ok: bool,
}

impl DensityDiagnostics {
    pub fn failures(&self) -> Vec<String> {
        let mut f = Vec::new();
        if !self.hermitian_ok {
            f.push(format!(
                "hermiticity residual {:.3e}",
                self.hermiticity_residual
            ));
        }
        if !self.positive_ok {
            f.push(format!("negative eigenvalue {:.3e}", self.min_eigenvalue));
        }
        if !self.trace_ok {
            f.push(format!("trace error {:.3e}", self.trace_error));
        }
        f
    }
}

pub fn is_valid_density(op: &Operator, tols: &Tolerances) -> DensityDiagnostics {
    let hermiticity_residual = op.hermiticity_residual();
    let min_eigenvalue = op
        .hermitian_eigenvalues()
        .first()
        .copied()
        .unwrap_or(f64::NAN);
    let t = op.trace();
    let trace_error = (t - ONE).norm();
    let hermitian_ok = hermiticity_residual <= tols.herm;
    let positive_ok = min_eigenvalue >= -tols.pos;
    let trace_ok = trace_error <= tols.trace;
    DensityDiagnostics {
        valid: hermitian_ok && positive_ok && trace_ok,
        hermiticity_residual,
        min_eigenvalue,
        trace_error,
        hermitian_ok,
        positive_ok,
        trace_ok,
    }
}

/// Positive, hermitian, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    op: Operator,
}

impl DensityOperator {
    pub fn new(op: Operator) -> Result<Self> {
        Self::with_tolerances(op, &Tolerances::default())
    }

    pub fn with_tolerances(op: Operator, tols: &Tolerances) -> Result<Self> {
        let d = is_valid_density(&op, tols);
        if !d.valid {
            return Err(PevError::InvalidDensity(d.failures().join("; ")));
        }
        Ok(Self { op })
    }

    /// Wraps an operator the caller has already established to be a state.
    pub(crate) fn new_unchecked(op: Operator) -> Self {
        Self { op }
    }

    pub fn pure(ket: &[C64]) -> Result<Self> {
        let norm2: f64 = ket.iter().map(|z| z.norm_sqr()).sum();
        if !(norm2 > 0.0) || !norm2.is_finite() {
            return Err(PevError::InvalidDensity("zero or non-finite ket".into()));
        }
        let s = 1.0 / norm2.sqrt();
        let k: Vec<C64> = ket.iter().map(|z| z * s).collect();
        Self::new(Operator::outer(&k))
    }

    pub fn basis_state(dim: usize, i: usize) -> Self {
        Self::new_unchecked(Operator::basis_projector(dim, i))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::new_unchecked(Operator::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(Operator::diag_real(probs))
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn into_op(self) -> Operator {
        self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn purity(&self) -> f64 {
        self.op.purity()
    }

    pub fn entropy(&self) -> f64 {
        self.op.von_neumann_entropy()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.op.hermitian_eigenvalues()
    }
}

/// Orthogonal projector stored as an orthonormal basis of its range.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    basis: DMatrix<C64>,
}

impl Projector {
    /// `basis` columns must be orthonormal.
    pub fn from_basis(basis: DMatrix<C64>) -> Self {
        Self { basis }
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<C64> {
        &self.basis
    }

    pub fn to_operator(&self) -> Operator {
        Operator::from_matrix_unchecked(&self.basis * self.basis.adjoint())
    }

    /// P ρ P.
    pub fn sandwich(&self, rho: &Operator) -> Operator {
        let inner = self.basis.adjoint() * rho.matrix() * &self.basis;
        Operator::from_matrix_unchecked(&self.basis * inner * self.basis.adjoint())
    }

    /// Tr(P ρ P) = Tr(V† ρ V).
    pub fn weight(&self, rho: &Operator) -> f64 {
        (self.basis.adjoint() * rho.matrix() * &self.basis)
            .trace()
            .re
    }

    /// g P g† for unitary g.
    pub fn conjugate_by(&self, g: &Operator) -> Projector {
        Projector {
            basis: g.matrix() * &self.basis,
        }
    }

    /// ‖V†V − 1‖_max, the idempotency defect of V V†.
    pub fn idempotency_residual(&self) -> f64 {
        max_abs_diff_identity(&(self.basis.adjoint() * &self.basis))
    }

    /// ‖V_self† V_other‖_max, the overlap defect of P_self P_other.
    pub fn overlap_residual(&self, other: &Projector) -> f64 {
        (self.basis.adjoint() * &other.basis)
            .iter()
            .fold(0.0_f64, |acc, z| acc.max(z.norm()))
    }
}

/// Clustered spectral decomposition A = Σ_k λ_k P_k.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub projectors: Vec<Projector>,
}

impl SpectralDecomposition {
    pub fn reconstruct(&self) -> Operator {
        let n = self.projectors[0].dim();
        let mut m = DMatrix::<C64>::zeros(n, n);
        for (l, p) in self.eigenvalues.iter().zip(&self.projectors) {
            let v = p.basis();
            m += v * v.adjoint() * C64::new(*l, 0.0);
        }
        Operator::from_matrix_unchecked(m)
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.projectors.iter().map(Projector::rank).collect()
    }

    /// Residuals of P† = P, P_iP_j = δ_ij P_i and Σ P = 1 (Gram form).
    pub fn resolution_residuals(&self) -> ResolutionResiduals {
        resolution_residuals(&self.projectors)
    }
}

/// Residuals of the three orthogonal-resolution-of-unity conditions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResolutionResiduals {
    pub hermiticity: f64,
    pub idempotency: f64,
    pub orthogonality: f64,
    pub completeness: f64,
}

impl ResolutionResiduals {
    pub fn max(&self) -> f64 {
        self.hermiticity
            .max(self.idempotency)
            .max(self.orthogonality)
            .max(self.completeness)
    }
}

pub(crate) fn resolution_residuals(ps: &[Projector]) -> ResolutionResiduals {
    if ps.is_empty() {
        return ResolutionResiduals {
            completeness: 1.0,
            ..Default::default()
        };
    }
    let n = ps[0].dim();
    let idempotency = ps
        .iter()
        .map(Projector::idempotency_residual)
        .fold(0.0, f64::max);
    // One Gram matrix of all bases at once covers every pairwise overlap.
    let total: usize = ps.iter().map(Projector::rank).sum();
    let mut all = DMatrix::<C64>::zeros(n, total);
    let mut offs = Vec::with_capacity(ps.len());
    let mut c = 0;
    for p in ps {
        all.columns_mut(c, p.rank()).copy_from(p.basis());
        offs.push((c, p.rank()));
        c += p.rank();
    }
    let gram = all.adjoint() * &all;
    let mut orthogonality = 0.0_f64;
    for (a, &(ca, ra)) in offs.iter().enumerate() {
        for &(cb, rb) in offs.iter().skip(a + 1) {
            for i in ca..ca + ra {
                for j in cb..cb + rb {
                    orthogonality = orthogonality.max(gram[(i, j)].norm());
                }
            }
        }
    }
    let completeness = max_abs_diff_identity(&(&all * all.adjoint()));
    ResolutionResiduals {
        hermiticity: 0.0,
        idempotency,
        orthogonality,
        completeness,
    }
}

/// Clustered spectral decomposition of a hermitian operator.
///
/// Consecutive sorted eigenvalues closer than `cluster_tol × range` (range =
/// λ_max − λ_min) are merged into one eigenspace; the cluster's eigenvalue is
/// the mean of its members.
pub fn spectral_decompose(a: &Operator, cluster_tol: f64) -> Result<SpectralDecomposition> {
    let scale = a.max_abs().max(1.0);
    let r = a.hermiticity_residual();
    if r > Tolerances::default().herm * scale {
        return Err(PevError::NotHermitian { residual: r });
    }
    let eig = SymmetricEigen::new(a.hermitian_part().m);
    let n = a.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lo = eig.eigenvalues[order[0]];
    let hi = eig.eigenvalues[order[n - 1]];
    // A rounding-level range means a multiple of the identity: one cluster.
    let flat = hi - lo <= 1e3 * f64::EPSILON * hi.abs().max(lo.abs()).max(1.0);
    let threshold = if flat {
        f64::INFINITY
    } else {
        cluster_tol * (hi - lo)
    };

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &k in &order {
        match clusters.last_mut() {
            Some(c) if eig.eigenvalues[k] - eig.eigenvalues[*c.last().unwrap()] <= threshold => {
                c.push(k)
            }
            _ => clusters.push(vec![k]),
        }
    }
    let mut eigenvalues = Vec::with_capacity(clusters.len());
    let mut projectors = Vec::with_capacity(clusters.len());
    for c in clusters {
        let mean = c.iter().map(|&k| eig.eigenvalues[k]).sum::<f64>() / c.len() as f64;
        let mut basis = DMatrix::<C64>::zeros(n, c.len());
        for (col, &k) in c.iter().enumerate() {
            basis.set_column(col, &eig.eigenvectors.column(k));
        }
        eigenvalues.push(mean);
        projectors.push(Projector::from_basis(basis));
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        projectors,
    })
}

/// Adjoint of an operator (free-function form).
pub fn adjoint(a: &Operator) -> Operator {
    a.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn lcg_operator(dim: usize, seed: u64) -> Operator {
        let mut s = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let mut next = move || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        Operator::from_fn(dim, |_, _| c(next(), next()))
    }

    #[test]
    fn adjoint_examples() {
        assert_eq!(adjoint(&Operator::identity(2)), Operator::identity(2));
        let a = Operator::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let b = Operator::from_real_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(a.adjoint(), b);
        let r = lcg_operator(4, 7);
        assert_eq!(r.adjoint().adjoint(), r);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(r.adjoint().get(i, j), r.get(j, i).conj());
            }
        }
    }

    #[test]
    fn density_validity_examples() {
        let t = Tolerances::default();
        assert!(is_valid_density(DensityOperator::maximally_mixed(2).op(), &t).valid);

        let neg = Operator::diag_real(&[1.0, -0.001]);
        let d = is_valid_density(&neg, &t);
        assert!(!d.valid && !d.positive_ok);
        assert!((d.min_eigenvalue + 0.001).abs() < 1e-12);

        let two = Operator::diag_real(&[1.0, 1.0]);
        let d = is_valid_density(&two, &t);
        assert!(!d.valid && !d.trace_ok && d.positive_ok && d.hermitian_ok);
        assert!((d.trace_error - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_finite_and_non_square() {
        let bad = DMatrix::from_element(2, 2, c(f64::NAN, 0.0));
        assert!(matches!(
            Operator::from_matrix(bad),
            Err(PevError::NonFinite { .. })
        ));
        assert!(Operator::from_rows(&[vec![ONE, ZERO]]).is_err());
    }

    #[test]
    fn spectral_diag_degenerate() {
        let a = Operator::diag_real(&[1.0, 1.0, 2.0]);
        let s = spectral_decompose(&a, 1e-8).unwrap();
        assert_eq!(s.eigenvalues.len(), 2);
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 2.0).abs() < 1e-14);
        assert_eq!(s.ranks(), vec![2, 1]);
    }

    #[test]
    fn spectral_pauli_x() {
        let s = spectral_decompose(&Operator::pauli_x(), DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(s.eigenvalues.len(), 2);
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let minus = Operator::outer(&[c(h, 0.0), c(-h, 0.0)]);
        let plus = Operator::outer(&[c(h, 0.0), c(h, 0.0)]);
        assert!(s.projectors[0].to_operator().max_abs_diff(&minus) < 1e-14);
        assert!(s.projectors[1].to_operator().max_abs_diff(&plus) < 1e-14);
    }

    #[test]
    fn spectral_rejects_non_hermitian() {
        let a = Operator::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            spectral_decompose(&a, 1e-9),
            Err(PevError::NotHermitian { .. })
        ));
    }

    #[test]
    fn spectral_random_hermitian_reconstructs() {
        let r = lcg_operator(6, 3);
        let h = r.hermitian_part();
        let s = spectral_decompose(&h, DEFAULT_CLUSTER_TOL).unwrap();
        assert!(s.reconstruct().max_abs_diff(&h) < 1e-10);
        assert!(s.resolution_residuals().max() < 1e-10);
    }

    #[test]
    fn text_round_trip_and_errors() {
        let r = lcg_operator(3, 11);
        let back = Operator::parse_text(&r.to_text(), DEFAULT_DIM_CAP).unwrap();
        assert_eq!(back, r);
        assert!(matches!(
            Operator::parse_text("2\n1,0 0,0\n", 64),
            Err(PevError::Parse { .. })
        ));
        assert!(matches!(
            Operator::parse_text("65\n", 64),
            Err(PevError::DimensionCap { .. })
        ));
        assert!(Operator::parse_text("2\n1,0 0,0\n0,0 x,1\n", 64).is_err());
    }

    #[test]
    fn exp_i_of_pauli_z() {
        let u = Operator::pauli_z().exp_i(0.3).unwrap();
        assert!((u.get(0, 0) - C64::from_polar(1.0, 0.3)).norm() < 1e-14);
        assert!((u.get(1, 1) - C64::from_polar(1.0, -0.3)).norm() < 1e-14);
        assert!(u.is_unitary(1e-12));
    }
}
