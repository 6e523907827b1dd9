//! Projection-evolution machinery: channel families, the Lüders update and
//! the stochastic chooser that samples evolution paths over the integer
//! evolution parameter τ.
//!
//! A channel realizes `F(ρ) = Σ_α E_α ρ E_α†`. The chooser weight of a channel
//! is `Tr F(ρ)`; weights at or below [`ZERO_PROB_TOL`] mark impossible
//! branches and are excluded before normalizing across channels.
//!
//! # Randomness
//!
//! Paths are driven by ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)`. Path `i` of a batch uses stream `i` of that seed
//! ([`path_rng`]), so each path is reproducible on its own and batches can be
//! split across threads without changing results. Each step consumes exactly
//! one `f64` draw.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{parse_toml, FamilyFile, FamilySpec};
use crate::error::{PevError, Result};
use crate::hilbert::{
    self, is_valid_density, DensityOperator, Operator, Projector, ResolutionResiduals, Tolerances,
    C64,
};

/// Weights at or below this are impossible branches.
pub const ZERO_PROB_TOL: f64 = 1e-12;

/// Default residual tolerance for family validation.
pub const FAMILY_TOL: f64 = 1e-10;

/// Quantum-number label ν of a channel.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ChannelLabel {
    Index(i64),
    Name(String),
}

impl fmt::Display for ChannelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelLabel::Index(i) => write!(f, "{i}"),
            ChannelLabel::Name(s) => f.write_str(s),
        }
    }
}

impl From<i64> for ChannelLabel {
    fn from(i: i64) -> Self {
        ChannelLabel::Index(i)
    }
}

impl From<&str> for ChannelLabel {
    fn from(s: &str) -> Self {
        match s.parse::<i64>() {
            Ok(i) => ChannelLabel::Index(i),
            Err(_) => ChannelLabel::Name(s.to_string()),
        }
    }
}

/// One evolution operator E(τ;ν,α).
#[derive(Debug, Clone, PartialEq)]
pub enum Branch {
    Dense(Operator),
    /// Orthogonal projector kept in factored form.
    Projector(Projector),
}

impl Branch {
    pub fn dim(&self) -> usize {
        match self {
            Branch::Dense(o) => o.dim(),
            Branch::Projector(p) => p.dim(),
        }
    }

    pub fn to_operator(&self) -> Operator {
        match self {
            Branch::Dense(o) => o.clone(),
            Branch::Projector(p) => p.to_operator(),
        }
    }

    /// E ρ E†.
    pub fn sandwich(&self, rho: &Operator) -> Operator {
        match self {
            Branch::Dense(e) => e.sandwich(rho),
            Branch::Projector(p) => p.sandwich(rho),
        }
    }

    /// Tr(E ρ E†).
    pub fn weight(&self, rho: &Operator) -> f64 {
        match self {
            Branch::Dense(e) => (e.adjoint() * e).expectation(rho).re,
            Branch::Projector(p) => p.weight(rho),
        }
    }

    /// g E g† for unitary g.
    pub fn conjugate_by(&self, g: &Operator) -> Branch {
        match self {
            Branch::Dense(e) => Branch::Dense(&(g * e) * &g.adjoint()),
            Branch::Projector(p) => Branch::Projector(p.conjugate_by(g)),
        }
    }
}

impl From<Operator> for Branch {
    fn from(o: Operator) -> Self {
        Branch::Dense(o)
    }
}

/// Channel ν with its branch operators.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub label: ChannelLabel,
    branches: Vec<Branch>,
    /// Generator eigenvalue when the channel came from a spectral decomposition.
    pub value: Option<f64>,
}

impl Channel {
    pub fn new(label: impl Into<ChannelLabel>, branches: Vec<Branch>) -> Result<Self> {
        let first = branches
            .first()
            .ok_or_else(|| PevError::InvalidFamily("channel without branches".into()))?;
        let d = first.dim();
        if let Some(b) = branches.iter().find(|b| b.dim() != d) {
            return Err(PevError::DimensionMismatch {
                expected: d,
                found: b.dim(),
            });
        }
        Ok(Self {
            label: label.into(),
            branches,
            value: None,
        })
    }

    pub fn single(label: impl Into<ChannelLabel>, e: Operator) -> Self {
        Self::new(label, vec![Branch::Dense(e)]).expect("one branch")
    }

    pub fn with_value(mut self, v: f64) -> Self {
        self.value = Some(v);
        self
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn dim(&self) -> usize {
        self.branches[0].dim()
    }

    /// Σ_α E_α† E_α.
    pub fn effect(&self) -> Operator {
        let d = self.dim();
        let mut acc = Operator::zeros(d);
        for b in &self.branches {
            let e = b.to_operator();
            acc = &acc + &(e.adjoint() * &e);
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    OrthogonalResolution,
    Unitary,
    General,
}

impl FamilyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyKind::OrthogonalResolution => "orthogonal-resolution",
            FamilyKind::Unitary => "unitary",
            FamilyKind::General => "general",
        }
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = PevError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "orthogonal-resolution" | "orthogonal" | "projective" => {
                Ok(FamilyKind::OrthogonalResolution)
            }
            "unitary" => Ok(FamilyKind::Unitary),
            "general" => Ok(FamilyKind::General),
            other => Err(PevError::InvalidFamily(format!(
                "unknown family kind '{other}'"
            ))),
        }
    }
}

/// All channels available at one evolution step τ.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFamily {
    pub tau: i64,
    pub kind: FamilyKind,
    /// Asserts Σ_{ν,α} E†E = 1 for general families.
    pub probability_conserving: bool,
    channels: Vec<Channel>,
}

impl ChannelFamily {
    /// Checks structure only (shared dimension, branch counts for the kind);
    /// numeric conditions are reported by [`validate_family`].
    pub fn new(tau: i64, kind: FamilyKind, channels: Vec<Channel>) -> Result<Self> {
        if channels.is_empty() {
            return Err(PevError::EmptyFamily { tau });
        }
        let d = channels[0].dim();
        if let Some(c) = channels.iter().find(|c| c.dim() != d) {
            return Err(PevError::DimensionMismatch {
                expected: d,
                found: c.dim(),
            });
        }
        match kind {
            FamilyKind::OrthogonalResolution => {
                if channels.iter().any(|c| c.branches.len() != 1) {
                    return Err(PevError::InvalidFamily(
                        "orthogonal-resolution channels carry exactly one branch".into(),
                    ));
                }
            }
            FamilyKind::Unitary => {
                if channels.len() != 1 || channels[0].branches.len() != 1 {
                    return Err(PevError::InvalidFamily(
                        "a unitary family has one channel with one branch".into(),
                    ));
                }
            }
            FamilyKind::General => {}
        }
        let probability_conserving = kind != FamilyKind::General;
        Ok(Self {
            tau,
            kind,
            probability_conserving,
            channels,
        })
    }

    pub fn unitary(tau: i64, u: Operator) -> Result<Self> {
        Self::new(tau, FamilyKind::Unitary, vec![Channel::single(0, u)])
    }

    /// Orthogonal-resolution family with one projector channel per operator,
    /// labelled 0, 1, ….
    pub fn projective(tau: i64, projectors: Vec<Operator>) -> Result<Self> {
        let chans = projectors
            .into_iter()
            .enumerate()
            .map(|(i, p)| Channel::single(i as i64, p))
            .collect();
        Self::new(tau, FamilyKind::OrthogonalResolution, chans)
    }

    pub fn general(tau: i64, channels: Vec<Channel>, probability_conserving: bool) -> Result<Self> {
        let mut f = Self::new(tau, FamilyKind::General, channels)?;
        f.probability_conserving = probability_conserving;
        Ok(f)
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn dim(&self) -> usize {
        self.channels[0].dim()
    }

    /// Same channels at a different step.
    pub fn at_step(&self, tau: i64) -> Self {
        let mut f = self.clone();
        f.tau = tau;
        f
    }
}

fn check_dims(ch: &Channel, rho: &Operator) -> Result<()> {
    if ch.dim() != rho.dim() {
        return Err(PevError::DimensionMismatch {
            expected: ch.dim(),
            found: rho.dim(),
        });
    }
    Ok(())
}

/// Unnormalized channel image Σ_α E_α ρ E_α†.
pub fn apply_channel(ch: &Channel, rho: &DensityOperator) -> Result<Operator> {
    check_dims(ch, rho.op())?;
    let mut acc = Operator::zeros(ch.dim());
    for b in &ch.branches {
        acc = &acc + &b.sandwich(rho.op());
    }
    Ok(acc)
}

/// Tr(Σ_α E_α ρ E_α†).
pub fn transition_prob(ch: &Channel, rho: &DensityOperator) -> Result<f64> {
    check_dims(ch, rho.op())?;
    Ok(ch.branches.iter().map(|b| b.weight(rho.op())).sum())
}

/// Normalized channel image; fails on a zero-probability branch.
pub fn luders_update(ch: &Channel, rho: &DensityOperator) -> Result<DensityOperator> {
    let img = apply_channel(ch, rho)?;
    normalize_image(img)
}

fn normalize_image(img: Operator) -> Result<DensityOperator> {
    let t = img.trace().re;
    if !(t > ZERO_PROB_TOL) {
        return Err(PevError::ZeroProbabilityBranch { prob: t });
    }
    // Re-hermitize to stop rounding drift from accumulating over steps.
    Ok(DensityOperator::new_unchecked(
        img.hermitian_part().scale_real(1.0 / t),
    ))
}

/// (Σ_m U_m ρ U_m†) / Tr(·) for unitary U_m.
pub fn mixed_unitary_update(us: &[Operator], rho: &DensityOperator) -> Result<DensityOperator> {
    if us.is_empty() {
        return Err(PevError::InvalidFamily("no unitaries supplied".into()));
    }
    let mut acc = Operator::zeros(rho.dim());
    for u in us {
        u.check_same_dim(rho.op())?;
        let r = u.unitarity_residual();
        if r > FAMILY_TOL {
            return Err(PevError::NotUnitary { residual: r });
        }
        acc = &acc + &u.sandwich(rho.op());
    }
    normalize_image(acc)
}

/// One recorded evolution step.
#[derive(Debug, Clone, PartialEq)]
pub struct PathStep {
    pub tau: i64,
    /// Index of the chosen channel within its family.
    pub channel: usize,
    pub label: ChannelLabel,
    /// Normalized chooser weight of the chosen channel.
    pub pev: f64,
    /// Normalized chooser weights of every channel in the family.
    pub weights: Vec<f64>,
    pub state: DensityOperator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub seed: u64,
    pub stream: u64,
    pub steps: Vec<PathStep>,
}

impl PathRecord {
    pub fn final_state(&self) -> Option<&DensityOperator> {
        self.steps.last().map(|s| &s.state)
    }

    /// CSV with columns `tau,nu,pev,purity,entropy`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("tau,nu,pev,purity,entropy\n");
        for st in &self.steps {
            writeln!(
                s,
                "{},{},{:.17e},{:.17e},{:.17e}",
                st.tau,
                st.label,
                st.pev,
                st.state.purity(),
                st.state.entropy()
            )
            .unwrap();
        }
        s
    }
}

/// ChaCha8 generator for stream `stream` of `seed`.
pub fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Normalized chooser weights over the family's channels.
pub fn chooser_weights(family: &ChannelFamily, rho: &DensityOperator) -> Result<Vec<f64>> {
    let mut w = Vec::with_capacity(family.channels.len());
    for ch in &family.channels {
        let p = transition_prob(ch, rho)?;
        w.push(if p > ZERO_PROB_TOL { p } else { 0.0 });
    }
    let total: f64 = w.iter().sum();
    if !(total > ZERO_PROB_TOL) {
        return Err(PevError::AllBranchesZero { tau: family.tau });
    }
    w.iter_mut().for_each(|x| *x /= total);
    Ok(w)
}

fn choose(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        last_nonzero = i;
        acc += w;
        if u < acc {
            return i;
        }
    }
    last_nonzero
}

/// Samples one evolution path (stream 0 of `seed`).
pub fn sample_path(
    families: &[ChannelFamily],
    rho0: &DensityOperator,
    seed: u64,
) -> Result<PathRecord> {
    sample_path_stream(families, rho0, seed, 0)
}

pub fn sample_path_stream(
    families: &[ChannelFamily],
    rho0: &DensityOperator,
    seed: u64,
    stream: u64,
) -> Result<PathRecord> {
    let mut rng = path_rng(seed, stream);
    let mut rho = rho0.clone();
    let mut steps = Vec::with_capacity(families.len());
    for fam in families {
        let weights = chooser_weights(fam, &rho)?;
        let u: f64 = rng.random();
        let k = choose(&weights, u);
        let ch = &fam.channels[k];
        rho = luders_update(ch, &rho)?;
        steps.push(PathStep {
            tau: fam.tau,
            channel: k,
            label: ch.label.clone(),
            pev: weights[k],
            weights,
            state: rho.clone(),
        });
    }
    Ok(PathRecord {
        seed,
        stream,
        steps,
    })
}

/// Per-step counts of chosen channels over many independent paths.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchStatistics {
    pub n_paths: usize,
    pub taus: Vec<i64>,
    pub labels: Vec<Vec<ChannelLabel>>,
    /// `counts[step][channel]`.
    pub counts: Vec<Vec<u64>>,
}

impl BranchStatistics {
    pub fn frequencies(&self, step: usize) -> Vec<f64> {
        self.counts[step]
            .iter()
            .map(|&c| c as f64 / self.n_paths as f64)
            .collect()
    }

    /// CSV with columns `tau,nu,count,frequency`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("tau,nu,count,frequency\n");
        for (i, tau) in self.taus.iter().enumerate() {
            for (label, &c) in self.labels[i].iter().zip(&self.counts[i]) {
                writeln!(
                    s,
                    "{tau},{label},{c},{:.17e}",
                    c as f64 / self.n_paths as f64
                )
                .unwrap();
            }
        }
        s
    }
}

/// Samples `n_paths` paths (path `i` uses stream `i`) in parallel; the result
/// does not depend on thread scheduling.
pub fn branch_statistics(
    families: &[ChannelFamily],
    rho0: &DensityOperator,
    n_paths: usize,
    seed: u64,
) -> Result<BranchStatistics> {
    let choices: Vec<Vec<usize>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|i| {
            sample_path_stream(families, rho0, seed, i)
                .map(|p| p.steps.iter().map(|s| s.channel).collect())
        })
        .collect::<Result<_>>()?;
    let mut counts: Vec<Vec<u64>> = families.iter().map(|f| vec![0; f.channels.len()]).collect();
    for path in &choices {
        for (step, &k) in path.iter().enumerate() {
            counts[step][k] += 1;
        }
    }
    Ok(BranchStatistics {
        n_paths,
        taus: families.iter().map(|f| f.tau).collect(),
        labels: families
            .iter()
            .map(|f| f.channels.iter().map(|c| c.label.clone()).collect())
            .collect(),
        counts,
    })
}

/// A single named validation condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance,
            passed: residual <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyDiagnostics {
    pub tau: i64,
    pub kind: FamilyKind,
    pub checks: Vec<Check>,
}

impl FamilyDiagnostics {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

pub fn validate_family(f: &ChannelFamily) -> FamilyDiagnostics {
    validate_family_with_tol(f, FAMILY_TOL)
}

pub fn validate_family_with_tol(f: &ChannelFamily, tol: f64) -> FamilyDiagnostics {
    let mut checks = Vec::new();
    match f.kind {
        FamilyKind::OrthogonalResolution => {
            let r = resolution_residuals_of(f);
            checks.push(Check::new("hermiticity", r.hermiticity, tol));
            checks.push(Check::new("idempotency", r.idempotency, tol));
            checks.push(Check::new("orthogonality", r.orthogonality, tol));
            checks.push(Check::new("completeness", r.completeness, tol));
        }
        FamilyKind::Unitary => {
            let u = f.channels[0].branches[0].to_operator();
            checks.push(Check::new("unitarity", u.unitarity_residual(), tol));
        }
        FamilyKind::General => {
            let total = total_effect(f);
            let finite = total
                .matrix()
                .iter()
                .all(|z| z.re.is_finite() && z.im.is_finite());
            checks.push(Check::new(
                "finite_trace",
                if finite { 0.0 } else { f64::INFINITY },
                tol,
            ));
            if f.probability_conserving {
                let r = hilbert::max_abs_diff_identity(total.matrix());
                checks.push(Check::new("probability_conserving", r, tol));
            }
        }
    }
    FamilyDiagnostics {
        tau: f.tau,
        kind: f.kind,
        checks,
    }
}

/// Σ_{ν,α} E†E.
pub fn total_effect(f: &ChannelFamily) -> Operator {
    let mut acc = Operator::zeros(f.dim());
    for c in &f.channels {
        acc = &acc + &c.effect();
    }
    acc
}

fn resolution_residuals_of(f: &ChannelFamily) -> ResolutionResiduals {
    let all_factored: Option<Vec<Projector>> = f
        .channels
        .iter()
        .map(|c| match &c.branches[0] {
            Branch::Projector(p) => Some(p.clone()),
            Branch::Dense(_) => None,
        })
        .collect();
    if let Some(ps) = all_factored {
        return hilbert::resolution_residuals(&ps);
    }
    let ops: Vec<Operator> = f
        .channels
        .iter()
        .map(|c| c.branches[0].to_operator())
        .collect();
    dense_resolution_residuals(&ops)
}

/// Residuals of P† = P, P² = P, P_iP_j = 0 (i ≠ j), Σ P = 1 on dense operators.
pub fn dense_resolution_residuals(ops: &[Operator]) -> ResolutionResiduals {
    let d = ops[0].dim();
    let mut r = ResolutionResiduals::default();
    let mut sum = Operator::zeros(d);
    for (i, p) in ops.iter().enumerate() {
        r.hermiticity = r.hermiticity.max(p.hermiticity_residual());
        r.idempotency = r.idempotency.max((p * p).max_abs_diff(p));
        for q in ops.iter().skip(i + 1) {
            r.orthogonality = r.orthogonality.max((p * q).max_abs());
        }
        sum = &sum + p;
    }
    r.completeness = sum.max_abs_diff(&Operator::identity(d));
    r
}

/// Verifies that a state passed the density conditions (used by tests and the CLI).
pub fn density_ok(rho: &DensityOperator) -> bool {
    is_valid_density(rho.op(), &Tolerances::default()).valid
}

// ---------------------------------------------------------------------------
// Family files
// ---------------------------------------------------------------------------

/// Builds families from parsed `[[family]]` tables. Branch strings are inline
/// matrices `[re,im re,im; re,im re,im]` or operator-file paths relative to
/// `base_dir`. Families without `tau` take the next step number.
pub fn families_from_specs(
    specs: &[FamilySpec],
    base_dir: &Path,
    cap: usize,
) -> Result<Vec<ChannelFamily>> {
    let mut out: Vec<ChannelFamily> = Vec::new();
    for spec in specs {
        let kind: FamilyKind = spec.kind.parse()?;
        let mut chans = Vec::with_capacity(spec.channel.len());
        for (i, c) in spec.channel.iter().enumerate() {
            let label = c
                .label
                .as_deref()
                .map(ChannelLabel::from)
                .unwrap_or(ChannelLabel::Index(i as i64));
            let branches = c
                .branches
                .iter()
                .map(|b| load_operator_value(b, base_dir, cap).map(Branch::Dense))
                .collect::<Result<Vec<_>>>()?;
            chans.push(Channel::new(label, branches)?);
        }
        let tau = spec
            .tau
            .unwrap_or_else(|| out.last().map(|f| f.tau + 1).unwrap_or(1));
        if chans.is_empty() {
            return Err(PevError::EmptyFamily { tau });
        }
        let mut fam = ChannelFamily::new(tau, kind, chans)?;
        if kind == FamilyKind::General {
            fam.probability_conserving = spec.probability_conserving.unwrap_or(false);
        }
        for r in 0..spec.repeat.unwrap_or(1).max(1) {
            out.push(fam.at_step(tau + r as i64));
        }
    }
    if out.is_empty() {
        return Err(PevError::InvalidFamily("no [[family]] tables".into()));
    }
    Ok(out)
}

/// Reads a family file from disk.
pub fn load_family_file(path: &Path, cap: usize) -> Result<Vec<ChannelFamily>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PevError::Io(format!("{}: {e}", path.display())))?;
    let file: FamilyFile = parse_toml(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    families_from_specs(&file.family, base, cap)
}

/// An inline `[re,im ...; ...]` matrix or a path to an operator file.
pub fn load_operator_value(value: &str, base_dir: &Path, cap: usize) -> Result<Operator> {
    let v = value.trim();
    if let Some(inner) = v.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
        let rows: Vec<Vec<C64>> = inner
            .split(';')
            .map(|r| hilbert::parse_complex_row(r, 1))
            .collect::<Result<_>>()?;
        if rows.len() > cap {
            return Err(PevError::DimensionCap {
                dim: rows.len(),
                cap,
            });
        }
        return Operator::from_rows(&rows);
    }
    let path = base_dir.join(v);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| PevError::Io(format!("{}: {e}", path.display())))?;
    Operator::parse_text(&text, cap)
}

/// Builds a random probability-conserving Kraus family by stacking random
/// blocks and orthonormalizing the stack (QR): the blocks of an isometry
/// satisfy Σ E†E = 1.
pub fn random_kraus_family<R: Rng>(
    rng: &mut R,
    tau: i64,
    dim: usize,
    n_channels: usize,
    branches_per_channel: usize,
) -> ChannelFamily {
    let k = n_channels * branches_per_channel;
    let stacked = DMatrix::<C64>::from_fn(k * dim, dim, |_, _| {
        C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let q = stacked.qr().q();
    let mut channels = Vec::with_capacity(n_channels);
    for c in 0..n_channels {
        let mut branches = Vec::with_capacity(branches_per_channel);
        for b in 0..branches_per_channel {
            let row0 = (c * branches_per_channel + b) * dim;
            let block = q.view((row0, 0), (dim, dim)).into_owned();
            branches.push(Branch::Dense(Operator::from_matrix_unchecked(block)));
        }
        channels.push(Channel::new(c as i64, branches).expect("same dim"));
    }
    ChannelFamily::general(tau, channels, true).expect("nonempty")
}

/// Random density operator A A† / Tr(A A†).
pub fn random_density<R: Rng>(rng: &mut R, dim: usize) -> DensityOperator {
    let a = DMatrix::<C64>::from_fn(dim, dim, |_, _| {
        C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let m = &a * a.adjoint();
    let t = m.trace().re;
    DensityOperator::new_unchecked(Operator::from_matrix_unchecked(m / C64::new(t, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn plus() -> Vec<C64> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        vec![c(h), c(h)]
    }

    #[test]
    fn identity_channel_is_noop() {
        let rho = DensityOperator::diagonal(&[0.25, 0.75]).unwrap();
        let out = apply_channel(&Channel::single(0, Operator::identity(2)), &rho).unwrap();
        assert!(out.max_abs_diff(rho.op()) < 1e-15);
    }

    #[test]
    fn projector_on_plus_state_halves_trace() {
        let rho = DensityOperator::pure(&plus()).unwrap();
        let out =
            apply_channel(&Channel::single(0, Operator::basis_projector(2, 0)), &rho).unwrap();
        let expect = Operator::basis_projector(2, 0).scale_real(0.5);
        assert!(out.max_abs_diff(&expect) < 1e-15);
        assert!((out.trace().re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn transition_probability_examples() {
        let zero = DensityOperator::basis_state(2, 0);
        let p0 = Channel::single(0, Operator::basis_projector(2, 0));
        let p1 = Channel::single(1, Operator::basis_projector(2, 1));
        let pp = Channel::single(2, Operator::outer(&plus()));
        assert!((transition_prob(&p0, &zero).unwrap() - 1.0).abs() < 1e-15);
        assert!(transition_prob(&p1, &zero).unwrap().abs() < 1e-15);
        assert!((transition_prob(&pp, &zero).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let rho = DensityOperator::maximally_mixed(3);
        let ch = Channel::single(0, Operator::identity(2));
        assert!(matches!(
            apply_channel(&ch, &rho),
            Err(PevError::DimensionMismatch { .. })
        ));
        assert!(transition_prob(&ch, &rho).is_err());
    }

    #[test]
    fn luders_examples() {
        let zero = DensityOperator::basis_state(2, 0);
        let rho = DensityOperator::diagonal(&[0.3, 0.7]).unwrap();
        let u = Operator::hadamard();
        let out = luders_update(&Channel::single(0, u.clone()), &rho).unwrap();
        assert!(out.op().max_abs_diff(&u.sandwich(rho.op())) < 1e-15);
        assert!((out.op().trace().re - 1.0).abs() < 1e-15);

        let pp = Operator::outer(&plus());
        let out = luders_update(&Channel::single(0, pp.clone()), &zero).unwrap();
        assert!(out.op().max_abs_diff(&pp) < 1e-15);

        let err = luders_update(&Channel::single(1, Operator::basis_projector(2, 1)), &zero);
        assert!(matches!(err, Err(PevError::ZeroProbabilityBranch { .. })));
    }

    #[test]
    fn mixed_unitary_examples() {
        let rho = DensityOperator::diagonal(&[0.3, 0.7]).unwrap();
        let u = Operator::hadamard();
        let one = mixed_unitary_update(&[u.clone()], &rho).unwrap();
        assert!(one.op().max_abs_diff(&u.sandwich(rho.op())) < 1e-15);

        let same =
            mixed_unitary_update(&[Operator::identity(2), Operator::identity(2)], &rho).unwrap();
        assert!(same.op().max_abs_diff(rho.op()) < 1e-15);

        let zero = DensityOperator::basis_state(2, 0);
        let mix =
            mixed_unitary_update(&[Operator::identity(2), Operator::pauli_x()], &zero).unwrap();
        assert!(mix.op().max_abs_diff(&Operator::diag_real(&[0.5, 0.5])) < 1e-15);

        let bad = Operator::diag_real(&[1.0, 0.5]);
        assert!(matches!(
            mixed_unitary_update(&[bad], &zero),
            Err(PevError::NotUnitary { .. })
        ));
    }

    #[test]
    fn validate_family_examples() {
        let ok = ChannelFamily::projective(
            1,
            vec![
                Operator::basis_projector(2, 0),
                Operator::basis_projector(2, 1),
            ],
        )
        .unwrap();
        assert!(validate_family(&ok).passed());

        let bad = ChannelFamily::projective(1, vec![Operator::basis_projector(2, 0)]).unwrap();
        let d = validate_family(&bad);
        assert!(!d.passed());
        let failed: Vec<_> = d.failed().iter().map(|c| c.name.as_str()).collect();
        assert_eq!(failed, vec!["completeness"]);

        let mut rng = path_rng(5, 0);
        let k = random_kraus_family(&mut rng, 1, 4, 3, 2);
        let d = validate_family(&k);
        assert!(d.passed());
        assert!(
            d.checks
                .iter()
                .find(|c| c.name == "probability_conserving")
                .unwrap()
                .residual
                < 1e-10
        );
    }

    #[test]
    fn unitary_path_has_unit_weight() {
        let fam = ChannelFamily::unitary(1, Operator::hadamard()).unwrap();
        let rho = DensityOperator::diagonal(&[0.3, 0.7]).unwrap();
        let p = sample_path(&[fam], &rho, 1).unwrap();
        assert_eq!(p.steps.len(), 1);
        assert_eq!(p.steps[0].pev, 1.0);
        assert!(
            p.steps[0]
                .state
                .op()
                .max_abs_diff(&Operator::hadamard().sandwich(rho.op()))
                < 1e-15
        );
    }

    #[test]
    fn same_seed_same_path() {
        let fam = ChannelFamily::projective(
            1,
            vec![
                Operator::basis_projector(2, 0),
                Operator::basis_projector(2, 1),
            ],
        )
        .unwrap();
        let fams: Vec<_> = (1..=5)
            .map(|t| {
                if t % 2 == 0 {
                    ChannelFamily::unitary(t, Operator::hadamard()).unwrap()
                } else {
                    fam.at_step(t)
                }
            })
            .collect();
        let rho = DensityOperator::diagonal(&[0.3, 0.7]).unwrap();
        let a = sample_path(&fams, &rho, 42).unwrap();
        let b = sample_path(&fams, &rho, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn all_zero_family_errors() {
        let fam = ChannelFamily::general(
            1,
            vec![Channel::single(0, Operator::basis_projector(2, 1))],
            false,
        )
        .unwrap();
        let rho = DensityOperator::basis_state(2, 0);
        assert!(matches!(
            sample_path(&[fam], &rho, 0),
            Err(PevError::AllBranchesZero { tau: 1 })
        ));
    }

    #[test]
    fn choose_skips_zero_weights() {
        assert_eq!(choose(&[0.0, 1.0, 0.0], 0.999_999), 1);
        assert_eq!(choose(&[0.5, 0.5, 0.0], 0.9999999999999999), 1);
        assert_eq!(choose(&[0.5, 0.5], 0.0), 0);
    }

    #[test]
    fn structural_checks() {
        assert!(matches!(
            ChannelFamily::new(3, FamilyKind::General, vec![]),
            Err(PevError::EmptyFamily { tau: 3 })
        ));
        let two = vec![
            Channel::single(0, Operator::identity(2)),
            Channel::single(1, Operator::identity(2)),
        ];
        assert!(ChannelFamily::new(1, FamilyKind::Unitary, two).is_err());
        let mixed = vec![
            Channel::single(0, Operator::identity(2)),
            Channel::single(1, Operator::identity(3)),
        ];
        assert!(matches!(
            ChannelFamily::new(1, FamilyKind::General, mixed),
            Err(PevError::DimensionMismatch { .. })
        ));
    }
}
