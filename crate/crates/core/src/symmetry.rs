//! Symmetry transformations of channels and the conservation checks that
//! follow from them.
//!
//! Groups are represented by finite sets of unitary matrices S(g): finite
//! groups or finite samples of compact groups. Closure of the sampled set is
//! not checked; the identity must be present.

use crate::error::{PevError, Result};
use crate::evolution::{
    apply_channel, sample_path, transition_prob, Branch, Channel, ChannelFamily,
};
use crate::generators::channels_from_generator;
use crate::hilbert::{DensityOperator, Operator, DEFAULT_CLUSTER_TOL};

/// Residual bound for unitarity and identity detection.
pub const GROUP_TOL: f64 = 1e-10;
/// Probability/expectation agreement tolerance.
pub const CONSERVATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupAction {
    elements: Vec<Operator>,
    labels: Vec<String>,
}

impl GroupAction {
    pub fn new(elements: Vec<Operator>, labels: Vec<String>) -> Result<Self> {
        if elements.is_empty() {
            return Err(PevError::InvalidFamily(
                "group action without elements".into(),
            ));
        }
        if labels.len() != elements.len() {
            return Err(PevError::InvalidFamily(
                "one label per group element is required".into(),
            ));
        }
        let d = elements[0].dim();
        for g in &elements {
            g.check_same_dim(&elements[0])?;
            let r = g.unitarity_residual();
            if r > GROUP_TOL {
                return Err(PevError::NotUnitary { residual: r });
            }
        }
        let id = Operator::identity(d);
        if !elements.iter().any(|g| g.max_abs_diff(&id) <= GROUP_TOL) {
            return Err(PevError::InvalidFamily("identity element missing".into()));
        }
        Ok(Self { elements, labels })
    }

    /// {1, S} for an involution S.
    pub fn z2(s: Operator) -> Result<Self> {
        let d = s.dim();
        Self::new(vec![Operator::identity(d), s], vec!["e".into(), "s".into()])
    }

    pub fn elements(&self) -> &[Operator] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    /// max_g ‖g A g† − A‖.
    pub fn invariance_residual(&self, a: &Operator) -> f64 {
        self.elements
            .iter()
            .map(|g| g.sandwich(a).max_abs_diff(a))
            .fold(0.0, f64::max)
    }

    /// max_g ‖[A, g]‖.
    pub fn commutation_residual(&self, a: &Operator) -> f64 {
        self.elements
            .iter()
            .map(|g| a.commutator(g).max_abs())
            .fold(0.0, f64::max)
    }
}

fn require_unitary(g: &Operator) -> Result<()> {
    let r = g.unitarity_residual();
    if r > GROUP_TOL {
        return Err(PevError::NotUnitary { residual: r });
    }
    Ok(())
}

/// Branches E → g E g⁻¹.
pub fn transform_channel(g: &Operator, ch: &Channel) -> Result<Channel> {
    require_unitary(g)?;
    if g.dim() != ch.dim() {
        return Err(PevError::DimensionMismatch {
            expected: ch.dim(),
            found: g.dim(),
        });
    }
    let branches: Vec<Branch> = ch.branches().iter().map(|b| b.conjugate_by(g)).collect();
    let mut out = Channel::new(ch.label.clone(), branches)?;
    out.value = ch.value;
    Ok(out)
}

pub fn transform_family(g: &Operator, f: &ChannelFamily) -> Result<ChannelFamily> {
    let chans = f
        .channels()
        .iter()
        .map(|c| transform_channel(g, c))
        .collect::<Result<Vec<_>>>()?;
    let mut out = ChannelFamily::new(f.tau, f.kind, chans)?;
    out.probability_conserving = f.probability_conserving;
    Ok(out)
}

/// ρ → g ρ g†.
pub fn transform_state(g: &Operator, rho: &DensityOperator) -> Result<DensityOperator> {
    require_unitary(g)?;
    g.check_same_dim(rho.op())?;
    DensityOperator::new(g.sandwich(rho.op()).hermitian_part())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityInvarianceReport {
    /// Tr(E ρ E†).
    pub original: f64,
    /// Tr(gEg⁻¹ ρ gE†g⁻¹).
    pub transformed: f64,
    pub difference: f64,
    /// max_α ‖[g, E_α]‖.
    pub commutator_g_e: f64,
    /// ‖[g, ρ]‖.
    pub commutator_g_rho: f64,
    pub invariant: bool,
    /// One of the sufficient conditions [g,E] = 0 or [g,ρ] = 0 holds.
    pub sufficient_condition: bool,
}

impl ProbabilityInvarianceReport {
    /// A sufficient condition holds but the probabilities differ.
    pub fn violated(&self) -> bool {
        self.sufficient_condition && !self.invariant
    }
}

pub fn probability_invariance_check(
    g: &Operator,
    ch: &Channel,
    rho: &DensityOperator,
) -> Result<ProbabilityInvarianceReport> {
    let moved = transform_channel(g, ch)?;
    let original = transition_prob(ch, rho)?;
    let transformed = transition_prob(&moved, rho)?;
    let commutator_g_e = ch
        .branches()
        .iter()
        .map(|b| g.commutator(&b.to_operator()).max_abs())
        .fold(0.0, f64::max);
    let commutator_g_rho = g.commutator(rho.op()).max_abs();
    let difference = (transformed - original).abs();
    Ok(ProbabilityInvarianceReport {
        original,
        transformed,
        difference,
        commutator_g_e,
        commutator_g_rho,
        invariant: difference <= CONSERVATION_TOL,
        sufficient_condition: commutator_g_e <= CONSERVATION_TOL
            || commutator_g_rho <= CONSERVATION_TOL,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationReport {
    /// Tr(A ρ).
    pub before: f64,
    /// Tr(A F(ρ)) / Tr F(ρ).
    pub after: f64,
    pub difference: f64,
    /// max_α ‖[A, E_α]‖.
    pub commutator: f64,
    /// Single unitary branch.
    pub unitary: bool,
    pub conserved: bool,
    /// Unitary channel commuting with A: conservation is guaranteed.
    pub guaranteed: bool,
}

impl ExpectationReport {
    pub fn violated(&self) -> bool {
        self.guaranteed && !self.conserved
    }
}

pub fn expectation_conservation_check(
    a: &Operator,
    ch: &Channel,
    rho: &DensityOperator,
) -> Result<ExpectationReport> {
    let r = a.hermiticity_residual();
    if r > GROUP_TOL * a.max_abs().max(1.0) {
        return Err(PevError::NotHermitian { residual: r });
    }
    a.check_same_dim(rho.op())?;
    let img = apply_channel(ch, rho)?;
    let tr = img.trace().re;
    if !(tr > crate::evolution::ZERO_PROB_TOL) {
        return Err(PevError::ZeroProbabilityBranch { prob: tr });
    }
    let before = a.expectation(rho.op()).re;
    let after = a.expectation(&img).re / tr;
    let commutator = ch
        .branches()
        .iter()
        .map(|b| a.commutator(&b.to_operator()).max_abs())
        .fold(0.0, f64::max);
    let unitary = ch.branches().len() == 1
        && ch.branches()[0].to_operator().unitarity_residual() <= GROUP_TOL;
    let difference = (after - before).abs();
    Ok(ExpectationReport {
        before,
        after,
        difference,
        commutator,
        unitary,
        conserved: difference <= CONSERVATION_TOL,
        guaranteed: unitary && commutator <= CONSERVATION_TOL,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CasimirReport {
    /// max over generators and group elements of ‖gWg⁻¹ − W‖.
    pub generator_invariance: f64,
    /// max_g ‖[C, g]‖.
    pub casimir_commutation: f64,
    /// Tr(C ρ(τ_n)) for n = 1, …, n_steps.
    pub values: Vec<f64>,
    /// Tr(C P)/Tr(P) of the projector chosen at the first step.
    pub first_step_eigenvalue: f64,
    /// Population variance of `values`.
    pub variance: f64,
    /// max_n |values[n] − first_step_eigenvalue|.
    pub max_deviation: f64,
    pub conserved: bool,
}

/// Samples a path through the eigenprojector families of the generators
/// (cycled over the steps) and tracks ⟨C⟩.
pub fn casimir_conservation_run(
    action: &GroupAction,
    generators: &[Operator],
    c: &Operator,
    rho0: &DensityOperator,
    n_steps: usize,
    seed: u64,
) -> Result<CasimirReport> {
    if generators.is_empty() || n_steps == 0 {
        return Err(PevError::InvalidFamily(
            "need generators and at least one step".into(),
        ));
    }
    let generator_invariance = generators
        .iter()
        .map(|w| action.invariance_residual(w))
        .fold(0.0, f64::max);
    let casimir_commutation = action.commutation_residual(c);
    let bases = generators
        .iter()
        .map(|w| channels_from_generator(w, DEFAULT_CLUSTER_TOL))
        .collect::<Result<Vec<_>>>()?;
    let families: Vec<ChannelFamily> = (0..n_steps)
        .map(|n| bases[n % bases.len()].at_step(n as i64 + 1))
        .collect();
    let path = sample_path(&families, rho0, seed)?;
    let values: Vec<f64> = path
        .steps
        .iter()
        .map(|s| c.expectation(s.state.op()).re)
        .collect();
    let first = &families[0].channels()[path.steps[0].channel].branches()[0];
    let p = first.to_operator();
    let first_step_eigenvalue = c.expectation(&p).re / p.trace().re;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    let max_deviation = values
        .iter()
        .map(|v| (v - first_step_eigenvalue).abs())
        .fold(0.0, f64::max);
    Ok(CasimirReport {
        generator_invariance,
        casimir_commutation,
        values,
        first_step_eigenvalue,
        variance,
        max_deviation,
        conserved: max_deviation <= 1e-8,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::C64;

    fn proj(i: usize) -> Channel {
        Channel::single(0, Operator::basis_projector(2, i))
    }

    #[test]
    fn transform_examples() {
        let ch = proj(0);
        assert_eq!(transform_channel(&Operator::identity(2), &ch).unwrap(), ch);
        let flipped = transform_channel(&Operator::pauli_x(), &ch).unwrap();
        assert_eq!(
            flipped.branches()[0].to_operator(),
            Operator::basis_projector(2, 1)
        );
        let h = Operator::hadamard();
        let back = transform_channel(&h.adjoint(), &transform_channel(&h, &ch).unwrap()).unwrap();
        assert!(
            back.branches()[0]
                .to_operator()
                .max_abs_diff(&ch.branches()[0].to_operator())
                < 1e-12
        );
        assert!(matches!(
            transform_channel(&Operator::diag_real(&[1.0, 2.0]), &ch),
            Err(PevError::NotUnitary { .. })
        ));
    }

    #[test]
    fn probability_invariance_examples() {
        let phase = Operator::diag_real(&[1.0, 0.0])
            .scale(C64::new(1.0, 0.0))
            .matrix()
            .clone();
        let mut g = phase;
        g[(1, 1)] = C64::from_polar(1.0, 0.4);
        let g = Operator::from_matrix(g).unwrap();
        let rho = DensityOperator::pure(&[C64::new(0.6, 0.0), C64::new(0.8, 0.0)]).unwrap();
        let r = probability_invariance_check(&g, &proj(0), &rho).unwrap();
        assert!(r.invariant && r.sufficient_condition);

        let mixed = DensityOperator::maximally_mixed(2);
        let r = probability_invariance_check(&Operator::hadamard(), &proj(0), &mixed).unwrap();
        assert!(r.invariant && r.commutator_g_rho < 1e-15);

        let zero = DensityOperator::basis_state(2, 0);
        let r = probability_invariance_check(&Operator::hadamard(), &proj(0), &zero).unwrap();
        assert!((r.original - 1.0).abs() < 1e-15);
        assert!((r.transformed - 0.5).abs() < 1e-15);
        assert!(!r.invariant && !r.sufficient_condition && !r.violated());
    }

    #[test]
    fn expectation_examples() {
        let rho = DensityOperator::diagonal(&[0.2, 0.8]).unwrap();
        let one = Operator::identity(2);
        for ch in [proj(0), Channel::single(0, Operator::hadamard())] {
            let r = expectation_conservation_check(&one, &ch, &rho).unwrap();
            assert!(r.conserved && (r.before - 1.0).abs() < 1e-15);
        }

        let a = Operator::from_real_rows(&[vec![0.5, 0.2], vec![0.2, -1.0]]).unwrap();
        let u = a.exp_i(0.9).unwrap();
        let rho = DensityOperator::pure(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let r = expectation_conservation_check(&a, &Channel::single(0, u), &rho).unwrap();
        assert!(r.guaranteed && r.conserved, "{r:?}");

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = Operator::outer(&[C64::new(h, 0.0), C64::new(h, 0.0)]);
        let zero = DensityOperator::basis_state(2, 0);
        let r =
            expectation_conservation_check(&Operator::pauli_z(), &Channel::single(0, plus), &zero)
                .unwrap();
        assert!((r.before - 1.0).abs() < 1e-15 && r.after.abs() < 1e-15);
        assert!(!r.conserved && !r.violated());
    }

    #[test]
    fn group_action_requires_identity() {
        assert!(GroupAction::new(vec![Operator::pauli_x()], vec!["x".into()]).is_err());
        assert!(GroupAction::z2(Operator::pauli_x()).is_ok());
    }

    #[test]
    fn unit_casimir() {
        let action = GroupAction::z2(Operator::pauli_z()).unwrap();
        let rho = DensityOperator::diagonal(&[0.5, 0.5]).unwrap();
        let r = casimir_conservation_run(
            &action,
            &[Operator::pauli_z()],
            &Operator::identity(2),
            &rho,
            5,
            3,
        )
        .unwrap();
        assert!(r.conserved && r.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }
}
