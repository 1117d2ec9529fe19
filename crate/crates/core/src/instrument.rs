//! Two-outcome instruments, n-outcome measurements and their reduction to
//! chains of two-outcome measurements.

use std::fmt;

use crate::error::{Error, Result};
use crate::matcore::{hermitian_eig, polar_decompose, sqrt_psd, ComplexMatrix, IDENTITY_TOL};

/// Tolerance for the positive-pair identity M₂ = (I − M₁²)^{1/2}.
pub const POSITIVE_PAIR_TOL: f64 = 1e-8;
/// Relative cutoff below which singular values are treated as zero.
pub const PINV_CUTOFF: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InstrumentClass {
    Projective,
    Positive,
    General,
}

impl InstrumentClass {
    pub fn name(self) -> &'static str {
        match self {
            InstrumentClass::Projective => "Projective",
            InstrumentClass::Positive => "Positive",
            InstrumentClass::General => "General",
        }
    }
}

impl fmt::Display for InstrumentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Unitary polar factors and positive parts of a general instrument.
#[derive(Clone, Debug)]
pub struct PolarParts {
    pub v1: ComplexMatrix,
    pub v2: ComplexMatrix,
    pub p1pos: ComplexMatrix,
    pub p2pos: ComplexMatrix,
}

/// A validated two-outcome measurement {M₁, M₂}.
#[derive(Clone, Debug)]
pub struct Instrument {
    m1: ComplexMatrix,
    m2: ComplexMatrix,
    class: InstrumentClass,
    polar: Option<PolarParts>,
    completeness_residual: f64,
}

impl Instrument {
    pub fn dim(&self) -> usize {
        self.m1.dim()
    }

    pub fn m1(&self) -> &ComplexMatrix {
        &self.m1
    }

    pub fn m2(&self) -> &ComplexMatrix {
        &self.m2
    }

    pub fn class(&self) -> InstrumentClass {
        self.class
    }

    /// Polar data; present only for [`InstrumentClass::General`].
    pub fn polar(&self) -> Option<&PolarParts> {
        self.polar.as_ref()
    }

    /// The commuting positive pair driving the walk: (M₁, M₂) itself, or
    /// ((M₁†M₁)^{1/2}, (M₂†M₂)^{1/2}) for a general instrument.
    pub fn positive_parts(&self) -> (&ComplexMatrix, &ComplexMatrix) {
        match &self.polar {
            Some(p) => (&p.p1pos, &p.p2pos),
            None => (&self.m1, &self.m2),
        }
    }

    /// ‖M₁†M₁ + M₂†M₂ − I‖_F.
    pub fn completeness_residual(&self) -> f64 {
        self.completeness_residual
    }

    /// Operator for outcome 1 or 2.
    pub fn operator(&self, outcome: u8) -> &ComplexMatrix {
        if outcome == 1 {
            &self.m1
        } else {
            &self.m2
        }
    }

    /// Born-rule probabilities (p₁, p₂) = Tr(Mⱼ ρ Mⱼ†).
    pub fn outcome_probabilities(&self, rho: &ComplexMatrix) -> (f64, f64) {
        (self.m1.sandwich(rho).trace().re, self.m2.sandwich(rho).trace().re)
    }
}

fn completeness_residual(ops: &[&ComplexMatrix]) -> f64 {
    let d = ops[0].dim();
    let mut sum = ComplexMatrix::zeros(d);
    for m in ops {
        sum = &sum + &(&m.adjoint() * m);
    }
    (&sum - &ComplexMatrix::identity(d)).frobenius_norm()
}

fn is_orthogonal_projector_pair(m1: &ComplexMatrix, m2: &ComplexMatrix) -> bool {
    if !m1.is_hermitian() || !m2.is_hermitian() {
        return false;
    }
    let idempotent = |m: &ComplexMatrix| (&(m * m) - m).frobenius_norm() <= IDENTITY_TOL;
    idempotent(m1) && idempotent(m2) && (m1 * m2).frobenius_norm() <= IDENTITY_TOL
}

fn is_positive_pair(m1: &ComplexMatrix, m2: &ComplexMatrix) -> bool {
    let psd = |m: &ComplexMatrix| match hermitian_eig(m) {
        Ok(eig) => eig.eigenvalues[0] >= -IDENTITY_TOL,
        Err(_) => false,
    };
    if !psd(m1) || !psd(m2) {
        return false;
    }
    let d = m1.dim();
    let complement = &ComplexMatrix::identity(d) - &(m1 * m1);
    match sqrt_psd(&complement.hermitian_part()) {
        Ok(expected) => (m2 - &expected).frobenius_norm() <= POSITIVE_PAIR_TOL,
        Err(_) => false,
    }
}

/// Checks completeness and classifies the pair as projective, positive or general.
pub fn validate(m1: &ComplexMatrix, m2: &ComplexMatrix) -> Result<Instrument> {
    m1.check_same_dim(m2)?;
    let residual = completeness_residual(&[m1, m2]);
    if residual > IDENTITY_TOL {
        return Err(Error::CompletenessViolation { residual });
    }
    let (class, polar) = if is_orthogonal_projector_pair(m1, m2) {
        (InstrumentClass::Projective, None)
    } else if is_positive_pair(m1, m2) {
        (InstrumentClass::Positive, None)
    } else {
        let pd1 = polar_decompose(m1);
        let pd2 = polar_decompose(m2);
        for (m, pd) in [(m1, &pd1), (m2, &pd2)] {
            let r = (&(&pd.unitary * &pd.positive) - m).frobenius_norm();
            debug_assert!(r <= IDENTITY_TOL * m.frobenius_norm().max(1.0), "polar residual {r}");
        }
        let parts = PolarParts {
            v1: pd1.unitary,
            v2: pd2.unitary,
            p1pos: pd1.positive,
            p2pos: pd2.positive,
        };
        (InstrumentClass::General, Some(parts))
    };
    Ok(Instrument {
        m1: m1.clone(),
        m2: m2.clone(),
        class,
        polar,
        completeness_residual: residual,
    })
}

/// An n-outcome measurement with Σⱼ Mⱼ†Mⱼ = I.
#[derive(Clone, Debug)]
pub struct MultiInstrument {
    operators: Vec<ComplexMatrix>,
    completeness_residual: f64,
}

impl MultiInstrument {
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        if operators.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "a measurement needs at least two outcomes, got {}",
                operators.len()
            )));
        }
        for m in &operators[1..] {
            operators[0].check_same_dim(m)?;
        }
        let refs: Vec<&ComplexMatrix> = operators.iter().collect();
        let residual = completeness_residual(&refs);
        if residual > IDENTITY_TOL {
            return Err(Error::CompletenessViolation { residual });
        }
        Ok(Self {
            operators,
            completeness_residual: residual,
        })
    }

    pub fn dim(&self) -> usize {
        self.operators[0].dim()
    }

    pub fn outcomes(&self) -> usize {
        self.operators.len()
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn completeness_residual(&self) -> f64 {
        self.completeness_residual
    }

    pub fn target_probabilities(&self, rho: &ComplexMatrix) -> Vec<f64> {
        self.operators.iter().map(|m| m.sandwich(rho).trace().re).collect()
    }
}

/// One two-outcome stage of a reduced measurement.
///
/// Outcome 1 of `instrument` ends the measurement with label `label` after
/// applying `stop_unitary`. Outcome 2 moves on to the next node, except at the
/// last node where it ends with label `label + 1` after `final_unitary`.
#[derive(Clone, Debug)]
pub struct ReductionNode {
    pub label: usize,
    pub instrument: Instrument,
    pub stop_unitary: ComplexMatrix,
    pub final_unitary: Option<ComplexMatrix>,
    /// Projector onto the subspace reachable when this node starts.
    pub support: ComplexMatrix,
}

/// Decision chain realizing an n-outcome measurement with two-outcome nodes.
#[derive(Clone, Debug)]
pub struct ReductionChain {
    pub nodes: Vec<ReductionNode>,
}

impl ReductionChain {
    pub fn outcomes(&self) -> usize {
        self.nodes.len() + 1
    }

    /// Composite operator for every outcome: leaf unitary · node operator ·
    /// continue operators of all earlier nodes.
    pub fn branch_operators(&self) -> Vec<ComplexMatrix> {
        let d = self.nodes[0].instrument.dim();
        let mut reach = ComplexMatrix::identity(d);
        let mut out = Vec::with_capacity(self.outcomes());
        for node in &self.nodes {
            let stop = &(&node.stop_unitary * node.instrument.m1()) * &reach;
            out.push(stop);
            reach = node.instrument.m2() * &reach;
            if let Some(u) = &node.final_unitary {
                out.push(u * &reach);
            }
        }
        out
    }

    /// Branch probabilities obtained by running ρ through the chain.
    pub fn branch_probabilities(&self, rho: &ComplexMatrix) -> Vec<f64> {
        self.branch_operators().iter().map(|o| o.sandwich(rho).trace().re).collect()
    }
}

/// Pseudoinverse of a positive semidefinite matrix and the projector onto its support.
fn psd_pinv(b: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let eig = hermitian_eig(&b.hermitian_part())?;
    let largest = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let cutoff = PINV_CUTOFF * largest;
    let inv: Vec<f64> = eig.eigenvalues.iter().map(|&l| if l > cutoff { l.recip() } else { 0.0 }).collect();
    let proj: Vec<f64> = eig.eigenvalues.iter().map(|&l| if l > cutoff { 1.0 } else { 0.0 }).collect();
    Ok((eig.reassemble_real(&inv), eig.reassemble_real(&proj)))
}

/// Reduces an n-outcome measurement to a chain of n − 1 two-outcome nodes.
///
/// Node k measures (A_k, B_k) with A_k = (M_k'†M_k')^{1/2} and
/// B_k = (Π − M_k'†M_k')^{1/2} on the current support Π, where the residual
/// operators are M_j' = M_j B_1⁺ ⋯ B_{k−1}⁺. Off the support B_k is completed by
/// the identity so each node is a complete two-outcome measurement; states
/// never reach that subspace. For n = 2 the single node is the instrument itself.
pub fn binary_reduce(m: &MultiInstrument) -> Result<ReductionChain> {
    let d = m.dim();
    let n = m.outcomes();
    let identity = ComplexMatrix::identity(d);
    if n == 2 {
        let instrument = validate(&m.operators[0], &m.operators[1])?;
        return Ok(ReductionChain {
            nodes: vec![ReductionNode {
                label: 1,
                instrument,
                stop_unitary: identity.clone(),
                final_unitary: Some(identity.clone()),
                support: identity,
            }],
        });
    }

    let mut residual_ops = m.operators.clone();
    let mut support = identity.clone();
    let mut nodes = Vec::with_capacity(n - 1);
    for k in 0..n - 1 {
        let current = &residual_ops[k];
        let effect = (&current.adjoint() * current).hermitian_part();
        let stop_op = sqrt_psd(&effect)?;
        let cont_on_support = sqrt_psd(&(&support - &effect).hermitian_part())?;
        let completion = &identity - &support;
        let cont_op = &cont_on_support + &completion;
        let instrument = validate(&stop_op, &cont_op).map_err(|e| match e {
            Error::CompletenessViolation { residual } => Error::SingularResidual { residual },
            other => other,
        })?;
        let stop_unitary = polar_decompose(current).unitary;
        let last = k == n - 2;
        let final_unitary = if last {
            let tail = &residual_ops[n - 1];
            let pd = polar_decompose(tail);
            let residual = (&pd.positive - &cont_on_support).frobenius_norm();
            if residual > POSITIVE_PAIR_TOL {
                return Err(Error::SingularResidual { residual });
            }
            Some(pd.unitary)
        } else {
            None
        };
        nodes.push(ReductionNode {
            label: k + 1,
            instrument,
            stop_unitary,
            final_unitary,
            support: support.clone(),
        });
        if last {
            break;
        }

        let (pinv, next_support) = psd_pinv(&cont_on_support)?;
        for op in residual_ops.iter_mut().skip(k + 1) {
            *op = &*op * &pinv;
        }
        let mut sum = ComplexMatrix::zeros(d);
        for op in &residual_ops[k + 1..] {
            sum = &sum + &(&op.adjoint() * op);
        }
        let residual = (&sum - &next_support).frobenius_norm();
        if residual > POSITIVE_PAIR_TOL {
            return Err(Error::SingularResidual { residual });
        }
        support = next_support;
    }
    Ok(ReductionChain { nodes })
}

/// Best scalar fit M ≈ q (I + ε̂) of an operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeaknessReport {
    /// q = Tr(M)/d.
    pub scalar: crate::matcore::C64,
    /// ‖M/q − I‖ in spectral norm; infinite when q vanishes.
    pub deviation: f64,
}

pub fn weakness(m: &ComplexMatrix) -> WeaknessReport {
    let d = m.dim();
    let q = m.trace() / d as f64;
    if q.norm() < 1e-12 {
        return WeaknessReport {
            scalar: q,
            deviation: f64::INFINITY,
        };
    }
    let deviation = (&m.scale(q.inv()) - &ComplexMatrix::identity(d)).spectral_norm();
    WeaknessReport { scalar: q, deviation }
}
